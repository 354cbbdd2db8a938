#pragma once

#include <json.hpp>
#include <string>

#include "switchid/noise.hpp"
#include "switchid/simulate.hpp"

namespace switchid {

// Dataset files: CSV with header k,u,y[,x,mode,noise] plus a JSON sidecar
// carrying everything needed to reproduce the record (orders, kind, seed,
// true model, noise parameters). Pre-sample rows have an empty mode cell.

// Writes <basepath>.csv and <basepath>.json.
void write_dataset(const Dataset& data, const std::string& basepath);

// Reads a dataset; sidecar_path defaults to the csv path with .json
// substituted. Without a sidecar the caller must supply the orders (and the
// kind defaults to SAR until identify overrides it).
Dataset load_dataset(const std::string& csv_path,
                     const std::string& sidecar_path = "", int n_a = 0,
                     int n_b = 0);

nlohmann::json noise_to_json(const NoiseModel& model);
NoiseModel noise_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const SwitchedModel& model);
SwitchedModel model_from_json(const nlohmann::json& j);

}  // namespace switchid

