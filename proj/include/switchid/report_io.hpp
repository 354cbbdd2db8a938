#pragma once

#include <json.hpp>
#include <string>

#include "switchid/identify.hpp"

namespace switchid {

// IdentifyReport as JSON. Per-window labels are summarized (counts per
// mode); the full vector goes to a separate CSV on request.
nlohmann::json report_to_json(const IdentifyReport& report);

void write_report(const IdentifyReport& report, const std::string& path);
void write_theta_curve(const std::vector<std::pair<double, double>>& curve,
                       const std::string& path);
void write_labels(const IdentifyReport& report, long first_k,
                  const std::string& path);

}  // namespace switchid
