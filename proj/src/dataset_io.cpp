#include "switchid/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "switchid/util.hpp"

namespace switchid {

nlohmann::json noise_to_json(const NoiseModel& model) {
  nlohmann::json j;
  if (model.family == NoiseFamily::GaussianZeroMean) {
    j["family"] = "gaussian";
    j["theta"] = model.theta;
  } else {
    j["family"] = "moments";
    j["m"] = model.raw;
  }
  return j;
}

NoiseModel noise_from_json(const nlohmann::json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "gaussian")
    return NoiseModel::gaussian(j.at("theta").get<double>());
  if (family == "moments")
    return NoiseModel::from_moments(j.at("m").get<std::vector<double>>());
  throw std::invalid_argument("noise_from_json: unknown family " + family);
}

nlohmann::json model_to_json(const SwitchedModel& model) {
  nlohmann::json j;
  j["n"] = model.n;
  j["n_a"] = model.n_a;
  j["n_b"] = model.n_b;
  j["modes"] = nlohmann::json::array();
  for (const SubModel& m : model.modes) {
    nlohmann::json mode;
    mode["a"] = std::vector<double>(m.a.data(), m.a.data() + m.a.size());
    mode["b"] = std::vector<double>(m.b.data(), m.b.data() + m.b.size());
    j["modes"].push_back(mode);
  }
  return j;
}

SwitchedModel model_from_json(const nlohmann::json& j) {
  SwitchedModel m;
  m.n = j.at("n").get<int>();
  m.n_a = j.at("n_a").get<int>();
  m.n_b = j.at("n_b").get<int>();
  for (const auto& mode : j.at("modes")) {
    SubModel sub;
    const auto a = mode.at("a").get<std::vector<double>>();
    const auto b = mode.at("b").get<std::vector<double>>();
    sub.a = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    sub.b = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
    m.modes.push_back(std::move(sub));
  }
  if (static_cast<int>(m.modes.size()) != m.n)
    throw std::invalid_argument("model_from_json: mode count mismatch");
  return m;
}

namespace {

std::string default_sidecar(const std::string& csv_path) {
  const auto dot = csv_path.rfind(".csv");
  if (dot != std::string::npos && dot == csv_path.size() - 4)
    return csv_path.substr(0, dot) + ".json";
  return csv_path + ".json";
}

void append_cell(std::string& line, bool present, double value) {
  line.push_back(',');
  if (!present) return;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  line += buf;
}

}  // namespace

void write_dataset(const Dataset& data, const std::string& basepath) {
  const int n_a = data.n_a, n_b = data.n_b;
  const long k_min = 1 - std::max(n_a, n_b);
  const bool has_x = !data.x.empty();
  const bool has_noise = !data.noise.empty();

  std::ofstream csv(basepath + ".csv");
  if (!csv) throw std::runtime_error("cannot write " + basepath + ".csv");
  std::string header = "k,u,y";
  if (has_x) header += ",x";
  header += ",mode";
  if (has_noise) header += ",noise";
  csv << header << '\n';

  std::string line;
  for (long k = k_min; k <= data.N; ++k) {
    line = std::to_string(k);
    const bool in_u = k >= 1 - n_b;
    const bool in_y = k >= 1 - n_a;
    const long ui = k - 1 + n_b;
    const long yi = k - 1 + n_a;
    append_cell(line, in_u, in_u ? data.u[ui] : 0.0);
    append_cell(line, in_y, in_y ? data.y[yi] : 0.0);
    if (has_x) append_cell(line, in_y, in_y ? data.x[yi] : 0.0);
    line.push_back(',');
    if (k >= 1) line += std::to_string(data.modes[k - 1] + 1);
    if (has_noise) append_cell(line, in_y, in_y ? data.noise[yi] : 0.0);
    csv << line << '\n';
  }
  if (!csv) throw std::runtime_error("write failed for " + basepath + ".csv");
  csv.close();

  nlohmann::json meta;
  meta["format"] = "switchid-dataset-v1";
  meta["kind"] = to_string(data.kind);
  meta["n_a"] = n_a;
  meta["n_b"] = n_b;
  meta["N"] = data.N;
  meta["seed"] = data.seed;
  meta["theta_true"] = data.theta_true;
  meta["noise_family"] =
      data.noise_family == NoiseFamily::GaussianZeroMean ? "gaussian" : "moments";
  meta["generator"] = data.generator;
  meta["visit_floor_ok"] = data.visit_floor_ok;
  meta["columns"] = header;
  if (data.has_truth) {
    meta["model"] = model_to_json(data.true_model);
    meta["gamma"] = has_noise ? gamma_ratio(data) : 0.0;
  }
  std::ofstream side(basepath + ".json");
  if (!side) throw std::runtime_error("cannot write " + basepath + ".json");
  side << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::string& csv_path,
                     const std::string& sidecar_path, int n_a, int n_b) {
  const std::string side_path =
      sidecar_path.empty() ? default_sidecar(csv_path) : sidecar_path;

  Dataset d;
  bool have_sidecar = false;
  {
    std::ifstream side(side_path);
    if (side) {
      nlohmann::json meta;
      try {
        side >> meta;
      } catch (const std::exception& e) {
        throw std::runtime_error("malformed sidecar " + side_path + ": " +
                                 e.what());
      }
      d.kind = system_kind_from_string(meta.at("kind").get<std::string>());
      d.n_a = meta.at("n_a").get<int>();
      d.n_b = meta.at("n_b").get<int>();
      d.seed = meta.value<std::uint64_t>("seed", 0);
      d.theta_true = meta.value("theta_true", 0.0);
      d.generator = meta.value("generator", "");
      if (meta.contains("model")) {
        d.true_model = model_from_json(meta.at("model"));
        d.has_truth = true;
      }
      have_sidecar = true;
    }
  }
  if (!have_sidecar) {
    if (n_a < 1 || n_b < 1)
      throw std::runtime_error("dataset sidecar not found (" + side_path +
                               ") and no orders were supplied");
    log_warn("no sidecar for " + csv_path + "; using supplied orders");
    d.n_a = n_a;
    d.n_b = n_b;
  }

  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  if (!std::getline(csv, line))
    throw std::runtime_error("empty dataset file " + csv_path);

  std::vector<std::string> columns;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) columns.push_back(cell);
  }
  auto column_of = [&](const std::string& name) {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int c_k = column_of("k"), c_u = column_of("u"), c_y = column_of("y");
  const int c_x = column_of("x"), c_mode = column_of("mode"),
            c_noise = column_of("noise");
  if (c_k < 0 || c_u < 0 || c_y < 0 || c_mode < 0)
    throw std::runtime_error("dataset header must contain k,u,y,mode: " +
                             csv_path);

  struct Row {
    long k;
    bool has_u = false, has_y = false, has_x = false, has_noise = false;
    double u = 0, y = 0, x = 0, noise = 0;
    int mode = 0;  // 0 = absent
  };
  std::vector<Row> rows;
  std::vector<std::string> cells;
  long lineno = 1;
  while (std::getline(csv, line)) {
    ++lineno;
    if (line.empty()) continue;
    cells.clear();
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() < columns.size()) cells.resize(columns.size());
    Row r;
    try {
      r.k = std::stol(cells[c_k]);
      if (!cells[c_u].empty()) { r.u = std::stod(cells[c_u]); r.has_u = true; }
      if (!cells[c_y].empty()) { r.y = std::stod(cells[c_y]); r.has_y = true; }
      if (c_x >= 0 && !cells[c_x].empty()) { r.x = std::stod(cells[c_x]); r.has_x = true; }
      if (!cells[c_mode].empty()) r.mode = std::stoi(cells[c_mode]);
      if (c_noise >= 0 && !cells[c_noise].empty()) {
        r.noise = std::stod(cells[c_noise]);
        r.has_noise = true;
      }
    } catch (const std::exception&) {
      throw std::runtime_error(csv_path + ":" + std::to_string(lineno) +
                               ": malformed row");
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error("no data rows in " + csv_path);

  long N = 0, first_y = std::numeric_limits<long>::max(),
       first_u = std::numeric_limits<long>::max();
  for (const Row& r : rows) {
    N = std::max(N, r.k);
    if (r.has_y) first_y = std::min(first_y, r.k);
    if (r.has_u) first_u = std::min(first_u, r.k);
  }
  if (N < 1) throw std::runtime_error("dataset has no samples k >= 1");

  const int na = d.n_a, nb = d.n_b;
  d.N = N;
  d.u.assign(N + nb, 0.0);
  d.y.assign(N + na, 0.0);
  d.modes.assign(N, 0);
  bool any_x = false, any_noise = false;
  for (const Row& r : rows) {
    any_x |= r.has_x;
    any_noise |= r.has_noise;
  }
  if (any_x) d.x.assign(N + na, 0.0);
  if (any_noise) d.noise.assign(N + na, 0.0);

  for (const Row& r : rows) {
    if (r.has_u && r.k >= 1 - nb && r.k <= N) d.u[r.k - 1 + nb] = r.u;
    if (r.k >= 1 - na && r.k <= N) {
      if (r.has_y) d.y[r.k - 1 + na] = r.y;
      if (r.has_x) d.x[r.k - 1 + na] = r.x;
      if (r.has_noise) d.noise[r.k - 1 + na] = r.noise;
    }
    if (r.k >= 1 && r.mode >= 1) d.modes[r.k - 1] = r.mode - 1;
  }

  // Windows are only usable once every lag they touch was actually present.
  const long first_full =
      std::max(first_y + na, first_u + nb);  // earliest usable k
  if (first_full > 1) {
    d.usable_offset = first_full - 1;
    log_warn("dataset " + csv_path + " lacks pre-samples; dropping the first " +
             std::to_string(d.usable_offset) + " windows");
  }
  return d;
}

}  // namespace switchid
