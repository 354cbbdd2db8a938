#include "switchid/report_io.hpp"

#include <fstream>

#include "switchid/dataset_io.hpp"

namespace switchid {

nlohmann::json report_to_json(const IdentifyReport& report) {
  nlohmann::json j;
  j["model"] = model_to_json(report.model);
  if (report.has_refined) j["refined_model"] = model_to_json(report.refined);
  j["c_hat"] = std::vector<double>(
      report.c_hat.coeffs.data(),
      report.c_hat.coeffs.data() + report.c_hat.coeffs.size());
  j["c_degenerate"] = report.c_degenerate;
  j["singular_values"] = std::vector<double>(
      report.singular_values.data(),
      report.singular_values.data() + report.singular_values.size());
  j["gap_ratio"] = report.gap_ratio;
  j["gap_ok"] = report.gap_ok;
  j["division_residuals"] = report.division_residuals;
  j["degenerate_regressors"] = report.degenerate_regressors;
  j["scale"] = report.scale;
  j["elapsed_seconds"] = report.elapsed_seconds;

  std::vector<long> counts(report.model.n, 0);
  for (int l : report.labels)
    if (l >= 0 && l < report.model.n) ++counts[l];
  j["label_counts"] = counts;

  if (report.theta_estimated) {
    j["theta"] = {{"hat", report.theta_hat},
                  {"threshold_hit", report.theta_threshold_hit},
                  {"curve_points", report.theta_curve.size()}};
  }
  if (report.has_eval) {
    nlohmann::json ev;
    ev["beta"] = report.eval.beta;
    ev["max_coefficient_error"] = report.eval.max_coefficient_error;
    ev["mode_accuracy"] = report.eval.mode_accuracy;
    ev["gamma"] = report.eval.gamma;
    if (report.eval.has_theta_error) ev["theta_error"] = report.eval.theta_error;
    j["eval"] = ev;
  }
  return j;
}

void write_report(const IdentifyReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << report_to_json(report).dump(2) << '\n';
}

void write_theta_curve(const std::vector<std::pair<double, double>>& curve,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "theta,sigma_min\n";
  char buf[64];
  for (const auto& [theta, sigma] : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", theta, sigma);
    out << buf;
  }
}

void write_labels(const IdentifyReport& report, long first_k,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "k,mode\n";
  for (size_t w = 0; w < report.labels.size(); ++w)
    out << first_k + static_cast<long>(w) << ',' << report.labels[w] + 1 << '\n';
}

}  // namespace switchid
