#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "switchid/metrics.hpp"
#include "switchid/moment_matrix.hpp"
#include "switchid/noise.hpp"
#include "switchid/simulate.hpp"
#include "switchid/veronese.hpp"

namespace switchid {

struct NoiseSpec {
  bool known = true;
  NoiseModel model = NoiseModel::none();              // when known
  NoiseFamily family = NoiseFamily::GaussianZeroMean; // when unknown
  double theta_max = 1.0;                             // when unknown

  static NoiseSpec known_model(NoiseModel m) {
    NoiseSpec s;
    s.known = true;
    s.model = std::move(m);
    return s;
  }
  static NoiseSpec unknown(double theta_max,
                           NoiseFamily family = NoiseFamily::GaussianZeroMean) {
    NoiseSpec s;
    s.known = false;
    s.family = family;
    s.theta_max = theta_max;
    return s;
  }
};

struct IdentifyConfig {
  SystemKind kind = SystemKind::SAR;
  int n = 2;
  int n_a = 1;
  int n_b = 1;
  NoiseSpec noise;

  double tol_grad = 1e-12;         // gradient considered zero below this
  double gap_threshold = 3.0;      // data-consistency diagnostic on sigma ratio
  int theta_grid = 200;            // grid points over [0, theta_max]
  double theta_sigma_factor = 5.0; // threshold = factor * min sigma over grid
  double theta_sigma_abs = 0.0;    // absolute threshold override when > 0
  long gpca_max_candidates = 100000;
  bool rescale = false;            // pre-scale y, u by 1/max(|y|,|u|,1)
  bool refine_modes = true;        // per-mode least-squares refit
  std::uint64_t seed = 0;
  int jobs = 0;                    // 0 = all hardware threads
};

struct IdentifyReport {
  SwitchedModel model;             // sub-models from the hyperplane forms
  SwitchedModel refined;           // least-squares refit on assigned windows
  bool has_refined = false;

  HomoPoly c_hat;
  bool c_degenerate = false;

  Eigen::VectorXd singular_values;
  double gap_ratio = 0.0;
  bool gap_ok = true;              // false => data inconsistent diagnostic

  bool theta_estimated = false;
  double theta_hat = 0.0;
  bool theta_threshold_hit = true; // false => fell back to global grid min
  std::vector<std::pair<double, double>> theta_curve;

  std::vector<int> labels;         // per usable window, 0-based mode id
  std::vector<double> division_residuals;
  bool degenerate_regressors = false;

  double scale = 1.0;              // pre-scaling factor applied (1 = none)
  double elapsed_seconds = 0.0;

  bool has_eval = false;           // filled when the dataset carries truth
  EvalSummary eval;
};

// Full pipelines: corrections -> moment matrix -> minimum singular vector ->
// hyperplane extraction -> mode assignment. Unknown noise routes through
// estimate_theta first.
IdentifyReport identify_sar(const Dataset& data, const IdentifyConfig& cfg);
IdentifyReport identify_sarx(const Dataset& data, const IdentifyConfig& cfg);
IdentifyReport identify(const Dataset& data, const IdentifyConfig& cfg);

// Hyperplane-normal extraction by repeated differentiation and deflation:
// pick the regressor minimizing |p(r)| / ||Dp(r)||, take the normalized
// gradient there, divide p by the recovered form, repeat. Returned forms are
// re-normalized to leading -1. Ties break on the first candidate.
std::vector<LinearForm> gpca_extract(const HomoPoly& c_hat,
                                     const std::vector<Eigen::VectorXd>& regressors,
                                     int n, double tol_grad,
                                     std::vector<double>* residuals = nullptr);

std::vector<int> assign_modes(const std::vector<Eigen::VectorXd>& regressors,
                              const std::vector<LinearForm>& forms);

// Line search of Algorithm-style joint estimation: sigma_min of the
// reassembled matrix on a theta grid, smallest sub-threshold point refined
// by golden section. Returns the chosen theta and the finished report.
std::pair<double, IdentifyReport> estimate_theta(const Dataset& data,
                                                 const IdentifyConfig& cfg);

// The (theta, sigma_min) samples behind estimate_theta, for plotting.
std::vector<std::pair<double, double>> theta_curve(const Dataset& data,
                                                   const IdentifyConfig& cfg,
                                                   const std::vector<double>& grid);

// Smallest-theta local minimum of a sampled curve whose value is below the
// threshold; -1 if none.
long smallest_subthreshold_local_min(
    const std::vector<std::pair<double, double>>& curve, double threshold);

}  // namespace switchid
