#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "switchid/moment_matrix.hpp"
#include "switchid/noise.hpp"
#include "switchid/veronese.hpp"

namespace switchid {

enum class SystemKind { SAR, SARX };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

struct SubModel {
  Eigen::VectorXd a;  // output-lag coefficients a_1..a_{n_a}
  Eigen::VectorXd b;  // input-lag coefficients b_1..b_{n_b}
};

struct SwitchedModel {
  int n = 0;    // mode count
  int n_a = 0;
  int n_b = 0;
  std::vector<SubModel> modes;

  // [-1, a_1..a_{n_a}, b_1..b_{n_b}] of one mode.
  LinearForm form(int mode) const;
  // Product of all mode forms, normalized to leading coefficient +1.
  HomoPoly hybrid_coeffs() const;
};

enum class SwitchScheme { IIDUniform, PeriodicDwell, MarkovChain };

struct SwitchSpec {
  SwitchScheme scheme = SwitchScheme::IIDUniform;
  int dwell = 1;                    // PeriodicDwell
  Eigen::MatrixXd transition;       // MarkovChain, row-stochastic n x n
  double visit_floor = 0.05;        // warn when a mode's visit share drops below
};

struct InputSpec {
  enum class Kind { UniformBounded, GaussianClipped };
  Kind kind = Kind::UniformBounded;
  double bound = 1.0;  // |u| <= bound
  double sigma = 1.0;  // GaussianClipped std dev before clipping
};

// One simulated record. Arrays are time-ascending and carry the pre-samples
// every window needs: u spans k = 1-n_b .. N, y (and x, noise) span
// k = 1-n_a .. N, modes span k = 1 .. N.
struct Dataset {
  SystemKind kind = SystemKind::SAR;
  int n_a = 0;
  int n_b = 0;
  long N = 0;

  std::vector<double> u;
  std::vector<double> y;
  std::vector<double> x;      // SAR only: noiseless output
  std::vector<double> noise;  // aligned with y; eta (SAR) or epsilon (SARX)
  std::vector<int> modes;

  bool has_truth = false;
  SwitchedModel true_model;
  double theta_true = 0.0;
  NoiseFamily noise_family = NoiseFamily::GaussianZeroMean;
  std::uint64_t seed = 0;
  std::string generator;
  bool visit_floor_ok = true;
  long usable_offset = 0;  // leading windows without full pre-sample support

  // Usable windows (optionally only the first `windows` of them).
  SampleStream stream() const;
  SampleStream stream_prefix(long windows) const;
};

Dataset simulate(SystemKind kind, const SwitchedModel& model,
                 const SwitchSpec& sw, const InputSpec& input,
                 const NoiseModel& noise, long N, std::uint64_t seed);

// Random 2-coefficient-per-mode stable model: |a| < 0.95, |b| in [0.2, 2],
// modes pairwise separated by >= 0.05 in (a, b) distance.
SwitchedModel random_stable_model(int n, int n_a, int n_b, std::uint64_t seed);

// Noise-to-output ratio max|noise| / max|y| of a stored realization.
double gamma_ratio(const Dataset& data);

// First `N` samples of a record. Generation draws sequentially, so this is
// bit-identical to simulating with the smaller N directly.
Dataset truncate(const Dataset& data, long N);

}  // namespace switchid
