#pragma once

#include <Eigen/Dense>
#include <vector>

#include "switchid/simulate.hpp"
#include "switchid/veronese.hpp"

namespace switchid {

// Normalized hybrid-coefficient error ||c - c_hat|| / ||c||. Both vectors
// pass the leading-coefficient convention first; if either is degenerate
// the comparison falls back to unit norm with optimal sign.
double beta(const HomoPoly& c_true, const HomoPoly& c_hat);
double beta(const Eigen::VectorXd& c_true, const Eigen::VectorXd& c_hat);

struct ModeMatch {
  std::vector<int> permutation;          // est mode matched to true mode i
  Eigen::MatrixXd per_coefficient_error; // n x (n_a + n_b), absolute
  double total_error = 0.0;              // summed Euclidean distance
};

// Assignment of estimated modes to true modes minimizing the summed (a, b)
// Euclidean error; exhaustive over permutations, so n <= 6.
ModeMatch match_modes(const SwitchedModel& truth, const SwitchedModel& est);

struct AutocovDecay {
  std::vector<double> rho;  // rho[l] for l = 1..max_lag
  double fitted_rate = 0.0; // a in the geometric fit C a^l
  double fitted_scale = 0.0;
};

// Empirical lag autocovariances of a scalar series with a least-squares
// geometric fit of log|rho_l|. A diagnostic only: it checks the observable
// single-realization proxy for covariance summability, nothing more.
AutocovDecay autocov_decay(const std::vector<double>& series, int max_lag);

struct EvalSummary {
  double beta = 0.0;
  Eigen::MatrixXd per_mode_errors;  // after matching
  double max_coefficient_error = 0.0;
  double mode_accuracy = 0.0;
  double gamma = 0.0;
  bool has_theta_error = false;
  double theta_error = 0.0;
};

}  // namespace switchid
