#include "switchid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace switchid {

double beta(const Eigen::VectorXd& c_true, const Eigen::VectorXd& c_hat) {
  if (c_true.size() != c_hat.size())
    throw std::invalid_argument("beta: length mismatch");
  if (!(c_true.norm() > 0.0))
    throw std::invalid_argument("beta: zero reference vector");
  const NormalizedHybrid t = normalize_hybrid(c_true);
  const NormalizedHybrid h = normalize_hybrid(c_hat);
  if (t.degenerate || h.degenerate) {
    const Eigen::VectorXd tu = c_true / c_true.norm();
    const Eigen::VectorXd hu = c_hat / c_hat.norm();
    return std::min((tu - hu).norm(), (tu + hu).norm());
  }
  return (t.coeffs - h.coeffs).norm() / t.coeffs.norm();
}

double beta(const HomoPoly& c_true, const HomoPoly& c_hat) {
  if (c_true.index.degree != c_hat.index.degree ||
      c_true.index.dims != c_hat.index.dims)
    throw std::invalid_argument("beta: index mismatch");
  return beta(c_true.coeffs, c_hat.coeffs);
}

ModeMatch match_modes(const SwitchedModel& truth, const SwitchedModel& est) {
  if (truth.n != est.n)
    throw std::invalid_argument("match_modes: mode counts differ");
  if (truth.n > 6)
    throw std::invalid_argument("match_modes: exhaustive matching limited to n <= 6");
  if (truth.n_a != est.n_a || truth.n_b != est.n_b)
    throw std::invalid_argument("match_modes: order mismatch");

  const int n = truth.n;
  const int width = truth.n_a + truth.n_b;
  auto stacked = [width](const SubModel& m) {
    Eigen::VectorXd v(width);
    v << m.a, m.b;
    return v;
  };

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < n; ++i)
      cost += (stacked(truth.modes[i]) - stacked(est.modes[perm[i]])).norm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  ModeMatch match;
  match.permutation = best;
  match.total_error = best_cost;
  match.per_coefficient_error.resize(n, width);
  for (int i = 0; i < n; ++i)
    match.per_coefficient_error.row(i) =
        (stacked(truth.modes[i]) - stacked(est.modes[best[i]]))
            .cwiseAbs()
            .transpose();
  return match;
}

AutocovDecay autocov_decay(const std::vector<double>& series, int max_lag) {
  const long T = static_cast<long>(series.size());
  if (max_lag < 1) throw std::invalid_argument("autocov_decay: max_lag < 1");
  if (T < 4 * max_lag)
    throw std::invalid_argument("autocov_decay: series too short for max_lag");

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(T);
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(T);
  if (!(var > 0.0))
    throw std::invalid_argument("autocov_decay: constant series");

  AutocovDecay out;
  out.rho.resize(max_lag);
  for (int l = 1; l <= max_lag; ++l) {
    double acc = 0.0;
    for (long k = 0; k + l < T; ++k)
      acc += (series[k] - mean) * (series[k + l] - mean);
    out.rho[l - 1] = acc / static_cast<double>(T - l);
  }

  // log|rho_l| ~ log C + l log a over lags with usable magnitude.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long used = 0;
  for (int l = 1; l <= max_lag; ++l) {
    const double mag = std::abs(out.rho[l - 1]);
    if (mag < 1e-300) continue;
    const double x = l, y = std::log(mag);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++used;
  }
  if (used >= 2) {
    const double denom = used * sxx - sx * sx;
    const double slope = (used * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / used;
    out.fitted_rate = std::exp(slope);
    out.fitted_scale = std::exp(intercept);
  }
  return out;
}

}  // namespace switchid
