#include "switchid/noise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace switchid {

double gaussian_moment(double variance, int order) {
  if (variance < 0.0)
    throw std::invalid_argument("gaussian_moment: negative variance");
  if (order < 0) throw std::invalid_argument("gaussian_moment: negative order");
  if (order == 0) return 1.0;
  if (order % 2 == 1) return 0.0;
  double result = 1.0;
  for (int f = order - 1; f > 1; f -= 2) result *= f;  // (order-1)!!
  return result * std::pow(variance, order / 2);
}

double NoiseModel::moment(int order) const {
  if (order < 0) throw std::invalid_argument("NoiseModel: negative order");
  if (family == NoiseFamily::GaussianZeroMean)
    return gaussian_moment(theta, order);
  if (order >= static_cast<int>(raw.size()))
    throw std::out_of_range("NoiseModel: moment of order " +
                            std::to_string(order) +
                            " not provided (table holds 0.." +
                            std::to_string(raw.size() - 1) + ")");
  return raw[order];
}

int NoiseModel::max_order() const {
  if (family == NoiseFamily::GaussianZeroMean)
    return std::numeric_limits<int>::max();
  return static_cast<int>(raw.size()) - 1;
}

NoiseModel NoiseModel::gaussian(double variance) {
  if (variance < 0.0)
    throw std::invalid_argument("NoiseModel: negative variance");
  NoiseModel m;
  m.family = NoiseFamily::GaussianZeroMean;
  m.theta = variance;
  return m;
}

NoiseModel NoiseModel::from_moments(std::vector<double> moments) {
  if (moments.empty() || moments[0] != 1.0)
    throw std::invalid_argument("NoiseModel: moment table must start with m_0 = 1");
  for (double v : moments)
    if (!std::isfinite(v))
      throw std::invalid_argument("NoiseModel: non-finite moment in table");
  NoiseModel m;
  m.family = NoiseFamily::UserMoments;
  m.raw = std::move(moments);
  return m;
}

double CorrectionPolys::eval(int h, double y) const {
  const Eigen::VectorXd& c = w[h];
  double v = c[h];
  for (int j = h - 1; j >= 0; --j) v = v * y + c[j];
  return v;
}

void CorrectionPolys::eval_all(double y, double* out) const {
  for (int h = 0; h <= h_max; ++h) out[h] = eval(h, y);
}

CorrectionPolys build_corrections(const NoiseModel& model, int h_max) {
  if (h_max < 0) throw std::invalid_argument("build_corrections: h_max < 0");
  if (model.max_order() < h_max)
    throw std::invalid_argument(
        "build_corrections: noise model provides moments only up to order " +
        std::to_string(model.max_order()) + ", need " + std::to_string(h_max));

  CorrectionPolys cp;
  cp.h_max = h_max;
  cp.w.resize(h_max + 1);
  cp.w[0] = Eigen::VectorXd::Constant(1, 1.0);

  // Pascal row reused across orders.
  std::vector<std::vector<double>> choose(h_max + 1);
  for (int h = 0; h <= h_max; ++h) {
    choose[h].assign(h + 1, 1.0);
    for (int d = 1; d < h; ++d)
      choose[h][d] = choose[h - 1][d - 1] + choose[h - 1][d];
  }

  for (int h = 1; h <= h_max; ++h) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(h + 1);
    c[h] = 1.0;  // y^h
    for (int d = 1; d <= h; ++d) {
      const double factor = choose[h][d] * model.moment(d);
      if (factor == 0.0) continue;
      c.head(h - d + 1) -= factor * cp.w[h - d];
    }
    cp.w[h] = c;
  }
  return cp;
}

Eigen::VectorXd SampleWindow::regressor() const {
  Eigen::VectorXd r(n_a + n_b + 1);
  for (int i = 0; i <= n_a; ++i) r[i] = out(i);
  for (int j = 1; j <= n_b; ++j) r[n_a + j] = in(j);
  return r;
}

namespace {

inline double int_pow(double base, int e) {
  double result = 1.0;
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

void check_alpha(const Eigen::VectorXi& alpha, const SampleWindow& window,
                 const CorrectionPolys& W) {
  if (alpha.size() != window.n_a + window.n_b + 1)
    throw std::invalid_argument("corrected_monomial: exponent length mismatch");
  if (alpha.maxCoeff() > W.h_max)
    throw std::invalid_argument("corrected_monomial: exponent " +
                                std::to_string(alpha.maxCoeff()) +
                                " exceeds correction order " +
                                std::to_string(W.h_max));
}

}  // namespace

double corrected_monomial_sar(const Eigen::VectorXi& alpha,
                              const SampleWindow& window,
                              const CorrectionPolys& W) {
  check_alpha(alpha, window, W);
  double value = 1.0;
  for (int lag = 0; lag <= window.n_a; ++lag)
    if (alpha[lag] > 0) value *= W.eval(alpha[lag], window.out(lag));
  for (int lag = 1; lag <= window.n_b; ++lag) {
    const int e = alpha[window.n_a + lag];
    if (e > 0) value *= int_pow(window.in(lag), e);
  }
  return value;
}

double corrected_monomial_sarx(const Eigen::VectorXi& alpha,
                               const SampleWindow& window,
                               const CorrectionPolys& W) {
  check_alpha(alpha, window, W);
  double value = alpha[0] > 0 ? W.eval(alpha[0], window.out(0)) : 1.0;
  for (int lag = 1; lag <= window.n_a; ++lag) {
    const int e = alpha[lag];
    if (e > 0) value *= int_pow(window.out(lag), e);
  }
  for (int lag = 1; lag <= window.n_b; ++lag) {
    const int e = alpha[window.n_a + lag];
    if (e > 0) value *= int_pow(window.in(lag), e);
  }
  return value;
}

}  // namespace switchid
