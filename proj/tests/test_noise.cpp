#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "switchid/noise.hpp"

using namespace switchid;

namespace {

// Independent derivative-of-corrections oracle: differentiate the recursion
// term by term, with dm_d/dtheta = (d/2) theta^(d/2-1) (d-1)!! for even d.
std::vector<Eigen::VectorXd> dW_dtheta_oracle(double theta, int h_max) {
  std::vector<Eigen::VectorXd> w(h_max + 1), dw(h_max + 1);
  w[0] = Eigen::VectorXd::Constant(1, 1.0);
  dw[0] = Eigen::VectorXd::Constant(1, 0.0);
  std::vector<std::vector<double>> choose(h_max + 1);
  for (int h = 0; h <= h_max; ++h) {
    choose[h].assign(h + 1, 1.0);
    for (int d = 1; d < h; ++d)
      choose[h][d] = choose[h - 1][d - 1] + choose[h - 1][d];
  }
  auto dm = [&](int d) {
    if (d % 2 == 1 || d == 0) return 0.0;
    double df = 1.0;
    for (int f = d - 1; f > 1; f -= 2) df *= f;
    return (d / 2) * std::pow(theta, d / 2 - 1) * df;
  };
  for (int h = 1; h <= h_max; ++h) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(h + 1);
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(h + 1);
    c[h] = 1.0;
    for (int d = 1; d <= h; ++d) {
      const double md = gaussian_moment(theta, d);
      const double dmd = dm(d);
      c.head(h - d + 1) -= choose[h][d] * md * w[h - d];
      dc.head(h - d + 1) -=
          choose[h][d] * (md * dw[h - d] + dmd * w[h - d]);
    }
    w[h] = c;
    dw[h] = dc;
  }
  return dw;
}

SampleWindow window_over(const std::vector<double>& y,
                         const std::vector<double>& u, int n_a, int n_b) {
  return SampleWindow{y.data() + n_a, u.data() + n_b - 1, n_a, n_b};
}

}  // namespace

TEST_CASE("gaussian_moment: known values") {
  CHECK(gaussian_moment(1.0, 4) == doctest::Approx(3.0));
  CHECK(gaussian_moment(0.37, 1) == 0.0);
  CHECK(gaussian_moment(2.5, 7) == 0.0);
  CHECK(gaussian_moment(1.0, 0) == 1.0);
  CHECK(gaussian_moment(2.0, 2) == doctest::Approx(2.0));
  CHECK(gaussian_moment(2.0, 6) == doctest::Approx(120.0));
}

TEST_CASE("gaussian_moment: sixth moment of N(0,2) against Monte Carlo") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> draw(0.0, std::sqrt(2.0));
  double sum = 0.0;
  const long trials = 10'000'000;
  for (long i = 0; i < trials; ++i) {
    const double x = draw(rng);
    const double x2 = x * x;
    sum += x2 * x2 * x2;
  }
  const double mc = sum / static_cast<double>(trials);
  CHECK(gaussian_moment(2.0, 6) == doctest::Approx(mc).epsilon(0.02));
}

TEST_CASE("build_corrections: low-order Gaussian polynomials") {
  const double m2 = 0.8;
  const double m4 = gaussian_moment(0.8, 4);
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(0.8), 4);

  // W_2 = y^2 - m2
  CHECK(W.w[2][2] == doctest::Approx(1.0));
  CHECK(W.w[2][1] == doctest::Approx(0.0));
  CHECK(W.w[2][0] == doctest::Approx(-m2));

  // W_3 = y^3 - 3 m2 y
  CHECK(W.w[3][3] == doctest::Approx(1.0));
  CHECK(W.w[3][1] == doctest::Approx(-3.0 * m2));
  CHECK(W.w[3][0] == doctest::Approx(0.0));

  // W_4 = y^4 - 6 m2 (y^2 - m2) - m4
  CHECK(W.w[4][4] == doctest::Approx(1.0));
  CHECK(W.w[4][2] == doctest::Approx(-6.0 * m2));
  CHECK(W.w[4][0] == doctest::Approx(6.0 * m2 * m2 - m4));
}

TEST_CASE("build_corrections: zero noise leaves powers untouched") {
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(0.0), 6);
  for (int h = 0; h <= 6; ++h) {
    for (int j = 0; j < h; ++j) CHECK(W.w[h][j] == 0.0);
    CHECK(W.w[h][h] == 1.0);
    CHECK(W.eval(h, 1.7) == doctest::Approx(std::pow(1.7, h)));
  }
}

TEST_CASE("build_corrections: unit leading coefficient and parity") {
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(1.9), 8);
  for (int h = 0; h <= 8; ++h) {
    CHECK(W.w[h][h] == doctest::Approx(1.0));
    // Symmetric law: W_h keeps the parity of h.
    for (int j = (h % 2 == 0) ? 1 : 0; j <= h; j += 2)
      CHECK(W.w[h][j] == doctest::Approx(0.0));
  }
}

TEST_CASE("build_corrections: theta derivative matches finite differences") {
  const double theta = 1.3, h_step = 1e-6;
  const int h_max = 8;
  const auto dw = dW_dtheta_oracle(theta, h_max);
  const CorrectionPolys plus = build_corrections(NoiseModel::gaussian(theta + h_step), h_max);
  const CorrectionPolys minus = build_corrections(NoiseModel::gaussian(theta - h_step), h_max);
  for (int h = 0; h <= h_max; ++h) {
    const Eigen::VectorXd fd = (plus.w[h] - minus.w[h]) / (2 * h_step);
    CHECK((fd - dw[h]).norm() <= 1e-6 * (1.0 + dw[h].norm()));
  }
}

TEST_CASE("build_corrections: Monte-Carlo unbiasedness at fixed x") {
  const double theta = 0.5, x = 0.7;
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(theta), 6);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> eta(0.0, std::sqrt(theta));
  const long trials = 1'000'000;
  std::vector<double> sum(7, 0.0), sumsq(7, 0.0);
  for (long i = 0; i < trials; ++i) {
    const double y = x + eta(rng);
    for (int h = 1; h <= 6; ++h) {
      const double v = W.eval(h, y);
      sum[h] += v;
      sumsq[h] += v * v;
    }
  }
  for (int h = 1; h <= 6; ++h) {
    const double mean = sum[h] / trials;
    const double var = sumsq[h] / trials - mean * mean;
    const double se = std::sqrt(var / trials);
    CHECK(std::abs(mean - std::pow(x, h)) <= 4.0 * se);
  }
}

TEST_CASE("build_corrections: general recursion handles asymmetric moments") {
  // Noise supported on {-1, 2} with P(-1) = 2/3: m1 = 0, m2 = 2, m3 = 2, ...
  std::vector<double> m(5);
  for (int d = 0; d <= 4; ++d)
    m[d] = (2.0 / 3.0) * std::pow(-1.0, d) + (1.0 / 3.0) * std::pow(2.0, d);
  const NoiseModel model = NoiseModel::from_moments(m);
  const CorrectionPolys W = build_corrections(model, 4);

  // Exact expectation over the two-point law at fixed x.
  const double x = 1.1;
  for (int h = 1; h <= 4; ++h) {
    const double expect =
        (2.0 / 3.0) * W.eval(h, x - 1.0) + (1.0 / 3.0) * W.eval(h, x + 2.0);
    CHECK(expect == doctest::Approx(std::pow(x, h)).epsilon(1e-12));
  }
}

TEST_CASE("corrected_monomial_sar: catalog examples") {
  const double m2 = 0.6;
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(0.6), 4);
  const std::vector<double> y = {1.4, -0.9};  // y_{k-1}, y_k
  const std::vector<double> u = {0.3};        // u_{k-1}
  const SampleWindow win = window_over(y, u, 1, 1);

  Eigen::VectorXi alpha(3);
  alpha << 2, 2, 0;  // x_k^2 x_{k-1}^2
  CHECK(corrected_monomial_sar(alpha, win, W) ==
        doctest::Approx((y[1] * y[1] - m2) * (y[0] * y[0] - m2)));

  alpha << 0, 0, 4;  // inputs only: no correction
  CHECK(corrected_monomial_sar(alpha, win, W) ==
        doctest::Approx(std::pow(0.3, 4)));

  alpha << 3, 1, 0;  // (y_k^3 - 3 m2 y_k) y_{k-1}
  CHECK(corrected_monomial_sar(alpha, win, W) ==
        doctest::Approx((std::pow(y[1], 3) - 3 * m2 * y[1]) * y[0]));
}

TEST_CASE("corrected_monomial_sar: Monte-Carlo unbiasedness over a window") {
  const double theta = 0.4;
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(theta), 4);
  const double x_k = 0.8, x_km1 = -1.2, u_km1 = 0.5;
  Eigen::VectorXi alpha(3);
  alpha << 2, 1, 1;
  const double truth = x_k * x_k * x_km1 * u_km1;

  std::mt19937_64 rng(31);
  std::normal_distribution<double> eta(0.0, std::sqrt(theta));
  const long trials = 1'000'000;
  double sum = 0.0;
  std::vector<double> y(2), u = {u_km1};
  for (long i = 0; i < trials; ++i) {
    y[0] = x_km1 + eta(rng);
    y[1] = x_k + eta(rng);
    sum += corrected_monomial_sar(alpha, window_over(y, u, 1, 1), W);
  }
  const double mean = sum / trials;
  CHECK(mean == doctest::Approx(truth).epsilon(0.005));
}

TEST_CASE("corrected_monomial_sarx: Monte-Carlo unbiasedness with fixed past") {
  // Current output is v + eps with v deterministic; the past-output monomial
  // is a fixed multiplier here, so the corrected product must average to
  // v^h times it.
  const double theta = 0.6, v = 0.9, yk1 = -1.3, u_val = 0.4;
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(theta), 4);
  Eigen::VectorXi alpha(3);
  alpha << 2, 2, 1;
  const double truth = v * v * yk1 * yk1 * u_val;

  std::mt19937_64 rng(57);
  std::normal_distribution<double> eps(0.0, std::sqrt(theta));
  const long trials = 1'000'000;
  double sum = 0.0, sumsq = 0.0;
  std::vector<double> y = {yk1, 0.0}, u = {u_val};
  for (long i = 0; i < trials; ++i) {
    y[1] = v + eps(rng);
    const double val =
        corrected_monomial_sarx(alpha, window_over(y, u, 1, 1), W);
    sum += val;
    sumsq += val * val;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sumsq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - truth) <= 4.0 * se);
}

TEST_CASE("corrected_monomial_sarx: only the current output is corrected") {
  const double m2 = 0.6;
  const CorrectionPolys W = build_corrections(NoiseModel::gaussian(0.6), 4);
  const std::vector<double> y = {1.4, -0.9};
  const std::vector<double> u = {0.3};
  const SampleWindow win = window_over(y, u, 1, 1);

  Eigen::VectorXi alpha(3);
  alpha << 2, 2, 0;
  CHECK(corrected_monomial_sarx(alpha, win, W) ==
        doctest::Approx((y[1] * y[1] - m2) * y[0] * y[0]));

  alpha << 0, 4, 0;  // past output enters raw
  CHECK(corrected_monomial_sarx(alpha, win, W) ==
        doctest::Approx(std::pow(y[0], 4)));

  const CorrectionPolys W0 = build_corrections(NoiseModel::gaussian(0.0), 4);
  alpha << 2, 1, 1;
  CHECK(corrected_monomial_sarx(alpha, win, W0) ==
        doctest::Approx(y[1] * y[1] * y[0] * 0.3));
}

TEST_CASE("NoiseModel: moment table validation") {
  CHECK_THROWS(NoiseModel::from_moments({}));
  CHECK_THROWS(NoiseModel::from_moments({0.5, 0.0}));
  const NoiseModel m = NoiseModel::from_moments({1.0, 0.0, 2.0});
  CHECK(m.max_order() == 2);
  CHECK(m.moment(2) == 2.0);
  CHECK_THROWS(m.moment(3));
  CHECK_THROWS(build_corrections(m, 4));
  CHECK_THROWS(NoiseModel::gaussian(-1.0));
}
