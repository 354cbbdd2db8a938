#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "switchid/metrics.hpp"
#include "switchid/simulate.hpp"

using namespace switchid;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd r(static_cast<long>(v.size()));
  long i = 0;
  for (double x : v) r[i++] = x;
  return r;
}

SwitchedModel order1_model(double a1, double b1, double a2, double b2) {
  SwitchedModel m;
  m.n = 2;
  m.n_a = 1;
  m.n_b = 1;
  m.modes.resize(2);
  m.modes[0].a = Eigen::VectorXd::Constant(1, a1);
  m.modes[0].b = Eigen::VectorXd::Constant(1, b1);
  m.modes[1].a = Eigen::VectorXd::Constant(1, a2);
  m.modes[1].b = Eigen::VectorXd::Constant(1, b2);
  return m;
}

}  // namespace

TEST_CASE("beta: zero for identical vectors, exact formula otherwise") {
  const Eigen::VectorXd c = vec({1.0, 0.2, 0.0, -0.15, -0.8, -1.0});
  CHECK(beta(c, c) == 0.0);

  // A published identification run against its truth; the quotient of the
  // difference norm and the truth norm, computed by hand:
  //   diff = (0, .0023, -.0046, .0048, -.0003, -.0034), |diff| = 7.8192e-3,
  //   |c| = sqrt(2.7025) = 1.64393, ratio = 4.7564e-3.
  const Eigen::VectorXd est =
      vec({1.0, 0.1977, 0.0046, -0.1548, -0.7997, -0.9966});
  CHECK(beta(c, est) == doctest::Approx(0.0047564).epsilon(1e-3));

  // Scale invariance through the leading-one normalization.
  CHECK(beta(3.0 * c, -0.5 * est) == doctest::Approx(beta(c, est)));
  CHECK_THROWS(beta(Eigen::VectorXd::Zero(6), c));
}

TEST_CASE("beta: degenerate leading coefficients fall back to unit norm") {
  const Eigen::VectorXd a = vec({0.0, 3.0, 4.0});
  const Eigen::VectorXd b = vec({0.0, -3.0, -4.0});  // same direction, flipped
  CHECK(beta(a, b) == doctest::Approx(0.0));
}

TEST_CASE("match_modes: swapped modes come back aligned") {
  const SwitchedModel truth = order1_model(0.3, 1.0, -0.5, -1.0);
  const SwitchedModel swapped = order1_model(-0.5, -1.0, 0.3, 1.0);
  const ModeMatch m = match_modes(truth, swapped);
  CHECK(m.permutation == std::vector<int>{1, 0});
  CHECK(m.per_coefficient_error.maxCoeff() == doctest::Approx(0.0));
  CHECK(m.total_error == doctest::Approx(0.0));
}

TEST_CASE("match_modes: published low-noise column error bound") {
  const SwitchedModel truth = order1_model(0.3, 1.0, -0.5, -1.0);
  const SwitchedModel est = order1_model(0.3002, 0.9988, -0.4996, -0.9999);
  const ModeMatch m = match_modes(truth, est);
  CHECK(m.per_coefficient_error.maxCoeff() <=
        doctest::Approx(0.0012).epsilon(1e-9));
}

TEST_CASE("match_modes: agrees with a brute-force permutation scan") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    SwitchedModel truth, est;
    truth.n = est.n = 3;
    truth.n_a = est.n_a = 1;
    truth.n_b = est.n_b = 1;
    for (int i = 0; i < 3; ++i) {
      SubModel t{Eigen::VectorXd::Constant(1, d(rng)),
                 Eigen::VectorXd::Constant(1, d(rng))};
      SubModel e{Eigen::VectorXd::Constant(1, d(rng)),
                 Eigen::VectorXd::Constant(1, d(rng))};
      truth.modes.push_back(t);
      est.modes.push_back(e);
    }
    const ModeMatch got = match_modes(truth, est);

    std::vector<int> perm = {0, 1, 2};
    double best = std::numeric_limits<double>::infinity();
    do {
      double cost = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double da = truth.modes[i].a[0] - est.modes[perm[i]].a[0];
        const double db = truth.modes[i].b[0] - est.modes[perm[i]].b[0];
        cost += std::hypot(da, db);
      }
      best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got.total_error == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("match_modes: relabeling either side leaves errors invariant") {
  const SwitchedModel truth = order1_model(0.2, 0.9, -0.6, -1.1);
  const SwitchedModel est = order1_model(0.25, 0.85, -0.55, -1.2);
  const SwitchedModel est_swapped = order1_model(-0.55, -1.2, 0.25, 0.85);
  const double e1 = match_modes(truth, est).total_error;
  const double e2 = match_modes(truth, est_swapped).total_error;
  CHECK(e1 == doctest::Approx(e2).epsilon(1e-12));
}

TEST_CASE("match_modes: guards") {
  SwitchedModel seven = order1_model(0.1, 1.0, 0.2, 1.0);
  seven.n = 7;
  seven.modes.resize(7, seven.modes[0]);
  CHECK_THROWS(match_modes(seven, seven));
}

TEST_CASE("autocov_decay: iid series shows no correlation structure") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> draw(0.0, 1.0);
  const long T = 100000;
  std::vector<double> z(T);
  for (auto& v : z) v = draw(rng);
  const AutocovDecay d = autocov_decay(z, 10);
  const double band = 4.0 / std::sqrt(static_cast<double>(T));
  for (double rho : d.rho) CHECK(std::abs(rho) <= band);
}

TEST_CASE("autocov_decay: white-noise band holds for most seeds") {
  long ok = 0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::normal_distribution<double> draw(0.0, 1.0);
    const long T = 20000;
    std::vector<double> z(T);
    for (auto& v : z) v = draw(rng);
    const AutocovDecay d = autocov_decay(z, 8);
    const double band = 4.0 / std::sqrt(static_cast<double>(T));
    bool all_in = true;
    for (double rho : d.rho) all_in &= std::abs(rho) <= band;
    ok += all_in;
  }
  CHECK(ok >= static_cast<long>(0.95 * seeds));
}

TEST_CASE("autocov_decay: AR(1) rate recovered near its true value") {
  // Closed form: Cov(y_k, y_{k+l}) = a^l sigma^2 / (1 - a^2).
  const double a = 0.9;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> draw(0.0, 1.0);
  const long T = 200000;
  std::vector<double> y(T);
  double state = 0.0;
  for (long k = 0; k < T; ++k) {
    state = a * state + draw(rng);
    y[k] = state;
  }
  const AutocovDecay d = autocov_decay(y, 20);
  CHECK(d.fitted_rate >= 0.85);
  CHECK(d.fitted_rate <= 0.95);
  // The lag-1 estimate itself should sit near the closed form.
  CHECK(d.rho[0] == doctest::Approx(a / (1 - a * a)).epsilon(0.1));
}

TEST_CASE("autocov_decay: stable switched output monomial decays") {
  SwitchedModel m = order1_model(0.4, 1.0, -0.5, -0.8);
  const Dataset data = simulate(SystemKind::SARX, m, SwitchSpec{}, InputSpec{},
                                NoiseModel::gaussian(0.5), 100000, 33);
  std::vector<double> z(data.N);
  for (long k = 0; k < data.N; ++k) {
    const double yk = data.y[k + data.n_a];
    z[k] = yk * yk;
  }
  const AutocovDecay d = autocov_decay(z, 15);
  CHECK(d.fitted_rate < 1.0);
  CHECK(d.fitted_rate > 0.0);
}

TEST_CASE("autocov_decay: degenerate series rejected") {
  std::vector<double> constant(1000, 3.0);
  CHECK_THROWS(autocov_decay(constant, 5));
  std::vector<double> tiny = {1.0, 2.0, 3.0};
  CHECK_THROWS(autocov_decay(tiny, 5));
}
