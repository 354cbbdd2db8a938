#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "switchid/identify.hpp"
#include "switchid/simulate.hpp"

using namespace switchid;

namespace {

SwitchedModel example1_model() {
  SwitchedModel m;
  m.n = 2;
  m.n_a = 1;
  m.n_b = 1;
  m.modes.resize(2);
  m.modes[0].a = Eigen::VectorXd::Constant(1, 0.3);
  m.modes[0].b = Eigen::VectorXd::Constant(1, 1.0);
  m.modes[1].a = Eigen::VectorXd::Constant(1, -0.5);
  m.modes[1].b = Eigen::VectorXd::Constant(1, -1.0);
  return m;
}

LinearForm form3(double t0, double t1, double t2) {
  LinearForm f;
  f.t = Eigen::VectorXd(3);
  f.t << t0, t1, t2;
  return f;
}

// Points on the union of the two hyperplanes, exact.
std::vector<Eigen::VectorXd> on_plane_points(const LinearForm& t1,
                                             const LinearForm& t2, int count,
                                             unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < count; ++i) {
    const LinearForm& t = (i % 2 == 0) ? t1 : t2;
    Eigen::VectorXd r(3);
    r[1] = d(rng);
    r[2] = d(rng);
    r[0] = (t.t[1] * r[1] + t.t[2] * r[2]) / -t.t[0];
    pts.push_back(r);
  }
  return pts;
}

// Set distance between recovered and true forms after leading normalization.
double forms_set_error(std::vector<LinearForm> got,
                       std::vector<LinearForm> want) {
  REQUIRE(got.size() == want.size());
  double worst = 0.0;
  std::vector<bool> used(want.size(), false);
  for (const auto& g : got) {
    double best = std::numeric_limits<double>::infinity();
    size_t arg = 0;
    for (size_t i = 0; i < want.size(); ++i) {
      if (used[i]) continue;
      const double err = (g.t - want[i].t).norm();
      if (err < best) {
        best = err;
        arg = i;
      }
    }
    used[arg] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

IdentifyConfig basic_config(SystemKind kind, const NoiseModel& noise) {
  IdentifyConfig cfg;
  cfg.kind = kind;
  cfg.noise = NoiseSpec::known_model(noise);
  cfg.jobs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("gpca_extract: exact hybrid polynomial gives exact forms") {
  const LinearForm t1 = form3(-1.0, 0.3, 1.0);
  const LinearForm t2 = form3(-1.0, -0.5, -1.0);
  HomoPoly c = product_of_forms({t1, t2});
  c.coeffs = normalize_hybrid(c.coeffs).coeffs;

  const auto pts = on_plane_points(t1, t2, 200, 5);
  std::vector<double> residuals;
  const auto forms = gpca_extract(c, pts, 2, 1e-12, &residuals);
  CHECK(forms_set_error(forms, {t1, t2}) <= 1e-8);
  REQUIRE(residuals.size() == 1);
  CHECK(residuals[0] <= 1e-10);
}

TEST_CASE("gpca_extract: single mode needs no division") {
  const LinearForm t = form3(-1.0, 0.7, -0.2);
  HomoPoly c;
  c.index = build_index(1, 3);
  c.coeffs = 2.5 * t.t;  // arbitrary scale
  std::vector<Eigen::VectorXd> pts = {Eigen::VectorXd::Random(3),
                                      Eigen::VectorXd::Random(3)};
  const auto forms = gpca_extract(c, pts, 1, 1e-12);
  REQUIRE(forms.size() == 1);
  CHECK((forms[0].t - t.t).norm() <= 1e-12);
}

TEST_CASE("gpca_extract: perturbed coefficients stay close") {
  const LinearForm t1 = form3(-1.0, 0.3, 1.0);
  const LinearForm t2 = form3(-1.0, -0.5, -1.0);
  HomoPoly c = product_of_forms({t1, t2});
  c.coeffs = normalize_hybrid(c.coeffs).coeffs;

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> d(-1e-3, 1e-3);
  for (long j = 0; j < c.coeffs.size(); ++j) c.coeffs[j] += d(rng);

  auto pts = on_plane_points(t1, t2, 10000, 6);
  std::normal_distribution<double> jitter(0.0, 1e-3);
  for (auto& r : pts)
    for (int i = 0; i < 3; ++i) r[i] += jitter(rng);

  const auto forms = gpca_extract(c, pts, 2, 1e-12);
  CHECK(forms_set_error(forms, {t1, t2}) <= 1e-2);
}

TEST_CASE("gpca_extract: degenerate regressor set is rejected") {
  HomoPoly c = product_of_forms({form3(-1, 0.3, 1), form3(-1, -0.5, -1)});
  std::vector<Eigen::VectorXd> zeros(5, Eigen::VectorXd::Zero(3));
  CHECK_THROWS_WITH_AS(gpca_extract(c, zeros, 2, 1e-12),
                       doctest::Contains("degenerate"), std::runtime_error);
}

TEST_CASE("assign_modes: on-plane point gets its plane, ties break low") {
  const LinearForm t1 = form3(-1.0, 0.3, 1.0);
  const LinearForm t2 = form3(-1.0, -0.5, -1.0);
  Eigen::VectorXd on2(3);
  on2[1] = 1.0;
  on2[2] = 0.5;
  on2[0] = -0.5 * 1.0 - 1.0 * 0.5;
  const auto labels = assign_modes({on2}, {t1, t2});
  CHECK(labels[0] == 1);

  // Equidistant point: the smaller index wins.
  Eigen::VectorXd origin = Eigen::VectorXd::Zero(3);
  CHECK(assign_modes({origin}, {t1, t2})[0] == 0);
}

TEST_CASE("identify_sar: noiseless data recovers the system exactly") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::none(), 3000, 123);
  const IdentifyReport rep =
      identify_sar(data, basic_config(SystemKind::SAR, NoiseModel::none()));
  REQUIRE(rep.has_eval);
  CHECK(rep.eval.beta < 1e-8);
  CHECK(rep.eval.max_coefficient_error < 1e-7);
  CHECK(rep.gap_ok);
  CHECK(rep.eval.mode_accuracy == doctest::Approx(1.0));
  CHECK_FALSE(rep.c_degenerate);
}

TEST_CASE("identify_sarx: zero process noise reduces to the noiseless path") {
  const Dataset data = simulate(SystemKind::SARX, example1_model(),
                                SwitchSpec{}, InputSpec{}, NoiseModel::none(),
                                3000, 321);
  const IdentifyReport rep =
      identify_sarx(data, basic_config(SystemKind::SARX, NoiseModel::none()));
  CHECK(rep.eval.beta < 1e-8);
  CHECK(rep.eval.max_coefficient_error < 1e-7);
  CHECK(rep.eval.mode_accuracy == doctest::Approx(1.0));
}

TEST_CASE("identify: pipeline is deterministic") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::gaussian(0.5), 20000,
                                9);
  const IdentifyConfig cfg =
      basic_config(SystemKind::SAR, NoiseModel::gaussian(0.5));
  const IdentifyReport a = identify(data, cfg);
  const IdentifyReport b = identify(data, cfg);
  CHECK(a.c_hat.coeffs == b.c_hat.coeffs);
  CHECK(a.singular_values == b.singular_values);
  CHECK(a.labels == b.labels);
  CHECK(a.model.modes[0].a[0] == b.model.modes[0].a[0]);
}

TEST_CASE("identify: recovered forms multiply back to the hybrid vector") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::none(), 4000, 77);
  const IdentifyReport rep =
      identify_sar(data, basic_config(SystemKind::SAR, NoiseModel::none()));
  std::vector<LinearForm> forms;
  for (int i = 0; i < rep.model.n; ++i) forms.push_back(rep.model.form(i));
  HomoPoly rebuilt = product_of_forms(forms);
  rebuilt.coeffs = normalize_hybrid(rebuilt.coeffs).coeffs;
  CHECK((rebuilt.coeffs - rep.c_hat.coeffs).norm() <= 1e-8);
}

TEST_CASE("gpca_extract: recovered set invariant to regressor order") {
  const LinearForm t1 = form3(-1.0, 0.3, 1.0);
  const LinearForm t2 = form3(-1.0, -0.5, -1.0);
  HomoPoly c = product_of_forms({t1, t2});
  c.coeffs = normalize_hybrid(c.coeffs).coeffs;

  auto pts = on_plane_points(t1, t2, 400, 15);
  const auto forward = gpca_extract(c, pts, 2, 1e-12);
  std::reverse(pts.begin(), pts.end());
  const auto reversed = gpca_extract(c, pts, 2, 1e-12);
  CHECK(forms_set_error(forward, reversed) <= 1e-9);
}

TEST_CASE("identify: three modes need two deflation steps") {
  SwitchedModel m;
  m.n = 3;
  m.n_a = 1;
  m.n_b = 1;
  m.modes.resize(3);
  m.modes[0].a = Eigen::VectorXd::Constant(1, 0.3);
  m.modes[0].b = Eigen::VectorXd::Constant(1, 1.0);
  m.modes[1].a = Eigen::VectorXd::Constant(1, -0.5);
  m.modes[1].b = Eigen::VectorXd::Constant(1, -1.0);
  m.modes[2].a = Eigen::VectorXd::Constant(1, 0.8);
  m.modes[2].b = Eigen::VectorXd::Constant(1, 0.4);

  const Dataset data = simulate(SystemKind::SAR, m, SwitchSpec{}, InputSpec{},
                                NoiseModel::none(), 20000, 55);
  IdentifyConfig cfg = basic_config(SystemKind::SAR, NoiseModel::none());
  cfg.n = 3;
  const IdentifyReport rep = identify(data, cfg);
  CHECK(rep.eval.beta < 1e-7);
  CHECK(rep.eval.max_coefficient_error < 1e-6);
  CHECK(rep.eval.mode_accuracy == doctest::Approx(1.0));
  CHECK(rep.division_residuals.size() == 2);
}

TEST_CASE("identify: second-order lags are handled") {
  SwitchedModel m;
  m.n = 2;
  m.n_a = 2;
  m.n_b = 1;
  m.modes.resize(2);
  m.modes[0].a = Eigen::VectorXd(2);
  m.modes[0].a << 0.4, 0.2;
  m.modes[0].b = Eigen::VectorXd::Constant(1, 1.0);
  m.modes[1].a = Eigen::VectorXd(2);
  m.modes[1].a << -0.3, 0.1;
  m.modes[1].b = Eigen::VectorXd::Constant(1, -0.8);

  const Dataset data = simulate(SystemKind::SARX, m, SwitchSpec{}, InputSpec{},
                                NoiseModel::gaussian(0.3), 300000, 91);
  IdentifyConfig cfg = basic_config(SystemKind::SARX, NoiseModel::gaussian(0.3));
  cfg.n_a = 2;
  const IdentifyReport rep = identify(data, cfg);
  CHECK(rep.c_hat.coeffs.size() == 10);  // C(2+3, 2)
  CHECK(rep.eval.beta < 0.05);
  CHECK(rep.eval.max_coefficient_error < 0.1);
}

TEST_CASE("identify: wrong mode count is flagged by the gap diagnostic") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::none(), 5000, 31);
  IdentifyConfig cfg = basic_config(SystemKind::SAR, NoiseModel::none());
  cfg.n = 1;  // data actually switches between two modes
  const IdentifyReport rep = identify(data, cfg);
  CHECK_FALSE(rep.gap_ok);
  CHECK(rep.model.modes.size() == 1);  // best-effort model still returned
}

TEST_CASE("identify: noisy SAR run reports sane diagnostics") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::gaussian(0.1), 200000,
                                13);
  const IdentifyReport rep =
      identify_sar(data, basic_config(SystemKind::SAR, NoiseModel::gaussian(0.1)));
  CHECK(rep.eval.beta < 0.05);
  CHECK(rep.eval.mode_accuracy > 0.5);
  CHECK(rep.eval.mode_accuracy <= 1.0);
  CHECK(rep.eval.gamma > 0.0);
  CHECK(rep.has_refined);
}

TEST_CASE("estimate_theta: noiseless data pins theta near zero") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::none(), 20000, 2);
  IdentifyConfig cfg;
  cfg.kind = SystemKind::SAR;
  cfg.noise = NoiseSpec::unknown(1.0);
  cfg.theta_grid = 101;
  cfg.jobs = 2;
  const auto [theta, rep] = estimate_theta(data, cfg);
  CHECK(theta <= 0.02);
  CHECK(rep.theta_estimated);
  CHECK(rep.theta_curve.size() == 101);
}

TEST_CASE("estimate_theta: moderate-size SAR run lands near the true variance") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::gaussian(0.5), 300000,
                                40);
  IdentifyConfig cfg;
  cfg.kind = SystemKind::SAR;
  cfg.noise = NoiseSpec::unknown(2.0);
  cfg.theta_grid = 101;
  cfg.jobs = 2;
  const auto [theta, rep] = estimate_theta(data, cfg);
  CHECK(theta == doctest::Approx(0.5).epsilon(0.10));
  CHECK(rep.has_eval);
  CHECK(rep.eval.has_theta_error);
}

TEST_CASE("theta_curve: explicit grids, including a single point") {
  const Dataset data = simulate(SystemKind::SARX, example1_model(),
                                SwitchSpec{}, InputSpec{},
                                NoiseModel::gaussian(0.3), 50000, 4);
  IdentifyConfig cfg;
  cfg.kind = SystemKind::SARX;
  cfg.noise = NoiseSpec::unknown(1.0);
  cfg.jobs = 2;
  const auto single = theta_curve(data, cfg, {0.3});
  REQUIRE(single.size() == 1);
  CHECK(single[0].first == 0.3);
  CHECK(single[0].second > 0.0);

  const auto three = theta_curve(data, cfg, {0.0, 0.3, 0.9});
  REQUIRE(three.size() == 3);
  // The sampled value at the true variance is the smallest of the three.
  CHECK(three[1].second < three[0].second);
  CHECK(three[1].second < three[2].second);
}

TEST_CASE("smallest_subthreshold_local_min: picks the leftmost dip") {
  const std::vector<std::pair<double, double>> curve = {
      {0.0, 5.0}, {0.1, 3.0}, {0.2, 4.0}, {0.3, 0.5}, {0.4, 2.0}};
  CHECK(smallest_subthreshold_local_min(curve, 3.5) == 1);
  CHECK(smallest_subthreshold_local_min(curve, 1.0) == 3);
  CHECK(smallest_subthreshold_local_min(curve, 0.1) == -1);
}

TEST_CASE("identify: pre-scaling changes magnitudes, not the answer") {
  InputSpec big;
  big.bound = 50.0;
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                big, NoiseModel::gaussian(0.2), 50000, 66);
  IdentifyConfig plain = basic_config(SystemKind::SAR, NoiseModel::gaussian(0.2));
  IdentifyConfig scaled = plain;
  scaled.rescale = true;

  const IdentifyReport a = identify(data, plain);
  const IdentifyReport b = identify(data, scaled);
  CHECK(b.scale > 1.0);
  CHECK(a.scale == 1.0);
  CHECK((a.c_hat.coeffs - b.c_hat.coeffs).norm() <= 1e-6);
}

TEST_CASE("identify: configuration validation") {
  const Dataset data = simulate(SystemKind::SAR, example1_model(), SwitchSpec{},
                                InputSpec{}, NoiseModel::none(), 100, 1);
  IdentifyConfig cfg = basic_config(SystemKind::SAR, NoiseModel::none());
  cfg.noise = NoiseSpec::unknown(-1.0);
  CHECK_THROWS(identify(data, cfg));
  cfg = basic_config(SystemKind::SAR, NoiseModel::none());
  cfg.tol_grad = 0.0;
  CHECK_THROWS(identify(data, cfg));
}
