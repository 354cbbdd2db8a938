#include "switchid/identify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "switchid/util.hpp"

namespace switchid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Working view of the dataset, optionally pre-scaled by 1/max(|y|,|u|,1).
// Every regressor monomial has the same total degree, so uniform scaling
// multiplies the moment matrix by a constant: hyperplanes, their normals and
// the normalized hybrid vector are unchanged, only the magnitudes fed to the
// accumulator shrink. Noise moments are scaled to match (m_d -> m_d / s^d).
struct WorkingData {
  SampleStream stream;
  std::vector<double> y_copy, u_copy;
  double scale = 1.0;

  NoiseModel scaled_noise(const NoiseModel& m) const {
    if (scale == 1.0) return m;
    if (m.family == NoiseFamily::GaussianZeroMean)
      return NoiseModel::gaussian(m.theta / (scale * scale));
    std::vector<double> moments = m.raw;
    double factor = 1.0;
    for (size_t d = 1; d < moments.size(); ++d) {
      factor /= scale;
      moments[d] *= factor;
    }
    return NoiseModel::from_moments(std::move(moments));
  }

  double theta_to_internal(double theta) const {
    return theta / (scale * scale);
  }
};

WorkingData make_working(const Dataset& data, bool rescale) {
  WorkingData wd;
  wd.stream = data.stream();
  if (!rescale) return wd;

  double peak = 1.0;
  for (double v : data.y) peak = std::max(peak, std::abs(v));
  for (double v : data.u) peak = std::max(peak, std::abs(v));
  if (peak == 1.0) return wd;

  wd.scale = peak;
  wd.y_copy.resize(data.y.size());
  wd.u_copy.resize(data.u.size());
  for (size_t i = 0; i < data.y.size(); ++i) wd.y_copy[i] = data.y[i] / peak;
  for (size_t i = 0; i < data.u.size(); ++i) wd.u_copy[i] = data.u[i] / peak;
  const long y_off = data.stream().y_first - data.y.data();
  const long u_off = data.stream().u_first - data.u.data();
  wd.stream.y_first = wd.y_copy.data() + y_off;
  wd.stream.u_first = wd.u_copy.data() + u_off;
  return wd;
}

std::vector<long> subsample_indices(long count, long cap) {
  std::vector<long> idx;
  if (count <= cap) {
    idx.resize(count);
    for (long i = 0; i < count; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(cap);
  for (long i = 0; i < cap; ++i) idx.push_back(i * count / cap);
  return idx;
}

MatrixKind matrix_kind(SystemKind kind) {
  return kind == SystemKind::SAR ? MatrixKind::SAR : MatrixKind::SARX;
}

void check_config(const IdentifyConfig& cfg) {
  if (cfg.n < 1 || cfg.n_a < 1 || cfg.n_b < 1)
    throw std::invalid_argument("identify: orders must be >= 1");
  if (cfg.tol_grad <= 0.0 || cfg.gap_threshold <= 0.0)
    throw std::invalid_argument("identify: tolerances must be positive");
  if (!cfg.noise.known) {
    if (cfg.noise.theta_max <= 0.0)
      throw std::invalid_argument("identify: theta_max must be positive");
    if (cfg.noise.family != NoiseFamily::GaussianZeroMean)
      throw std::invalid_argument(
          "identify: unknown-noise search supports the Gaussian family only");
  }
}

// Extraction core shared by the stream and the explicit-list entry points.
// The plain argmin of |p(r)| / ||Dp(r)|| is unreliable once p is estimated:
// its zero set is a quadric hugging the union of hyperplanes, and samples
// near the smoothed intersection can win the argmin while carrying a mixed
// gradient. So the best-ranked candidates are tried in order and a form is
// accepted only when deflating by it leaves a small residual.
template <typename GetRegressor>
std::vector<LinearForm> gpca_core(const HomoPoly& c_hat,
                                  const GetRegressor& regressor_at,
                                  long candidates, int n, double tol_grad,
                                  std::vector<double>* residuals,
                                  bool* degenerate_flag) {
  if (candidates < 1)
    throw std::invalid_argument("gpca_extract: empty regressor set");
  constexpr long kAttempts = 64;

  std::vector<LinearForm> forms;
  HomoPoly p = c_hat;
  Eigen::VectorXd r(c_hat.index.dims);
  std::vector<std::pair<double, long>> ranked;
  ranked.reserve(candidates);
  for (int i = n; i >= 1; --i) {
    const std::vector<HomoPoly> grad = gradient(p);
    ranked.clear();
    for (long c = 0; c < candidates; ++c) {
      regressor_at(c, r);
      const Eigen::VectorXd g = gradient_at(grad, r);
      const double gn = g.norm();
      if (gn <= tol_grad) continue;
      ranked.emplace_back(std::abs(eval(p, r)) / gn, c);
    }
    if (ranked.empty())
      throw std::runtime_error(
          "gpca_extract: degenerate regressor set (all gradients below tolerance)");
    const long attempts = std::min<long>(kAttempts, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + attempts, ranked.end());

    auto form_at = [&](long rank) {
      regressor_at(ranked[rank].second, r);
      LinearForm t;
      t.t = gradient_at(grad, r);
      t.t /= t.t.norm();
      return t;
    };

    if (i == 1) {
      forms.push_back(form_at(0));
      break;
    }

    LinearForm best_form = form_at(0);
    DivisionResult best_div = divide_by_linear(p, best_form);
    const double accept = 0.2 * p.coeffs.norm();
    for (long rank = 1; rank < attempts && best_div.residual > accept; ++rank) {
      LinearForm t = form_at(rank);
      DivisionResult div = divide_by_linear(p, t);
      if (div.residual < best_div.residual) {
        best_div = std::move(div);
        best_form = std::move(t);
      }
    }
    forms.push_back(best_form);
    if (residuals) residuals->push_back(best_div.residual);
    if (best_div.residual > 0.5 * p.coeffs.norm()) {
      log_warn("gpca_extract: division residual " +
               std::to_string(best_div.residual) +
               " exceeds half the polynomial norm");
      if (degenerate_flag) *degenerate_flag = true;
    }
    p = std::move(best_div.quotient);
  }

  // Model normalization t[0] = -1; a form with vanishing first entry cannot
  // describe an (A)RX mode and is left unit-norm.
  for (LinearForm& f : forms) {
    if (std::abs(f.t[0]) > 1e-9 * f.t.norm()) {
      f.t /= -f.t[0];
      f.t[0] = -1.0;
    } else {
      log_warn("gpca_extract: recovered form has near-zero leading entry");
      if (degenerate_flag) *degenerate_flag = true;
    }
  }
  return forms;
}

SwitchedModel model_from_forms(const std::vector<LinearForm>& forms, int n_a,
                               int n_b) {
  SwitchedModel m;
  m.n = static_cast<int>(forms.size());
  m.n_a = n_a;
  m.n_b = n_b;
  for (const LinearForm& f : forms) {
    SubModel sub;
    sub.a = f.t.segment(1, n_a);
    sub.b = f.t.segment(1 + n_a, n_b);
    m.modes.push_back(std::move(sub));
  }
  return m;
}

std::vector<int> assign_stream(const SampleStream& s,
                               const std::vector<LinearForm>& forms) {
  std::vector<int> labels(s.count, 0);
  const int dims = s.n_a + s.n_b + 1;
  Eigen::VectorXd r(dims);
  for (long w = 0; w < s.count; ++w) {
    r = s.window(w).regressor();
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (size_t l = 0; l < forms.size(); ++l) {
      const double v = std::abs(forms[l].t.dot(r));
      if (v < best) {
        best = v;
        arg = static_cast<int>(l);
      }
    }
    labels[w] = arg;
  }
  return labels;
}

// Ordinary least squares of y_k on [y_{k-1}..y_{k-n_a}, u_{k-1}..u_{k-n_b}]
// per assigned mode. Reported alongside the forms, never in their place.
bool refit_modes(const SampleStream& s, const std::vector<int>& labels, int n,
                 SwitchedModel& out) {
  const int w_dim = s.n_a + s.n_b;
  std::vector<Eigen::MatrixXd> ata(n, Eigen::MatrixXd::Zero(w_dim, w_dim));
  std::vector<Eigen::VectorXd> atb(n, Eigen::VectorXd::Zero(w_dim));
  std::vector<long> counts(n, 0);
  Eigen::VectorXd x(w_dim);
  for (long w = 0; w < s.count; ++w) {
    const SampleWindow win = s.window(w);
    for (int j = 1; j <= s.n_a; ++j) x[j - 1] = win.out(j);
    for (int j = 1; j <= s.n_b; ++j) x[s.n_a + j - 1] = win.in(j);
    const int l = labels[w];
    ata[l].selfadjointView<Eigen::Lower>().rankUpdate(x);
    atb[l] += x * win.out(0);
    ++counts[l];
  }
  out.n = n;
  out.n_a = s.n_a;
  out.n_b = s.n_b;
  out.modes.assign(n, SubModel{Eigen::VectorXd::Zero(s.n_a),
                               Eigen::VectorXd::Zero(s.n_b)});
  for (int l = 0; l < n; ++l) {
    if (counts[l] < w_dim) return false;
    const Eigen::MatrixXd full = ata[l].selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd theta = full.ldlt().solve(atb[l]);
    out.modes[l].a = theta.head(s.n_a);
    out.modes[l].b = theta.tail(s.n_b);
  }
  return true;
}

void evaluate_against_truth(const Dataset& data, IdentifyReport& report) {
  if (!data.has_truth) return;
  if (data.true_model.n != report.model.n ||
      data.true_model.n_a != report.model.n_a ||
      data.true_model.n_b != report.model.n_b)
    return;  // configured structure differs from the truth; nothing to compare
  EvalSummary& ev = report.eval;
  const HomoPoly c_true = data.true_model.hybrid_coeffs();
  ev.beta = beta(c_true.coeffs, report.c_hat.coeffs);

  const ModeMatch match = match_modes(data.true_model, report.model);
  ev.per_mode_errors = match.per_coefficient_error;
  ev.max_coefficient_error = match.per_coefficient_error.maxCoeff();

  // labels index estimated modes; fold through the matching permutation to
  // compare with the simulator's mode trace.
  std::vector<int> est_to_true(report.model.n, 0);
  for (int i = 0; i < report.model.n; ++i) est_to_true[match.permutation[i]] = i;
  long hits = 0;
  for (size_t w = 0; w < report.labels.size(); ++w) {
    const long k_idx = data.usable_offset + static_cast<long>(w);
    if (est_to_true[report.labels[w]] == data.modes[k_idx]) ++hits;
  }
  ev.mode_accuracy = report.labels.empty()
                         ? 0.0
                         : static_cast<double>(hits) / report.labels.size();
  if (!data.noise.empty()) ev.gamma = gamma_ratio(data);
  if (report.theta_estimated) {
    ev.has_theta_error = true;
    ev.theta_error = report.theta_hat - data.theta_true;
  }
  report.has_eval = true;
}

// Post-matrix stages shared by the known-noise and estimated-noise paths.
void finish_pipeline(const Dataset& data, const IdentifyConfig& cfg,
                     const WorkingData& wd, const Eigen::MatrixXd& mean,
                     IdentifyReport& report) {
  const int dims = cfg.n_a + cfg.n_b + 1;
  const VeroneseIndex index = build_index(cfg.n, dims);

  const SvdResult svd = min_singular_of(mean);
  report.singular_values = svd.singular_values;
  report.gap_ratio = svd.gap_ratio;
  report.gap_ok = svd.gap_ratio >= cfg.gap_threshold;
  if (!report.gap_ok)
    log_warn("identify: singular-value gap ratio " +
             std::to_string(svd.gap_ratio) + " below " +
             std::to_string(cfg.gap_threshold) +
             "; data inconsistent with (n, n_a, n_b)");

  const NormalizedHybrid nh = normalize_hybrid(svd.v_min);
  report.c_hat.index = index;
  report.c_hat.coeffs = nh.coeffs;
  report.c_degenerate = nh.degenerate;
  report.scale = wd.scale;

  const auto idx = subsample_indices(wd.stream.count, cfg.gpca_max_candidates);
  const SampleStream& s = wd.stream;
  auto regressor_at = [&](long c, Eigen::VectorXd& r) {
    const SampleWindow win = s.window(idx[c]);
    for (int i = 0; i <= s.n_a; ++i) r[i] = win.out(i);
    for (int j = 1; j <= s.n_b; ++j) r[s.n_a + j] = win.in(j);
  };
  const std::vector<LinearForm> forms =
      gpca_core(report.c_hat, regressor_at, static_cast<long>(idx.size()),
                cfg.n, cfg.tol_grad, &report.division_residuals,
                &report.degenerate_regressors);

  report.model = model_from_forms(forms, cfg.n_a, cfg.n_b);
  report.labels = assign_stream(wd.stream, forms);
  // The refit regression is scale-invariant (both sides carry the factor).
  if (cfg.refine_modes)
    report.has_refined = refit_modes(wd.stream, report.labels, cfg.n,
                                     report.refined);
  evaluate_against_truth(data, report);
}

IdentifyReport identify_known(const Dataset& data, const IdentifyConfig& cfg) {
  const auto t0 = Clock::now();
  const WorkingData wd = make_working(data, cfg.rescale);
  const NoiseModel noise = wd.scaled_noise(cfg.noise.model);
  const VeroneseIndex index = build_index(cfg.n, cfg.n_a + cfg.n_b + 1);
  const CorrectionPolys W = build_corrections(noise, 2 * cfg.n);

  MomentMatrix m(index, matrix_kind(cfg.kind));
  accumulate_parallel(m, wd.stream, W, cfg.jobs);

  IdentifyReport report;
  finish_pipeline(data, cfg, wd, m.mean(), report);
  report.elapsed_seconds = seconds_since(t0);
  return report;
}

double sigma_min_of(const Eigen::MatrixXd& mean) {
  const SvdResult svd = min_singular_of(mean);
  return svd.singular_values[svd.singular_values.size() - 1];
}

// Golden-section minimization of f over [lo, hi].
template <typename F>
double golden_section(F&& f, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, hi); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

long smallest_subthreshold_local_min(
    const std::vector<std::pair<double, double>>& curve, double threshold) {
  const long g = static_cast<long>(curve.size());
  for (long i = 0; i < g; ++i) {
    const double v = curve[i].second;
    if (v > threshold) continue;
    const bool left_ok = i == 0 || curve[i - 1].second >= v;
    const bool right_ok = i == g - 1 || curve[i + 1].second >= v;
    if (left_ok && right_ok) return i;
  }
  return -1;
}

std::vector<std::pair<double, double>> theta_curve(
    const Dataset& data, const IdentifyConfig& cfg,
    const std::vector<double>& grid) {
  check_config(cfg);
  const WorkingData wd = make_working(data, cfg.rescale);
  const VeroneseIndex index = build_index(cfg.n, cfg.n_a + cfg.n_b + 1);
  RawMomentSums raw(index, matrix_kind(cfg.kind), cfg.n_a, cfg.n_b);
  accumulate_parallel(raw, wd.stream, cfg.jobs);

  std::vector<std::pair<double, double>> curve(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    const CorrectionPolys W = build_corrections(
        NoiseModel::gaussian(wd.theta_to_internal(grid[i])), 2 * cfg.n);
    curve[i] = {grid[i], sigma_min_of(raw.assemble_mean(W))};
  }
  return curve;
}

std::pair<double, IdentifyReport> estimate_theta(const Dataset& data,
                                                 const IdentifyConfig& cfg) {
  check_config(cfg);
  if (cfg.noise.known)
    throw std::invalid_argument("estimate_theta: noise is marked known");
  const auto t0 = Clock::now();

  const WorkingData wd = make_working(data, cfg.rescale);
  const VeroneseIndex index = build_index(cfg.n, cfg.n_a + cfg.n_b + 1);
  RawMomentSums raw(index, matrix_kind(cfg.kind), cfg.n_a, cfg.n_b);
  accumulate_parallel(raw, wd.stream, cfg.jobs);

  auto sigma_at = [&](double theta) {
    const CorrectionPolys W = build_corrections(
        NoiseModel::gaussian(wd.theta_to_internal(theta)), 2 * cfg.n);
    return sigma_min_of(raw.assemble_mean(W));
  };

  const int grid_points = std::max(2, cfg.theta_grid);
  const double theta_max = cfg.noise.theta_max;
  std::vector<std::pair<double, double>> curve(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    const double theta = theta_max * g / (grid_points - 1);
    curve[g] = {theta, sigma_at(theta)};
  }

  // Every genuine dip of the curve is a V-shaped zero crossing of an
  // eigenvalue, so its sampled depth only reflects where the grid happened
  // to land. Refine each local minimum inside its bracket first, then apply
  // the threshold rule to the refined depths.
  struct Dip {
    double theta;
    double depth;
  };
  std::vector<Dip> dips;
  double curve_scale = 0.0;
  for (const auto& [theta, sigma] : curve) curve_scale = std::max(curve_scale, sigma);
  for (int g = 0; g < grid_points; ++g) {
    const double v = curve[g].second;
    if (g > 0 && curve[g - 1].second < v) continue;
    if (g + 1 < grid_points && curve[g + 1].second < v) continue;
    const double lo = curve[std::max(g - 1, 0)].first;
    const double hi = curve[std::min(g + 1, grid_points - 1)].first;
    const double t = golden_section(sigma_at, lo, hi);
    const double refined = sigma_at(t);
    if (refined <= v)
      dips.push_back({t, refined});
    else
      dips.push_back({curve[g].first, v});
  }

  double depth_floor = std::numeric_limits<double>::infinity();
  for (const Dip& d : dips) depth_floor = std::min(depth_floor, d.depth);
  const double threshold =
      cfg.theta_sigma_abs > 0.0
          ? cfg.theta_sigma_abs
          : cfg.theta_sigma_factor * depth_floor + 1e-9 * curve_scale;

  double theta_star = dips.front().theta;
  bool threshold_hit = false;
  for (const Dip& d : dips) {  // dips are ordered by theta
    if (d.depth <= threshold) {
      theta_star = d.theta;
      threshold_hit = true;
      break;
    }
  }
  if (!threshold_hit) {
    const Dip* best = &dips.front();
    for (const Dip& d : dips)
      if (d.depth < best->depth) best = &d;
    theta_star = best->theta;
    log_warn("estimate_theta: no dip under threshold " +
             std::to_string(threshold) + "; using the deepest one");
  }

  IdentifyConfig final_cfg = cfg;
  final_cfg.noise = NoiseSpec::known_model(NoiseModel::gaussian(theta_star));

  IdentifyReport report;
  const CorrectionPolys W_star = build_corrections(
      NoiseModel::gaussian(wd.theta_to_internal(theta_star)), 2 * cfg.n);
  report.theta_estimated = true;
  report.theta_hat = theta_star;
  report.theta_threshold_hit = threshold_hit;
  report.theta_curve = curve;
  finish_pipeline(data, final_cfg, wd, raw.assemble_mean(W_star), report);
  report.elapsed_seconds = seconds_since(t0);
  return {theta_star, report};
}

IdentifyReport identify(const Dataset& data, const IdentifyConfig& cfg) {
  check_config(cfg);
  if (data.n_a != cfg.n_a || data.n_b != cfg.n_b)
    log_warn("identify: dataset orders (" + std::to_string(data.n_a) + "," +
             std::to_string(data.n_b) + ") differ from configured (" +
             std::to_string(cfg.n_a) + "," + std::to_string(cfg.n_b) + ")");
  if (cfg.noise.known) return identify_known(data, cfg);
  return estimate_theta(data, cfg).second;
}

IdentifyReport identify_sar(const Dataset& data, const IdentifyConfig& cfg) {
  IdentifyConfig c = cfg;
  c.kind = SystemKind::SAR;
  return identify(data, c);
}

IdentifyReport identify_sarx(const Dataset& data, const IdentifyConfig& cfg) {
  IdentifyConfig c = cfg;
  c.kind = SystemKind::SARX;
  return identify(data, c);
}

std::vector<LinearForm> gpca_extract(
    const HomoPoly& c_hat, const std::vector<Eigen::VectorXd>& regressors,
    int n, double tol_grad, std::vector<double>* residuals) {
  auto regressor_at = [&](long c, Eigen::VectorXd& r) { r = regressors[c]; };
  return gpca_core(c_hat, regressor_at, static_cast<long>(regressors.size()),
                   n, tol_grad, residuals, nullptr);
}

std::vector<int> assign_modes(const std::vector<Eigen::VectorXd>& regressors,
                              const std::vector<LinearForm>& forms) {
  if (forms.empty()) throw std::invalid_argument("assign_modes: no forms");
  std::vector<int> labels(regressors.size(), 0);
  for (size_t w = 0; w < regressors.size(); ++w) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (size_t l = 0; l < forms.size(); ++l) {
      const double v = std::abs(forms[l].t.dot(regressors[w]));
      if (v < best) {
        best = v;
        arg = static_cast<int>(l);
      }
    }
    labels[w] = arg;
  }
  return labels;
}

}  // namespace switchid
