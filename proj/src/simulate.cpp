#include "switchid/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "switchid/util.hpp"

namespace switchid {

std::string to_string(SystemKind kind) {
  return kind == SystemKind::SAR ? "sar" : "sarx";
}

SystemKind system_kind_from_string(const std::string& name) {
  if (name == "sar") return SystemKind::SAR;
  if (name == "sarx") return SystemKind::SARX;
  throw std::invalid_argument("unknown system kind: " + name);
}

LinearForm SwitchedModel::form(int mode) const {
  const SubModel& m = modes.at(mode);
  LinearForm f;
  f.t.resize(1 + n_a + n_b);
  f.t[0] = -1.0;
  f.t.segment(1, n_a) = m.a;
  f.t.segment(1 + n_a, n_b) = m.b;
  return f;
}

HomoPoly SwitchedModel::hybrid_coeffs() const {
  std::vector<LinearForm> forms;
  forms.reserve(n);
  for (int i = 0; i < n; ++i) forms.push_back(form(i));
  HomoPoly p = product_of_forms(forms);
  p.coeffs = normalize_hybrid(p.coeffs).coeffs;
  return p;
}

namespace {

constexpr double kOverflowGuard = 1e12;

class SwitchSampler {
 public:
  SwitchSampler(const SwitchSpec& spec, int n, std::uint64_t seed)
      : spec_(spec), n_(n), rng_(seed), uniform_(0, n - 1) {
    if (n < 1) throw std::invalid_argument("switching: mode count < 1");
    if (spec.scheme == SwitchScheme::PeriodicDwell && spec.dwell < 1)
      throw std::invalid_argument("switching: dwell must be >= 1");
    if (spec.scheme == SwitchScheme::MarkovChain) {
      if (spec.transition.rows() != n || spec.transition.cols() != n)
        throw std::invalid_argument("switching: transition matrix must be n x n");
      for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
          if (spec.transition(i, j) < 0.0)
            throw std::invalid_argument("switching: negative probability");
          row += spec.transition(i, j);
        }
        if (std::abs(row - 1.0) > 1e-9)
          throw std::invalid_argument("switching: rows must sum to 1");
      }
      state_ = uniform_(rng_);
    }
  }

  int next(long k) {
    switch (spec_.scheme) {
      case SwitchScheme::IIDUniform:
        return uniform_(rng_);
      case SwitchScheme::PeriodicDwell:
        return static_cast<int>((k / spec_.dwell) % n_);
      case SwitchScheme::MarkovChain: {
        double p = unit_(rng_);
        for (int j = 0; j < n_; ++j) {
          p -= spec_.transition(state_, j);
          if (p <= 0.0) {
            state_ = j;
            break;
          }
        }
        return state_;
      }
    }
    return 0;
  }

 private:
  const SwitchSpec& spec_;
  int n_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<int> uniform_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  int state_ = 0;
};

class InputSampler {
 public:
  InputSampler(const InputSpec& spec, std::uint64_t seed)
      : spec_(spec), rng_(seed), uniform_(-spec.bound, spec.bound),
        normal_(0.0, spec.sigma > 0.0 ? spec.sigma : 1.0) {
    if (spec.bound <= 0.0)
      throw std::invalid_argument("input: bound must be positive");
  }

  double next() {
    if (spec_.kind == InputSpec::Kind::UniformBounded) return uniform_(rng_);
    return std::clamp(normal_(rng_), -spec_.bound, spec_.bound);
  }

 private:
  const InputSpec& spec_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_;
  std::normal_distribution<double> normal_;
};

// Noise draws: Gaussian directly; a UserMoments table carries no sampling
// law, so simulation requires Gaussian (or zero) noise.
class NoiseSampler {
 public:
  NoiseSampler(const NoiseModel& model, std::uint64_t seed)
      : rng_(seed), normal_(0.0, std::sqrt(std::max(model.theta, 0.0))) {
    if (model.family != NoiseFamily::GaussianZeroMean)
      throw std::invalid_argument(
          "simulate: only Gaussian (or zero) noise can be sampled");
    zero_ = model.theta == 0.0;
  }

  double next() { return zero_ ? 0.0 : normal_(rng_); }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  bool zero_ = false;
};

}  // namespace

SampleStream Dataset::stream() const { return stream_prefix(N - usable_offset); }

SampleStream Dataset::stream_prefix(long windows) const {
  if (windows < 0 || windows > N - usable_offset)
    throw std::invalid_argument("stream_prefix: window count out of range");
  SampleStream s;
  s.y_first = y.data() + n_a + usable_offset;      // y at first usable k
  s.u_first = u.data() + n_b - 1 + usable_offset;  // u one step behind it
  s.count = windows;
  s.n_a = n_a;
  s.n_b = n_b;
  return s;
}

Dataset simulate(SystemKind kind, const SwitchedModel& model,
                 const SwitchSpec& sw, const InputSpec& input,
                 const NoiseModel& noise, long N, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("simulate: N must be >= 1");
  if (model.n < 1 || model.n_a < 1 || model.n_b < 1 ||
      static_cast<int>(model.modes.size()) != model.n)
    throw std::invalid_argument("simulate: inconsistent model orders");
  for (const SubModel& m : model.modes)
    if (m.a.size() != model.n_a || m.b.size() != model.n_b)
      throw std::invalid_argument("simulate: sub-model coefficient lengths");

  const int n_a = model.n_a;
  const int n_b = model.n_b;

  Dataset d;
  d.kind = kind;
  d.n_a = n_a;
  d.n_b = n_b;
  d.N = N;
  d.u.assign(N + n_b, 0.0);
  d.y.assign(N + n_a, 0.0);
  d.noise.assign(N + n_a, 0.0);
  d.modes.assign(N, 0);
  d.has_truth = true;
  d.true_model = model;
  d.theta_true = noise.theta;
  d.noise_family = noise.family;
  d.seed = seed;
  d.generator = to_string(kind) + " simulator, zero initial conditions";

  InputSampler in(input, derive_seed(seed, 1));
  SwitchSampler sws(sw, model.n, derive_seed(seed, 2));
  NoiseSampler ns(noise, derive_seed(seed, 3));

  // u index 0 holds u_{1-n_b}; y/x/noise index 0 holds value at k = 1-n_a.
  const auto yi = [n_a](long k) { return k - 1 + n_a; };
  const auto ui = [n_b](long k) { return k - 1 + n_b; };

  for (long i = 0; i < static_cast<long>(d.u.size()); ++i) d.u[i] = in.next();
  for (long k = 1; k <= N; ++k) d.modes[k - 1] = sws.next(k - 1);

  if (kind == SystemKind::SAR) {
    // Every measured output carries noise, pre-samples included; the
    // noiseless state is zero before k = 1.
    d.x.assign(N + n_a, 0.0);
    for (long i = 0; i < static_cast<long>(d.noise.size()); ++i)
      d.noise[i] = ns.next();
    for (long k = 1; k <= N; ++k) {
      const SubModel& m = model.modes[d.modes[k - 1]];
      double xk = 0.0;
      for (int j = 1; j <= n_a; ++j) xk += m.a[j - 1] * d.x[yi(k - j)];
      for (int j = 1; j <= n_b; ++j) xk += m.b[j - 1] * d.u[ui(k - j)];
      d.x[yi(k)] = xk;
    }
    for (long i = 0; i < static_cast<long>(d.y.size()); ++i)
      d.y[i] = d.x[i] + d.noise[i];
  } else {
    for (long k = 1; k <= N; ++k) {
      const SubModel& m = model.modes[d.modes[k - 1]];
      const double eps = ns.next();
      double yk = eps;
      for (int j = 1; j <= n_a; ++j) yk += m.a[j - 1] * d.y[yi(k - j)];
      for (int j = 1; j <= n_b; ++j) yk += m.b[j - 1] * d.u[ui(k - j)];
      if (std::abs(yk) > kOverflowGuard)
        throw std::runtime_error(
            "simulate: output exceeded overflow guard at k=" +
            std::to_string(k) + "; check that every mode is stable");
      d.noise[yi(k)] = eps;
      d.y[yi(k)] = yk;
    }
  }

  std::vector<long> visits(model.n, 0);
  for (int mode : d.modes) ++visits[mode];
  for (int i = 0; i < model.n; ++i) {
    const double share = static_cast<double>(visits[i]) / static_cast<double>(N);
    if (share < sw.visit_floor) {
      d.visit_floor_ok = false;
      log_warn("simulate: mode " + std::to_string(i + 1) + " visited " +
               std::to_string(share) + " of the time, below floor " +
               std::to_string(sw.visit_floor));
    }
  }
  return d;
}

SwitchedModel random_stable_model(int n, int n_a, int n_b, std::uint64_t seed) {
  if (n_a != 1 || n_b != 1)
    throw std::invalid_argument("random_stable_model: only order 1 supported");
  if (n < 1) throw std::invalid_argument("random_stable_model: n < 1");

  std::mt19937_64 rng(derive_seed(seed, 17));
  std::uniform_real_distribution<double> a_draw(-0.95, 0.95);
  std::uniform_real_distribution<double> b_mag(0.2, 2.0);
  std::uniform_int_distribution<int> sign(0, 1);

  SwitchedModel m;
  m.n = n;
  m.n_a = 1;
  m.n_b = 1;
  while (static_cast<int>(m.modes.size()) < n) {
    SubModel cand;
    cand.a = Eigen::VectorXd::Constant(1, a_draw(rng));
    cand.b = Eigen::VectorXd::Constant(1, (sign(rng) ? 1.0 : -1.0) * b_mag(rng));
    bool separated = true;
    for (const SubModel& other : m.modes) {
      const double da = cand.a[0] - other.a[0];
      const double db = cand.b[0] - other.b[0];
      if (std::hypot(da, db) < 0.05) {
        separated = false;
        break;
      }
    }
    if (separated) m.modes.push_back(std::move(cand));
  }
  return m;
}

Dataset truncate(const Dataset& data, long N) {
  if (N < 1 || N > data.N)
    throw std::invalid_argument("truncate: N out of range");
  Dataset d = data;
  d.N = N;
  d.u.resize(N + d.n_b);
  d.y.resize(N + d.n_a);
  if (!d.x.empty()) d.x.resize(N + d.n_a);
  if (!d.noise.empty()) d.noise.resize(N + d.n_a);
  d.modes.resize(N);
  d.usable_offset = std::min(d.usable_offset, N - 1);
  return d;
}

double gamma_ratio(const Dataset& data) {
  if (data.noise.empty())
    throw std::invalid_argument("gamma_ratio: no stored noise trace");
  double max_noise = 0.0, max_y = 0.0;
  for (double v : data.noise) max_noise = std::max(max_noise, std::abs(v));
  for (double v : data.y) max_y = std::max(max_y, std::abs(v));
  if (max_y == 0.0) return max_noise == 0.0 ? 0.0 : 1.0;
  return max_noise / max_y;
}

}  // namespace switchid
