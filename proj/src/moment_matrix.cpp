#include "switchid/moment_matrix.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "switchid/util.hpp"

namespace switchid {

namespace {

// Neumaier-compensated add: running sums see ~1e6 terms spanning several
// orders of magnitude.
inline void kadd(double& sum, double& comp, double value) {
  const double t = sum + value;
  if (std::abs(sum) >= std::abs(value))
    comp += (sum - t) + value;
  else
    comp += (value - t) + sum;
  sum = t;
}

inline long upper_entries(long l) { return l * (l + 1) / 2; }

// Power table filled incrementally: powers[h] = base^h.
inline void fill_powers(double base, int h_max, double* powers) {
  powers[0] = 1.0;
  for (int h = 1; h <= h_max; ++h) powers[h] = powers[h - 1] * base;
}

}  // namespace

std::string to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::SAR: return "sar";
    case MatrixKind::SARX: return "sarx";
    case MatrixKind::Noiseless: return "noiseless";
  }
  return "?";
}

MomentMatrix::MomentMatrix(VeroneseIndex index, MatrixKind kind)
    : index_(std::move(index)), kind_(kind) {
  const long l = index_.length();
  entries_ = upper_entries(l);
  entry_exponents_.resize(entries_, index_.dims);
  long e = 0;
  for (long i = 0; i < l; ++i)
    for (long j = i; j < l; ++j, ++e)
      entry_exponents_.row(e) =
          index_.exponents.row(i) + index_.exponents.row(j);
  sum_.assign(entries_, 0.0);
  comp_.assign(entries_, 0.0);
  scratch_.assign(static_cast<size_t>(index_.dims) * (2 * index_.degree + 1),
                  0.0);
}

void MomentMatrix::accumulate(const SampleWindow& window,
                              const CorrectionPolys& W) {
  const int s = index_.dims;
  const int n_a = window.n_a;
  const int order = 2 * index_.degree;
  if (s != n_a + window.n_b + 1)
    throw std::invalid_argument("accumulate: window shape mismatch");
  if (kind_ != MatrixKind::Noiseless && W.h_max < order)
    throw std::logic_error("accumulate: correction table order too small");

  // tab[c * (order+1) + h] = the value contributed by coordinate c at power h.
  double* tab = scratch_.data();
  const int stride = order + 1;

  for (int c = 0; c < s; ++c) {
    double* slot = tab + c * stride;
    const bool is_output = c <= n_a;
    const double value = is_output ? window.out(c) : window.in(c - n_a);
    const bool corrected =
        kind_ == MatrixKind::SAR ? is_output
        : kind_ == MatrixKind::SARX ? (c == 0)
                                    : false;
    if (corrected)
      W.eval_all(value, slot);
    else
      fill_powers(value, order, slot);
  }

  for (long e = 0; e < entries_; ++e) {
    double v = 1.0;
    for (int c = 0; c < s; ++c)
      v *= tab[c * stride + entry_exponents_(e, c)];
    kadd(sum_[e], comp_[e], v);
  }
  ++count_;
}

void MomentMatrix::merge(const MomentMatrix& other) {
  if (other.index_.degree != index_.degree ||
      other.index_.dims != index_.dims || other.kind_ != kind_)
    throw std::invalid_argument("merge: mismatched index or kind");
  for (long e = 0; e < entries_; ++e) {
    kadd(sum_[e], comp_[e], other.sum_[e]);
    comp_[e] += other.comp_[e];
  }
  count_ += other.count_;
}

Eigen::MatrixXd MomentMatrix::mean() const {
  if (count_ < 1) throw std::logic_error("mean: no samples accumulated");
  const long l = index_.length();
  Eigen::MatrixXd m(l, l);
  long e = 0;
  for (long i = 0; i < l; ++i)
    for (long j = i; j < l; ++j, ++e) {
      const double v = (sum_[e] + comp_[e]) / static_cast<double>(count_);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

std::string MomentMatrix::dump_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["degree"] = index_.degree;
  j["dims"] = index_.dims;
  j["count"] = count_;
  j["sum"] = sum_;
  j["comp"] = comp_;
  return j.dump();
}

MomentMatrix MomentMatrix::restore_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const std::string kind_name = j.at("kind").get<std::string>();
  MatrixKind kind;
  if (kind_name == "sar") kind = MatrixKind::SAR;
  else if (kind_name == "sarx") kind = MatrixKind::SARX;
  else if (kind_name == "noiseless") kind = MatrixKind::Noiseless;
  else throw std::invalid_argument("restore_json: unknown kind " + kind_name);

  MomentMatrix m(build_index(j.at("degree").get<int>(), j.at("dims").get<int>()),
                 kind);
  m.count_ = j.at("count").get<long long>();
  m.sum_ = j.at("sum").get<std::vector<double>>();
  m.comp_ = j.at("comp").get<std::vector<double>>();
  if (static_cast<long>(m.sum_.size()) != m.entries_ ||
      static_cast<long>(m.comp_.size()) != m.entries_)
    throw std::invalid_argument("restore_json: triangle length mismatch");
  return m;
}

SvdResult min_singular_of(const Eigen::MatrixXd& symmetric) {
  if (!symmetric.allFinite())
    throw std::invalid_argument("min_singular: non-finite matrix entries");
  const Eigen::MatrixXd s = 0.5 * (symmetric + symmetric.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("min_singular: eigendecomposition failed");

  const long l = s.rows();
  std::vector<long> order(l);
  for (long i = 0; i < l; ++i) order[i] = i;
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    return std::abs(lambda[a]) > std::abs(lambda[b]);
  });

  SvdResult r;
  r.singular_values.resize(l);
  for (long i = 0; i < l; ++i) r.singular_values[i] = std::abs(lambda[order[i]]);
  r.v_min = eig.eigenvectors().col(order[l - 1]);
  const double sigma_min = r.singular_values[l - 1];
  r.gap_ratio = sigma_min > 0.0
                    ? r.singular_values[l - 2] / sigma_min
                    : std::numeric_limits<double>::infinity();
  return r;
}

SvdResult min_singular(const MomentMatrix& m) {
  if (m.count() < m.index().length())
    log_warn("min_singular: only " + std::to_string(m.count()) +
             " samples for a " + std::to_string(m.index().length()) +
             "-dimensional matrix");
  return min_singular_of(m.mean());
}

void accumulate_serial(MomentMatrix& m, const SampleStream& s,
                       const CorrectionPolys& W) {
  for (long k = 0; k < s.count; ++k) m.accumulate(s.window(k), W);
}

namespace {

// The stream is always split into the same fixed number of chunks, merged in
// chunk order: the result is bit-identical for any thread count, and `jobs`
// only decides how many threads work the chunks.
constexpr int kChunks = 16;

struct ChunkPlan {
  long begin, end;
};

std::vector<ChunkPlan> plan_chunks(long count) {
  std::vector<ChunkPlan> plan(kChunks);
  for (int c = 0; c < kChunks; ++c) {
    plan[c].begin = count * c / kChunks;
    plan[c].end = count * (c + 1) / kChunks;
  }
  return plan;
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  return omp_get_max_threads();
}

}  // namespace

void accumulate_parallel(MomentMatrix& m, const SampleStream& s,
                         const CorrectionPolys& W, int jobs) {
  if (s.count < 2 * kChunks) {
    accumulate_serial(m, s, W);
    return;
  }
  const auto plan = plan_chunks(s.count);
  const int threads = std::min(resolve_jobs(jobs), kChunks);
  std::vector<MomentMatrix> locals(kChunks, MomentMatrix(m.index(), m.kind()));
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (int c = 0; c < kChunks; ++c) {
    SampleStream chunk = s;
    chunk.y_first = s.y_first + plan[c].begin;
    chunk.u_first = s.u_first + plan[c].begin;
    chunk.count = plan[c].end - plan[c].begin;
    accumulate_serial(locals[c], chunk, W);
  }
  for (int c = 0; c < kChunks; ++c) m.merge(locals[c]);
}

RawMomentSums::RawMomentSums(VeroneseIndex index, MatrixKind kind, int n_a,
                             int n_b)
    : index_(std::move(index)), kind_(kind), n_a_(n_a), n_b_(n_b) {
  const long l = index_.length();
  const int s = index_.dims;
  if (s != n_a + n_b + 1)
    throw std::invalid_argument("RawMomentSums: dims != n_a + n_b + 1");
  entries_ = upper_entries(l);
  recombine_.resize(entries_);

  std::map<std::vector<int>, int> seen;
  std::vector<std::vector<int>> rows;
  auto intern = [&](const std::vector<int>& mono) {
    auto it = seen.find(mono);
    if (it != seen.end()) return it->second;
    const int id = static_cast<int>(rows.size());
    rows.push_back(mono);
    seen.emplace(mono, id);
    return id;
  };

  // Corrected coordinates: SAR corrects every output lag, SARX only the
  // current output. Expanding W of each corrected coordinate into powers of
  // the raw sample turns every entry into sum_terms prod(W coeffs) * S(mono).
  const int corrected = kind_ == MatrixKind::SAR    ? n_a + 1
                        : kind_ == MatrixKind::SARX ? 1
                                                    : 0;
  long e = 0;
  Eigen::VectorXi alpha(s);
  for (long i = 0; i < l; ++i)
    for (long j = i; j < l; ++j, ++e) {
      alpha = (index_.exponents.row(i) + index_.exponents.row(j)).transpose();
      std::vector<int> choice(std::max(corrected, 1), 0);
      while (true) {
        std::vector<int> mono(alpha.data(), alpha.data() + s);
        Term t;
        for (int c = 0; c < corrected; ++c) {
          mono[c] = choice[c];
          t.factors.push_back({alpha[c], choice[c]});
        }
        t.sum_idx = intern(mono);
        recombine_[e].push_back(std::move(t));
        int c = 0;
        for (; c < corrected; ++c) {
          if (choice[c] < alpha[c]) {
            ++choice[c];
            break;
          }
          choice[c] = 0;
        }
        if (c >= corrected) break;
      }
    }

  monomials_.resize(static_cast<long>(rows.size()), s);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < s; ++c) monomials_(static_cast<long>(r), c) = rows[r][c];
  sum_.assign(rows.size(), 0.0);
  comp_.assign(rows.size(), 0.0);
  scratch_.assign(static_cast<size_t>(s) * (2 * index_.degree + 1), 0.0);
}

void RawMomentSums::accumulate(const SampleWindow& window) {
  const int s = index_.dims;
  if (window.n_a != n_a_ || window.n_b != n_b_)
    throw std::invalid_argument("RawMomentSums: window shape mismatch");

  const int order = 2 * index_.degree;
  const int stride = order + 1;
  double* tab = scratch_.data();
  for (int c = 0; c < s; ++c) {
    const double value = c <= window.n_a ? window.out(c) : window.in(c - window.n_a);
    fill_powers(value, order, tab + c * stride);
  }
  for (long r = 0; r < monomials_.rows(); ++r) {
    double v = 1.0;
    for (int c = 0; c < s; ++c) v *= tab[c * stride + monomials_(r, c)];
    kadd(sum_[r], comp_[r], v);
  }
  ++count_;
}

void RawMomentSums::merge(const RawMomentSums& other) {
  if (other.index_.degree != index_.degree ||
      other.index_.dims != index_.dims || other.kind_ != kind_ ||
      other.n_a_ != n_a_ || other.n_b_ != n_b_)
    throw std::invalid_argument("RawMomentSums::merge: mismatch");
  for (size_t r = 0; r < sum_.size(); ++r) {
    kadd(sum_[r], comp_[r], other.sum_[r]);
    comp_[r] += other.comp_[r];
  }
  count_ += other.count_;
}

Eigen::MatrixXd RawMomentSums::assemble_mean(const CorrectionPolys& W) const {
  if (count_ < 1) throw std::logic_error("assemble_mean: no samples");
  if (W.h_max < 2 * index_.degree)
    throw std::logic_error("assemble_mean: correction table order too small");
  std::vector<double> means(sum_.size());
  for (size_t r = 0; r < sum_.size(); ++r)
    means[r] = (sum_[r] + comp_[r]) / static_cast<double>(count_);

  const long l = index_.length();
  Eigen::MatrixXd m(l, l);
  long e = 0;
  for (long i = 0; i < l; ++i)
    for (long j = i; j < l; ++j, ++e) {
      double v = 0.0;
      for (const Term& t : recombine_[e]) {
        double coeff = 1.0;
        for (const Factor& f : t.factors) coeff *= W.w[f.h][f.j];
        v += coeff * means[t.sum_idx];
      }
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

void accumulate_serial(RawMomentSums& m, const SampleStream& s) {
  for (long k = 0; k < s.count; ++k) m.accumulate(s.window(k));
}

void accumulate_parallel(RawMomentSums& m, const SampleStream& s, int jobs) {
  if (s.count < 2 * kChunks) {
    accumulate_serial(m, s);
    return;
  }
  const auto plan = plan_chunks(s.count);
  const int threads = std::min(resolve_jobs(jobs), kChunks);
  std::vector<RawMomentSums> locals(
      kChunks, RawMomentSums(m.index(), m.kind(), m.n_a(), m.n_b()));
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (int c = 0; c < kChunks; ++c) {
    SampleStream chunk = s;
    chunk.y_first = s.y_first + plan[c].begin;
    chunk.u_first = s.u_first + plan[c].begin;
    chunk.count = plan[c].end - plan[c].begin;
    accumulate_serial(locals[c], chunk);
  }
  for (int c = 0; c < kChunks; ++c) m.merge(locals[c]);
}

}  // namespace switchid
