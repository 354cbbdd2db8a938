#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "switchid/noise.hpp"
#include "switchid/veronese.hpp"

namespace switchid {

enum class MatrixKind { SAR, SARX, Noiseless };

std::string to_string(MatrixKind kind);

// A contiguous run of regressor windows over time-ascending y/u storage.
// Window k (0-based) is [y[k0+k] .. y[k0+k-n_a], u[j0+k] .. u[j0+k-n_b+1]].
struct SampleStream {
  const double* y_first;  // points at y of the first window's newest output
  const double* u_first;  // points at u of the first window's newest input
  long count = 0;
  int n_a = 0;
  int n_b = 0;

  SampleWindow window(long k) const {
    return SampleWindow{y_first + k, u_first + k, n_a, n_b};
  }
};

// Streaming accumulator for the l x l symmetric moment matrix: the running
// sum over windows of the (corrected) outer product nu_n(r) nu_n(r)'. Only
// the upper triangle is stored; each entry uses compensated summation.
class MomentMatrix {
 public:
  MomentMatrix(VeroneseIndex index, MatrixKind kind);

  void accumulate(const SampleWindow& window, const CorrectionPolys& W);
  void merge(const MomentMatrix& other);

  Eigen::MatrixXd mean() const;
  long long count() const { return count_; }
  const VeroneseIndex& index() const { return index_; }
  MatrixKind kind() const { return kind_; }

  // Checkpoint as JSON text (index metadata + upper triangle + count).
  std::string dump_json() const;
  static MomentMatrix restore_json(const std::string& text);

 private:
  friend void accumulate_serial(MomentMatrix&, const SampleStream&,
                                const CorrectionPolys&);

  VeroneseIndex index_;
  MatrixKind kind_;
  long entries_ = 0;                 // l (l + 1) / 2
  Eigen::MatrixXi entry_exponents_;  // entries_ x dims, alpha_i + alpha_j
  std::vector<double> sum_, comp_;
  std::vector<double> scratch_;      // per-window power/correction table
  long long count_ = 0;
};

struct SvdResult {
  Eigen::VectorXd singular_values;  // descending
  Eigen::VectorXd v_min;            // unit right singular vector of the smallest
  double gap_ratio = 0.0;           // sigma_{l-1} / sigma_l, inf when sigma_l = 0
};

// Full singular spectrum of mean() via symmetric eigendecomposition
// (sigma = |lambda|; equal to the SVD of a symmetric matrix up to signs).
SvdResult min_singular(const MomentMatrix& m);
SvdResult min_singular_of(const Eigen::MatrixXd& symmetric);

// Whole-stream kernels. The parallel kernel splits the stream into a fixed
// number of chunks, accumulates each independently and merges in chunk
// order; the result is bit-identical for any jobs value.
void accumulate_serial(MomentMatrix& m, const SampleStream& s,
                       const CorrectionPolys& W);
void accumulate_parallel(MomentMatrix& m, const SampleStream& s,
                         const CorrectionPolys& W, int jobs);

// Raw monomial sums S(beta) = sum_k prod r_k^beta over windows, for every
// beta needed to rebuild the corrected matrix at an arbitrary noise
// parameter: each matrix entry is an affine combination of these sums with
// coefficients taken from the correction polynomials, so a theta sweep pays
// one pass over the data total instead of one per theta.
class RawMomentSums {
 public:
  RawMomentSums(VeroneseIndex index, MatrixKind kind, int n_a, int n_b);

  void accumulate(const SampleWindow& window);
  void merge(const RawMomentSums& other);

  long long count() const { return count_; }
  const VeroneseIndex& index() const { return index_; }
  MatrixKind kind() const { return kind_; }
  int n_a() const { return n_a_; }
  int n_b() const { return n_b_; }

  // Mean corrected matrix under the given corrections.
  Eigen::MatrixXd assemble_mean(const CorrectionPolys& W) const;

 private:
  struct Factor {
    int h;  // correction order (output-lag exponent in the entry)
    int j;  // power of y actually summed; coefficient is W.w[h][j]
  };
  struct Term {
    int sum_idx;
    std::vector<Factor> factors;
  };

  VeroneseIndex index_;
  MatrixKind kind_;
  int n_a_ = 0, n_b_ = 0;
  long entries_ = 0;
  Eigen::MatrixXi monomials_;           // one row per raw sum, dims columns
  std::vector<std::vector<Term>> recombine_;  // per upper-triangle entry
  std::vector<double> sum_, comp_;
  std::vector<double> scratch_;
  long long count_ = 0;
};

void accumulate_serial(RawMomentSums& m, const SampleStream& s);
void accumulate_parallel(RawMomentSums& m, const SampleStream& s, int jobs);

}  // namespace switchid
