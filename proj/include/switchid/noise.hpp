#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace switchid {

enum class NoiseFamily { GaussianZeroMean, UserMoments };

// Parametric noise moment provider. Gaussian keeps a single variance
// parameter; UserMoments carries a raw moment table m_0..m_max directly.
struct NoiseModel {
  NoiseFamily family = NoiseFamily::GaussianZeroMean;
  double theta = 0.0;              // Gaussian variance
  std::vector<double> raw;         // UserMoments table, raw[d] = m_d

  double moment(int order) const;
  int max_order() const;           // highest order available

  static NoiseModel gaussian(double variance);
  static NoiseModel from_moments(std::vector<double> moments);
  static NoiseModel none() { return gaussian(0.0); }
};

// m_d of a zero-mean normal with the given variance: 0 for odd d,
// variance^(d/2) (d-1)!! for even d.
double gaussian_moment(double variance, int order);

// W_h(y), h = 0..h_max: univariate polynomials with unit leading coefficient
// satisfying W_0 = 1 and
//   W_h(y) = y^h - sum_{d=1..h} C(h,d) W_{h-d}(y) m_d,
// so that E[W_h(x + eta)] = x^h for any fixed x.
struct CorrectionPolys {
  int h_max = 0;
  std::vector<Eigen::VectorXd> w;  // w[h][j] = coefficient of y^j, size h+1

  double eval(int h, double y) const;
  // Fills out[0..h_max] with W_h(y) for every order at once.
  void eval_all(double y, double* out) const;
};

CorrectionPolys build_corrections(const NoiseModel& model, int h_max);

// One regressor window [y_k .. y_{k-n_a}, u_{k-1} .. u_{k-n_b}], viewed
// through pointers into time-ascending storage.
struct SampleWindow {
  const double* yk;    // yk[-i]    = y_{k-i}
  const double* ukm1;  // ukm1[1-j] = u_{k-j}
  int n_a;
  int n_b;

  double out(int lag) const { return yk[-lag]; }     // lag in [0, n_a]
  double in(int lag) const { return ukm1[1 - lag]; } // lag in [1, n_b]
  Eigen::VectorXd regressor() const;
};

// Measurement-noise correction (every output lag corrected): expectation over
// the noise equals the noiseless monomial prod x^alpha * prod u^alpha.
double corrected_monomial_sar(const Eigen::VectorXi& alpha,
                              const SampleWindow& window,
                              const CorrectionPolys& W);

// Process-noise correction: only the current output power is corrected; past
// outputs and inputs enter raw.
double corrected_monomial_sarx(const Eigen::VectorXi& alpha,
                               const SampleWindow& window,
                               const CorrectionPolys& W);

}  // namespace switchid
