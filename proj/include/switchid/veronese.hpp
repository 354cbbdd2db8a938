#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

namespace switchid {

// Catalog of every degree-n monomial in s variables, in lexicographic order
// with the first coordinate most significant. For n=2, s=3:
//   x0^2, x0*x1, x0*x2, x1^2, x1*x2, x2^2.
// All matrix/vector layouts downstream address entries through this order.
struct VeroneseIndex {
  int degree = 0;                // n
  int dims = 0;                  // s
  Eigen::MatrixXi exponents;     // length() x dims, row j = exponent vector
  std::map<std::vector<int>, int> rank;  // exponent vector -> row

  long length() const { return static_cast<long>(exponents.rows()); }

  // Row of an exponent vector, -1 if it is not a degree-n monomial.
  int position(const Eigen::VectorXi& alpha) const;
};

// Enumerates the catalog. Throws std::overflow_error if C(n+s-1, n) does not
// fit comfortably in memory / platform integers.
VeroneseIndex build_index(int degree, int dims);

long binomial_checked(int top, int bottom);

// nu_n(r): all degree-n monomials of r in catalog order.
Eigen::VectorXd embed(const Eigen::VectorXd& r, const VeroneseIndex& index);

// Homogeneous polynomial of degree index.degree in index.dims variables.
struct HomoPoly {
  VeroneseIndex index;
  Eigen::VectorXd coeffs;
};

// Hyperplane normal; a model-normalized form has t[0] == -1 exactly.
struct LinearForm {
  Eigen::VectorXd t;
};

double eval(const HomoPoly& p, const Eigen::VectorXd& r);

// Partial derivatives dp/dr_i, each a degree-(n-1) polynomial.
std::vector<HomoPoly> gradient(const HomoPoly& p);

// Evaluates all partials of p at r (no intermediate polynomial objects).
Eigen::VectorXd gradient_at(const std::vector<HomoPoly>& grad,
                            const Eigen::VectorXd& r);

struct DivisionResult {
  HomoPoly quotient;  // degree n-1
  double residual;    // coefficient-space l2 residual ||p - (t'r) q||
};

// Least-squares division of p by the linear form t: the quotient minimizes
// the coefficient-space residual, so it stays usable when p is only
// approximately a multiple of t. Throws on a degenerate (near-zero) t.
DivisionResult divide_by_linear(const HomoPoly& p, const LinearForm& t);

// Coefficients of prod_i t_i'r in catalog order. No renormalization: the
// leading (r_0^n) coefficient equals prod_i t_i[0].
HomoPoly product_of_forms(const std::vector<LinearForm>& forms);

struct NormalizedHybrid {
  Eigen::VectorXd coeffs;
  bool degenerate = false;  // leading coefficient too small to pivot on
};

// Sign/scale convention for hybrid coefficient vectors: leading (r_0^n)
// coefficient +1 when its magnitude exceeds 1e-6 * ||c||; otherwise unit
// norm with the first nonzero entry positive, flagged degenerate.
NormalizedHybrid normalize_hybrid(const Eigen::VectorXd& c);

}  // namespace switchid
