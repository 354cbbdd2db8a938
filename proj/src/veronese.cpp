#include "switchid/veronese.hpp"

#include <cmath>
#include <stdexcept>

namespace switchid {

namespace {

constexpr long kMaxCatalog = 20'000'000;

void enumerate(int remaining, int coord, int dims, std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
  if (coord == dims - 1) {
    current[coord] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[coord] = e;
    enumerate(remaining - e, coord + 1, dims, current, out);
  }
}

}  // namespace

long binomial_checked(int top, int bottom) {
  if (bottom < 0 || bottom > top) return 0;
  bottom = std::min(bottom, top - bottom);
  long result = 1;
  for (int i = 1; i <= bottom; ++i) {
    double projected = static_cast<double>(result) * (top - bottom + i) / i;
    if (projected > static_cast<double>(kMaxCatalog))
      throw std::overflow_error("veronese: C(" + std::to_string(top) + "," +
                                std::to_string(bottom) +
                                ") exceeds catalog capacity");
    result = result * (top - bottom + i) / i;
  }
  return result;
}

VeroneseIndex build_index(int degree, int dims) {
  if (degree < 1) throw std::invalid_argument("veronese: degree must be >= 1");
  if (dims < 1) throw std::invalid_argument("veronese: dims must be >= 1");
  const long expected = binomial_checked(degree + dims - 1, degree);

  std::vector<std::vector<int>> rows;
  rows.reserve(expected);
  std::vector<int> current(dims, 0);
  enumerate(degree, 0, dims, current, rows);

  VeroneseIndex index;
  index.degree = degree;
  index.dims = dims;
  index.exponents.resize(static_cast<long>(rows.size()), dims);
  for (size_t j = 0; j < rows.size(); ++j) {
    for (int i = 0; i < dims; ++i) index.exponents(j, i) = rows[j][i];
    index.rank.emplace(rows[j], static_cast<int>(j));
  }
  return index;
}

int VeroneseIndex::position(const Eigen::VectorXi& alpha) const {
  if (alpha.size() != dims) return -1;
  std::vector<int> key(alpha.data(), alpha.data() + alpha.size());
  auto it = rank.find(key);
  return it == rank.end() ? -1 : it->second;
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

inline double monomial_value(const Eigen::MatrixXi& exponents, long row,
                             const Eigen::VectorXd& r) {
  double value = 1.0;
  for (int i = 0; i < exponents.cols(); ++i) {
    const int e = exponents(row, i);
    if (e > 0) value *= int_pow(r[i], e);
  }
  return value;
}

}  // namespace

Eigen::VectorXd embed(const Eigen::VectorXd& r, const VeroneseIndex& index) {
  if (r.size() != index.dims)
    throw std::invalid_argument("embed: vector has " + std::to_string(r.size()) +
                                " entries, index expects " +
                                std::to_string(index.dims));
  Eigen::VectorXd v(index.length());
  for (long j = 0; j < index.length(); ++j)
    v[j] = monomial_value(index.exponents, j, r);
  return v;
}

double eval(const HomoPoly& p, const Eigen::VectorXd& r) {
  if (r.size() != p.index.dims)
    throw std::invalid_argument("eval: dimension mismatch");
  double sum = 0.0;
  for (long j = 0; j < p.index.length(); ++j)
    sum += p.coeffs[j] * monomial_value(p.index.exponents, j, r);
  return sum;
}

std::vector<HomoPoly> gradient(const HomoPoly& p) {
  const int s = p.index.dims;
  const int n = p.index.degree;
  std::vector<HomoPoly> parts(s);
  if (n == 1) {
    // Degree-0 partials: constant polynomials, kept as an empty-exponent
    // catalog of length 1.
    VeroneseIndex scalar;
    scalar.degree = 0;
    scalar.dims = s;
    scalar.exponents = Eigen::MatrixXi::Zero(1, s);
    scalar.rank.emplace(std::vector<int>(s, 0), 0);
    for (int i = 0; i < s; ++i) {
      parts[i].index = scalar;
      parts[i].coeffs = Eigen::VectorXd::Constant(1, 0.0);
    }
    // dp/dr_i of a linear form is its i-th coefficient.
    for (long j = 0; j < p.index.length(); ++j) {
      for (int i = 0; i < s; ++i)
        if (p.index.exponents(j, i) == 1) parts[i].coeffs[0] += p.coeffs[j];
    }
    return parts;
  }

  const VeroneseIndex lower = build_index(n - 1, s);
  for (int i = 0; i < s; ++i) {
    parts[i].index = lower;
    parts[i].coeffs = Eigen::VectorXd::Zero(lower.length());
  }
  Eigen::VectorXi alpha(s);
  for (long j = 0; j < p.index.length(); ++j) {
    for (int i = 0; i < s; ++i) {
      const int e = p.index.exponents(j, i);
      if (e == 0) continue;
      alpha = p.index.exponents.row(j).transpose();
      alpha[i] -= 1;
      const int pos = lower.position(alpha);
      parts[i].coeffs[pos] += e * p.coeffs[j];
    }
  }
  return parts;
}

Eigen::VectorXd gradient_at(const std::vector<HomoPoly>& grad,
                            const Eigen::VectorXd& r) {
  Eigen::VectorXd g(static_cast<long>(grad.size()));
  for (size_t i = 0; i < grad.size(); ++i) g[i] = eval(grad[i], r);
  return g;
}

namespace {

// Coefficient-space operator for multiplication by t'r: maps a degree-(n-1)
// polynomial q to the degree-n polynomial (t'r) q.
Eigen::MatrixXd multiply_operator(const LinearForm& t,
                                  const VeroneseIndex& lower,
                                  const VeroneseIndex& upper) {
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(upper.length(), lower.length());
  Eigen::VectorXi alpha(lower.dims);
  for (long j = 0; j < lower.length(); ++j) {
    for (int m = 0; m < lower.dims; ++m) {
      alpha = lower.exponents.row(j).transpose();
      alpha[m] += 1;
      op(upper.position(alpha), j) += t.t[m];
    }
  }
  return op;
}

}  // namespace

DivisionResult divide_by_linear(const HomoPoly& p, const LinearForm& t) {
  const int n = p.index.degree;
  const int s = p.index.dims;
  if (n < 1) throw std::invalid_argument("divide_by_linear: degree must be >= 1");
  if (t.t.size() != s)
    throw std::invalid_argument("divide_by_linear: form dimension mismatch");
  const double tnorm = t.t.norm();
  if (!(tnorm > 0.0) || !t.t.allFinite())
    throw std::invalid_argument("divide_by_linear: degenerate linear form");

  DivisionResult result;
  if (n == 1) {
    // Quotient is the scalar minimizing ||p - c t||.
    VeroneseIndex scalar;
    scalar.degree = 0;
    scalar.dims = s;
    scalar.exponents = Eigen::MatrixXi::Zero(1, s);
    scalar.rank.emplace(std::vector<int>(s, 0), 0);
    const double c = t.t.dot(p.coeffs) / (tnorm * tnorm);
    result.quotient.index = scalar;
    result.quotient.coeffs = Eigen::VectorXd::Constant(1, c);
    result.residual = (p.coeffs - c * t.t).norm();
    return result;
  }

  const VeroneseIndex lower = build_index(n - 1, s);
  const Eigen::MatrixXd op = multiply_operator(t, lower, p.index);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(op);
  if (qr.rank() < lower.length())
    throw std::runtime_error("divide_by_linear: degenerate linear form");
  const Eigen::VectorXd q = qr.solve(p.coeffs);

  result.quotient.index = lower;
  result.quotient.coeffs = q;
  result.residual = (p.coeffs - op * q).norm();
  return result;
}

HomoPoly product_of_forms(const std::vector<LinearForm>& forms) {
  if (forms.empty())
    throw std::invalid_argument("product_of_forms: no forms given");
  const int s = static_cast<int>(forms[0].t.size());
  for (const auto& f : forms)
    if (f.t.size() != s)
      throw std::invalid_argument("product_of_forms: mixed dimensions");

  HomoPoly p;
  p.index = build_index(1, s);
  p.coeffs = forms[0].t;
  for (size_t i = 1; i < forms.size(); ++i) {
    const VeroneseIndex upper = build_index(p.index.degree + 1, s);
    const Eigen::MatrixXd op = multiply_operator(forms[i], p.index, upper);
    HomoPoly next;
    next.index = upper;
    next.coeffs = op * p.coeffs;
    p = std::move(next);
  }
  return p;
}

NormalizedHybrid normalize_hybrid(const Eigen::VectorXd& c) {
  NormalizedHybrid out;
  const double norm = c.norm();
  if (!(norm > 0.0))
    throw std::invalid_argument("normalize_hybrid: zero vector");
  if (std::abs(c[0]) > 1e-6 * norm) {
    out.coeffs = c / c[0];
    return out;
  }
  out.degenerate = true;
  out.coeffs = c / norm;
  for (long j = 0; j < out.coeffs.size(); ++j) {
    if (out.coeffs[j] != 0.0) {
      if (out.coeffs[j] < 0.0) out.coeffs = -out.coeffs;
      break;
    }
  }
  return out;
}

}  // namespace switchid
