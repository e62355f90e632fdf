#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "por/field.hpp"

namespace por {

/// Coefficient-form Lagrange interpolation through a fixed set of distinct
/// points. Building the basis costs O(n^2) once; each interpolation after
/// that is O(n^2) with no divisions.
template <class F>
class LagrangeBasis {
 public:
  explicit LagrangeBasis(std::span<const F> points) : n_(points.size()) {
    if (n_ == 0) throw std::invalid_argument("no interpolation points");
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (points[i] == points[j])
          throw std::invalid_argument(
              "repeated interpolation points: singular system");

    // master(X) = prod_l (X - points[l]); degree n_, n_+1 coefficients.
    std::vector<F> master(n_ + 1);
    master[0] = F(1);
    std::size_t deg = 0;
    for (std::size_t l = 0; l < n_; ++l) {
      F r = points[l];
      master[deg + 1] = master[deg];
      for (std::size_t k = deg; k >= 1; --k)
        master[k] = master[k - 1] - r * master[k];
      master[0] = F{} - r * master[0];
      ++deg;
    }

    // Basis poly l: (master / (X - points[l])) scaled so it is 1 at points[l].
    basis_.assign(n_, std::vector<F>(n_));
    for (std::size_t l = 0; l < n_; ++l) {
      F r = points[l];
      std::vector<F>& q = basis_[l];
      // Synthetic division by (X - r), quotient degree n_-1.
      F carry = master[n_];
      for (std::size_t k = n_; k-- > 0;) {
        q[k] = carry;
        carry = master[k] + r * carry;
      }
      // Evaluate quotient at r and normalize.
      F at_r{};
      F pw(1);
      for (std::size_t k = 0; k < n_; ++k) {
        at_r += q[k] * pw;
        pw *= r;
      }
      F w = at_r.inv();
      for (auto& c : q) c *= w;
    }
  }

  std::size_t size() const { return n_; }

  /// Coefficients of the unique degree < n polynomial with p(points[l]) =
  /// values[l].
  std::vector<F> interpolate(std::span<const F> values) const {
    if (values.size() != n_) throw std::invalid_argument("length mismatch");
    std::vector<F> coeffs(n_);
    for (std::size_t l = 0; l < n_; ++l) {
      F v = values[l];
      if (v.is_zero()) continue;
      const std::vector<F>& q = basis_[l];
      for (std::size_t k = 0; k < n_; ++k) coeffs[k] += v * q[k];
    }
    return coeffs;
  }

 private:
  std::size_t n_;
  std::vector<std::vector<F>> basis_;
};

/// Solve Y = M * [powers(points[l], n)]_l for M, column by column of Y.
/// points must be distinct and nonzero; Y is m x n with column l holding the
/// response to challenge points[l].
template <class F>
Matrix<F> interpolate_rows(std::span<const F> points, const Matrix<F>& y_cols) {
  const std::size_t n = points.size();
  if (y_cols.cols() != n)
    throw std::invalid_argument("one response column per point expected");
  for (const F& p : points)
    if (p.is_zero())
      throw std::invalid_argument("zero interpolation point");

  LagrangeBasis<F> basis(points);
  std::vector<F> inv_points(n);
  for (std::size_t l = 0; l < n; ++l) inv_points[l] = points[l].inv();

  Matrix<F> out(y_cols.rows(), n);
  std::vector<F> g(n);
  for (std::size_t i = 0; i < y_cols.rows(); ++i) {
    // y_i(rho) = sum_j M_ij rho^j = rho * g_i(rho); interpolate g_i.
    for (std::size_t l = 0; l < n; ++l)
      g[l] = y_cols.at(i, l) * inv_points[l];
    std::vector<F> coeffs = basis.interpolate(g);
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = coeffs[j];
  }
  return out;
}

}  // namespace por
