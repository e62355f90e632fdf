#pragma once

#include <span>
#include <vector>

#include "por/field.hpp"
#include "por/group.hpp"

namespace por {

/// Published control material of the public mode: pointwise exponentials of
/// the seed-structured control block and of the derived control matrix.
template <class G>
struct PubControl {
  Matrix<typename G::Elem> key;  // t x m, key(k,i) = g^(s_k^(i+1))
  Matrix<typename G::Elem> w;    // t x n, w(k,j)   = g^(V_kj)
};

/// Exponentials of the control rows for an in-memory data matrix:
/// V = U M with U_{k,i} = s_k^(i+1), then K = g^U and w = g^V.
template <class G>
PubControl<G> pub_control_init(std::span<const typename G::Scalar> seeds,
                               const Matrix<typename G::Scalar>& data) {
  using S = typename G::Scalar;
  const std::size_t t = seeds.size();
  const std::size_t m = data.rows();
  const std::size_t n = data.cols();

  PubControl<G> out;
  out.key = Matrix<typename G::Elem>(t, m);
  out.w = Matrix<typename G::Elem>(t, n);

  for (std::size_t k = 0; k < t; ++k) {
    Matrix<S> v(1, n);
    S u = S(1);
    for (std::size_t i = 0; i < m; ++i) {
      u *= seeds[k];
      out.key.at(k, i) = G::base_pow(u);
      for (std::size_t j = 0; j < n; ++j) v.at(0, j) += u * data.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j)
      out.w.at(k, j) = G::base_pow(v.at(0, j));
  }
  return out;
}

/// Homomorphic control update for one cell write (i, j), both zero-based:
/// w'_{k,j} = w_{k,j} * g^(s_k^(i+1) * (new - old)).
template <class G>
void pub_control_write(std::span<const typename G::Scalar> seeds,
                       std::size_t i, std::size_t j,
                       const typename G::Scalar& old_val,
                       const typename G::Scalar& new_val,
                       Matrix<typename G::Elem>& w) {
  using S = typename G::Scalar;
  const S diff = new_val - old_val;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    S delta = seeds[k].pow(i + 1) * diff;
    w.at(k, j) = G::mul(w.at(k, j), G::base_pow(delta));
  }
}

/// Verifier-side audit equation: per control row,
///   prod_i K_{k,i}^(y_i) == prod_j w_{k,j}^(x_j)   with x = powers(rho, n).
template <class G>
bool pub_audit_check(const Matrix<typename G::Elem>& key,
                     const Matrix<typename G::Elem>& w,
                     const typename G::Scalar& rho,
                     std::span<const typename G::Scalar> y) {
  if (y.size() != key.cols()) return false;
  auto x = powers(rho, w.cols());
  for (std::size_t k = 0; k < key.rows(); ++k) {
    typename G::Elem lhs = G::identity();
    for (std::size_t i = 0; i < key.cols(); ++i)
      lhs = G::mul(lhs, G::pow(key.at(k, i), y[i]));
    typename G::Elem rhs = G::identity();
    for (std::size_t j = 0; j < w.cols(); ++j)
      rhs = G::mul(rhs, G::pow(w.at(k, j), x[j]));
    if (lhs != rhs) return false;
  }
  return true;
}

/// Writer shortcut: knowing the seeds, fold y first and exponentiate once
/// per control row: g^(U y) == w^x.
template <class G>
bool pub_writer_audit_check(std::span<const typename G::Scalar> seeds,
                            const Matrix<typename G::Elem>& w,
                            const typename G::Scalar& rho,
                            std::span<const typename G::Scalar> y) {
  using S = typename G::Scalar;
  auto x = powers(rho, w.cols());
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    S uy{};
    for (std::size_t i = y.size(); i-- > 0;) uy = uy * seeds[k] + y[i];
    uy *= seeds[k];
    typename G::Elem rhs = G::identity();
    for (std::size_t j = 0; j < w.cols(); ++j)
      rhs = G::mul(rhs, G::pow(w.at(k, j), x[j]));
    if (G::base_pow(uy) != rhs) return false;
  }
  return true;
}

}  // namespace por
