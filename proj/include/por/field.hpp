#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

#include "por/rng.hpp"

namespace por {

/// Prime field with a compile-time 64-bit modulus. Elements are always kept
/// canonical (< Q); products go through a 128-bit intermediate.
template <std::uint64_t Q>
class Zq {
  static_assert(Q > 2, "modulus too small");

 public:
  static constexpr std::uint64_t kModulus = Q;

  constexpr Zq() = default;
  constexpr explicit Zq(std::uint64_t v) : v_(v % Q) {}

  static constexpr Zq from_raw(std::uint64_t v) {
    Zq r;
    r.v_ = v;
    return r;
  }

  constexpr std::uint64_t value() const { return v_; }
  constexpr bool is_zero() const { return v_ == 0; }

  Zq& operator+=(Zq o) {
    v_ += o.v_;
    if (v_ >= Q) v_ -= Q;
    return *this;
  }
  Zq& operator-=(Zq o) {
    v_ = (v_ >= o.v_) ? v_ - o.v_ : v_ + Q - o.v_;
    return *this;
  }
  Zq& operator*=(Zq o) {
    v_ = static_cast<std::uint64_t>((static_cast<__uint128_t>(v_) * o.v_) % Q);
    return *this;
  }

  friend Zq operator+(Zq a, Zq b) { return a += b; }
  friend Zq operator-(Zq a, Zq b) { return a -= b; }
  friend Zq operator*(Zq a, Zq b) { return a *= b; }
  friend bool operator==(Zq a, Zq b) { return a.v_ == b.v_; }
  friend bool operator!=(Zq a, Zq b) { return a.v_ != b.v_; }

  Zq neg() const { return v_ == 0 ? *this : from_raw(Q - v_); }

  Zq pow(std::uint64_t e) const {
    Zq base = *this;
    Zq acc(1);
    while (e) {
      if (e & 1) acc *= base;
      base *= base;
      e >>= 1;
    }
    return acc;
  }

  // Q is prime, so a^(Q-2) inverts.
  Zq inv() const {
    if (v_ == 0) throw std::domain_error("inverse of zero");
    return pow(Q - 2);
  }

 private:
  std::uint64_t v_ = 0;
};

/// The audit field of the private mode: the largest 57-bit prime. Raw data is
/// consumed in 7-byte chunks, so every chunk value is < 2^56 < kModulus.
using Fp57 = Zq<144115188075855859ULL>;

static_assert(Fp57::kModulus == (1ULL << 57) - 13);

inline constexpr std::size_t kPrivateChunkBytes = 7;
inline constexpr std::size_t kPrivateElemBytes = 8;

/// Little-endian interpretation of one raw 7-byte chunk.
inline Fp57 fp_from_chunk(std::span<const std::uint8_t> chunk) {
  if (chunk.size() != kPrivateChunkBytes)
    throw std::invalid_argument("chunk must be exactly 7 bytes");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < kPrivateChunkBytes; ++i)
    v |= static_cast<std::uint64_t>(chunk[i]) << (8 * i);
  return Fp57::from_raw(v);  // < 2^56 < Q
}

/// Inverse of fp_from_chunk; requires value < 2^56.
inline void fp_to_chunk(Fp57 e, std::span<std::uint8_t> out) {
  if (out.size() != kPrivateChunkBytes)
    throw std::invalid_argument("chunk must be exactly 7 bytes");
  std::uint64_t v = e.value();
  if (v >> 56) throw std::invalid_argument("value does not fit in 7 bytes");
  for (std::size_t i = 0; i < kPrivateChunkBytes; ++i)
    out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

/// Canonical 8-byte little-endian wire form.
inline void fp_to_bytes(Fp57 e, std::span<std::uint8_t> out) {
  if (out.size() != kPrivateElemBytes)
    throw std::invalid_argument("element is 8 bytes");
  std::uint64_t v = e.value();
  std::memcpy(out.data(), &v, 8);
}

inline Fp57 fp_from_bytes(std::span<const std::uint8_t> in) {
  if (in.size() != kPrivateElemBytes)
    throw std::invalid_argument("element is 8 bytes");
  std::uint64_t v;
  std::memcpy(&v, in.data(), 8);
  if (v >= Fp57::kModulus) throw std::invalid_argument("non-canonical element");
  return Fp57::from_raw(v);
}

/// Uniform nonzero element, sampled by masking to 57 bits and rejecting the
/// rare values in [Q, 2^57) as well as zero.
inline Fp57 fp_random_nonzero(Rng& rng) {
  constexpr std::uint64_t mask = (1ULL << 57) - 1;
  for (;;) {
    std::uint64_t v = rng.next_u64() & mask;
    if (v != 0 && v < Fp57::kModulus) return Fp57::from_raw(v);
  }
}

/// Challenge vector [rho^1, rho^2, ..., rho^n]. A zero rho would make the
/// whole vector zero, so it is rejected.
template <class F>
std::vector<F> powers(F rho, std::size_t n) {
  if (rho.is_zero()) throw std::invalid_argument("zero challenge");
  if (n == 0) throw std::invalid_argument("empty challenge vector");
  std::vector<F> x(n);
  F cur = rho;
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = cur;
    cur *= rho;
  }
  return x;
}

template <class F>
F dot(std::span<const F> a, std::span<const F> b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  F acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// sum_{i=1..len} s^i * v[i-1], folded Horner-style: one control row times a
/// response vector without materializing the row.
template <class F>
F dot_with_powers(F s, std::span<const F> v) {
  F acc{};
  for (std::size_t i = v.size(); i-- > 0;) acc = acc * s + v[i];
  return acc * s;
}

/// Minimal row-major matrix used for control blocks and extraction output.
template <class F>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), cells_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  F& at(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  const F& at(std::size_t r, std::size_t c) const {
    return cells_[r * cols_ + c];
  }

  std::span<F> row(std::size_t r) { return {cells_.data() + r * cols_, cols_}; }
  std::span<const F> row(std::size_t r) const {
    return {cells_.data() + r * cols_, cols_};
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cells_ == b.cells_;
  }

  std::vector<F> mul_vec(std::span<const F> x) const {
    if (x.size() != cols_) throw std::invalid_argument("dimension mismatch");
    std::vector<F> y(rows_);
    for (std::size_t r = 0; r < rows_; ++r) y[r] = dot(row(r), x);
    return y;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<F> cells_;
};

/// The audit acceptance test: every control row k must satisfy
/// U_k . y == V_k . x with x = powers(rho, n) and U_k regenerated from its
/// seed. The same check runs at production and reduced-scale moduli.
template <class F>
bool audit_accepts(std::span<const F> seeds, const Matrix<F>& control, F rho,
                   std::span<const F> y) {
  if (control.rows() != seeds.size()) return false;
  auto x = powers(rho, control.cols());
  for (std::size_t k = 0; k < seeds.size(); ++k)
    if (dot_with_powers(seeds[k], y) !=
        dot(control.row(k), std::span<const F>(x)))
      return false;
  return true;
}

}  // namespace por
