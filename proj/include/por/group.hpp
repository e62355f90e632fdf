#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "por/field.hpp"
#include "por/scalar.hpp"

namespace por {

/// Production group for the publicly verifiable mode: ristretto255, written
/// multiplicatively. Elements are canonical 32-byte encodings; the identity
/// is the all-zero string.
struct Ristretto255 {
  using Scalar = RScalar;

  struct Elem {
    std::array<std::uint8_t, 32> bytes{};
    friend bool operator==(const Elem& a, const Elem& b) {
      return a.bytes == b.bytes;
    }
    friend bool operator!=(const Elem& a, const Elem& b) {
      return !(a == b);
    }
  };
  static constexpr std::size_t kElemBytes = 32;

  static Elem identity() { return Elem{}; }
  static Elem base_pow(const Scalar& e);           // g^e
  static Elem pow(const Elem& a, const Scalar& e); // a^e
  static Elem mul(const Elem& a, const Elem& b);   // a*b
  /// Canonical-encoding check; rejects non-canonical strings.
  static bool valid(const Elem& a);
  static Elem decode(std::span<const std::uint8_t> in);
};

/// Tiny multiplicative group mod 23 with generator 5, used by the pluggable
/// test mode so the audit algebra can be checked by hand. Exponent
/// arithmetic runs mod 23.
struct ToyGroup23 {
  using Scalar = Zq<23>;

  struct Elem {
    std::uint64_t v = 1;
    friend bool operator==(const Elem& a, const Elem& b) { return a.v == b.v; }
    friend bool operator!=(const Elem& a, const Elem& b) { return a.v != b.v; }
  };
  static constexpr std::uint64_t kModulus = 23;
  static constexpr std::uint64_t kGenerator = 5;

  static Elem identity() { return Elem{1}; }
  static Elem base_pow(const Scalar& e) { return pow(Elem{kGenerator}, e); }
  static Elem pow(const Elem& a, const Scalar& e) {
    std::uint64_t acc = 1, base = a.v % kModulus, k = e.value();
    while (k) {
      if (k & 1) acc = acc * base % kModulus;
      base = base * base % kModulus;
      k >>= 1;
    }
    return Elem{acc};
  }
  static Elem mul(const Elem& a, const Elem& b) {
    return Elem{a.v * b.v % kModulus};
  }
  static bool valid(const Elem& a) { return a.v >= 1 && a.v < kModulus; }
};

}  // namespace por
