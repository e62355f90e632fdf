#include "por/group.hpp"

#include <sodium.h>

#include <cstring>

namespace por {

Ristretto255::Elem Ristretto255::base_pow(const Scalar& e) {
  if (e.is_zero()) return identity();
  Elem out;
  if (crypto_scalarmult_ristretto255_base(out.bytes.data(),
                                          e.bytes().data()) != 0)
    throw std::runtime_error("ristretto base scalarmult failed");
  return out;
}

Ristretto255::Elem Ristretto255::pow(const Elem& a, const Scalar& e) {
  if (e.is_zero() || a == identity()) return identity();
  Elem out;
  // Fails only when the result is the identity, which cannot happen for a
  // nonzero exponent on a non-identity element of a prime-order group.
  if (crypto_scalarmult_ristretto255(out.bytes.data(), e.bytes().data(),
                                     a.bytes.data()) != 0)
    return identity();
  return out;
}

Ristretto255::Elem Ristretto255::mul(const Elem& a, const Elem& b) {
  if (a == identity()) return b;
  if (b == identity()) return a;
  Elem out;
  if (crypto_core_ristretto255_add(out.bytes.data(), a.bytes.data(),
                                   b.bytes.data()) != 0)
    throw std::invalid_argument("invalid group element");
  return out;
}

bool Ristretto255::valid(const Elem& a) {
  return crypto_core_ristretto255_is_valid_point(a.bytes.data()) == 1 ||
         a == identity();
}

Ristretto255::Elem Ristretto255::decode(std::span<const std::uint8_t> in) {
  if (in.size() != kElemBytes)
    throw std::invalid_argument("group element is 32 bytes");
  Elem e;
  std::memcpy(e.bytes.data(), in.data(), kElemBytes);
  if (!valid(e)) throw std::invalid_argument("non-canonical group element");
  return e;
}

}  // namespace por
