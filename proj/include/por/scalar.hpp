#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "por/rng.hpp"

namespace por {

/// Element of the integers mod the ristretto255 group order (a 253-bit
/// prime). 32-byte little-endian canonical representation throughout.
class RScalar {
 public:
  static constexpr std::size_t kBytes = 32;
  static constexpr std::size_t kChunkBytes = 31;

  RScalar() { bytes_.fill(0); }
  explicit RScalar(std::uint64_t v);

  /// Canonical decode; throws std::invalid_argument when >= the group order.
  static RScalar from_bytes(std::span<const std::uint8_t> in);
  /// 31-byte little-endian chunk of raw data; always < 2^248 < order.
  static RScalar from_chunk(std::span<const std::uint8_t> chunk);
  static RScalar random(Rng& rng);
  static RScalar random_nonzero(Rng& rng);

  std::span<const std::uint8_t, kBytes> bytes() const { return bytes_; }
  void to_bytes(std::span<std::uint8_t> out) const;

  bool is_zero() const;

  RScalar& operator+=(const RScalar& o);
  RScalar& operator-=(const RScalar& o);
  RScalar& operator*=(const RScalar& o);
  friend RScalar operator+(RScalar a, const RScalar& b) { return a += b; }
  friend RScalar operator-(RScalar a, const RScalar& b) { return a -= b; }
  friend RScalar operator*(RScalar a, const RScalar& b) { return a *= b; }
  friend bool operator==(const RScalar& a, const RScalar& b) {
    return a.bytes_ == b.bytes_;
  }
  friend bool operator!=(const RScalar& a, const RScalar& b) {
    return !(a == b);
  }

  RScalar neg() const;
  RScalar inv() const;  // throws std::domain_error on zero
  RScalar pow(std::uint64_t e) const;

 private:
  std::array<std::uint8_t, kBytes> bytes_;
};

/// y = M x mod the group order, reading the raw bytes as 31-byte cells.
/// The heavy loop of a public-mode audit; rows may be split across workers.
std::vector<RScalar> scalar_mat_vec(std::span<const std::uint8_t> bytes,
                                    std::uint64_t rows, std::uint64_t cols,
                                    std::span<const RScalar> x,
                                    unsigned threads = 1);

}  // namespace por
