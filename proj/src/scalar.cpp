#include "por/scalar.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>
#include <thread>
#include <vector>

namespace por {

namespace {
// Group order L, little-endian.
constexpr std::uint8_t kOrder[32] = {
    0xed, 0xd3, 0xf5, 0x5c, 0x1a, 0x63, 0x12, 0x58, 0xd6, 0x9c, 0xf7,
    0xa2, 0xde, 0xf9, 0xde, 0x14, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10};

bool lt_order(const std::uint8_t* b) {
  for (int i = 31; i >= 0; --i) {
    if (b[i] < kOrder[i]) return true;
    if (b[i] > kOrder[i]) return false;
  }
  return false;  // equal
}
}  // namespace

RScalar::RScalar(std::uint64_t v) {
  bytes_.fill(0);
  std::memcpy(bytes_.data(), &v, 8);
}

RScalar RScalar::from_bytes(std::span<const std::uint8_t> in) {
  if (in.size() != kBytes) throw std::invalid_argument("scalar is 32 bytes");
  if (!lt_order(in.data()))
    throw std::invalid_argument("non-canonical scalar");
  RScalar s;
  std::memcpy(s.bytes_.data(), in.data(), kBytes);
  return s;
}

RScalar RScalar::from_chunk(std::span<const std::uint8_t> chunk) {
  if (chunk.size() != kChunkBytes)
    throw std::invalid_argument("chunk must be exactly 31 bytes");
  RScalar s;
  std::memcpy(s.bytes_.data(), chunk.data(), kChunkBytes);
  return s;
}

RScalar RScalar::random(Rng& rng) {
  std::uint8_t wide[64];
  rng.fill(wide);
  RScalar s;
  crypto_core_ristretto255_scalar_reduce(s.bytes_.data(), wide);
  return s;
}

RScalar RScalar::random_nonzero(Rng& rng) {
  for (;;) {
    RScalar s = random(rng);
    if (!s.is_zero()) return s;
  }
}

void RScalar::to_bytes(std::span<std::uint8_t> out) const {
  if (out.size() != kBytes) throw std::invalid_argument("scalar is 32 bytes");
  std::memcpy(out.data(), bytes_.data(), kBytes);
}

bool RScalar::is_zero() const {
  std::uint8_t acc = 0;
  for (std::uint8_t b : bytes_) acc |= b;
  return acc == 0;
}

RScalar& RScalar::operator+=(const RScalar& o) {
  crypto_core_ristretto255_scalar_add(bytes_.data(), bytes_.data(),
                                      o.bytes_.data());
  return *this;
}

RScalar& RScalar::operator-=(const RScalar& o) {
  crypto_core_ristretto255_scalar_sub(bytes_.data(), bytes_.data(),
                                      o.bytes_.data());
  return *this;
}

RScalar& RScalar::operator*=(const RScalar& o) {
  crypto_core_ristretto255_scalar_mul(bytes_.data(), bytes_.data(),
                                      o.bytes_.data());
  return *this;
}

RScalar RScalar::neg() const {
  RScalar r;
  crypto_core_ristretto255_scalar_negate(r.bytes_.data(), bytes_.data());
  return r;
}

RScalar RScalar::inv() const {
  if (is_zero()) throw std::domain_error("inverse of zero");
  RScalar r;
  crypto_core_ristretto255_scalar_invert(r.bytes_.data(), bytes_.data());
  return r;
}

RScalar RScalar::pow(std::uint64_t e) const {
  RScalar base = *this;
  RScalar acc(1);
  while (e) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

std::vector<RScalar> scalar_mat_vec(std::span<const std::uint8_t> bytes,
                                    std::uint64_t rows, std::uint64_t cols,
                                    std::span<const RScalar> x,
                                    unsigned threads) {
  if (x.size() != cols) throw std::invalid_argument("|x| must equal n");
  const std::uint64_t stored =
      (bytes.size() + RScalar::kChunkBytes - 1) / RScalar::kChunkBytes;

  std::vector<RScalar> y(rows);
  auto worker = [&](std::uint64_t lo, std::uint64_t hi) {
    std::uint8_t buf[RScalar::kChunkBytes];
    for (std::uint64_t i = lo; i < hi; ++i) {
      const std::uint64_t c0 = i * cols;
      if (c0 >= stored) continue;
      const std::uint64_t jn = std::min<std::uint64_t>(cols, stored - c0);
      RScalar acc;
      for (std::uint64_t j = 0; j < jn; ++j) {
        const std::uint64_t off = (c0 + j) * RScalar::kChunkBytes;
        const std::size_t avail =
            std::min<std::size_t>(RScalar::kChunkBytes, bytes.size() - off);
        RScalar cell;
        if (avail == RScalar::kChunkBytes) {
          cell = RScalar::from_chunk(bytes.subspan(off, RScalar::kChunkBytes));
        } else {
          std::memset(buf, 0, sizeof(buf));
          std::memcpy(buf, bytes.data() + off, avail);
          cell = RScalar::from_chunk({buf, sizeof(buf)});
        }
        acc += cell * x[j];
      }
      y[i] = acc;
    }
  };

  if (threads <= 1 || rows <= 1) {
    worker(0, rows);
    return y;
  }
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, rows));
  const std::uint64_t per = (rows + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    std::uint64_t lo = static_cast<std::uint64_t>(w) * per;
    std::uint64_t hi = std::min<std::uint64_t>(lo + per, rows);
    if (lo >= hi) break;
    pool.emplace_back(worker, lo, hi);
  }
  for (auto& th : pool) th.join();
  return y;
}

}  // namespace por
