#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>

namespace por {

/// Byte source for all protocol randomness. The default implementation pulls
/// from the OS CSPRNG; tests use the seeded variant for reproducible runs.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64() {
    std::uint8_t buf[8];
    fill(buf);
    std::uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
  }
};

class SystemRng final : public Rng {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// Deterministic ChaCha20 stream keyed by a 32-byte seed.
class SeededRng final : public Rng {
 public:
  explicit SeededRng(std::uint64_t seed);
  explicit SeededRng(const std::array<std::uint8_t, 32>& key) : key_(key) {}

  void fill(std::span<std::uint8_t> out) override;

 private:
  std::array<std::uint8_t, 32> key_{};
  std::uint64_t block_ = 0;
};

}  // namespace por
