#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace por {

inline constexpr std::size_t kDigestBytes = 28;

/// SHA-512/224 output; the hash of every tree node and root on the wire.
using Digest = std::array<std::uint8_t, kDigestBytes>;

class Sha512_224 {
 public:
  Sha512_224();
  ~Sha512_224();
  Sha512_224(const Sha512_224&) = delete;
  Sha512_224& operator=(const Sha512_224&) = delete;

  Sha512_224& update(std::span<const std::uint8_t> data);
  Sha512_224& update_byte(std::uint8_t b);
  Digest finish();

 private:
  void* ctx_;
};

Digest sha512_224(std::span<const std::uint8_t> data);

}  // namespace por
