#include "por/rng.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace por {

namespace {
void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
  });
}
}  // namespace

void SystemRng::fill(std::span<std::uint8_t> out) {
  ensure_sodium();
  randombytes_buf(out.data(), out.size());
}

SeededRng::SeededRng(std::uint64_t seed) {
  std::memcpy(key_.data(), &seed, sizeof(seed));
}

void SeededRng::fill(std::span<std::uint8_t> out) {
  ensure_sodium();
  std::uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
  std::memcpy(nonce, &block_, sizeof(block_));
  ++block_;
  crypto_stream_chacha20(out.data(), out.size(), nonce, key_.data());
}

}  // namespace por
