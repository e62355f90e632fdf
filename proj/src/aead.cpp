#include "por/aead.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

#include "por/errors.hpp"

namespace por {

namespace {
void make_nonce(std::uint64_t column, std::uint64_t counter,
                std::uint8_t out[crypto_aead_xchacha20poly1305_ietf_NPUBBYTES]) {
  std::memset(out, 0, crypto_aead_xchacha20poly1305_ietf_NPUBBYTES);
  std::memcpy(out, &column, 8);
  std::memcpy(out + 8, &counter, 8);
}
}  // namespace

std::vector<std::uint8_t> ColumnCipher::seal(
    std::uint64_t column, std::uint64_t counter,
    std::span<const std::uint8_t> plain) const {
  std::uint8_t nonce[crypto_aead_xchacha20poly1305_ietf_NPUBBYTES];
  make_nonce(column, counter, nonce);
  std::vector<std::uint8_t> record(record_bytes(plain.size()));
  std::memcpy(record.data(), &counter, 8);
  unsigned long long clen = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(
      record.data() + 8, &clen, plain.data(), plain.size(), nullptr, 0,
      nullptr, nonce, key_.data());
  if (clen != plain.size() + kAeadTagBytes)
    throw std::runtime_error("unexpected ciphertext length");
  return record;
}

std::vector<std::uint8_t> ColumnCipher::open(
    std::uint64_t column, std::span<const std::uint8_t> record) const {
  if (record.size() < 8 + kAeadTagBytes)
    throw IntegrityError("control record too short");
  std::uint64_t counter = record_counter(record);
  std::uint8_t nonce[crypto_aead_xchacha20poly1305_ietf_NPUBBYTES];
  make_nonce(column, counter, nonce);
  std::vector<std::uint8_t> plain(record.size() - 8 - kAeadTagBytes);
  unsigned long long plen = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(
          plain.data(), &plen, nullptr, record.data() + 8, record.size() - 8,
          nullptr, 0, nonce, key_.data()) != 0)
    throw IntegrityError("control record failed authentication");
  plain.resize(plen);
  return plain;
}

std::uint64_t ColumnCipher::record_counter(
    std::span<const std::uint8_t> record) {
  std::uint64_t counter;
  std::memcpy(&counter, record.data(), 8);
  return counter;
}

}  // namespace por
