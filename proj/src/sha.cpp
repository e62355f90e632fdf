#include "por/sha.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace por {

Sha512_224::Sha512_224() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha512_224(), nullptr) != 1)
    throw std::runtime_error("SHA-512/224 init failed");
  ctx_ = ctx;
}

Sha512_224::~Sha512_224() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Sha512_224& Sha512_224::update(std::span<const std::uint8_t> data) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(),
                       data.size()) != 1)
    throw std::runtime_error("SHA-512/224 update failed");
  return *this;
}

Sha512_224& Sha512_224::update_byte(std::uint8_t b) {
  return update({&b, 1});
}

Digest Sha512_224::finish() {
  Digest out;
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len) !=
          1 ||
      len != kDigestBytes)
    throw std::runtime_error("SHA-512/224 final failed");
  return out;
}

Digest sha512_224(std::span<const std::uint8_t> data) {
  Sha512_224 h;
  h.update(data);
  return h.finish();
}

}  // namespace por
