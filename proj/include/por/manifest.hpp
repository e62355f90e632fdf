#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "por/group.hpp"
#include "por/merkle.hpp"
#include "por/params.hpp"

namespace por {

/// Published material of the public mode: the exponent-hidden control block
/// K = g^U, the current tree roots, and an Ed25519 signature binding them to
/// the writer. This file is the verifier's only trust anchor.
struct Manifest {
  std::uint16_t lambda = 40;
  std::uint16_t kappa_centi = 0;  // effective kappa * 100
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  std::uint64_t t = 0;
  std::uint64_t n_bytes = 0;
  Matrix<Ristretto255::Elem> key;  // t x m
  Digest root_data{};
  Digest root_control{};
  std::array<std::uint8_t, 32> signer_pk{};
  std::array<std::uint8_t, 64> signature{};

  PorParams params() const;
};

using SignSecret = std::array<std::uint8_t, 64>;
using SignPublic = std::array<std::uint8_t, 32>;

void sign_keypair(SignPublic& pk, SignSecret& sk);

/// Serializes, signs and writes the manifest atomically.
void save_manifest(Manifest& man, const SignSecret& sk,
                   const std::string& path);

/// Loads and checks the signature; throws IntegrityError when it does not
/// verify, ProtocolError on malformed bytes.
Manifest load_manifest(const std::string& path);

std::vector<std::uint8_t> manifest_signed_body(const Manifest& man);

}  // namespace por
