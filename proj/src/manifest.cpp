#include "por/manifest.hpp"

#include <sodium.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "por/bytes.hpp"
#include "por/statefile.hpp"

namespace por {

namespace {
constexpr char kMagic[4] = {'P', 'O', 'R', 'K'};
constexpr std::uint8_t kVersion = 1;
}  // namespace

PorParams Manifest::params() const {
  PorParams p = derive_params(n_bytes, lambda, 112, Mode::Public);
  if (p.m != m || p.n != n || p.t != t)
    throw ProtocolError("manifest dimensions disagree with derivation");
  return p;
}

void sign_keypair(SignPublic& pk, SignSecret& sk) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
  crypto_sign_keypair(pk.data(), sk.data());
}

std::vector<std::uint8_t> manifest_signed_body(const Manifest& man) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.u8(kVersion);
  w.u16(man.lambda);
  w.u16(man.kappa_centi);
  w.u64(man.m);
  w.u64(man.n);
  w.u64(man.t);
  w.u64(man.n_bytes);
  for (std::size_t k = 0; k < man.t; ++k)
    for (std::size_t i = 0; i < man.m; ++i)
      w.bytes(man.key.at(k, i).bytes);
  w.bytes(man.root_data);
  w.bytes(man.root_control);
  w.bytes(man.signer_pk);
  return w.take();
}

void save_manifest(Manifest& man, const SignSecret& sk,
                   const std::string& path) {
  man.kappa_centi = static_cast<std::uint16_t>(
      std::floor(public_effective_kappa(man.m) * 100.0));
  auto body = manifest_signed_body(man);
  crypto_sign_detached(man.signature.data(), nullptr, body.data(),
                       body.size(), sk.data());
  ByteWriter w;
  w.bytes(body);
  w.bytes(man.signature);
  atomic_write(path, w.take());
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw TransportError(TransportError::Code::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>{});
  ByteCursor c(bytes);
  auto magic = c.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw ProtocolError("not a manifest file");
  if (c.u8() != kVersion) throw ProtocolError("unsupported manifest version");

  Manifest man;
  man.lambda = c.u16();
  man.kappa_centi = c.u16();
  man.m = c.u64();
  man.n = c.u64();
  man.t = c.u64();
  man.n_bytes = c.u64();
  if (man.m == 0 || man.n == 0 || man.t == 0 || man.t > 64)
    throw ProtocolError("implausible manifest dimensions");
  man.key = Matrix<Ristretto255::Elem>(man.t, man.m);
  for (std::size_t k = 0; k < man.t; ++k)
    for (std::size_t i = 0; i < man.m; ++i) {
      try {
        man.key.at(k, i) = Ristretto255::decode(c.take(32));
      } catch (const std::invalid_argument&) {
        throw IntegrityError("manifest key element is not canonical");
      }
    }
  auto rd = c.take(kDigestBytes);
  std::memcpy(man.root_data.data(), rd.data(), kDigestBytes);
  auto rc = c.take(kDigestBytes);
  std::memcpy(man.root_control.data(), rc.data(), kDigestBytes);
  auto pk = c.take(32);
  std::memcpy(man.signer_pk.data(), pk.data(), 32);
  auto sig = c.take(64);
  std::memcpy(man.signature.data(), sig.data(), 64);
  if (!c.done()) throw ProtocolError("trailing bytes in manifest");

  auto body = manifest_signed_body(man);
  if (crypto_sign_verify_detached(man.signature.data(), body.data(),
                                  body.size(), man.signer_pk.data()) != 0)
    throw IntegrityError("manifest signature does not verify");
  return man;
}

}  // namespace por
