#include "por/statefile.hpp"

#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "por/bytes.hpp"
#include "por/params.hpp"

namespace por {

namespace {
constexpr char kStateMagic[4] = {'P', 'O', 'R', 'C'};
constexpr char kTranscriptMagic[4] = {'P', 'O', 'R', 'T'};
constexpr std::uint8_t kVersion = 1;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw TransportError(TransportError::Code::Io, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

Digest read_digest(ByteCursor& c) {
  Digest d;
  auto b = c.take(kDigestBytes);
  std::memcpy(d.data(), b.data(), kDigestBytes);
  return d;
}
}  // namespace

void atomic_write(const std::string& path,
                  std::span<const std::uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw TransportError(TransportError::Code::Io, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
      throw TransportError(TransportError::Code::Io, "write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw TransportError(TransportError::Code::Io,
                         "rename " + tmp + ": " + std::strerror(errno));
  }
}

void save_client_state(const ClientState& st, const std::string& path) {
  const auto& p = st.params;
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kStateMagic), 4});
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(p.mode));
  w.u16(static_cast<std::uint16_t>(p.lambda));
  w.u64(p.m);
  w.u64(p.n);
  w.u64(p.t);
  w.u64(p.n_bytes);
  for (const Fp57& s : st.seeds) {
    std::uint8_t buf[kPrivateElemBytes];
    fp_to_bytes(s, buf);
    w.bytes(buf);
  }
  w.bytes(st.root_data);
  if (p.mode == Mode::PrivateLocal) {
    std::uint8_t buf[kPrivateElemBytes];
    for (std::uint32_t k = 0; k < p.t; ++k)
      for (std::uint64_t j = 0; j < p.n; ++j) {
        fp_to_bytes(st.control.at(k, j), buf);
        w.bytes(buf);
      }
  } else {
    w.bytes(st.key);
    w.bytes(st.root_control);
  }
  atomic_write(path, w.take());
}

ClientState load_client_state(const std::string& path) {
  auto bytes = read_file(path);
  ByteCursor c(bytes);
  auto magic = c.take(4);
  if (std::memcmp(magic.data(), kStateMagic, 4) != 0)
    throw ProtocolError("not a client state file");
  if (c.u8() != kVersion) throw ProtocolError("unsupported state version");

  ClientState st;
  const Mode mode = static_cast<Mode>(c.u8());
  if (mode != Mode::PrivateLocal && mode != Mode::PrivateExtern)
    throw ProtocolError("state file is not a private-mode state");
  const std::uint16_t lambda = c.u16();
  const std::uint64_t m = c.u64();
  const std::uint64_t n = c.u64();
  const std::uint64_t t = c.u64();
  const std::uint64_t n_bytes = c.u64();

  st.params = derive_params(n_bytes, lambda, 112, mode);
  if (st.params.m != m || st.params.n != n || st.params.t != t)
    throw ProtocolError("state dimensions disagree with derivation");

  st.seeds.resize(t);
  for (std::uint64_t k = 0; k < t; ++k)
    st.seeds[k] = fp_from_bytes(c.take(kPrivateElemBytes));
  st.root_data = read_digest(c);
  if (mode == Mode::PrivateLocal) {
    st.control = Matrix<Fp57>(t, n);
    for (std::uint64_t k = 0; k < t; ++k)
      for (std::uint64_t j = 0; j < n; ++j)
        st.control.at(k, j) = fp_from_bytes(c.take(kPrivateElemBytes));
  } else {
    auto key = c.take(kAeadKeyBytes);
    std::memcpy(st.key.data(), key.data(), kAeadKeyBytes);
    st.root_control = read_digest(c);
  }
  if (!c.done()) throw ProtocolError("trailing bytes in state file");
  return st;
}

void save_transcript(const AuditTranscript& tr, Mode mode,
                     const std::string& path) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kTranscriptMagic), 4});
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(mode));
  w.u32(static_cast<std::uint32_t>(tr.rho.size()));
  w.u64(tr.y.size());
  w.bytes(tr.rho);
  w.bytes(tr.y);
  w.u8(tr.accepted ? 1 : 0);
  atomic_write(path, w.take());
}

StoredTranscript load_transcript(const std::string& path) {
  auto bytes = read_file(path);
  ByteCursor c(bytes);
  auto magic = c.take(4);
  if (std::memcmp(magic.data(), kTranscriptMagic, 4) != 0)
    throw ProtocolError("not a transcript file");
  if (c.u8() != kVersion)
    throw ProtocolError("unsupported transcript version");
  StoredTranscript out;
  out.mode = static_cast<Mode>(c.u8());
  const std::uint32_t rho_len = c.u32();
  const std::uint64_t y_len = c.u64();
  auto rho = c.take(rho_len);
  out.transcript.rho.assign(rho.begin(), rho.end());
  auto y = c.take(y_len);
  out.transcript.y.assign(y.begin(), y.end());
  out.transcript.accepted = c.u8() != 0;
  if (!c.done()) throw ProtocolError("trailing bytes in transcript");
  return out;
}

}  // namespace por
