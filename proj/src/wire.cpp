#include "por/wire.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "por/bytes.hpp"

namespace por::wire {

bool is_known_type(std::uint8_t t) {
  switch (static_cast<MsgType>(t)) {
    case MsgType::kHello:
    case MsgType::kInitBegin:
    case MsgType::kInitData:
    case MsgType::kInitAux:
    case MsgType::kInitCommit:
    case MsgType::kReadReq:
    case MsgType::kWriteReq:
    case MsgType::kAuditChallenge:
    case MsgType::kError:
    case MsgType::kHelloResp:
    case MsgType::kInitBeginResp:
    case MsgType::kInitDataResp:
    case MsgType::kInitAuxResp:
    case MsgType::kInitCommitResp:
    case MsgType::kReadResp:
    case MsgType::kWriteResp:
    case MsgType::kAuditResp:
      return true;
  }
  return false;
}

std::vector<std::uint8_t> frame_encode(MsgType type,
                                       std::span<const std::uint8_t> payload) {
  if (payload.size() + 1 > kMaxFrameBytes)
    throw ProtocolError("frame too large");
  ByteWriter w;
  w.u32_be(static_cast<std::uint32_t>(payload.size() + 1));
  w.u8(static_cast<std::uint8_t>(type));
  w.bytes(payload);
  return w.take();
}

FrameView frame_decode(std::span<const std::uint8_t> bytes,
                       std::size_t* consumed) {
  if (bytes.size() < kFrameHeaderBytes) throw ProtocolError("truncated frame");
  ByteCursor c(bytes);
  const std::uint32_t len = c.u32_be();
  if (len == 0) throw ProtocolError("empty frame");
  if (len > kMaxFrameBytes) throw ProtocolError("oversize frame");
  if (bytes.size() < 4 + static_cast<std::size_t>(len))
    throw ProtocolError("truncated frame");
  const std::uint8_t type = c.u8();
  if (!is_known_type(type)) throw ProtocolError("unknown message type");
  FrameView v;
  v.type = static_cast<MsgType>(type);
  v.payload = bytes.subspan(kFrameHeaderBytes, len - 1);
  if (consumed) *consumed = 4 + static_cast<std::size_t>(len);
  return v;
}

std::vector<std::uint8_t> encode_hello(const Hello& m) {
  ByteWriter w;
  w.u64(m.corr);
  w.u16(m.version);
  return w.take();
}

Hello decode_hello(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  Hello m;
  m.corr = c.u64();
  m.version = c.u16();
  if (!c.done()) throw ProtocolError("trailing bytes");
  return m;
}

std::vector<std::uint8_t> encode_init_begin(const InitBegin& m) {
  ByteWriter w;
  w.u64(m.corr);
  w.u8(static_cast<std::uint8_t>(m.config.mode));
  w.u64(m.config.n_bytes);
  w.u64(m.config.m);
  w.u64(m.config.n);
  w.u32(static_cast<std::uint32_t>(m.config.chunk_bytes));
  w.u32(static_cast<std::uint32_t>(m.config.block_bytes));
  w.u32(static_cast<std::uint32_t>(m.config.elem_bytes));
  w.u64(m.config.control_bytes);
  w.u64(m.config.control_record_bytes);
  return w.take();
}

InitBegin decode_init_begin(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  InitBegin m;
  m.corr = c.u64();
  const std::uint8_t mode = c.u8();
  if (mode > 2) throw ProtocolError("bad mode");
  m.config.mode = static_cast<Mode>(mode);
  m.config.n_bytes = c.u64();
  m.config.m = c.u64();
  m.config.n = c.u64();
  m.config.chunk_bytes = c.u32();
  m.config.block_bytes = c.u32();
  m.config.elem_bytes = c.u32();
  m.config.control_bytes = c.u64();
  m.config.control_record_bytes = c.u64();
  if (!c.done()) throw ProtocolError("trailing bytes");
  return m;
}

std::vector<std::uint8_t> encode_init_chunk(std::uint64_t corr,
                                            std::uint64_t offset,
                                            std::span<const std::uint8_t> b) {
  ByteWriter w;
  w.u64(corr);
  w.u64(offset);
  w.bytes(b);
  return w.take();
}

InitChunk decode_init_chunk(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  InitChunk m;
  m.corr = c.u64();
  m.offset = c.u64();
  m.bytes = c.rest();
  return m;
}

std::vector<std::uint8_t> encode_corr_only(std::uint64_t corr) {
  ByteWriter w;
  w.u64(corr);
  return w.take();
}

std::uint64_t decode_corr_only(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  std::uint64_t corr = c.u64();
  if (!c.done()) throw ProtocolError("trailing bytes");
  return corr;
}

std::vector<std::uint8_t> encode_init_commit_resp(const InitCommitResp& m) {
  ByteWriter w;
  w.u64(m.corr);
  w.bytes(m.root_data);
  w.u8(m.root_control ? 1 : 0);
  if (m.root_control) w.bytes(*m.root_control);
  return w.take();
}

InitCommitResp decode_init_commit_resp(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  InitCommitResp m;
  m.corr = c.u64();
  auto rd = c.take(kDigestBytes);
  std::memcpy(m.root_data.data(), rd.data(), kDigestBytes);
  if (c.u8()) {
    Digest d;
    auto rc = c.take(kDigestBytes);
    std::memcpy(d.data(), rc.data(), kDigestBytes);
    m.root_control = d;
  }
  if (!c.done()) throw ProtocolError("trailing bytes");
  return m;
}

std::vector<std::uint8_t> encode_read_req(const ReadReq& m) {
  ByteWriter w;
  w.u64(m.corr);
  w.u8(static_cast<std::uint8_t>(m.tree));
  w.u64(m.i);
  w.u64(m.j);
  return w.take();
}

ReadReq decode_read_req(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  ReadReq m;
  m.corr = c.u64();
  const std::uint8_t tree = c.u8();
  if (tree > 1) throw ProtocolError("bad tree id");
  m.tree = static_cast<TreeId>(tree);
  m.i = c.u64();
  m.j = c.u64();
  if (!c.done()) throw ProtocolError("trailing bytes");
  return m;
}

std::vector<std::uint8_t> encode_write_req(const WriteReq& m) {
  ByteWriter w;
  w.u64(m.corr);
  w.u8(static_cast<std::uint8_t>(m.tree));
  w.u64(m.i);
  w.u64(m.j);
  w.u16(static_cast<std::uint16_t>(m.value.size()));
  w.bytes(m.value);
  return w.take();
}

WriteReq decode_write_req(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  WriteReq m;
  m.corr = c.u64();
  const std::uint8_t tree = c.u8();
  if (tree > 1) throw ProtocolError("bad tree id");
  m.tree = static_cast<TreeId>(tree);
  m.i = c.u64();
  m.j = c.u64();
  const std::uint16_t vlen = c.u16();
  m.value = c.take(vlen);
  if (!c.done()) throw ProtocolError("trailing bytes");
  return m;
}

std::vector<std::uint8_t> encode_blocks_resp(std::uint64_t corr,
                                             const BlocksOut& out) {
  ByteWriter w;
  w.u64(corr);
  w.u64(out.first_block);
  w.u32(static_cast<std::uint32_t>(out.block_count));
  w.u32(static_cast<std::uint32_t>(out.data.size()));
  w.bytes(out.data);
  w.bytes(out.path.encode());
  return w.take();
}

BlocksResp decode_blocks_resp(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  BlocksResp m;
  m.corr = c.u64();
  m.first_block = c.u64();
  m.block_count = c.u32();
  const std::uint32_t dlen = c.u32();
  m.data = c.take(dlen);
  std::size_t used = 0;
  m.path = MerklePath::decode(c.rest(), &used);
  return m;
}

std::vector<std::uint8_t> encode_audit_challenge(const AuditChallenge& m) {
  ByteWriter w;
  w.u64(m.corr);
  w.bytes(m.rho);
  return w.take();
}

AuditChallenge decode_audit_challenge(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  AuditChallenge m;
  m.corr = c.u64();
  m.rho = c.rest();
  if (m.rho.size() != 8 && m.rho.size() != 32)
    throw ProtocolError("bad challenge width");
  return m;
}

std::vector<std::uint8_t> encode_audit_resp(
    std::uint64_t corr, std::span<const std::uint8_t> y,
    const std::optional<std::vector<std::uint8_t>>& control,
    const MerklePath& control_path) {
  ByteWriter w;
  w.u64(corr);
  w.u64(y.size());
  w.bytes(y);
  w.u8(control ? 1 : 0);
  if (control) {
    w.u64(control->size());
    w.bytes(*control);
    w.bytes(control_path.encode());
  }
  return w.take();
}

AuditResp decode_audit_resp(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  AuditResp m;
  m.corr = c.u64();
  const std::uint64_t ylen = c.u64();
  m.y = c.take(ylen);
  if (c.u8()) {
    const std::uint64_t clen = c.u64();
    m.control = c.take(clen);
    std::size_t used = 0;
    m.control_path = MerklePath::decode(c.rest(), &used);
  } else if (!c.done()) {
    throw ProtocolError("trailing bytes");
  }
  return m;
}

std::vector<std::uint8_t> encode_error(const Error& m) {
  ByteWriter w;
  w.u64(m.corr);
  w.u16(static_cast<std::uint16_t>(m.code));
  w.str(m.detail);
  return w.take();
}

Error decode_error(std::span<const std::uint8_t> p) {
  ByteCursor c(p);
  Error m;
  m.corr = c.u64();
  m.code = static_cast<ErrCode>(c.u16());
  auto rest = c.rest();
  m.detail.assign(rest.begin(), rest.end());
  return m;
}

namespace {
void wait_readable(int fd, int timeout_ms) {
  pollfd pfd{fd, POLLIN, 0};
  int rc = ::poll(&pfd, 1, timeout_ms);
  if (rc == 0)
    throw TransportError(TransportError::Code::Timeout, "read timeout");
  if (rc < 0)
    throw TransportError(TransportError::Code::Io,
                         std::string("poll: ") + std::strerror(errno));
}

std::size_t read_some(int fd, std::uint8_t* buf, std::size_t len,
                      int timeout_ms) {
  for (;;) {
    ssize_t r = ::recv(fd, buf, len, 0);
    if (r > 0) return static_cast<std::size_t>(r);
    if (r == 0) return 0;
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) {
      wait_readable(fd, timeout_ms);
      continue;
    }
    throw TransportError(TransportError::Code::Io,
                         std::string("recv: ") + std::strerror(errno));
  }
}
}  // namespace

std::optional<std::vector<std::uint8_t>> read_frame_raw(int fd,
                                                        int timeout_ms) {
  std::uint8_t header[4];
  std::size_t got = 0;
  while (got < 4) {
    std::size_t r = read_some(fd, header + got, 4 - got, timeout_ms);
    if (r == 0) {
      if (got == 0) return std::nullopt;  // clean close between frames
      throw TransportError(TransportError::Code::Closed,
                           "connection closed mid-frame");
    }
    got += r;
  }
  const std::uint32_t len = (static_cast<std::uint32_t>(header[0]) << 24) |
                            (static_cast<std::uint32_t>(header[1]) << 16) |
                            (static_cast<std::uint32_t>(header[2]) << 8) |
                            header[3];
  if (len == 0) throw ProtocolError("empty frame");
  if (len > kMaxFrameBytes) throw ProtocolError("oversize frame");

  std::vector<std::uint8_t> frame(4 + len);
  std::memcpy(frame.data(), header, 4);
  std::size_t need = len;
  std::size_t at = 4;
  while (need > 0) {
    std::size_t r = read_some(fd, frame.data() + at, need, timeout_ms);
    if (r == 0)
      throw TransportError(TransportError::Code::Closed,
                           "connection closed mid-frame");
    at += r;
    need -= r;
  }
  return frame;
}

void write_all(int fd, std::span<const std::uint8_t> bytes, int timeout_ms) {
  std::size_t at = 0;
  while (at < bytes.size()) {
    ssize_t r = ::send(fd, bytes.data() + at, bytes.size() - at, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        pollfd pfd{fd, POLLOUT, 0};
        int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc == 0)
          throw TransportError(TransportError::Code::Timeout,
                               "write timeout");
        if (rc < 0)
          throw TransportError(TransportError::Code::Io,
                               std::string("poll: ") + std::strerror(errno));
        continue;
      }
      if (errno == EPIPE || errno == ECONNRESET)
        throw TransportError(TransportError::Code::Closed,
                             "connection closed");
      throw TransportError(TransportError::Code::Io,
                           std::string("send: ") + std::strerror(errno));
    }
    at += static_cast<std::size_t>(r);
  }
}

}  // namespace por::wire
