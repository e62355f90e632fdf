#include "por/remote.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "por/bytes.hpp"
#include "por/errors.hpp"

namespace por {

using namespace wire;

namespace {
constexpr std::size_t kInitWindow = 8;
constexpr std::size_t kInitFrameBytes = 256 * 1024;
}  // namespace

std::pair<std::string, std::uint16_t> RemoteServer::parse_endpoint(
    const std::string& endpoint) {
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultPort;
  if (!endpoint.empty()) {
    auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) {
      host = endpoint;
    } else {
      if (colon > 0) host = endpoint.substr(0, colon);
      const std::string p = endpoint.substr(colon + 1);
      if (!p.empty()) {
        int v = std::stoi(p);
        if (v <= 0 || v > 65535)
          throw std::invalid_argument("bad port in endpoint");
        port = static_cast<std::uint16_t>(v);
      }
    }
  }
  if (host == "localhost") host = "127.0.0.1";
  return {host, port};
}

RemoteServer::RemoteServer(const std::string& endpoint, int timeout_ms)
    : timeout_ms_(timeout_ms) {
  auto [host, port] = parse_endpoint(endpoint);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  int rc = getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res);
  if (rc != 0)
    throw TransportError(TransportError::Code::Io,
                         "resolve " + host + ": " + gai_strerror(rc));

  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    freeaddrinfo(res);
    throw TransportError(TransportError::Code::Io,
                         std::string("socket: ") + std::strerror(errno));
  }
  fcntl(fd_, F_SETFL, O_NONBLOCK);
  rc = ::connect(fd_, res->ai_addr, res->ai_addrlen);
  freeaddrinfo(res);
  if (rc != 0 && errno != EINPROGRESS) {
    int e = errno;
    ::close(fd_);
    fd_ = -1;
    throw TransportError(e == ECONNREFUSED ? TransportError::Code::Refused
                                           : TransportError::Code::Io,
                         std::string("connect: ") + std::strerror(e));
  }
  if (rc != 0) {
    pollfd pfd{fd_, POLLOUT, 0};
    rc = ::poll(&pfd, 1, timeout_ms_);
    if (rc == 0) {
      ::close(fd_);
      fd_ = -1;
      throw TransportError(TransportError::Code::Timeout, "connect timeout");
    }
    int err = 0;
    socklen_t len = sizeof(err);
    getsockopt(fd_, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      ::close(fd_);
      fd_ = -1;
      throw TransportError(err == ECONNREFUSED
                               ? TransportError::Code::Refused
                               : TransportError::Code::Io,
                           std::string("connect: ") + std::strerror(err));
    }
  }
  int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  // Version handshake.
  const std::uint64_t corr = next_corr_++;
  Hello h{corr, kVersion};
  send_frame(MsgType::kHello, encode_hello(h));
  auto payload = await(MsgType::kHelloResp, corr);
  Hello resp = decode_hello(payload);
  if (resp.version < 1) throw ProtocolError("server version unsupported");
}

RemoteServer::~RemoteServer() {
  if (fd_ >= 0) ::close(fd_);
}

void RemoteServer::send_frame(MsgType type,
                              std::span<const std::uint8_t> payload) {
  auto frame = frame_encode(type, payload);
  write_all(fd_, frame, timeout_ms_);
  bytes_sent_ += frame.size();
}

std::vector<std::uint8_t> RemoteServer::await(MsgType expect,
                                              std::uint64_t corr) {
  for (;;) {
    auto raw = read_frame_raw(fd_, timeout_ms_);
    if (!raw)
      throw TransportError(TransportError::Code::Closed,
                           "server closed the connection");
    bytes_received_ += raw->size();
    FrameView f = frame_decode(*raw);
    if (f.type == MsgType::kError) {
      Error e = decode_error(f.payload);
      switch (e.code) {
        case ErrCode::kRange:
          throw std::out_of_range(e.detail);
        case ErrCode::kIo:
          throw TransportError(TransportError::Code::Io, e.detail);
        case ErrCode::kState:
        case ErrCode::kProtocol:
          throw ProtocolError(e.detail);
      }
      throw ProtocolError(e.detail);
    }
    if (f.type != expect) throw ProtocolError("unexpected response type");
    ByteCursor c(f.payload);
    if (c.u64() != corr) throw ProtocolError("correlation id mismatch");
    return std::vector<std::uint8_t>(f.payload.begin(), f.payload.end());
  }
}

void RemoteServer::init_begin(const StoreConfig& cfg) {
  const std::uint64_t corr = next_corr_++;
  InitBegin m{corr, cfg};
  send_frame(MsgType::kInitBegin, encode_init_begin(m));
  await(MsgType::kInitBeginResp, corr);
  init_window_.clear();
}

void RemoteServer::drain_init_window(std::size_t max_outstanding) {
  while (init_window_.size() > max_outstanding) {
    auto [type, corr] = init_window_.front();
    init_window_.erase(init_window_.begin());
    await(type == MsgType::kInitData ? MsgType::kInitDataResp
                                     : MsgType::kInitAuxResp,
          corr);
  }
}

void RemoteServer::push_init_chunks(MsgType type, std::uint64_t offset,
                                    std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t len = std::min(kInitFrameBytes, bytes.size() - pos);
    const std::uint64_t corr = next_corr_++;
    send_frame(type, encode_init_chunk(corr, offset + pos,
                                       bytes.subspan(pos, len)));
    init_window_.emplace_back(type, corr);
    drain_init_window(kInitWindow - 1);
    pos += len;
  }
}

void RemoteServer::init_data(std::uint64_t offset,
                             std::span<const std::uint8_t> bytes) {
  push_init_chunks(MsgType::kInitData, offset, bytes);
}

void RemoteServer::init_aux(std::uint64_t offset,
                            std::span<const std::uint8_t> bytes) {
  push_init_chunks(MsgType::kInitAux, offset, bytes);
}

ServerApi::InitRoots RemoteServer::init_commit() {
  drain_init_window(0);
  const std::uint64_t corr = next_corr_++;
  send_frame(MsgType::kInitCommit, encode_corr_only(corr));
  auto payload = await(MsgType::kInitCommitResp, corr);
  InitCommitResp resp = decode_init_commit_resp(payload);
  InitRoots roots;
  roots.data = resp.root_data;
  roots.control = resp.root_control;
  return roots;
}

namespace {
BlocksOut to_blocks_out(const BlocksResp& m) {
  BlocksOut out;
  out.first_block = m.first_block;
  out.block_count = m.block_count;
  out.data.assign(m.data.begin(), m.data.end());
  out.path = m.path;
  return out;
}
}  // namespace

BlocksOut RemoteServer::read_cell(TreeId tree, std::uint64_t i,
                                  std::uint64_t j) {
  const std::uint64_t corr = next_corr_++;
  ReadReq m{corr, tree, i, j};
  send_frame(MsgType::kReadReq, encode_read_req(m));
  auto payload = await(MsgType::kReadResp, corr);
  return to_blocks_out(decode_blocks_resp(payload));
}

BlocksOut RemoteServer::write_cell(TreeId tree, std::uint64_t i,
                                   std::uint64_t j,
                                   std::span<const std::uint8_t> value) {
  const std::uint64_t corr = next_corr_++;
  WriteReq m{corr, tree, i, j, value};
  send_frame(MsgType::kWriteReq, encode_write_req(m));
  auto payload = await(MsgType::kWriteResp, corr);
  return to_blocks_out(decode_blocks_resp(payload));
}

ServerApi::AuditOut RemoteServer::audit(std::span<const std::uint8_t> rho) {
  const std::uint64_t corr = next_corr_++;
  AuditChallenge m{corr, rho};
  send_frame(MsgType::kAuditChallenge, encode_audit_challenge(m));
  auto payload = await(MsgType::kAuditResp, corr);
  AuditResp resp = decode_audit_resp(payload);
  AuditOut out;
  out.y.assign(resp.y.begin(), resp.y.end());
  if (resp.control) {
    out.control.emplace(resp.control->begin(), resp.control->end());
    out.control_path = resp.control_path;
  }
  return out;
}

}  // namespace por
