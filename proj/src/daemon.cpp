#include "por/daemon.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "por/bytes.hpp"
#include "por/client.hpp"
#include "por/statefile.hpp"
#include "por/wire.hpp"

namespace por {

namespace {
constexpr char kMetaMagic[4] = {'P', 'O', 'R', 'S'};

StoreConfig validated(const StoreConfig& cfg) {
  const bool priv = cfg.mode != Mode::Public;
  if (cfg.n_bytes == 0) throw ProtocolError("empty store");
  if (cfg.chunk_bytes !=
      (priv ? kPrivateChunkBytes : kPublicChunkBytes))
    throw ProtocolError("chunk size does not match mode");
  if (cfg.block_bytes != (priv ? kPrivateBlockBytes : kPublicBlockBytes))
    throw ProtocolError("block size does not match mode");
  if (cfg.elem_bytes != (priv ? kPrivateElemBytes : kPublicElemBytes))
    throw ProtocolError("element size does not match mode");
  if (cfg.m == 0 || cfg.n == 0 || cfg.m * cfg.n < cfg.stored_cells())
    throw ProtocolError("matrix does not cover the data");
  const bool has_control = cfg.mode != Mode::PrivateLocal;
  if (has_control !=
      (cfg.control_bytes != 0 && cfg.control_record_bytes != 0))
    throw ProtocolError("control geometry does not match mode");
  if (has_control && cfg.control_bytes != cfg.control_record_bytes * cfg.n)
    throw ProtocolError("control store size mismatch");
  return cfg;
}
}  // namespace

void save_store_meta(const StoreConfig& cfg, const std::string& path) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kMetaMagic), 4});
  w.u8(1);
  w.u8(static_cast<std::uint8_t>(cfg.mode));
  w.u64(cfg.n_bytes);
  w.u64(cfg.m);
  w.u64(cfg.n);
  w.u32(static_cast<std::uint32_t>(cfg.chunk_bytes));
  w.u32(static_cast<std::uint32_t>(cfg.block_bytes));
  w.u32(static_cast<std::uint32_t>(cfg.elem_bytes));
  w.u64(cfg.control_bytes);
  w.u64(cfg.control_record_bytes);
  atomic_write(path, w.take());
}

StoreConfig load_store_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw TransportError(TransportError::Code::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>{});
  ByteCursor c(bytes);
  auto magic = c.take(4);
  if (std::memcmp(magic.data(), kMetaMagic, 4) != 0)
    throw ProtocolError("not a store metadata file");
  if (c.u8() != 1) throw ProtocolError("unsupported metadata version");
  StoreConfig cfg;
  cfg.mode = static_cast<Mode>(c.u8());
  cfg.n_bytes = c.u64();
  cfg.m = c.u64();
  cfg.n = c.u64();
  cfg.chunk_bytes = c.u32();
  cfg.block_bytes = c.u32();
  cfg.elem_bytes = c.u32();
  cfg.control_bytes = c.u64();
  cfg.control_record_bytes = c.u64();
  if (!c.done()) throw ProtocolError("trailing bytes in metadata");
  return validated(cfg);
}

// One in-flight init per connection.
struct Daemon::InitStaging {
  StoreConfig cfg;
  std::unique_ptr<ByteStore> data;
  std::unique_ptr<ByteStore> control;
  std::vector<Digest> data_leaves;
  std::uint64_t data_received = 0;
  std::uint64_t control_received = 0;
  std::uint64_t hashed_until = 0;  // block-aligned leaf cursor

  void hash_available() {
    auto view = data->view();
    while (hashed_until + cfg.block_bytes <= data_received) {
      data_leaves.push_back(merkle_leaf_digest(
          view.subspan(hashed_until, cfg.block_bytes), cfg.block_bytes));
      hashed_until += cfg.block_bytes;
    }
  }
};

Daemon::Daemon(DaemonConfig cfg)
    : cfg_(std::move(cfg)), audit_threads_(cfg_.audit_threads) {
  if (!cfg_.data_dir.empty()) {
    std::filesystem::create_directories(cfg_.data_dir);
    load_existing();
  }
}

Daemon::~Daemon() { stop(); }

void Daemon::load_existing() {
  namespace fs = std::filesystem;
  const fs::path dir(cfg_.data_dir);
  if (!fs::exists(dir / "meta.bin")) return;
  StoreConfig cfg = load_store_meta((dir / "meta.bin").string());
  auto data = FileStore::open((dir / "data.bin").string());
  std::unique_ptr<ByteStore> control;
  if (cfg.control_bytes)
    control = FileStore::open((dir / "control.bin").string());
  auto store = std::make_shared<ServerStore>(cfg, std::move(data),
                                             std::move(control));
  store->build_trees();
  std::lock_guard lock(store_mu_);
  store_ = std::move(store);
}

bool Daemon::has_store() const {
  std::lock_guard lock(store_mu_);
  return store_ != nullptr;
}

std::shared_ptr<ServerStore> Daemon::store() { return active(); }

std::shared_ptr<ServerStore> Daemon::active() const {
  std::lock_guard lock(store_mu_);
  return store_;
}

std::uint16_t Daemon::start(std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0)
    throw TransportError(TransportError::Code::Io,
                         std::string("socket: ") + std::strerror(errno));
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
      0)
    throw TransportError(TransportError::Code::Io,
                         std::string("bind: ") + std::strerror(errno));
  if (listen(listen_fd_, 64) != 0)
    throw TransportError(TransportError::Code::Io,
                         std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof(addr);
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);

  stopping_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
  return ntohs(addr.sin_port);
}

void Daemon::stop() {
  if (listen_fd_ < 0) return;
  stopping_ = true;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(sessions_mu_);
    for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  std::vector<std::thread> take;
  {
    std::lock_guard lock(sessions_mu_);
    take.swap(sessions_);
  }
  for (auto& t : take)
    if (t.joinable()) t.join();
  auto st = active();
  if (st) st->flush();
}

void Daemon::accept_loop() {
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      if (errno == EINTR) continue;
      break;
    }
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(sessions_mu_);
    session_fds_.push_back(fd);
    sessions_.emplace_back([this, fd] { session(fd); });
  }
}

void Daemon::session(int fd) {
  using namespace wire;
  const int timeout = cfg_.session_timeout_ms;
  std::unique_ptr<InitStaging> staging;
  bool saw_hello = false;

  auto send = [&](MsgType type, std::span<const std::uint8_t> payload) {
    auto frame = frame_encode(type, payload);
    write_all(fd, frame, timeout);
  };
  auto send_error = [&](std::uint64_t corr, ErrCode code,
                        const std::string& detail) {
    Error e{corr, code, detail};
    auto payload = encode_error(e);
    try {
      send(MsgType::kError, payload);
    } catch (...) {
    }
  };

  try {
    for (;;) {
      auto raw = read_frame_raw(fd, timeout);
      if (!raw) break;  // client closed
      FrameView f = frame_decode(*raw);

      if (!saw_hello) {
        if (f.type != MsgType::kHello) throw ProtocolError("expected hello");
        Hello h = decode_hello(f.payload);
        if (h.version < 1) throw ProtocolError("unsupported version");
        Hello resp{h.corr, kVersion};
        send(MsgType::kHelloResp, encode_hello(resp));
        saw_hello = true;
        continue;
      }

      std::uint64_t corr = 0;
      try {
        switch (f.type) {
          case MsgType::kInitBegin: {
            InitBegin m = decode_init_begin(f.payload);
            corr = m.corr;
            StoreConfig cfg = validated(m.config);
            staging = std::make_unique<InitStaging>();
            staging->cfg = cfg;
            if (cfg_.data_dir.empty()) {
              staging->data = std::make_unique<MemStore>(cfg.n_bytes);
              if (cfg.control_bytes)
                staging->control =
                    std::make_unique<MemStore>(cfg.control_bytes);
            } else {
              namespace fs = std::filesystem;
              const fs::path dir(cfg_.data_dir);
              staging->data = FileStore::open((dir / "data.bin").string(),
                                              cfg.n_bytes);
              if (cfg.control_bytes)
                staging->control = FileStore::open(
                    (dir / "control.bin").string(), cfg.control_bytes);
            }
            send(MsgType::kInitBeginResp, encode_corr_only(corr));
            break;
          }
          case MsgType::kInitData: {
            InitChunk m = decode_init_chunk(f.payload);
            corr = m.corr;
            if (!staging) throw ProtocolError("init not begun");
            if (m.offset != staging->data_received)
              throw ProtocolError("data must stream sequentially");
            if (m.offset + m.bytes.size() > staging->cfg.n_bytes)
              throw ProtocolError("data overflow");
            staging->data->write(m.offset, m.bytes);
            staging->data_received += m.bytes.size();
            staging->hash_available();
            send(MsgType::kInitDataResp, encode_corr_only(corr));
            break;
          }
          case MsgType::kInitAux: {
            InitChunk m = decode_init_chunk(f.payload);
            corr = m.corr;
            if (!staging || !staging->control)
              throw ProtocolError("no control store in this mode");
            if (m.offset != staging->control_received)
              throw ProtocolError("control must stream sequentially");
            if (m.offset + m.bytes.size() > staging->cfg.control_bytes)
              throw ProtocolError("control overflow");
            staging->control->write(m.offset, m.bytes);
            staging->control_received += m.bytes.size();
            send(MsgType::kInitAuxResp, encode_corr_only(corr));
            break;
          }
          case MsgType::kInitCommit: {
            corr = decode_corr_only(f.payload);
            if (!staging) throw ProtocolError("init not begun");
            if (staging->data_received != staging->cfg.n_bytes)
              throw ProtocolError("data incomplete at commit");
            if (staging->control &&
                staging->control_received != staging->cfg.control_bytes)
              throw ProtocolError("control incomplete at commit");
            // Final partial block, then adopt the streamed leaves.
            auto view = staging->data->view();
            if (staging->hashed_until < staging->cfg.n_bytes)
              staging->data_leaves.push_back(merkle_leaf_digest(
                  view.subspan(staging->hashed_until),
                  staging->cfg.block_bytes));
            std::vector<Digest> control_leaves;
            if (staging->control) {
              auto cv = staging->control->view();
              for (std::size_t off = 0; off < cv.size();
                   off += staging->cfg.block_bytes)
                control_leaves.push_back(merkle_leaf_digest(
                    cv.subspan(off, std::min(staging->cfg.block_bytes,
                                             cv.size() - off)),
                    staging->cfg.block_bytes));
            }
            auto store = std::make_shared<ServerStore>(
                staging->cfg, std::move(staging->data),
                std::move(staging->control));
            store->set_trees(std::move(staging->data_leaves),
                             std::move(control_leaves));
            if (!cfg_.data_dir.empty())
              save_store_meta(
                  staging->cfg,
                  (std::filesystem::path(cfg_.data_dir) / "meta.bin")
                      .string());

            InitCommitResp resp;
            resp.corr = corr;
            resp.root_data = store->root(TreeId::Data);
            if (store->config().control_bytes)
              resp.root_control = store->root(TreeId::Control);
            {
              std::lock_guard lock(store_mu_);
              store_ = std::move(store);
            }
            staging.reset();
            send(MsgType::kInitCommitResp, encode_init_commit_resp(resp));
            break;
          }
          case MsgType::kReadReq: {
            ReadReq m = decode_read_req(f.payload);
            corr = m.corr;
            auto st = active();
            if (!st) {
              send_error(corr, ErrCode::kState, "no store");
              break;
            }
            auto addr = cell_address(st->config(), m.tree, m.i, m.j);
            auto out = st->read_range(m.tree, addr.offset, addr.length);
            send(MsgType::kReadResp, encode_blocks_resp(corr, out));
            break;
          }
          case MsgType::kWriteReq: {
            WriteReq m = decode_write_req(f.payload);
            corr = m.corr;
            auto st = active();
            if (!st) {
              send_error(corr, ErrCode::kState, "no store");
              break;
            }
            auto addr = cell_address(st->config(), m.tree, m.i, m.j);
            if (m.value.size() != addr.length)
              throw std::out_of_range("value length does not match cell");
            auto out = st->write_range(m.tree, addr.offset, m.value);
            st->flush();
            send(MsgType::kWriteResp, encode_blocks_resp(corr, out));
            break;
          }
          case MsgType::kAuditChallenge: {
            AuditChallenge m = decode_audit_challenge(f.payload);
            corr = m.corr;
            auto st = active();
            if (!st) {
              send_error(corr, ErrCode::kState, "no store");
              break;
            }
            if (m.rho.size() != st->config().elem_bytes)
              throw ProtocolError("challenge width does not match store");
            auto y = st->audit_response(m.rho, audit_threads_.load());
            std::optional<std::vector<std::uint8_t>> control;
            MerklePath path;
            if (st->config().control_bytes) {
              auto snap = st->control_snapshot();
              control = std::move(snap.data);
              path = std::move(snap.path);
            }
            send(MsgType::kAuditResp,
                 encode_audit_resp(corr, y, control, path));
            break;
          }
          default:
            throw ProtocolError("unexpected message type");
        }
      } catch (const std::out_of_range& e) {
        send_error(corr, ErrCode::kRange, e.what());
      } catch (const std::invalid_argument& e) {
        send_error(corr, ErrCode::kRange, e.what());
      } catch (const TransportError&) {
        throw;
      }
      // ProtocolError propagates: the connection is dropped.
    }
  } catch (const ProtocolError& e) {
    send_error(0, ErrCode::kProtocol, e.what());
  } catch (const std::exception&) {
    // connection-level failure; drop the session
  }
  ::close(fd);
}

}  // namespace por
