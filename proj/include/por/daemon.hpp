#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "por/server_store.hpp"

namespace por {

struct DaemonConfig {
  std::string data_dir;        // empty: hold stores in memory
  unsigned audit_threads = 1;
  int session_timeout_ms = 60'000;
};

/// The storage server: accepts connections, speaks the wire protocol, and
/// serves the active store. One session thread per connection; a protocol
/// violation drops that connection and nothing else.
class Daemon {
 public:
  explicit Daemon(DaemonConfig cfg);
  ~Daemon();

  Daemon(const Daemon&) = delete;
  Daemon& operator=(const Daemon&) = delete;

  /// Binds and starts accepting; port 0 picks an ephemeral port. Returns the
  /// bound port.
  std::uint16_t start(std::uint16_t port);
  void stop();

  void set_audit_threads(unsigned threads) { audit_threads_ = threads; }

  bool has_store() const;
  /// Adversary/test hook into the live store.
  std::shared_ptr<ServerStore> store();

 private:
  struct InitStaging;

  void accept_loop();
  void session(int fd);
  void load_existing();
  std::shared_ptr<ServerStore> active() const;

  DaemonConfig cfg_;
  std::atomic<unsigned> audit_threads_;
  std::shared_ptr<ServerStore> store_;
  mutable std::mutex store_mu_;

  int listen_fd_ = -1;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
  std::vector<std::thread> sessions_;
  std::vector<int> session_fds_;
  std::mutex sessions_mu_;
};

/// On-disk store metadata kept beside data.bin/control.bin.
void save_store_meta(const StoreConfig& cfg, const std::string& path);
StoreConfig load_store_meta(const std::string& path);

}  // namespace por
