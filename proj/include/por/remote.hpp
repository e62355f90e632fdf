#pragma once

#include <cstdint>
#include <string>

#include "por/client.hpp"
#include "por/wire.hpp"

namespace por {

/// ServerApi over a TCP connection: one request/response exchange per call,
/// correlation-id checked, with distinct error codes for refused, timed-out
/// and closed connections. Counts wire bytes in both directions.
class RemoteServer final : public ServerApi {
 public:
  explicit RemoteServer(const std::string& endpoint, int timeout_ms = 30'000);
  ~RemoteServer() override;

  RemoteServer(const RemoteServer&) = delete;
  RemoteServer& operator=(const RemoteServer&) = delete;

  void init_begin(const StoreConfig& cfg) override;
  void init_data(std::uint64_t offset,
                 std::span<const std::uint8_t> bytes) override;
  void init_aux(std::uint64_t offset,
                std::span<const std::uint8_t> bytes) override;
  InitRoots init_commit() override;
  BlocksOut read_cell(TreeId tree, std::uint64_t i, std::uint64_t j) override;
  BlocksOut write_cell(TreeId tree, std::uint64_t i, std::uint64_t j,
                       std::span<const std::uint8_t> value) override;
  AuditOut audit(std::span<const std::uint8_t> rho) override;

  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  void reset_counters() {
    bytes_sent_ = 0;
    bytes_received_ = 0;
  }

  /// host:port, host defaulting to localhost and port to the default port.
  static std::pair<std::string, std::uint16_t> parse_endpoint(
      const std::string& endpoint);

 private:
  void send_frame(wire::MsgType type, std::span<const std::uint8_t> payload);
  std::vector<std::uint8_t> await(wire::MsgType expect, std::uint64_t corr);
  void drain_init_window(std::size_t max_outstanding);
  void push_init_chunks(wire::MsgType type, std::uint64_t offset,
                        std::span<const std::uint8_t> bytes);

  int fd_ = -1;
  int timeout_ms_;
  std::uint64_t next_corr_ = 1;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::vector<std::pair<wire::MsgType, std::uint64_t>> init_window_;
};

}  // namespace por
