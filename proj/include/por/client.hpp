#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "por/aead.hpp"
#include "por/field.hpp"
#include "por/merkle.hpp"
#include "por/params.hpp"
#include "por/rng.hpp"
#include "por/server_store.hpp"

namespace por {

/// One completed audit: the challenge element, the serialized response
/// vector, and the verdict. The challenge vector itself is reproducible
/// from rho.
struct AuditTranscript {
  std::vector<std::uint8_t> rho;  // one element, mode width
  std::vector<std::uint8_t> y;    // m elements
  bool accepted = false;
};

/// Everything a client can ask of a server, independent of transport. The
/// in-process implementation backs tests and the harness; the remote one
/// speaks the wire protocol.
class ServerApi {
 public:
  virtual ~ServerApi() = default;

  virtual void init_begin(const StoreConfig& cfg) = 0;
  virtual void init_data(std::uint64_t offset,
                         std::span<const std::uint8_t> bytes) = 0;
  virtual void init_aux(std::uint64_t offset,
                        std::span<const std::uint8_t> bytes) = 0;
  struct InitRoots {
    Digest data{};
    std::optional<Digest> control;
  };
  virtual InitRoots init_commit() = 0;

  /// Blocks covering cell (i, j) of the data matrix, or column j of the
  /// control store when tree == Control (i is ignored there).
  virtual BlocksOut read_cell(TreeId tree, std::uint64_t i,
                              std::uint64_t j) = 0;
  /// Same addressing; returns the pre-image blocks, then the server applies
  /// the write.
  virtual BlocksOut write_cell(TreeId tree, std::uint64_t i, std::uint64_t j,
                               std::span<const std::uint8_t> value) = 0;

  struct AuditOut {
    std::vector<std::uint8_t> y;
    std::optional<std::vector<std::uint8_t>> control;  // extern/public modes
    MerklePath control_path;
  };
  virtual AuditOut audit(std::span<const std::uint8_t> rho) = 0;
};

/// Direct in-process binding to a ServerStore.
class LocalServer final : public ServerApi {
 public:
  explicit LocalServer(unsigned audit_threads = 1)
      : audit_threads_(audit_threads) {}
  explicit LocalServer(std::unique_ptr<ServerStore> store,
                       unsigned audit_threads = 1)
      : store_(std::move(store)), audit_threads_(audit_threads) {}

  ServerStore* store() { return store_.get(); }

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

 private:
  std::unique_ptr<ServerStore> store_;
  std::optional<StoreConfig> pending_;
  std::vector<std::uint8_t> staged_data_;
  std::vector<std::uint8_t> staged_control_;
  unsigned audit_threads_;
};

/// Maps (tree, i, j) cell addressing onto store byte ranges; shared by the
/// in-process server and the daemon.
struct CellAddress {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};
CellAddress cell_address(const StoreConfig& cfg, TreeId tree, std::uint64_t i,
                         std::uint64_t j);

/// Served blocks that passed verification against a trusted root.
struct VerifiedBlocks {
  std::uint64_t first_byte = 0;
  std::vector<std::uint8_t> data;
};

/// Checks a served block range against the root; throws IntegrityError on
/// any mismatch or malformed response.
VerifiedBlocks verify_served_blocks(const StoreConfig& cfg, TreeId tree,
                                    const BlocksOut& out, const Digest& root);

/// Root after replacing the covered blocks with patched bytes, computed from
/// the (already verified) path alone.
Digest root_after_patch(const StoreConfig& cfg, TreeId tree,
                        const BlocksOut& old,
                        std::span<const std::uint8_t> patched);

/// Verify a full-store snapshot (as served with audits) against a root.
bool verify_store_snapshot(const StoreConfig& cfg, TreeId tree,
                           std::span<const std::uint8_t> bytes,
                           const MerklePath& path, const Digest& root);

/// Sequential input for init streaming.
class ByteReader {
 public:
  virtual ~ByteReader() = default;
  /// Fills as much of out as possible; 0 on end of input.
  virtual std::size_t read(std::span<std::uint8_t> out) = 0;
};

class MemReader final : public ByteReader {
 public:
  explicit MemReader(std::span<const std::uint8_t> data) : data_(data) {}
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

class FileReader final : public ByteReader {
 public:
  explicit FileReader(const std::string& path);
  ~FileReader() override;
  std::size_t read(std::span<std::uint8_t> out) override;

 private:
  int fd_;
};

/// Private-mode client state: the seeds, the trusted roots, and either the
/// control matrix itself or the key that unlocks its externalized form.
struct ClientState {
  PorParams params;
  std::vector<Fp57> seeds;
  Digest root_data{};
  Matrix<Fp57> control;  // t x n, local strategy only
  AeadKey key{};         // externalized strategy only
  Digest root_control{};
};

class PorClient {
 public:
  PorClient(ClientState state, ServerApi& server)
      : st_(std::move(state)), server_(server) {}

  /// Runs the whole init: samples seeds, streams the data to the server
  /// while folding the control matrix and the leaf hashes in one pass.
  static PorClient init(const PorParams& params, ByteReader& data, Rng& rng,
                        ServerApi& server);

  const ClientState& state() const { return st_; }

  /// Verified byte-range read; throws IntegrityError on any proof failure.
  std::vector<std::uint8_t> read_bytes(std::uint64_t offset,
                                       std::uint64_t length);
  /// Verified read of one matrix cell (zero-based row/column).
  Fp57 read_cell(std::uint64_t i, std::uint64_t j);

  /// Verified byte-range write, decomposed into per-cell updates.
  void write_bytes(std::uint64_t offset,
                   std::span<const std::uint8_t> bytes);
  void write_cell(std::uint64_t i, std::uint64_t j, Fp57 value);

  AuditTranscript audit(Rng& rng);

 private:
  std::vector<Fp57> fetch_control_column(std::uint64_t j,
                                         std::vector<std::uint8_t>* record);
  Matrix<Fp57> decrypt_control(std::span<const std::uint8_t> bytes) const;
  void apply_cell_write(std::uint64_t i, std::uint64_t j, Fp57 value);

  ClientState st_;
  ServerApi& server_;
};

}  // namespace por
