#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

#include "por/bytestore.hpp"
#include "por/field.hpp"
#include "por/merkle.hpp"
#include "por/params.hpp"

namespace por {

enum class TreeId : std::uint8_t { Data = 0, Control = 1 };

/// Geometry the server needs to serve a store; everything here travels in
/// INIT_BEGIN, so the server never derives parameters itself.
struct StoreConfig {
  Mode mode = Mode::PrivateLocal;
  std::uint64_t n_bytes = 0;
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  std::size_t chunk_bytes = kPrivateChunkBytes;
  std::size_t block_bytes = kPrivateBlockBytes;
  std::size_t elem_bytes = kPrivateElemBytes;
  std::uint64_t control_bytes = 0;         // 0 when nothing is externalized
  std::uint64_t control_record_bytes = 0;  // one column's record

  static StoreConfig from_params(const PorParams& p);

  std::uint64_t data_blocks() const {
    return (n_bytes + block_bytes - 1) / block_bytes;
  }
  std::uint64_t control_blocks() const {
    return control_bytes ? (control_bytes + block_bytes - 1) / block_bytes : 0;
  }
  std::uint64_t stored_cells() const {
    return (n_bytes + chunk_bytes - 1) / chunk_bytes;
  }
  std::uint64_t cell_offset(std::uint64_t i, std::uint64_t j) const {
    return (i * n + j) * chunk_bytes;
  }
  std::uint64_t column_offset(std::uint64_t j) const {
    return j * control_record_bytes;
  }
};

struct BlocksOut {
  std::uint64_t first_block = 0;
  std::uint64_t block_count = 0;
  std::vector<std::uint8_t> data;  // raw stored bytes, short only at the end
  MerklePath path;
};

/// Server half of the protocol: the unencoded data file, its hash tree, and
/// (for the externalized and public modes) the control store with its own
/// tree. Reads and audits share the store; writes are exclusive, so an audit
/// always sees a consistent snapshot.
class ServerStore {
 public:
  ServerStore(StoreConfig cfg, std::unique_ptr<ByteStore> data,
              std::unique_ptr<ByteStore> control);

  /// Full O(N) hashing pass; used when trees were not built incrementally.
  void build_trees();
  /// Adopt leaf digests computed while streaming the data in.
  void set_trees(std::vector<Digest> data_leaves,
                 std::vector<Digest> control_leaves);

  const StoreConfig& config() const { return cfg_; }
  Digest root(TreeId tree) const;

  /// Blocks covering [byte_off, byte_off + byte_len) plus their proof.
  BlocksOut read_range(TreeId tree, std::uint64_t byte_off,
                       std::uint64_t byte_len) const;

  /// Returns the pre-image of the affected blocks with proof, then applies
  /// the write and refreshes the tree.
  BlocksOut write_range(TreeId tree, std::uint64_t byte_off,
                        std::span<const std::uint8_t> new_bytes);

  /// y = M x for x = powers(rho, n); rho arrives serialized in the mode's
  /// element width. The heavy loop of every audit.
  std::vector<std::uint8_t> audit_response(
      std::span<const std::uint8_t> rho_bytes, unsigned threads = 1) const;

  /// Whole control store plus (empty) proof, served with each audit in the
  /// externalized and public modes.
  BlocksOut control_snapshot() const;

  /// Test/adversary hook: mutate stored bytes without touching any tree.
  void corrupt_raw(TreeId tree, std::uint64_t off,
                   std::span<const std::uint8_t> bytes);

  void flush();

 private:
  const ByteStore& store(TreeId tree) const;
  ByteStore& store(TreeId tree);
  const MerkleTree& tree(TreeId tree) const;
  MerkleTree& tree(TreeId tree);
  BlocksOut read_range_locked(TreeId tree, std::uint64_t byte_off,
                              std::uint64_t byte_len) const;

  StoreConfig cfg_;
  std::unique_ptr<ByteStore> data_;
  std::unique_ptr<ByteStore> control_;
  MerkleTree tree_data_;
  MerkleTree tree_control_;
  mutable std::shared_mutex mu_;
};

}  // namespace por
