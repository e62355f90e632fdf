#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "por/sha.hpp"

namespace por {

/// Inclusion proof for a contiguous block range: the left boundary's left
/// siblings and the right boundary's right siblings, level by level.
struct MerklePath {
  enum Side : std::uint8_t { kLeft = 0, kRight = 1 };
  struct Uncle {
    std::uint8_t side;
    Digest digest;
  };
  std::vector<Uncle> uncles;

  /// Wire form: count (u16 big-endian), then side byte + 28-byte digest each.
  std::vector<std::uint8_t> encode() const;
  static MerklePath decode(std::span<const std::uint8_t> in,
                           std::size_t* consumed = nullptr);
};

/// Leaf hash: H(0x00 || block), the block zero-padded to block_bytes.
/// Internal hash: H(0x01 || left || right). A node without a sibling is
/// promoted to the parent level unchanged, so the tree stores exactly
/// 2*leaves - 1 digests.
Digest merkle_leaf_digest(std::span<const std::uint8_t> stored,
                          std::size_t block_bytes);

Digest merkle_combine(const Digest& left, const Digest& right);

/// Leaf digests for blocks [lo, hi] given their raw stored bytes; only the
/// store's final block may be short.
std::vector<Digest> merkle_leaf_range(std::span<const std::uint8_t> data,
                                      std::uint64_t lo, std::uint64_t hi,
                                      std::size_t block_bytes,
                                      std::uint64_t store_size);

/// Recompute the root from covered leaves plus uncles. Throws ProtocolError
/// when the path shape does not match the range.
Digest merkle_root_from_path(std::uint64_t leaf_count, std::uint64_t lo,
                             std::uint64_t hi,
                             std::span<const Digest> leaves,
                             const MerklePath& path);

/// Accept/reject verdict; any malformed input rejects rather than throwing.
bool merkle_verify(const Digest& root, std::uint64_t leaf_count,
                   std::uint64_t lo, std::uint64_t hi,
                   std::span<const Digest> leaves, const MerklePath& path);

class MerkleTree {
 public:
  MerkleTree() = default;

  static MerkleTree from_data(std::span<const std::uint8_t> data,
                              std::size_t block_bytes);
  static MerkleTree from_leaves(std::vector<Digest> leaves);

  std::uint64_t leaf_count() const {
    return levels_.empty() ? 0 : levels_[0].size();
  }
  Digest root() const;

  MerklePath prove(std::uint64_t lo, std::uint64_t hi) const;

  /// Replace leaves [lo, lo + new_leaves.size()) and recompute the hashes on
  /// their root paths; everything else is untouched.
  void update_leaves(std::uint64_t lo, std::span<const Digest> new_leaves);

  /// Total digests held; bounded by 2 * leaf_count.
  std::size_t digest_count() const;

  const Digest& leaf(std::uint64_t i) const { return levels_[0][i]; }

 private:
  // levels_[0] holds all leaves; higher levels hold only combined nodes, so
  // an unpaired node is never duplicated.
  std::vector<std::vector<Digest>> levels_;

  std::uint64_t logical_size(std::size_t level) const;
  const Digest& node(std::size_t level, std::uint64_t idx) const;
  void build_upper();
};

}  // namespace por
