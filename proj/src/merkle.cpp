#include "por/merkle.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "por/errors.hpp"

namespace por {

namespace {
constexpr std::uint8_t kLeafTag = 0x00;
constexpr std::uint8_t kNodeTag = 0x01;
const std::uint8_t kZeros[4096] = {0};
}  // namespace

std::vector<std::uint8_t> MerklePath::encode() const {
  if (uncles.size() > 0xFFFF) throw ProtocolError("path too long");
  std::vector<std::uint8_t> out;
  out.reserve(2 + uncles.size() * (1 + kDigestBytes));
  out.push_back(static_cast<std::uint8_t>(uncles.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(uncles.size() & 0xFF));
  for (const Uncle& u : uncles) {
    out.push_back(u.side);
    out.insert(out.end(), u.digest.begin(), u.digest.end());
  }
  return out;
}

MerklePath MerklePath::decode(std::span<const std::uint8_t> in,
                              std::size_t* consumed) {
  if (in.size() < 2) throw ProtocolError("truncated path");
  std::size_t count = (static_cast<std::size_t>(in[0]) << 8) | in[1];
  std::size_t need = 2 + count * (1 + kDigestBytes);
  if (in.size() < need) throw ProtocolError("truncated path");
  MerklePath path;
  path.uncles.resize(count);
  std::size_t off = 2;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint8_t side = in[off++];
    if (side > 1) throw ProtocolError("bad uncle side marker");
    path.uncles[i].side = side;
    std::memcpy(path.uncles[i].digest.data(), in.data() + off, kDigestBytes);
    off += kDigestBytes;
  }
  if (consumed) *consumed = need;
  return path;
}

Digest merkle_leaf_digest(std::span<const std::uint8_t> stored,
                          std::size_t block_bytes) {
  if (stored.size() > block_bytes)
    throw std::invalid_argument("block larger than block size");
  Sha512_224 h;
  h.update_byte(kLeafTag);
  h.update(stored);
  std::size_t pad = block_bytes - stored.size();
  while (pad > 0) {
    std::size_t take = std::min(pad, sizeof(kZeros));
    h.update({kZeros, take});
    pad -= take;
  }
  return h.finish();
}

Digest merkle_combine(const Digest& left, const Digest& right) {
  Sha512_224 h;
  h.update_byte(kNodeTag);
  h.update(left);
  h.update(right);
  return h.finish();
}

std::vector<Digest> merkle_leaf_range(std::span<const std::uint8_t> data,
                                      std::uint64_t lo, std::uint64_t hi,
                                      std::size_t block_bytes,
                                      std::uint64_t store_size) {
  if (hi < lo) throw std::invalid_argument("empty block range");
  std::uint64_t expect = 0;
  for (std::uint64_t b = lo; b <= hi; ++b) {
    std::uint64_t start = b * block_bytes;
    if (start >= store_size) throw std::invalid_argument("range out of bounds");
    expect += std::min<std::uint64_t>(block_bytes, store_size - start);
  }
  if (data.size() != expect)
    throw std::invalid_argument("block data length mismatch");

  std::vector<Digest> leaves;
  leaves.reserve(hi - lo + 1);
  std::size_t off = 0;
  for (std::uint64_t b = lo; b <= hi; ++b) {
    std::uint64_t start = b * block_bytes;
    std::size_t len = std::min<std::uint64_t>(block_bytes, store_size - start);
    leaves.push_back(merkle_leaf_digest(data.subspan(off, len), block_bytes));
    off += len;
  }
  return leaves;
}

Digest merkle_root_from_path(std::uint64_t leaf_count, std::uint64_t lo,
                             std::uint64_t hi,
                             std::span<const Digest> leaves,
                             const MerklePath& path) {
  if (leaf_count == 0 || lo > hi || hi >= leaf_count)
    throw ProtocolError("bad block range");
  if (leaves.size() != hi - lo + 1)
    throw ProtocolError("leaf count does not match range");

  std::vector<Digest> cur(leaves.begin(), leaves.end());
  std::uint64_t a = lo, b = hi, size = leaf_count;
  std::size_t pi = 0;

  while (size > 1) {
    if (a & 1) {
      if (pi >= path.uncles.size() ||
          path.uncles[pi].side != MerklePath::kLeft)
        throw ProtocolError("path shape mismatch (left uncle)");
      cur.insert(cur.begin(), path.uncles[pi++].digest);
      --a;
    }
    if (!(b & 1) && b + 1 < size) {
      if (pi >= path.uncles.size() ||
          path.uncles[pi].side != MerklePath::kRight)
        throw ProtocolError("path shape mismatch (right uncle)");
      cur.push_back(path.uncles[pi++].digest);
      ++b;
    }
    // a is now even; b is odd unless it is a promoted final node.
    std::vector<Digest> next;
    next.reserve((cur.size() + 1) / 2);
    for (std::size_t i = 0; i < cur.size(); i += 2) {
      if (i + 1 < cur.size())
        next.push_back(merkle_combine(cur[i], cur[i + 1]));
      else
        next.push_back(cur[i]);
    }
    cur = std::move(next);
    a >>= 1;
    b >>= 1;
    size = (size + 1) >> 1;
  }
  if (pi != path.uncles.size()) throw ProtocolError("trailing path entries");
  return cur[0];
}

bool merkle_verify(const Digest& root, std::uint64_t leaf_count,
                   std::uint64_t lo, std::uint64_t hi,
                   std::span<const Digest> leaves, const MerklePath& path) {
  try {
    return merkle_root_from_path(leaf_count, lo, hi, leaves, path) == root;
  } catch (const ProtocolError&) {
    return false;
  }
}

MerkleTree MerkleTree::from_data(std::span<const std::uint8_t> data,
                                 std::size_t block_bytes) {
  if (data.empty()) throw std::invalid_argument("empty data");
  if (block_bytes == 0) throw std::invalid_argument("zero block size");
  std::vector<Digest> leaves;
  leaves.reserve((data.size() + block_bytes - 1) / block_bytes);
  for (std::size_t off = 0; off < data.size(); off += block_bytes) {
    std::size_t len = std::min(block_bytes, data.size() - off);
    leaves.push_back(merkle_leaf_digest(data.subspan(off, len), block_bytes));
  }
  return from_leaves(std::move(leaves));
}

MerkleTree MerkleTree::from_leaves(std::vector<Digest> leaves) {
  if (leaves.empty()) throw std::invalid_argument("empty tree");
  MerkleTree t;
  t.levels_.push_back(std::move(leaves));
  t.build_upper();
  return t;
}

void MerkleTree::build_upper() {
  levels_.resize(1);
  std::uint64_t size = levels_[0].size();
  std::size_t level = 0;
  while (size > 1) {
    std::vector<Digest> up(size / 2);
    for (std::uint64_t j = 0; j < size / 2; ++j)
      up[j] = merkle_combine(node(level, 2 * j), node(level, 2 * j + 1));
    levels_.push_back(std::move(up));
    size = (size + 1) >> 1;
    ++level;
  }
}

std::uint64_t MerkleTree::logical_size(std::size_t level) const {
  std::uint64_t size = levels_[0].size();
  for (std::size_t k = 0; k < level; ++k) size = (size + 1) >> 1;
  return size;
}

const Digest& MerkleTree::node(std::size_t level, std::uint64_t idx) const {
  // A promoted node is stored only at the level where it was combined last;
  // walk down through the alias chain.
  while (level > 0 && idx >= levels_[level].size()) {
    --level;
    idx = logical_size(level) - 1;
  }
  return levels_[level][idx];
}

Digest MerkleTree::root() const {
  if (levels_.empty()) throw std::logic_error("empty tree");
  return node(levels_.size() - 1, 0);
}

MerklePath MerkleTree::prove(std::uint64_t lo, std::uint64_t hi) const {
  std::uint64_t leaf_total = leaf_count();
  if (lo > hi || hi >= leaf_total)
    throw std::out_of_range("block range out of bounds");
  MerklePath path;
  std::uint64_t a = lo, b = hi, size = leaf_total;
  std::size_t level = 0;
  while (size > 1) {
    if (a & 1)
      path.uncles.push_back({MerklePath::kLeft, node(level, a - 1)});
    if (!(b & 1) && b + 1 < size)
      path.uncles.push_back({MerklePath::kRight, node(level, b + 1)});
    a >>= 1;
    b >>= 1;
    size = (size + 1) >> 1;
    ++level;
  }
  return path;
}

void MerkleTree::update_leaves(std::uint64_t lo,
                               std::span<const Digest> new_leaves) {
  std::uint64_t hi = lo + new_leaves.size() - 1;
  if (new_leaves.empty() || hi >= leaf_count())
    throw std::out_of_range("block range out of bounds");
  std::copy(new_leaves.begin(), new_leaves.end(), levels_[0].begin() + lo);

  std::uint64_t a = lo, b = hi;
  for (std::size_t level = 0; level + 1 < levels_.size(); ++level) {
    a >>= 1;
    b >>= 1;
    std::uint64_t stored = levels_[level + 1].size();
    for (std::uint64_t j = a; j <= b && j < stored; ++j)
      levels_[level + 1][j] =
          merkle_combine(node(level, 2 * j), node(level, 2 * j + 1));
  }
}

std::size_t MerkleTree::digest_count() const {
  std::size_t total = 0;
  for (const auto& level : levels_) total += level.size();
  return total;
}

}  // namespace por
