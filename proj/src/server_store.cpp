#include "por/server_store.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "por/aead.hpp"
#include "por/errors.hpp"
#include "por/field.hpp"
#include "por/matrix_view.hpp"
#include "por/scalar.hpp"

namespace por {

StoreConfig StoreConfig::from_params(const PorParams& p) {
  StoreConfig c;
  c.mode = p.mode;
  c.n_bytes = p.n_bytes;
  c.m = p.m;
  c.n = p.n;
  c.chunk_bytes = p.chunk_bytes;
  c.block_bytes = p.block_bytes;
  c.elem_bytes = p.elem_bytes;
  switch (p.mode) {
    case Mode::PrivateLocal:
      break;
    case Mode::PrivateExtern:
      c.control_record_bytes =
          ColumnCipher::record_bytes(p.t * kPrivateElemBytes);
      c.control_bytes = c.control_record_bytes * p.n;
      break;
    case Mode::Public:
      c.control_record_bytes = p.t * kPublicElemBytes;
      c.control_bytes = c.control_record_bytes * p.n;
      break;
  }
  return c;
}

ServerStore::ServerStore(StoreConfig cfg, std::unique_ptr<ByteStore> data,
                         std::unique_ptr<ByteStore> control)
    : cfg_(cfg), data_(std::move(data)), control_(std::move(control)) {
  if (!data_ || data_->size() != cfg_.n_bytes)
    throw std::invalid_argument("data store size mismatch");
  if (cfg_.control_bytes) {
    if (!control_ || control_->size() != cfg_.control_bytes)
      throw std::invalid_argument("control store size mismatch");
  } else if (control_) {
    throw std::invalid_argument("unexpected control store");
  }
}

void ServerStore::build_trees() {
  std::unique_lock lock(mu_);
  tree_data_ = MerkleTree::from_data(data_->view(), cfg_.block_bytes);
  if (control_)
    tree_control_ = MerkleTree::from_data(control_->view(), cfg_.block_bytes);
}

void ServerStore::set_trees(std::vector<Digest> data_leaves,
                            std::vector<Digest> control_leaves) {
  std::unique_lock lock(mu_);
  if (data_leaves.size() != cfg_.data_blocks())
    throw std::invalid_argument("leaf count mismatch");
  tree_data_ = MerkleTree::from_leaves(std::move(data_leaves));
  if (control_) {
    if (control_leaves.size() != cfg_.control_blocks())
      throw std::invalid_argument("control leaf count mismatch");
    tree_control_ = MerkleTree::from_leaves(std::move(control_leaves));
  }
}

const ByteStore& ServerStore::store(TreeId t) const {
  if (t == TreeId::Data) return *data_;
  if (!control_) throw std::out_of_range("no control store");
  return *control_;
}

ByteStore& ServerStore::store(TreeId t) {
  return const_cast<ByteStore&>(
      static_cast<const ServerStore*>(this)->store(t));
}

const MerkleTree& ServerStore::tree(TreeId t) const {
  if (t == TreeId::Data) return tree_data_;
  if (!control_) throw std::out_of_range("no control store");
  return tree_control_;
}

MerkleTree& ServerStore::tree(TreeId t) {
  return const_cast<MerkleTree&>(
      static_cast<const ServerStore*>(this)->tree(t));
}

Digest ServerStore::root(TreeId t) const {
  std::shared_lock lock(mu_);
  return tree(t).root();
}

BlocksOut ServerStore::read_range_locked(TreeId t, std::uint64_t byte_off,
                                         std::uint64_t byte_len) const {
  const ByteStore& s = store(t);
  if (byte_len == 0 || byte_off + byte_len > s.size())
    throw std::out_of_range("byte range out of bounds");
  const std::uint64_t lo = byte_off / cfg_.block_bytes;
  const std::uint64_t hi = (byte_off + byte_len - 1) / cfg_.block_bytes;
  const std::uint64_t from = lo * cfg_.block_bytes;
  const std::uint64_t to =
      std::min<std::uint64_t>((hi + 1) * cfg_.block_bytes, s.size());

  BlocksOut out;
  out.first_block = lo;
  out.block_count = hi - lo + 1;
  auto view = s.view();
  out.data.assign(view.begin() + from, view.begin() + to);
  out.path = tree(t).prove(lo, hi);
  return out;
}

BlocksOut ServerStore::read_range(TreeId t, std::uint64_t byte_off,
                                  std::uint64_t byte_len) const {
  std::shared_lock lock(mu_);
  return read_range_locked(t, byte_off, byte_len);
}

BlocksOut ServerStore::write_range(TreeId t, std::uint64_t byte_off,
                                   std::span<const std::uint8_t> new_bytes) {
  std::unique_lock lock(mu_);
  BlocksOut old = read_range_locked(t, byte_off, new_bytes.size());
  ByteStore& s = store(t);
  s.write(byte_off, new_bytes);

  const std::uint64_t from = old.first_block * cfg_.block_bytes;
  const std::uint64_t to = std::min<std::uint64_t>(
      (old.first_block + old.block_count) * cfg_.block_bytes, s.size());
  auto view = s.view();
  auto leaves = merkle_leaf_range(
      std::span<const std::uint8_t>(view.data() + from, to - from),
      old.first_block, old.first_block + old.block_count - 1,
      cfg_.block_bytes, s.size());
  tree(t).update_leaves(old.first_block, leaves);
  return old;
}

std::vector<std::uint8_t> ServerStore::audit_response(
    std::span<const std::uint8_t> rho_bytes, unsigned threads) const {
  std::shared_lock lock(mu_);
  std::vector<std::uint8_t> out;
  if (cfg_.mode != Mode::Public) {
    Fp57 rho = fp_from_bytes(rho_bytes);
    auto x = powers(rho, cfg_.n);
    MatrixView view{data_->view(), cfg_.m, cfg_.n, cfg_.chunk_bytes};
    auto y = mat_vec_stream(view, x, threads);
    out.resize(y.size() * kPrivateElemBytes);
    for (std::size_t i = 0; i < y.size(); ++i)
      fp_to_bytes(y[i], {out.data() + i * kPrivateElemBytes,
                         kPrivateElemBytes});
  } else {
    RScalar rho = RScalar::from_bytes(rho_bytes);
    auto x = powers(rho, cfg_.n);
    auto y = scalar_mat_vec(data_->view(), cfg_.m, cfg_.n, x, threads);
    out.resize(y.size() * kPublicElemBytes);
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i].to_bytes({out.data() + i * kPublicElemBytes, kPublicElemBytes});
  }
  return out;
}

BlocksOut ServerStore::control_snapshot() const {
  std::shared_lock lock(mu_);
  if (!control_) throw std::out_of_range("no control store");
  BlocksOut out;
  out.first_block = 0;
  out.block_count = cfg_.control_blocks();
  auto view = control_->view();
  out.data.assign(view.begin(), view.end());
  // Full range: every leaf is supplied, no uncles.
  return out;
}

void ServerStore::corrupt_raw(TreeId t, std::uint64_t off,
                              std::span<const std::uint8_t> bytes) {
  std::unique_lock lock(mu_);
  store(t).write(off, bytes);
}

void ServerStore::flush() {
  std::shared_lock lock(mu_);
  data_->flush();
  if (control_) control_->flush();
}

}  // namespace por
