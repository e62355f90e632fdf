#include "por/client.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "por/errors.hpp"

namespace por {

namespace {
constexpr std::size_t kStreamBlocks = 32;  // init streaming window
constexpr std::size_t kAuxChunk = 256 * 1024;

std::vector<std::uint8_t> serialize_column(std::span<const Fp57> col) {
  std::vector<std::uint8_t> out(col.size() * kPrivateElemBytes);
  for (std::size_t k = 0; k < col.size(); ++k)
    fp_to_bytes(col[k], {out.data() + k * kPrivateElemBytes,
                         kPrivateElemBytes});
  return out;
}
}  // namespace

CellAddress cell_address(const StoreConfig& cfg, TreeId tree, std::uint64_t i,
                         std::uint64_t j) {
  CellAddress addr;
  if (tree == TreeId::Data) {
    if (i >= cfg.m || j >= cfg.n) throw std::out_of_range("cell out of range");
    const std::uint64_t idx = i * cfg.n + j;
    if (idx >= cfg.stored_cells())
      throw std::out_of_range("cell beyond stored data");
    addr.offset = idx * cfg.chunk_bytes;
    addr.length =
        std::min<std::uint64_t>(cfg.chunk_bytes, cfg.n_bytes - addr.offset);
  } else {
    if (!cfg.control_bytes) throw std::out_of_range("no control store");
    if (j >= cfg.n) throw std::out_of_range("column out of range");
    addr.offset = cfg.column_offset(j);
    addr.length = cfg.control_record_bytes;
  }
  return addr;
}

// ---------------------------------------------------------------- LocalServer

void LocalServer::init_begin(const StoreConfig& cfg) {
  pending_ = cfg;
  staged_data_.assign(cfg.n_bytes, 0);
  staged_control_.assign(cfg.control_bytes, 0);
  store_.reset();
}

void LocalServer::init_data(std::uint64_t offset,
                            std::span<const std::uint8_t> bytes) {
  if (!pending_) throw ProtocolError("init_data before init_begin");
  if (offset + bytes.size() > staged_data_.size())
    throw std::out_of_range("init data overflow");
  std::memcpy(staged_data_.data() + offset, bytes.data(), bytes.size());
}

void LocalServer::init_aux(std::uint64_t offset,
                           std::span<const std::uint8_t> bytes) {
  if (!pending_) throw ProtocolError("init_aux before init_begin");
  if (offset + bytes.size() > staged_control_.size())
    throw std::out_of_range("init aux overflow");
  std::memcpy(staged_control_.data() + offset, bytes.data(), bytes.size());
}

ServerApi::InitRoots LocalServer::init_commit() {
  if (!pending_) throw ProtocolError("init_commit before init_begin");
  std::unique_ptr<ByteStore> control;
  if (pending_->control_bytes)
    control = std::make_unique<MemStore>(std::move(staged_control_));
  store_ = std::make_unique<ServerStore>(
      *pending_, std::make_unique<MemStore>(std::move(staged_data_)),
      std::move(control));
  store_->build_trees();
  pending_.reset();
  staged_data_.clear();
  staged_control_.clear();

  InitRoots roots;
  roots.data = store_->root(TreeId::Data);
  if (store_->config().control_bytes)
    roots.control = store_->root(TreeId::Control);
  return roots;
}

BlocksOut LocalServer::read_cell(TreeId tree, std::uint64_t i,
                                 std::uint64_t j) {
  if (!store_) throw ProtocolError("no store");
  auto addr = cell_address(store_->config(), tree, i, j);
  return store_->read_range(tree, addr.offset, addr.length);
}

BlocksOut LocalServer::write_cell(TreeId tree, std::uint64_t i,
                                  std::uint64_t j,
                                  std::span<const std::uint8_t> value) {
  if (!store_) throw ProtocolError("no store");
  auto addr = cell_address(store_->config(), tree, i, j);
  if (value.size() != addr.length)
    throw std::out_of_range("value length does not match cell");
  return store_->write_range(tree, addr.offset, value);
}

ServerApi::AuditOut LocalServer::audit(std::span<const std::uint8_t> rho) {
  if (!store_) throw ProtocolError("no store");
  AuditOut out;
  out.y = store_->audit_response(rho, audit_threads_);
  if (store_->config().control_bytes) {
    auto snap = store_->control_snapshot();
    out.control = std::move(snap.data);
    out.control_path = std::move(snap.path);
  }
  return out;
}

// ---------------------------------------------------------------- ByteReaders

std::size_t MemReader::read(std::span<std::uint8_t> out) {
  std::size_t take = std::min(out.size(), data_.size() - pos_);
  std::memcpy(out.data(), data_.data() + pos_, take);
  pos_ += take;
  return take;
}

FileReader::FileReader(const std::string& path) {
  fd_ = ::open(path.c_str(), O_RDONLY);
  if (fd_ < 0)
    throw TransportError(TransportError::Code::Io,
                         "open " + path + ": " + std::strerror(errno));
}

FileReader::~FileReader() { ::close(fd_); }

std::size_t FileReader::read(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    ssize_t r = ::read(fd_, out.data() + got, out.size() - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(TransportError::Code::Io,
                           std::string("read: ") + std::strerror(errno));
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

// ------------------------------------------------------------------ PorClient

PorClient PorClient::init(const PorParams& params, ByteReader& data, Rng& rng,
                          ServerApi& server) {
  if (params.mode == Mode::Public)
    throw std::invalid_argument("public mode uses its own writer");

  ClientState st;
  st.params = params;
  while (st.seeds.size() < params.t) {
    Fp57 s = fp_random_nonzero(rng);
    bool dup = false;
    for (const Fp57& o : st.seeds) dup |= (o == s);
    if (!dup) st.seeds.push_back(s);
  }

  const StoreConfig cfg = StoreConfig::from_params(params);
  server.init_begin(cfg);

  // One pass over the data: control-matrix fold, leaf hashes, upload.
  Matrix<Fp57> control(params.t, params.n);
  std::vector<Fp57> u_pows(st.seeds);  // seeds[k]^(row+1)
  std::vector<Digest> leaves;
  leaves.reserve(cfg.data_blocks());

  const std::size_t buf_bytes = cfg.block_bytes * kStreamBlocks;
  std::vector<std::uint8_t> buf(buf_bytes);
  std::uint64_t offset = 0;
  std::uint64_t cell = 0;
  std::uint64_t col = 0;

  for (;;) {
    std::size_t got = data.read(buf);
    if (got == 0) break;
    if (offset + got > params.n_bytes)
      throw std::invalid_argument("input longer than declared size");
    if (got != buf.size() && offset + got != params.n_bytes)
      throw std::invalid_argument("short read before end of input");

    // Cells: the buffer is block-aligned, blocks are cell-aligned.
    std::size_t pos = 0;
    while (pos < got) {
      std::size_t avail = std::min(cfg.chunk_bytes, got - pos);
      std::uint64_t v = 0;
      for (std::size_t b = 0; b < avail; ++b)
        v |= static_cast<std::uint64_t>(buf[pos + b]) << (8 * b);
      Fp57 elem = Fp57::from_raw(v);
      if (!elem.is_zero())
        for (std::uint32_t k = 0; k < params.t; ++k)
          control.at(k, col) += u_pows[k] * elem;
      pos += avail;
      ++cell;
      if (++col == params.n) {
        col = 0;
        for (std::uint32_t k = 0; k < params.t; ++k)
          u_pows[k] *= st.seeds[k];
      }
    }
    for (std::size_t b = 0; b < got; b += cfg.block_bytes) {
      std::size_t len = std::min(cfg.block_bytes, got - b);
      leaves.push_back(
          merkle_leaf_digest({buf.data() + b, len}, cfg.block_bytes));
    }
    server.init_data(offset, {buf.data(), got});
    offset += got;
  }
  if (offset != params.n_bytes)
    throw std::invalid_argument("input shorter than declared size");

  st.root_data = MerkleTree::from_leaves(leaves).root();

  if (params.mode == Mode::PrivateLocal) {
    st.control = std::move(control);
  } else {
    rng.fill(st.key);
    ColumnCipher cipher(st.key);
    std::vector<std::uint8_t> wbytes;
    wbytes.reserve(cfg.control_bytes);
    std::vector<Fp57> colv(params.t);
    for (std::uint64_t j = 0; j < params.n; ++j) {
      for (std::uint32_t k = 0; k < params.t; ++k) colv[k] = control.at(k, j);
      auto record = cipher.seal(j, 0, serialize_column(colv));
      wbytes.insert(wbytes.end(), record.begin(), record.end());
    }
    st.root_control =
        MerkleTree::from_data(wbytes, cfg.block_bytes).root();
    for (std::size_t off = 0; off < wbytes.size(); off += kAuxChunk) {
      std::size_t len = std::min(kAuxChunk, wbytes.size() - off);
      server.init_aux(off, {wbytes.data() + off, len});
    }
  }

  auto roots = server.init_commit();
  if (roots.data != st.root_data)
    throw ProtocolError("server data root does not match ours");
  if (params.mode == Mode::PrivateExtern &&
      (!roots.control || *roots.control != st.root_control))
    throw ProtocolError("server control root does not match ours");

  return PorClient(std::move(st), server);
}

namespace {
std::uint64_t tree_store_size(const StoreConfig& cfg, TreeId tree) {
  return tree == TreeId::Data ? cfg.n_bytes : cfg.control_bytes;
}
std::uint64_t tree_leaf_total(const StoreConfig& cfg, TreeId tree) {
  const std::uint64_t size = tree_store_size(cfg, tree);
  return (size + cfg.block_bytes - 1) / cfg.block_bytes;
}
}  // namespace

VerifiedBlocks verify_served_blocks(const StoreConfig& cfg, TreeId tree,
                                    const BlocksOut& out,
                                    const Digest& root) {
  const std::uint64_t total = tree_leaf_total(cfg, tree);
  if (out.block_count == 0 || out.first_block >= total ||
      out.first_block + out.block_count > total)
    throw IntegrityError("served block range out of bounds");
  const std::uint64_t hi = out.first_block + out.block_count - 1;
  std::vector<Digest> leaves;
  try {
    leaves = merkle_leaf_range(out.data, out.first_block, hi, cfg.block_bytes,
                               tree_store_size(cfg, tree));
  } catch (const std::invalid_argument&) {
    throw IntegrityError("served blocks malformed");
  }
  if (!merkle_verify(root, total, out.first_block, hi, leaves, out.path))
    throw IntegrityError("block proof failed verification");
  VerifiedBlocks vb;
  vb.first_byte = out.first_block * cfg.block_bytes;
  vb.data = out.data;
  return vb;
}

Digest root_after_patch(const StoreConfig& cfg, TreeId tree,
                        const BlocksOut& old,
                        std::span<const std::uint8_t> patched) {
  const std::uint64_t hi = old.first_block + old.block_count - 1;
  auto leaves = merkle_leaf_range(patched, old.first_block, hi,
                                  cfg.block_bytes,
                                  tree_store_size(cfg, tree));
  return merkle_root_from_path(tree_leaf_total(cfg, tree), old.first_block,
                               hi, leaves, old.path);
}

bool verify_store_snapshot(const StoreConfig& cfg, TreeId tree,
                           std::span<const std::uint8_t> bytes,
                           const MerklePath& path, const Digest& root) {
  const std::uint64_t total = tree_leaf_total(cfg, tree);
  if (bytes.size() != tree_store_size(cfg, tree)) return false;
  std::vector<Digest> leaves;
  try {
    leaves = merkle_leaf_range(bytes, 0, total - 1, cfg.block_bytes,
                               bytes.size());
  } catch (const std::invalid_argument&) {
    return false;
  }
  return merkle_verify(root, total, 0, total - 1, leaves, path);
}

Fp57 PorClient::read_cell(std::uint64_t i, std::uint64_t j) {
  const auto& p = st_.params;
  if (i >= p.m || j >= p.n) throw std::out_of_range("cell out of range");
  const std::uint64_t idx = i * p.n + j;
  if (idx >= p.stored_cells()) return Fp57{};  // virtual zero tail

  auto resp = server_.read_cell(TreeId::Data, i, j);
  auto vb = verify_served_blocks(StoreConfig::from_params(st_.params),
                                 TreeId::Data, resp, st_.root_data);
  const std::uint64_t off = idx * p.chunk_bytes;
  const std::uint64_t len = std::min<std::uint64_t>(p.chunk_bytes,
                                                    p.n_bytes - off);
  if (off < vb.first_byte || off + len > vb.first_byte + vb.data.size())
    throw IntegrityError("served blocks do not cover the cell");
  std::uint64_t v = 0;
  for (std::uint64_t b = 0; b < len; ++b)
    v |= static_cast<std::uint64_t>(vb.data[off - vb.first_byte + b])
         << (8 * b);
  return Fp57::from_raw(v);
}

std::vector<std::uint8_t> PorClient::read_bytes(std::uint64_t offset,
                                                std::uint64_t length) {
  const auto& p = st_.params;
  if (length == 0) throw std::out_of_range("empty range");
  if (offset + length > p.n_bytes)
    throw std::out_of_range("range beyond end of file");

  std::vector<std::uint8_t> out;
  out.reserve(length);
  // Per-cell reads; a verified block is reused for every cell it covers.
  std::uint64_t cached_first = 0;
  std::vector<std::uint8_t> cached;
  std::uint64_t pos = offset;
  while (pos < offset + length) {
    if (cached.empty() || pos < cached_first ||
        pos >= cached_first + cached.size()) {
      const std::uint64_t cell = pos / p.chunk_bytes;
      auto resp = server_.read_cell(TreeId::Data, cell / p.n, cell % p.n);
      auto vb = verify_served_blocks(StoreConfig::from_params(st_.params),
                                 TreeId::Data, resp, st_.root_data);
      cached_first = vb.first_byte;
      cached = std::move(vb.data);
      if (pos < cached_first || pos >= cached_first + cached.size())
        throw IntegrityError("served blocks do not cover the range");
    }
    const std::uint64_t take =
        std::min<std::uint64_t>(offset + length - pos,
                                cached_first + cached.size() - pos);
    out.insert(out.end(), cached.begin() + (pos - cached_first),
               cached.begin() + (pos - cached_first + take));
    pos += take;
  }
  return out;
}

Matrix<Fp57> PorClient::decrypt_control(
    std::span<const std::uint8_t> bytes) const {
  const auto& p = st_.params;
  const StoreConfig cfg = StoreConfig::from_params(p);
  if (bytes.size() != cfg.control_bytes)
    throw IntegrityError("control store size mismatch");
  ColumnCipher cipher(st_.key);
  Matrix<Fp57> control(p.t, p.n);
  for (std::uint64_t j = 0; j < p.n; ++j) {
    auto plain = cipher.open(
        j, bytes.subspan(j * cfg.control_record_bytes,
                         cfg.control_record_bytes));
    if (plain.size() != p.t * kPrivateElemBytes)
      throw IntegrityError("control record has wrong shape");
    for (std::uint32_t k = 0; k < p.t; ++k) {
      try {
        control.at(k, j) = fp_from_bytes(
            {plain.data() + k * kPrivateElemBytes, kPrivateElemBytes});
      } catch (const std::invalid_argument&) {
        throw IntegrityError("control element not canonical");
      }
    }
  }
  return control;
}

std::vector<Fp57> PorClient::fetch_control_column(
    std::uint64_t j, std::vector<std::uint8_t>* record) {
  const auto& p = st_.params;
  const StoreConfig cfg = StoreConfig::from_params(p);
  auto resp = server_.read_cell(TreeId::Control, 0, j);
  auto vb = verify_served_blocks(cfg, TreeId::Control, resp,
                                 st_.root_control);
  const std::uint64_t off = cfg.column_offset(j);
  if (off < vb.first_byte ||
      off + cfg.control_record_bytes > vb.first_byte + vb.data.size())
    throw IntegrityError("served blocks do not cover the column");
  auto rec = std::span<const std::uint8_t>(vb.data).subspan(
      off - vb.first_byte, cfg.control_record_bytes);
  if (record) record->assign(rec.begin(), rec.end());

  ColumnCipher cipher(st_.key);
  auto plain = cipher.open(j, rec);
  if (plain.size() != p.t * kPrivateElemBytes)
    throw IntegrityError("control record has wrong shape");
  std::vector<Fp57> col(p.t);
  for (std::uint32_t k = 0; k < p.t; ++k) {
    try {
      col[k] = fp_from_bytes(
          {plain.data() + k * kPrivateElemBytes, kPrivateElemBytes});
    } catch (const std::invalid_argument&) {
      throw IntegrityError("control element not canonical");
    }
  }
  return col;
}

void PorClient::apply_cell_write(std::uint64_t i, std::uint64_t j,
                                 Fp57 value) {
  const auto& p = st_.params;
  const StoreConfig cfg = StoreConfig::from_params(p);
  const std::uint64_t idx = i * p.n + j;
  if (i >= p.m || j >= p.n) throw std::out_of_range("cell out of range");
  if (idx >= p.stored_cells())
    throw std::out_of_range("cell beyond stored data");

  const std::uint64_t cell_off = idx * p.chunk_bytes;
  const std::uint64_t cell_len =
      std::min<std::uint64_t>(p.chunk_bytes, p.n_bytes - cell_off);
  if (cell_len < p.chunk_bytes && (value.value() >> (8 * cell_len)) != 0)
    throw std::out_of_range("value does not fit the stored tail cell");
  std::uint8_t full[kPrivateChunkBytes];
  fp_to_chunk(value, full);

  // Externalized control: fetch and authenticate the column first.
  std::vector<Fp57> column;
  std::vector<std::uint8_t> old_record;
  if (p.mode == Mode::PrivateExtern)
    column = fetch_control_column(j, &old_record);

  auto resp = server_.write_cell(TreeId::Data, i, j,
                                 {full, static_cast<std::size_t>(cell_len)});
  auto vb = verify_served_blocks(StoreConfig::from_params(st_.params),
                                 TreeId::Data, resp, st_.root_data);
  if (cell_off < vb.first_byte ||
      cell_off + cell_len > vb.first_byte + vb.data.size())
    throw IntegrityError("served blocks do not cover the cell");

  std::uint64_t old_raw = 0;
  for (std::uint64_t b = 0; b < cell_len; ++b)
    old_raw |= static_cast<std::uint64_t>(
                   vb.data[cell_off - vb.first_byte + b])
               << (8 * b);
  const Fp57 old_val = Fp57::from_raw(old_raw);

  std::vector<std::uint8_t> patched = vb.data;
  std::memcpy(patched.data() + (cell_off - vb.first_byte), full, cell_len);
  const Digest new_root_data =
      root_after_patch(cfg, TreeId::Data, resp, patched);

  const Fp57 delta = value - old_val;
  if (p.mode == Mode::PrivateLocal) {
    for (std::uint32_t k = 0; k < p.t; ++k)
      st_.control.at(k, j) += st_.seeds[k].pow(i + 1) * delta;
    st_.root_data = new_root_data;
    return;
  }

  // Externalized: re-encrypt the column under a bumped counter and push it
  // through its own verified write.
  for (std::uint32_t k = 0; k < p.t; ++k)
    column[k] += st_.seeds[k].pow(i + 1) * delta;
  ColumnCipher cipher(st_.key);
  const std::uint64_t counter = ColumnCipher::record_counter(old_record) + 1;
  auto new_record = cipher.seal(j, counter, serialize_column(column));

  auto resp2 = server_.write_cell(TreeId::Control, 0, j, new_record);
  auto vb2 = verify_served_blocks(cfg, TreeId::Control, resp2,
                                  st_.root_control);
  const std::uint64_t col_off = cfg.column_offset(j);
  if (col_off < vb2.first_byte ||
      col_off + cfg.control_record_bytes > vb2.first_byte + vb2.data.size())
    throw IntegrityError("served blocks do not cover the column");
  if (!std::equal(old_record.begin(), old_record.end(),
                  vb2.data.begin() + (col_off - vb2.first_byte)))
    throw IntegrityError("control column changed between read and write");

  std::vector<std::uint8_t> patched2 = vb2.data;
  std::memcpy(patched2.data() + (col_off - vb2.first_byte),
              new_record.data(), new_record.size());
  const Digest new_root_control =
      root_after_patch(cfg, TreeId::Control, resp2, patched2);

  st_.root_data = new_root_data;
  st_.root_control = new_root_control;
}

void PorClient::write_cell(std::uint64_t i, std::uint64_t j, Fp57 value) {
  apply_cell_write(i, j, value);
}

void PorClient::write_bytes(std::uint64_t offset,
                            std::span<const std::uint8_t> bytes) {
  const auto& p = st_.params;
  if (bytes.empty()) throw std::out_of_range("empty write");
  if (offset + bytes.size() > p.n_bytes)
    throw std::out_of_range("range beyond end of file");

  std::uint64_t pos = offset;
  while (pos < offset + bytes.size()) {
    const std::uint64_t cell = pos / p.chunk_bytes;
    const std::uint64_t cell_off = cell * p.chunk_bytes;
    const std::uint64_t cell_len =
        std::min<std::uint64_t>(p.chunk_bytes, p.n_bytes - cell_off);
    const std::uint64_t lo = std::max(pos, cell_off);
    const std::uint64_t hi =
        std::min<std::uint64_t>(offset + bytes.size(), cell_off + cell_len);

    std::uint64_t raw;
    if (lo == cell_off && hi == cell_off + cell_len) {
      raw = 0;  // fully covered, no read needed
    } else {
      raw = read_cell(cell / p.n, cell % p.n).value();
    }
    for (std::uint64_t b = lo; b < hi; ++b) {
      const std::uint64_t shift = 8 * (b - cell_off);
      raw = (raw & ~(std::uint64_t{0xFF} << shift)) |
            (static_cast<std::uint64_t>(bytes[b - offset]) << shift);
    }
    apply_cell_write(cell / p.n, cell % p.n, Fp57::from_raw(raw));
    pos = hi;
  }
}

AuditTranscript PorClient::audit(Rng& rng) {
  const auto& p = st_.params;
  const Fp57 rho = fp_random_nonzero(rng);

  AuditTranscript tr;
  tr.rho.resize(kPrivateElemBytes);
  fp_to_bytes(rho, tr.rho);

  auto out = server_.audit(tr.rho);
  tr.y = out.y;
  tr.accepted = false;

  if (out.y.size() != p.m * kPrivateElemBytes) return tr;  // malformed length
  std::vector<Fp57> y(p.m);
  for (std::uint64_t i = 0; i < p.m; ++i) {
    try {
      y[i] = fp_from_bytes(
          {out.y.data() + i * kPrivateElemBytes, kPrivateElemBytes});
    } catch (const std::invalid_argument&) {
      return tr;  // non-canonical element
    }
  }

  const Matrix<Fp57>* control = &st_.control;
  Matrix<Fp57> fetched;
  if (p.mode == Mode::PrivateExtern) {
    if (!out.control) return tr;
    if (!verify_store_snapshot(StoreConfig::from_params(p), TreeId::Control,
                               *out.control, out.control_path,
                               st_.root_control))
      return tr;
    try {
      fetched = decrypt_control(*out.control);
    } catch (const IntegrityError&) {
      return tr;
    }
    control = &fetched;
  }

  tr.accepted = audit_accepts<Fp57>(st_.seeds, *control, rho, y);
  return tr;
}

}  // namespace por
