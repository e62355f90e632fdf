#include "por/pubclient.hpp"

#include <cstring>
#include <fstream>

#include "por/bytes.hpp"
#include "por/statefile.hpp"

namespace por {

namespace {
constexpr char kStateMagic[4] = {'P', 'O', 'R', 'C'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kPublicWriterMode = 2;
constexpr std::size_t kAuxChunk = 256 * 1024;

RScalar decode_cell(std::span<const std::uint8_t> bytes) {
  std::uint8_t buf[RScalar::kChunkBytes] = {0};
  std::memcpy(buf, bytes.data(), bytes.size());
  return RScalar::from_chunk(buf);
}

/// Cell values are raw 31-byte data: the top serialized byte must be clear,
/// and a tail cell must fit its stored prefix.
void check_cell_value(const RScalar& v, std::uint64_t stored_len) {
  auto b = v.bytes();
  if (b[31] != 0)
    throw std::out_of_range("value does not fit in a 31-byte cell");
  for (std::size_t i = stored_len; i < RScalar::kChunkBytes; ++i)
    if (b[i] != 0)
      throw std::out_of_range("value does not fit the stored tail cell");
}
}  // namespace

void save_writer_state(const PubWriterState& st, const std::string& path) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kStateMagic), 4});
  w.u8(kVersion);
  w.u8(kPublicWriterMode);
  w.u16(static_cast<std::uint16_t>(st.params.lambda));
  w.u64(st.params.m);
  w.u64(st.params.n);
  w.u64(st.params.t);
  w.u64(st.params.n_bytes);
  for (const RScalar& s : st.seeds) w.bytes(s.bytes());
  w.bytes(st.root_data);
  w.bytes(st.root_control);
  w.bytes(st.sign_pk);
  w.bytes(st.sign_sk);
  atomic_write(path, w.take());
}

PubWriterState load_writer_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw TransportError(TransportError::Code::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>{});
  ByteCursor c(bytes);
  auto magic = c.take(4);
  if (std::memcmp(magic.data(), kStateMagic, 4) != 0)
    throw ProtocolError("not a client state file");
  if (c.u8() != kVersion) throw ProtocolError("unsupported state version");
  if (c.u8() != kPublicWriterMode)
    throw ProtocolError("state file is not a public-writer state");

  PubWriterState st;
  const std::uint16_t lambda = c.u16();
  const std::uint64_t m = c.u64();
  const std::uint64_t n = c.u64();
  const std::uint64_t t = c.u64();
  const std::uint64_t n_bytes = c.u64();
  st.params = derive_params(n_bytes, lambda, 112, Mode::Public);
  if (st.params.m != m || st.params.n != n || st.params.t != t)
    throw ProtocolError("state dimensions disagree with derivation");
  st.seeds.resize(t);
  for (std::uint64_t k = 0; k < t; ++k)
    st.seeds[k] = RScalar::from_bytes(c.take(RScalar::kBytes));
  auto rd = c.take(kDigestBytes);
  std::memcpy(st.root_data.data(), rd.data(), kDigestBytes);
  auto rc = c.take(kDigestBytes);
  std::memcpy(st.root_control.data(), rc.data(), kDigestBytes);
  auto pk = c.take(32);
  std::memcpy(st.sign_pk.data(), pk.data(), 32);
  auto sk = c.take(64);
  std::memcpy(st.sign_sk.data(), sk.data(), 64);
  if (!c.done()) throw ProtocolError("trailing bytes in state file");
  return st;
}

PubWriter PubWriter::init(const PorParams& params, ByteReader& data,
                          Rng& rng, ServerApi& server) {
  if (params.mode != Mode::Public)
    throw std::invalid_argument("params are not public-mode");

  PubWriterState st;
  st.params = params;
  while (st.seeds.size() < params.t) {
    RScalar s = RScalar::random_nonzero(rng);
    bool dup = false;
    for (const RScalar& o : st.seeds) dup |= (o == s);
    if (!dup) st.seeds.push_back(s);
  }
  sign_keypair(st.sign_pk, st.sign_sk);

  const StoreConfig cfg = StoreConfig::from_params(params);
  server.init_begin(cfg);

  // Stream the data once: control fold over the scalar field plus leaf
  // hashes, then lift the control rows into the group.
  Matrix<RScalar> control(params.t, params.n);
  std::vector<RScalar> u_pows(st.seeds);
  std::vector<Digest> leaves;
  leaves.reserve(cfg.data_blocks());

  const std::size_t buf_bytes = cfg.block_bytes * 32;
  std::vector<std::uint8_t> buf(buf_bytes);
  std::uint64_t offset = 0;
  std::uint64_t col = 0;
  for (;;) {
    std::size_t got = data.read(buf);
    if (got == 0) break;
    if (offset + got > params.n_bytes)
      throw std::invalid_argument("input longer than declared size");
    if (got != buf.size() && offset + got != params.n_bytes)
      throw std::invalid_argument("short read before end of input");

    std::size_t pos = 0;
    while (pos < got) {
      std::size_t avail = std::min(cfg.chunk_bytes, got - pos);
      RScalar cell = decode_cell({buf.data() + pos, avail});
      if (!cell.is_zero())
        for (std::uint32_t k = 0; k < params.t; ++k) {
          RScalar prod = u_pows[k];
          prod *= cell;
          control.at(k, col) += prod;
        }
      pos += avail;
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

  // Control store: column-major records of t group elements each.
  std::vector<std::uint8_t> wbytes(cfg.control_bytes);
  for (std::uint64_t j = 0; j < params.n; ++j)
    for (std::uint32_t k = 0; k < params.t; ++k) {
      auto elem = Ristretto255::base_pow(control.at(k, j));
      std::memcpy(wbytes.data() + cfg.column_offset(j) + k * 32,
                  elem.bytes.data(), 32);
    }
  st.root_control = MerkleTree::from_data(wbytes, cfg.block_bytes).root();
  for (std::size_t off = 0; off < wbytes.size(); off += kAuxChunk) {
    std::size_t len = std::min(kAuxChunk, wbytes.size() - off);
    server.init_aux(off, {wbytes.data() + off, len});
  }

  auto roots = server.init_commit();
  if (roots.data != st.root_data)
    throw ProtocolError("server data root does not match ours");
  if (!roots.control || *roots.control != st.root_control)
    throw ProtocolError("server control root does not match ours");

  return PubWriter(std::move(st), server);
}

Manifest PubWriter::manifest() const {
  Manifest man;
  man.lambda = static_cast<std::uint16_t>(st_.params.lambda);
  man.m = st_.params.m;
  man.n = st_.params.n;
  man.t = st_.params.t;
  man.n_bytes = st_.params.n_bytes;
  man.key = Matrix<Ristretto255::Elem>(st_.params.t, st_.params.m);
  for (std::uint32_t k = 0; k < st_.params.t; ++k) {
    RScalar u(1);
    for (std::uint64_t i = 0; i < st_.params.m; ++i) {
      u *= st_.seeds[k];
      man.key.at(k, i) = Ristretto255::base_pow(u);
    }
  }
  man.root_data = st_.root_data;
  man.root_control = st_.root_control;
  man.signer_pk = st_.sign_pk;
  return man;
}

RScalar PubWriter::read_cell_value(std::uint64_t i, std::uint64_t j) {
  const auto& p = st_.params;
  const StoreConfig cfg = StoreConfig::from_params(p);
  const std::uint64_t idx = i * p.n + j;
  auto resp = server_.read_cell(TreeId::Data, i, j);
  auto vb = verify_served_blocks(cfg, TreeId::Data, resp, st_.root_data);
  const std::uint64_t off = idx * p.chunk_bytes;
  const std::uint64_t len =
      std::min<std::uint64_t>(p.chunk_bytes, p.n_bytes - off);
  if (off < vb.first_byte || off + len > vb.first_byte + vb.data.size())
    throw IntegrityError("served blocks do not cover the cell");
  return decode_cell({vb.data.data() + (off - vb.first_byte),
                      static_cast<std::size_t>(len)});
}

std::vector<Ristretto255::Elem> PubWriter::fetch_control_column(
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
  std::vector<Ristretto255::Elem> col(p.t);
  for (std::uint32_t k = 0; k < p.t; ++k) {
    try {
      col[k] = Ristretto255::decode(rec.subspan(k * 32, 32));
    } catch (const std::invalid_argument&) {
      throw IntegrityError("control element is not canonical");
    }
  }
  return col;
}

void PubWriter::apply_cell_write(std::uint64_t i, std::uint64_t j,
                                 const RScalar& value) {
  const auto& p = st_.params;
  const StoreConfig cfg = StoreConfig::from_params(p);
  if (i >= p.m || j >= p.n) throw std::out_of_range("cell out of range");
  const std::uint64_t idx = i * p.n + j;
  if (idx >= p.stored_cells())
    throw std::out_of_range("cell beyond stored data");
  const std::uint64_t cell_off = idx * p.chunk_bytes;
  const std::uint64_t cell_len =
      std::min<std::uint64_t>(p.chunk_bytes, p.n_bytes - cell_off);
  check_cell_value(value, cell_len);

  std::vector<std::uint8_t> old_record;
  auto wcol = fetch_control_column(j, &old_record);

  auto vbytes = value.bytes();
  auto resp = server_.write_cell(
      TreeId::Data, i, j,
      {vbytes.data(), static_cast<std::size_t>(cell_len)});
  auto vb = verify_served_blocks(cfg, TreeId::Data, resp, st_.root_data);
  if (cell_off < vb.first_byte ||
      cell_off + cell_len > vb.first_byte + vb.data.size())
    throw IntegrityError("served blocks do not cover the cell");
  RScalar old_val =
      decode_cell({vb.data.data() + (cell_off - vb.first_byte),
                   static_cast<std::size_t>(cell_len)});

  std::vector<std::uint8_t> patched = vb.data;
  std::memcpy(patched.data() + (cell_off - vb.first_byte), vbytes.data(),
              cell_len);
  const Digest new_root_data =
      root_after_patch(cfg, TreeId::Data, resp, patched);

  // Homomorphic column update: no plaintext control values involved.
  const RScalar diff = value - old_val;
  std::vector<std::uint8_t> new_record(cfg.control_record_bytes);
  for (std::uint32_t k = 0; k < p.t; ++k) {
    RScalar delta = st_.seeds[k].pow(i + 1) * diff;
    auto lifted = Ristretto255::mul(wcol[k], Ristretto255::base_pow(delta));
    std::memcpy(new_record.data() + k * 32, lifted.bytes.data(), 32);
  }

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

void PubWriter::write_cell(std::uint64_t i, std::uint64_t j,
                           const RScalar& value) {
  apply_cell_write(i, j, value);
}

std::vector<std::uint8_t> PubWriter::read_bytes(std::uint64_t offset,
                                                std::uint64_t length) {
  const auto& p = st_.params;
  const StoreConfig cfg = StoreConfig::from_params(p);
  if (length == 0) throw std::out_of_range("empty range");
  if (offset + length > p.n_bytes)
    throw std::out_of_range("range beyond end of file");
  std::vector<std::uint8_t> out;
  out.reserve(length);
  std::uint64_t cached_first = 0;
  std::vector<std::uint8_t> cached;
  std::uint64_t pos = offset;
  while (pos < offset + length) {
    if (cached.empty() || pos < cached_first ||
        pos >= cached_first + cached.size()) {
      const std::uint64_t cell = pos / p.chunk_bytes;
      auto resp = server_.read_cell(TreeId::Data, cell / p.n, cell % p.n);
      auto vb = verify_served_blocks(cfg, TreeId::Data, resp, st_.root_data);
      cached_first = vb.first_byte;
      cached = std::move(vb.data);
      if (pos < cached_first || pos >= cached_first + cached.size())
        throw IntegrityError("served blocks do not cover the range");
    }
    const std::uint64_t take = std::min<std::uint64_t>(
        offset + length - pos, cached_first + cached.size() - pos);
    out.insert(out.end(), cached.begin() + (pos - cached_first),
               cached.begin() + (pos - cached_first + take));
    pos += take;
  }
  return out;
}

void PubWriter::write_bytes(std::uint64_t offset,
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

    std::uint8_t cellbuf[RScalar::kChunkBytes] = {0};
    if (!(lo == cell_off && hi == cell_off + cell_len)) {
      auto old = read_cell_value(cell / p.n, cell % p.n);
      std::memcpy(cellbuf, old.bytes().data(), RScalar::kChunkBytes);
    }
    for (std::uint64_t b = lo; b < hi; ++b)
      cellbuf[b - cell_off] = bytes[b - offset];
    apply_cell_write(cell / p.n, cell % p.n, RScalar::from_chunk(cellbuf));
    pos = hi;
  }
}

AuditTranscript PubWriter::audit(Rng& rng) {
  const auto& p = st_.params;
  const StoreConfig cfg = StoreConfig::from_params(p);
  const RScalar rho = RScalar::random_nonzero(rng);

  AuditTranscript tr;
  tr.rho.assign(rho.bytes().begin(), rho.bytes().end());
  auto out = server_.audit(tr.rho);
  tr.y = out.y;
  tr.accepted = false;
  if (out.y.size() != p.m * kPublicElemBytes || !out.control) return tr;

  std::vector<RScalar> y(p.m);
  for (std::uint64_t i = 0; i < p.m; ++i) {
    try {
      y[i] = RScalar::from_bytes(
          {out.y.data() + i * kPublicElemBytes, kPublicElemBytes});
    } catch (const std::invalid_argument&) {
      return tr;
    }
  }
  if (!verify_store_snapshot(cfg, TreeId::Control, *out.control,
                             out.control_path, st_.root_control))
    return tr;
  Matrix<Ristretto255::Elem> w(p.t, p.n);
  for (std::uint64_t j = 0; j < p.n; ++j)
    for (std::uint32_t k = 0; k < p.t; ++k) {
      try {
        w.at(k, j) = Ristretto255::decode(
            {out.control->data() + cfg.column_offset(j) + k * 32, 32});
      } catch (const std::invalid_argument&) {
        return tr;
      }
    }
  tr.accepted = pub_writer_audit_check<Ristretto255>(st_.seeds, w, rho, y);
  return tr;
}

PubVerifier::PubVerifier(Manifest manifest, ServerApi& server)
    : man_(std::move(manifest)), params_(man_.params()), server_(server) {}

AuditTranscript PubVerifier::audit(Rng& rng) {
  const StoreConfig cfg = StoreConfig::from_params(params_);
  const RScalar rho = RScalar::random_nonzero(rng);

  AuditTranscript tr;
  tr.rho.assign(rho.bytes().begin(), rho.bytes().end());
  auto out = server_.audit(tr.rho);
  tr.y = out.y;
  tr.accepted = false;
  if (out.y.size() != params_.m * kPublicElemBytes || !out.control)
    return tr;

  std::vector<RScalar> y(params_.m);
  for (std::uint64_t i = 0; i < params_.m; ++i) {
    try {
      y[i] = RScalar::from_bytes(
          {out.y.data() + i * kPublicElemBytes, kPublicElemBytes});
    } catch (const std::invalid_argument&) {
      return tr;
    }
  }
  if (!verify_store_snapshot(cfg, TreeId::Control, *out.control,
                             out.control_path, man_.root_control))
    return tr;
  Matrix<Ristretto255::Elem> w(params_.t, params_.n);
  for (std::uint64_t j = 0; j < params_.n; ++j)
    for (std::uint32_t k = 0; k < params_.t; ++k) {
      try {
        w.at(k, j) = Ristretto255::decode(
            {out.control->data() + cfg.column_offset(j) + k * 32, 32});
      } catch (const std::invalid_argument&) {
        return tr;
      }
    }
  tr.accepted = pub_audit_check<Ristretto255>(man_.key, w, rho, y);
  return tr;
}

std::vector<std::uint8_t> PubVerifier::read_bytes(std::uint64_t offset,
                                                  std::uint64_t length) {
  const StoreConfig cfg = StoreConfig::from_params(params_);
  if (length == 0) throw std::out_of_range("empty range");
  if (offset + length > params_.n_bytes)
    throw std::out_of_range("range beyond end of file");
  std::vector<std::uint8_t> out;
  std::uint64_t pos = offset;
  while (pos < offset + length) {
    const std::uint64_t cell = pos / params_.chunk_bytes;
    auto resp =
        server_.read_cell(TreeId::Data, cell / params_.n, cell % params_.n);
    auto vb = verify_served_blocks(cfg, TreeId::Data, resp, man_.root_data);
    if (pos < vb.first_byte || pos >= vb.first_byte + vb.data.size())
      throw IntegrityError("served blocks do not cover the range");
    const std::uint64_t take = std::min<std::uint64_t>(
        offset + length - pos, vb.first_byte + vb.data.size() - pos);
    out.insert(out.end(), vb.data.begin() + (pos - vb.first_byte),
               vb.data.begin() + (pos - vb.first_byte + take));
    pos += take;
  }
  return out;
}

std::vector<std::uint8_t> extract_public(
    std::uint64_t m, std::uint64_t n, std::uint64_t n_bytes,
    std::uint64_t e_required,
    std::span<const DecodedTranscript<RScalar>> transcripts) {
  Matrix<RScalar> data = extract_matrix<RScalar>(m, n, e_required,
                                                 transcripts);
  return matrix_to_bytes<RScalar>(
      data, n_bytes, RScalar::kChunkBytes,
      [](const RScalar& v, std::span<std::uint8_t> out) {
        auto b = v.bytes();
        if (b[31] != 0) return false;
        std::memcpy(out.data(), b.data(), out.size());
        return true;
      });
}

}  // namespace por
