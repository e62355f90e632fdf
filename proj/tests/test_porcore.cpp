#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <functional>
#include <vector>

#include "por/client.hpp"
#include "por/extract.hpp"
#include "por/matrix_view.hpp"
#include "por/statefile.hpp"

using namespace por;

namespace {

// Returns scripted u64s first (for seed control), then falls back to a
// seeded stream.
class ScriptedRng final : public Rng {
 public:
  explicit ScriptedRng(std::vector<std::uint64_t> script,
                       std::uint64_t seed = 99)
      : script_(std::move(script)), fallback_(seed) {}
  void fill(std::span<std::uint8_t> out) override {
    if (next_ < script_.size() && out.size() == 8) {
      std::memcpy(out.data(), &script_[next_++], 8);
      return;
    }
    fallback_.fill(out);
  }

 private:
  std::vector<std::uint64_t> script_;
  std::size_t next_ = 0;
  SeededRng fallback_;
};

// Delegating server with override hooks, for scripted misbehavior.
class HookedServer final : public ServerApi {
 public:
  explicit HookedServer(ServerApi& inner) : inner_(inner) {}

  std::function<BlocksOut(TreeId, std::uint64_t, std::uint64_t)> on_read;
  std::function<AuditOut(AuditOut)> on_audit;

  void init_begin(const StoreConfig& cfg) override { inner_.init_begin(cfg); }
  void init_data(std::uint64_t off,
                 std::span<const std::uint8_t> b) override {
    inner_.init_data(off, b);
  }
  void init_aux(std::uint64_t off, std::span<const std::uint8_t> b) override {
    inner_.init_aux(off, b);
  }
  InitRoots init_commit() override { return inner_.init_commit(); }
  BlocksOut read_cell(TreeId t, std::uint64_t i, std::uint64_t j) override {
    if (on_read) return on_read(t, i, j);
    return inner_.read_cell(t, i, j);
  }
  BlocksOut write_cell(TreeId t, std::uint64_t i, std::uint64_t j,
                       std::span<const std::uint8_t> v) override {
    return inner_.write_cell(t, i, j, v);
  }
  AuditOut audit(std::span<const std::uint8_t> rho) override {
    auto out = inner_.audit(rho);
    if (on_audit) out = on_audit(std::move(out));
    return out;
  }

 private:
  ServerApi& inner_;
};

std::vector<std::uint8_t> cells_to_bytes(
    const std::vector<std::uint64_t>& cells) {
  std::vector<std::uint8_t> out(cells.size() * 7);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int k = 0; k < 7; ++k)
      out[c * 7 + k] = static_cast<std::uint8_t>(cells[c] >> (8 * k));
  return out;
}

// Oracle: control matrix recomputed from scratch over the current bytes.
Matrix<Fp57> recompute_control(std::span<const Fp57> seeds,
                               const PorParams& p,
                               std::span<const std::uint8_t> data) {
  Matrix<Fp57> control(seeds.size(), p.n);
  MatrixView view{data, p.m, p.n, p.chunk_bytes};
  for (std::uint64_t i = 0; i < p.m; ++i)
    for (std::uint64_t j = 0; j < p.n; ++j) {
      Fp57 cell = Fp57::from_raw(view.cell_raw64(i * p.n + j));
      for (std::size_t k = 0; k < seeds.size(); ++k)
        control.at(k, j) += seeds[k].pow(i + 1) * cell;
    }
  return control;
}

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t len) {
  std::vector<std::uint8_t> d(len);
  rng.fill(d);
  return d;
}

PorParams tiny_params(std::uint64_t n_bytes, Mode mode,
                      std::uint32_t lambda = 40) {
  return derive_params(n_bytes, lambda, 112, mode);
}

}  // namespace

TEST_CASE("init computes the documented control matrix") {
  // s = 2 over the 2x2 matrix [[1,2],[3,4]]: V = [14, 20].
  auto data = cells_to_bytes({1, 2, 3, 4});
  auto params = tiny_params(data.size(), Mode::PrivateLocal);
  REQUIRE(params.m == 2);
  REQUIRE(params.n == 2);
  REQUIRE(params.t == 1);

  ScriptedRng rng({2});
  LocalServer server;
  MemReader reader(data);
  auto client = PorClient::init(params, reader, rng, server);

  REQUIRE(client.state().seeds.size() == 1);
  CHECK(client.state().seeds[0] == Fp57(2));
  CHECK(client.state().control.at(0, 0) == Fp57(14));
  CHECK(client.state().control.at(0, 1) == Fp57(20));

  SUBCASE("audit accepts after init") {
    SeededRng arng(5);
    for (int i = 0; i < 5; ++i) CHECK(client.audit(arng).accepted);
  }

  SUBCASE("write updates the control column by the rank-1 delta") {
    client.write_cell(0, 0, Fp57(5));  // 1 -> 5: delta = 2*4 = 8
    CHECK(client.state().control.at(0, 0) == Fp57(22));
    CHECK(client.state().control.at(0, 1) == Fp57(20));
    SeededRng arng(6);
    CHECK(client.audit(arng).accepted);
    CHECK(client.read_cell(0, 0) == Fp57(5));
  }

  SUBCASE("writing the same value changes nothing") {
    Digest root_before = client.state().root_data;
    auto control_before = client.state().control;
    client.write_cell(1, 1, Fp57(4));
    CHECK(client.state().root_data == root_before);
    CHECK(client.state().control == control_before);
  }

  SUBCASE("zero matrix gives zero control rows") {
    auto zeros = cells_to_bytes({0, 0, 0, 0});
    ScriptedRng zrng({123});
    LocalServer zserver;
    MemReader zreader(zeros);
    auto zclient = PorClient::init(params, zreader, zrng, zserver);
    CHECK(zclient.state().control.at(0, 0) == Fp57(0));
    CHECK(zclient.state().control.at(0, 1) == Fp57(0));
  }
}

TEST_CASE("byte reads and writes round-trip through verification") {
  SeededRng rng(31);
  auto data = random_bytes(rng, 10'000);
  auto params = tiny_params(data.size(), Mode::PrivateLocal);
  LocalServer server;
  MemReader reader(data);
  auto client = PorClient::init(params, reader, rng, server);

  SUBCASE("reads return the original bytes") {
    CHECK(client.read_bytes(0, data.size()) == data);
    auto mid = client.read_bytes(4321, 777);
    CHECK(std::equal(mid.begin(), mid.end(), data.begin() + 4321));
  }

  SUBCASE("a write spanning cells shows up in reads and the control fold") {
    std::vector<std::uint8_t> patch{9, 8, 7, 6, 5, 4, 3, 2, 1, 0, 255};
    client.write_bytes(6998, patch);  // straddles cell boundary at 7000
    std::copy(patch.begin(), patch.end(), data.begin() + 6998);
    CHECK(client.read_bytes(6990, 30) ==
          std::vector<std::uint8_t>(data.begin() + 6990,
                                    data.begin() + 7020));
    CHECK(client.state().control ==
          recompute_control(client.state().seeds, params, data));
    SeededRng arng(8);
    CHECK(client.audit(arng).accepted);
  }

  SUBCASE("range errors") {
    CHECK_THROWS_AS(client.read_bytes(data.size(), 1), std::out_of_range);
    CHECK_THROWS_AS(client.read_bytes(data.size() - 3, 10),
                    std::out_of_range);
    std::uint8_t one = 1;
    CHECK_THROWS_AS(client.write_bytes(data.size(), {&one, 1}),
                    std::out_of_range);
  }

  SUBCASE("tail cell accepts only values that fit its stored bytes") {
    // 10000 = 1428*7 + 4: the final cell stores 4 bytes.
    std::uint64_t last = params.stored_cells() - 1;
    client.write_cell(last / params.n, last % params.n, Fp57(0xFFFFFFFFULL));
    CHECK_THROWS_AS(client.write_cell(last / params.n, last % params.n,
                                      Fp57(1ULL << 32)),
                    std::out_of_range);
  }

  SUBCASE("virtual cells read as zero and refuse writes") {
    std::uint64_t cells = params.stored_cells();
    if (cells < params.m * params.n) {
      std::uint64_t c = cells;  // first virtual cell
      CHECK(client.read_cell(c / params.n, c % params.n) == Fp57(0));
      CHECK_THROWS_AS(
          client.write_cell(c / params.n, c % params.n, Fp57(1)),
          std::out_of_range);
    }
  }
}

TEST_CASE("served tampering is rejected and leaves client state intact") {
  SeededRng rng(37);
  auto data = random_bytes(rng, 9'000);
  auto params = tiny_params(data.size(), Mode::PrivateLocal);
  LocalServer server;
  HookedServer hooked(server);
  MemReader reader(data);
  auto client = PorClient::init(params, reader, rng, hooked);

  SUBCASE("flipped byte in a served block") {
    hooked.on_read = [&](TreeId t, std::uint64_t i, std::uint64_t j) {
      auto out = server.read_cell(t, i, j);
      out.data[5] ^= 0x01;
      return out;
    };
    CHECK_THROWS_AS(client.read_bytes(0, 16), IntegrityError);
  }

  SUBCASE("stale block replay after a write") {
    auto stale = server.read_cell(TreeId::Data, 0, 0);
    client.write_cell(0, 0, Fp57(12345));  // root moves on
    hooked.on_read = [&](TreeId, std::uint64_t, std::uint64_t) {
      return stale;
    };
    CHECK_THROWS_AS(client.read_bytes(0, 4), IntegrityError);
  }

  SUBCASE("corrupted store cell makes every audit reject") {
    server.store()->corrupt_raw(TreeId::Data, 100, std::array<std::uint8_t, 1>{
        static_cast<std::uint8_t>(data[100] ^ 0x40)});
    SeededRng arng(9);
    for (int i = 0; i < 20; ++i) CHECK_FALSE(client.audit(arng).accepted);
  }

  SUBCASE("wrong-length response rejects before any math") {
    hooked.on_audit = [](ServerApi::AuditOut out) {
      out.y.resize(out.y.size() - 8);
      return out;
    };
    SeededRng arng(10);
    CHECK_FALSE(client.audit(arng).accepted);
  }

  SUBCASE("non-canonical response element rejects") {
    hooked.on_audit = [](ServerApi::AuditOut out) {
      std::uint64_t big = ~0ULL;
      std::memcpy(out.y.data(), &big, 8);
      return out;
    };
    SeededRng arng(11);
    CHECK_FALSE(client.audit(arng).accepted);
  }

  SUBCASE("perturbed response rejects") {
    hooked.on_audit = [](ServerApi::AuditOut out) {
      out.y[0] ^= 1;
      return out;
    };
    SeededRng arng(12);
    CHECK_FALSE(client.audit(arng).accepted);
  }
}

TEST_CASE("externalized strategy round-trips") {
  SeededRng rng(41);
  auto data = random_bytes(rng, 25'000);
  auto params = tiny_params(data.size(), Mode::PrivateExtern);
  LocalServer server;
  MemReader reader(data);
  auto client = PorClient::init(params, reader, rng, server);

  SeededRng arng(13);
  CHECK(client.audit(arng).accepted);

  SUBCASE("writes re-encrypt the column and advance both roots") {
    Digest rd = client.state().root_data;
    Digest rc = client.state().root_control;
    client.write_bytes(14, {std::array<std::uint8_t, 3>{7, 7, 7}});
    CHECK(client.state().root_data != rd);
    CHECK(client.state().root_control != rc);
    CHECK(client.audit(arng).accepted);
    CHECK(client.read_bytes(14, 3) ==
          std::vector<std::uint8_t>{7, 7, 7});

    // Counter bumped, fresh nonce: the server-side column differs even for
    // an equal plaintext write.
    auto snap1 = server.store()->control_snapshot().data;
    client.write_bytes(14, {std::array<std::uint8_t, 3>{7, 7, 7}});
    auto snap2 = server.store()->control_snapshot().data;
    CHECK(snap1 != snap2);
    CHECK(client.audit(arng).accepted);
  }

  SUBCASE("decrypted control equals a from-scratch recomputation") {
    for (int k = 0; k < 12; ++k) {
      std::uint64_t off = rng.next_u64() % (data.size() - 4);
      std::vector<std::uint8_t> patch(1 + rng.next_u64() % 4);
      rng.fill(patch);
      client.write_bytes(off, patch);
      std::copy(patch.begin(), patch.end(), data.begin() + off);
    }
    CHECK(client.audit(arng).accepted);

    // Pull the control store the way an audit does and compare plaintext.
    auto snap = server.store()->control_snapshot().data;
    ColumnCipher cipher(client.state().key);
    auto oracle = recompute_control(client.state().seeds, params, data);
    const auto cfg = StoreConfig::from_params(params);
    for (std::uint64_t j = 0; j < params.n; ++j) {
      auto plain = cipher.open(
          j, std::span<const std::uint8_t>(snap).subspan(
                 j * cfg.control_record_bytes, cfg.control_record_bytes));
      for (std::uint32_t k = 0; k < params.t; ++k) {
        Fp57 v = fp_from_bytes(
            {plain.data() + k * kPrivateElemBytes, kPrivateElemBytes});
        CHECK(v == oracle.at(k, j));
      }
    }
  }

  SUBCASE("tampered control store rejects the audit") {
    server.store()->corrupt_raw(TreeId::Control, 9,
                                std::array<std::uint8_t, 1>{0xAB});
    CHECK_FALSE(client.audit(arng).accepted);
  }
}

TEST_CASE("extraction rebuilds the exact file from honest transcripts") {
  SeededRng rng(43);
  auto data = random_bytes(rng, 1792);  // 16 x 16 cells
  auto params = tiny_params(data.size(), Mode::PrivateLocal, 10);
  REQUIRE(params.n == 16);
  REQUIRE(params.e == 304);

  LocalServer server;
  MemReader reader(data);
  auto client = PorClient::init(params, reader, rng, server);

  std::vector<DecodedTranscript<Fp57>> ts;
  for (std::uint64_t k = 0; k < params.e; ++k) {
    auto tr = client.audit(rng);
    REQUIRE(tr.accepted);
    DecodedTranscript<Fp57> d;
    d.rho = fp_from_bytes(tr.rho);
    d.accepted = true;
    for (std::uint64_t i = 0; i < params.m; ++i)
      d.y.push_back(fp_from_bytes(
          {tr.y.data() + i * kPrivateElemBytes, kPrivateElemBytes}));
    ts.push_back(std::move(d));
  }

  SUBCASE("exact reconstruction") {
    auto out =
        extract_private(params.m, params.n, params.n_bytes, params.e, ts);
    CHECK(out == data);
  }

  SUBCASE("reconstruction after writes matches the current content") {
    // Rebuild transcripts after a few writes.
    for (int k = 0; k < 5; ++k) {
      std::uint64_t off = rng.next_u64() % (data.size() - 2);
      std::vector<std::uint8_t> patch{static_cast<std::uint8_t>(k + 1),
                                      static_cast<std::uint8_t>(k + 2)};
      client.write_bytes(off, patch);
      std::copy(patch.begin(), patch.end(), data.begin() + off);
    }
    std::vector<DecodedTranscript<Fp57>> fresh;
    for (std::uint64_t k = 0; k < params.e; ++k) {
      auto tr = client.audit(rng);
      DecodedTranscript<Fp57> d;
      d.rho = fp_from_bytes(tr.rho);
      d.accepted = tr.accepted;
      for (std::uint64_t i = 0; i < params.m; ++i)
        d.y.push_back(fp_from_bytes(
            {tr.y.data() + i * kPrivateElemBytes, kPrivateElemBytes}));
      fresh.push_back(std::move(d));
    }
    auto out = extract_private(params.m, params.n, params.n_bytes, params.e,
                               fresh);
    CHECK(out == data);
  }

  SUBCASE("one shared challenge cannot invert the system") {
    std::vector<DecodedTranscript<Fp57>> same(params.e, ts[0]);
    CHECK_THROWS_AS(extract_private(params.m, params.n, params.n_bytes,
                                    params.e, same),
                    ExtractFail);
  }

  SUBCASE("a forged accepted transcript is flagged") {
    auto forged = ts;
    forged[200].y[3] += Fp57(1);
    CHECK_THROWS_AS(extract_private(params.m, params.n, params.n_bytes,
                                    params.e, forged),
                    InconsistencyError);
  }

  SUBCASE("too few transcripts violate the contract") {
    std::vector<DecodedTranscript<Fp57>> few(ts.begin(), ts.begin() + 10);
    CHECK_THROWS_AS(extract_private(params.m, params.n, params.n_bytes,
                                    params.e, few),
                    std::invalid_argument);
  }
}

TEST_CASE("documented two-point extraction example") {
  // M = [[1,2],[3,4]]: transcripts (1, [3,7]) and (2, [10,22]).
  std::vector<DecodedTranscript<Fp57>> ts(2);
  ts[0].rho = Fp57(1);
  ts[0].y = {Fp57(3), Fp57(7)};
  ts[0].accepted = true;
  ts[1].rho = Fp57(2);
  ts[1].y = {Fp57(10), Fp57(22)};
  ts[1].accepted = true;

  auto m = extract_matrix<Fp57>(2, 2, 2, ts);
  CHECK(m.at(0, 0) == Fp57(1));
  CHECK(m.at(0, 1) == Fp57(2));
  CHECK(m.at(1, 0) == Fp57(3));
  CHECK(m.at(1, 1) == Fp57(4));
}

TEST_CASE("client state files round-trip") {
  SeededRng rng(47);
  auto dir = std::filesystem::temp_directory_path() / "por_state_test";
  std::filesystem::create_directories(dir);

  for (Mode mode : {Mode::PrivateLocal, Mode::PrivateExtern}) {
    auto data = random_bytes(rng, 5'000);
    auto params = tiny_params(data.size(), mode);
    LocalServer server;
    MemReader reader(data);
    auto client = PorClient::init(params, reader, rng, server);

    auto path = (dir / ("state" + std::to_string(int(mode)))).string();
    save_client_state(client.state(), path);
    auto loaded = load_client_state(path);

    CHECK(loaded.params.mode == mode);
    CHECK(loaded.params.n_bytes == params.n_bytes);
    CHECK(loaded.seeds == client.state().seeds);
    CHECK(loaded.root_data == client.state().root_data);
    if (mode == Mode::PrivateLocal) {
      CHECK(loaded.control == client.state().control);
    } else {
      CHECK(loaded.key == client.state().key);
      CHECK(loaded.root_control == client.state().root_control);
    }

    // The reloaded client keeps working against the same server.
    PorClient resumed(loaded, server);
    SeededRng arng(15);
    CHECK(resumed.audit(arng).accepted);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("transcript files round-trip") {
  auto dir = std::filesystem::temp_directory_path() / "por_tr_test";
  std::filesystem::create_directories(dir);
  AuditTranscript tr;
  tr.rho = {1, 2, 3, 4, 5, 6, 7, 8};
  tr.y = {9, 9, 9, 9, 9, 9, 9, 9, 1, 1, 1, 1, 1, 1, 1, 1};
  tr.accepted = true;
  auto path = (dir / "t0.port").string();
  save_transcript(tr, Mode::PrivateLocal, path);
  auto back = load_transcript(path);
  CHECK(back.mode == Mode::PrivateLocal);
  CHECK(back.transcript.rho == tr.rho);
  CHECK(back.transcript.y == tr.y);
  CHECK(back.transcript.accepted);
  std::filesystem::remove_all(dir);
}
