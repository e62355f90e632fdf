#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <thread>

#include "por/daemon.hpp"
#include "por/errors.hpp"
#include "por/matrix_view.hpp"
#include "por/remote.hpp"
#include "por/statefile.hpp"

using namespace por;

namespace {

std::vector<std::uint8_t> rand_bytes(Rng& rng, std::size_t len) {
  std::vector<std::uint8_t> d(len);
  rng.fill(d);
  return d;
}

int raw_connect(std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) ==
          0);
  return fd;
}

}  // namespace

TEST_CASE("frame encoding") {
  SUBCASE("challenge frame has the documented layout") {
    // corr = 7, rho = 1 (8-byte little-endian).
    std::uint8_t rho[8] = {1, 0, 0, 0, 0, 0, 0, 0};
    wire::AuditChallenge m{7, rho};
    auto frame = wire::frame_encode(wire::MsgType::kAuditChallenge,
                                    wire::encode_audit_challenge(m));
    REQUIRE(frame.size() == 21);
    // Length counts type + payload, big-endian.
    CHECK(frame[0] == 0);
    CHECK(frame[1] == 0);
    CHECK(frame[2] == 0);
    CHECK(frame[3] == 17);
    CHECK(frame[4] == 0x12);
    CHECK(frame[5] == 7);  // corr id little-endian
    CHECK(frame[13] == 1);  // rho little-endian
    for (int i = 14; i < 21; ++i) CHECK(frame[i] == 0);

    std::size_t used = 0;
    auto view = wire::frame_decode(frame, &used);
    CHECK(used == frame.size());
    CHECK(view.type == wire::MsgType::kAuditChallenge);
    auto back = wire::decode_audit_challenge(view.payload);
    CHECK(back.corr == 7);
    CHECK(std::equal(back.rho.begin(), back.rho.end(), rho));
  }

  SUBCASE("round trip under fuzzed messages") {
    SeededRng rng(71);
    for (int it = 0; it < 200; ++it) {
      wire::WriteReq m;
      m.corr = rng.next_u64();
      m.tree = (rng.next_u64() & 1) ? TreeId::Control : TreeId::Data;
      m.i = rng.next_u64();
      m.j = rng.next_u64();
      auto val = rand_bytes(rng, rng.next_u64() % 64);
      m.value = val;
      auto bytes = wire::encode_write_req(m);
      auto frame = wire::frame_encode(wire::MsgType::kWriteReq, bytes);
      auto view = wire::frame_decode(frame);
      auto back = wire::decode_write_req(view.payload);
      CHECK(back.corr == m.corr);
      CHECK(back.tree == m.tree);
      CHECK(back.i == m.i);
      CHECK(back.j == m.j);
      CHECK(std::equal(back.value.begin(), back.value.end(), val.begin()));
      // Re-encoding gives identical bytes.
      auto again = wire::frame_encode(wire::MsgType::kWriteReq,
                                      wire::encode_write_req(back));
      CHECK(again == frame);
    }
  }

  SUBCASE("truncated and oversize frames are protocol errors") {
    std::uint8_t rho[8] = {0};
    wire::AuditChallenge m{1, rho};
    auto frame = wire::frame_encode(wire::MsgType::kAuditChallenge,
                                    wire::encode_audit_challenge(m));
    frame.pop_back();
    CHECK_THROWS_AS(wire::frame_decode(frame), ProtocolError);

    std::vector<std::uint8_t> huge{0xFF, 0xFF, 0xFF, 0xFF, 0x12};
    CHECK_THROWS_AS(wire::frame_decode(huge), ProtocolError);

    std::vector<std::uint8_t> unknown{0, 0, 0, 1, 0x55};
    CHECK_THROWS_AS(wire::frame_decode(unknown), ProtocolError);
  }
}

TEST_CASE("daemon serves the private protocol end to end") {
  SeededRng rng(73);
  auto data = rand_bytes(rng, 60'000);
  auto params = derive_params(data.size(), 40, 112, Mode::PrivateLocal);

  Daemon daemon(DaemonConfig{});
  std::uint16_t port = daemon.start(0);
  const std::string endpoint = "127.0.0.1:" + std::to_string(port);

  RemoteServer remote(endpoint);
  MemReader reader(data);
  auto client = PorClient::init(params, reader, rng, remote);

  SUBCASE("audits succeed and match the closed-form wire cost") {
    remote.reset_counters();
    auto tr = client.audit(rng);
    CHECK(tr.accepted);
    CHECK(remote.bytes_sent() + remote.bytes_received() ==
          wire::private_audit_wire_bytes(params.m));
  }

  SUBCASE("reads and writes verify across the wire") {
    CHECK(client.read_bytes(100, 50) ==
          std::vector<std::uint8_t>(data.begin() + 100, data.begin() + 150));
    std::vector<std::uint8_t> patch{1, 2, 3, 4, 5};
    client.write_bytes(5555, patch);
    CHECK(client.read_bytes(5555, 5) == patch);
    CHECK(client.audit(rng).accepted);
  }

  SUBCASE("equal challenges give byte-identical responses concurrently") {
    std::uint8_t rho[8] = {9, 0, 0, 0, 0, 0, 0, 0};
    std::vector<std::vector<std::uint8_t>> ys(4);
    std::vector<std::thread> pool;
    std::atomic<int> failures{0};
    for (int k = 0; k < 4; ++k)
      pool.emplace_back([&, k] {
        try {
          RemoteServer conn(endpoint);
          ys[k] = conn.audit(rho).y;
        } catch (...) {
          ++failures;
        }
      });
    for (auto& t : pool) t.join();
    CHECK(failures == 0);
    for (int k = 1; k < 4; ++k) CHECK(ys[k] == ys[0]);
  }

  SUBCASE("malformed frames drop the session but not the daemon") {
    SeededRng frng(75);
    for (int it = 0; it < 10'000; ++it) {
      int fd = raw_connect(port);
      std::uint8_t junk[16];
      frng.fill(junk);
      // Plausible length prefix so the server reads the body.
      junk[0] = 0;
      junk[1] = 0;
      junk[2] = 0;
      junk[3] = 11;
      ::send(fd, junk, sizeof(junk), MSG_NOSIGNAL);
      ::close(fd);
    }
    // The store is intact and a fresh honest session succeeds.
    RemoteServer fresh(endpoint);
    ClientState st = client.state();
    PorClient c2(st, fresh);
    CHECK(c2.audit(rng).accepted);
  }

  daemon.stop();
}

TEST_CASE("writes during audits never yield a torn snapshot") {
  SeededRng rng(76);
  auto data = rand_bytes(rng, 50'000);
  auto params = derive_params(data.size(), 40, 112, Mode::PrivateLocal);

  Daemon daemon(DaemonConfig{});
  std::uint16_t port = daemon.start(0);
  const std::string endpoint = "127.0.0.1:" + std::to_string(port);

  RemoteServer remote(endpoint);
  MemReader reader(data);
  auto client = PorClient::init(params, reader, rng, remote);

  // Every data version the writer ever commits; the auditor's responses
  // must each match one of them exactly.
  std::vector<std::vector<std::uint8_t>> versions{data};
  std::mutex versions_mu;

  std::atomic<bool> writer_done{false};
  std::thread writer([&] {
    for (int k = 0; k < 24; ++k) {
      std::vector<std::uint8_t> patch{static_cast<std::uint8_t>(k + 1),
                                      static_cast<std::uint8_t>(k * 3)};
      std::uint64_t off = 700 * static_cast<std::uint64_t>(k) + 11;
      client.write_bytes(off, patch);
      std::lock_guard lock(versions_mu);
      versions.push_back(versions.back());
      std::copy(patch.begin(), patch.end(),
                versions.back().begin() + off);
    }
    writer_done = true;
  });

  std::vector<std::pair<Fp57, std::vector<std::uint8_t>>> audits;
  {
    SeededRng arng(77);
    RemoteServer conn(endpoint);
    while (!writer_done) {
      Fp57 rho = fp_random_nonzero(arng);
      std::uint8_t rho_bytes[8];
      fp_to_bytes(rho, rho_bytes);
      audits.emplace_back(rho, conn.audit(rho_bytes).y);
    }
  }
  writer.join();

  for (const auto& [rho, ybytes] : audits) {
    REQUIRE(ybytes.size() == params.m * 8);
    auto x = powers(rho, params.n);
    bool matched = false;
    for (const auto& version : versions) {
      MatrixView view{version, params.m, params.n, params.chunk_bytes};
      auto y = mat_vec_stream(view, x);
      std::vector<std::uint8_t> want(params.m * 8);
      for (std::uint64_t i = 0; i < params.m; ++i)
        fp_to_bytes(y[i], {want.data() + i * 8, 8});
      if (want == ybytes) {
        matched = true;
        break;
      }
    }
    CHECK(matched);
  }

  daemon.stop();
}

TEST_CASE("init survives daemon restart from disk") {
  SeededRng rng(79);
  auto data = rand_bytes(rng, 30'000);
  auto params = derive_params(data.size(), 40, 112, Mode::PrivateExtern);

  auto dir = std::filesystem::temp_directory_path() / "por_daemon_persist";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  ClientState saved;
  {
    Daemon daemon(DaemonConfig{dir.string()});
    std::uint16_t port = daemon.start(0);
    RemoteServer remote("127.0.0.1:" + std::to_string(port));
    MemReader reader(data);
    auto client = PorClient::init(params, reader, rng, remote);
    CHECK(client.audit(rng).accepted);
    saved = client.state();
    daemon.stop();
  }
  {
    Daemon daemon(DaemonConfig{dir.string()});
    REQUIRE(daemon.has_store());
    std::uint16_t port = daemon.start(0);
    RemoteServer remote("127.0.0.1:" + std::to_string(port));
    PorClient client(saved, remote);
    CHECK(client.audit(rng).accepted);
    CHECK(client.read_bytes(17, 11) ==
          std::vector<std::uint8_t>(data.begin() + 17, data.begin() + 28));
    daemon.stop();
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("transport errors carry distinct codes") {
  // Nothing listens here.
  CHECK_THROWS_AS(RemoteServer("127.0.0.1:1"), TransportError);
  try {
    RemoteServer("127.0.0.1:1");
  } catch (const TransportError& e) {
    CHECK(e.code() == TransportError::Code::Refused);
  }
}
