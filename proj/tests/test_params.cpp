#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "por/errors.hpp"
#include "por/params.hpp"

using namespace por;

TEST_CASE("1GB private file dimensions") {
  auto p = derive_params(1'000'000'000, 40, 112, Mode::PrivateLocal);
  CHECK(p.stored_cells() == 142'857'143);
  CHECK(p.n == 11953);
  CHECK(p.m == 11952);
  CHECK(p.t == 1);
  CHECK(p.m * p.n >= p.stored_cells());
  CHECK(p.block_bytes == 8190);
  CHECK(p.chunk_bytes == 7);
}

TEST_CASE("extraction transcript count") {
  // 28672 bytes = 4096 cells exactly, a 64 x 64 matrix.
  auto p = derive_params(28672, 40, 112, Mode::PrivateLocal);
  CHECK(p.n == 64);
  CHECK(p.m == 64);
  CHECK(p.e == 4 * 64 + 24 * 40);
  CHECK(p.e == 1216);

  auto q = derive_params(1792, 10, 112, Mode::PrivateLocal);
  CHECK(q.n == 16);
  CHECK(q.m == 16);
  CHECK(q.e == 304);
}

TEST_CASE("two control rows at lambda 80") {
  // 8192 x 8192 cells.
  auto p = derive_params(7ULL * 8192 * 8192, 80, 112, Mode::PrivateLocal);
  CHECK(p.m == 8192);
  CHECK(p.t == 2);
}

TEST_CASE("single control row suffices at lambda 40") {
  for (std::uint64_t bytes : {1000ULL, 1'000'000ULL, 1'000'000'000ULL}) {
    auto p = derive_params(bytes, 40, 112, Mode::PrivateLocal);
    CHECK(p.t == 1);
  }
}

TEST_CASE("shape rule always covers the data") {
  for (std::uint64_t bytes = 1; bytes < 3000; bytes += 7) {
    auto p = derive_params(bytes, 40, 112, Mode::PrivateLocal);
    CHECK(p.m * p.n >= p.stored_cells());
    CHECK((p.m - 1) * p.n < p.stored_cells());
  }
  // 1 MiB: chunk count 149797 forces n up to 388.
  auto p = derive_params(1 << 20, 40, 112, Mode::PrivateLocal);
  CHECK(p.stored_cells() == 149797);
  CHECK(p.n == 388);
  CHECK(p.m == 387);
}

TEST_CASE("public mode geometry") {
  auto p = derive_params(1'000'000, 40, 112, Mode::Public);
  CHECK(p.chunk_bytes == 31);
  CHECK(p.elem_bytes == 32);
  CHECK(p.block_bytes == 8184);
  CHECK(p.block_bytes % p.chunk_bytes == 0);
  CHECK(p.m * p.n >= p.stored_cells());
  CHECK(p.t == 1);

  CHECK(public_effective_kappa(5634) > 119.0);
  CHECK(public_effective_kappa(5634) < 120.5);
}

TEST_CASE("degenerate inputs") {
  CHECK_THROWS_AS(derive_params(0, 40, 112, Mode::PrivateLocal),
                  std::invalid_argument);
  CHECK_THROWS_AS(derive_params(100, 0, 112, Mode::PrivateLocal),
                  std::invalid_argument);
}
