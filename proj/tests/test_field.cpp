#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <vector>

#include "por/field.hpp"
#include "por/interpolate.hpp"
#include "por/matrix_view.hpp"
#include "por/rng.hpp"

using namespace por;

namespace {

// Independent reference: plain double loop over the same chunk layout,
// reducing through __uint128_t at every step.
std::vector<std::uint64_t> naive_mat_vec(const std::vector<std::uint8_t>& data,
                                         std::uint64_t m, std::uint64_t n,
                                         const std::vector<std::uint64_t>& x) {
  const std::uint64_t q = Fp57::kModulus;
  std::vector<std::uint64_t> y(m, 0);
  for (std::uint64_t i = 0; i < m; ++i) {
    __uint128_t acc = 0;
    for (std::uint64_t j = 0; j < n; ++j) {
      std::uint64_t cell = 0;
      std::uint64_t off = (i * n + j) * 7;
      for (int k = 0; k < 7; ++k) {
        std::uint64_t idx = off + k;
        if (idx < data.size())
          cell |= static_cast<std::uint64_t>(data[idx]) << (8 * k);
      }
      acc = (acc + static_cast<__uint128_t>(cell) % q * (x[j] % q)) % q;
    }
    y[i] = static_cast<std::uint64_t>(acc);
  }
  return y;
}

std::vector<std::uint8_t> cells_to_bytes(const std::vector<std::uint64_t>& cells) {
  std::vector<std::uint8_t> out(cells.size() * 7);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int k = 0; k < 7; ++k)
      out[c * 7 + k] = static_cast<std::uint8_t>(cells[c] >> (8 * k));
  return out;
}

}  // namespace

TEST_CASE("chunk decoding") {
  std::uint8_t one[7] = {1, 0, 0, 0, 0, 0, 0};
  CHECK(fp_from_chunk(one).value() == 1);

  std::uint8_t zero[7] = {0};
  CHECK(fp_from_chunk(zero).value() == 0);

  std::uint8_t all[7] = {0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
  CHECK(fp_from_chunk(all).value() == 72057594037927935ULL);
  CHECK(fp_from_chunk(all).value() < Fp57::kModulus);

  std::uint8_t bad[6] = {0};
  CHECK_THROWS_AS(fp_from_chunk(bad), std::invalid_argument);
}

TEST_CASE("chunk round trip over random values") {
  SeededRng rng(7);
  for (int it = 0; it < 2000; ++it) {
    std::uint64_t v = rng.next_u64() & ((1ULL << 56) - 1);
    std::uint8_t buf[7];
    fp_to_chunk(Fp57::from_raw(v), buf);
    CHECK(fp_from_chunk(buf).value() == v);
  }
}

TEST_CASE("element serialization is canonical") {
  std::uint8_t buf[8];
  fp_to_bytes(Fp57(12345), buf);
  CHECK(fp_from_bytes(buf) == Fp57(12345));

  std::uint64_t bad = Fp57::kModulus;
  std::memcpy(buf, &bad, 8);
  CHECK_THROWS_AS(fp_from_bytes(buf), std::invalid_argument);
}

TEST_CASE("powers") {
  auto p = powers(Fp57(2), 3);
  CHECK(p == std::vector<Fp57>{Fp57(2), Fp57(4), Fp57(8)});

  auto ones = powers(Fp57(1), 4);
  CHECK(ones == std::vector<Fp57>(4, Fp57(1)));

  using F101 = Zq<101>;
  auto small = powers(F101(3), 3);
  CHECK(small == std::vector<F101>{F101(3), F101(9), F101(27)});

  CHECK_THROWS_AS(powers(Fp57(0), 3), std::invalid_argument);
}

TEST_CASE("dot products") {
  using F97 = Zq<97>;
  std::vector<F97> a{F97(2), F97(3)}, b{F97(4), F97(5)};
  CHECK(dot<F97>(a, b) == F97(23));

  std::vector<Fp57> v{Fp57(9), Fp57(11)}, z{Fp57(0), Fp57(0)};
  CHECK(dot<Fp57>(v, z) == Fp57(0));

  std::vector<Fp57> u{Fp57(1), Fp57(1), Fp57(1)}, w{Fp57(5), Fp57(6), Fp57(7)};
  CHECK(dot<Fp57>(u, w) == Fp57(18));

  std::vector<Fp57> shrt{Fp57(1)};
  CHECK_THROWS_AS(dot<Fp57>(u, shrt), std::invalid_argument);
}

TEST_CASE("mat_vec_stream on small matrices") {
  auto bytes = cells_to_bytes({1, 2, 3, 4});
  MatrixView view{bytes, 2, 2, 7};

  std::vector<Fp57> unit{Fp57(1), Fp57(1)};
  auto y = mat_vec_stream(view, unit);
  CHECK(y == std::vector<Fp57>{Fp57(3), Fp57(7)});

  auto x = powers(Fp57(2), 2);
  y = mat_vec_stream(view, x);
  CHECK(y == std::vector<Fp57>{Fp57(10), Fp57(22)});

  auto zero = cells_to_bytes({0, 0, 0, 0});
  MatrixView zv{zero, 2, 2, 7};
  y = mat_vec_stream(zv, x);
  CHECK(y == std::vector<Fp57>{Fp57(0), Fp57(0)});
}

TEST_CASE("mat_vec_stream matches naive reference") {
  SeededRng rng(11);
  for (int it = 0; it < 40; ++it) {
    std::uint64_t m = 1 + rng.next_u64() % 64;
    std::uint64_t n = 1 + rng.next_u64() % 64;
    // Byte length deliberately not cell-aligned: exercises the zero tail.
    std::uint64_t max_bytes = m * n * 7;
    std::uint64_t len = 1 + rng.next_u64() % max_bytes;
    std::vector<std::uint8_t> data(len);
    rng.fill(data);

    std::vector<std::uint64_t> xr(n);
    std::vector<Fp57> x(n);
    for (std::uint64_t j = 0; j < n; ++j) {
      xr[j] = rng.next_u64() % Fp57::kModulus;
      x[j] = Fp57::from_raw(xr[j]);
    }

    MatrixView view{data, m, n, 7};
    auto got = mat_vec_stream(view, x, 1 + it % 4);
    auto want = naive_mat_vec(data, m, n, xr);
    REQUIRE(got.size() == want.size());
    for (std::uint64_t i = 0; i < m; ++i) {
      CHECK(got[i].value() == want[i]);
      CHECK(got[i].value() < Fp57::kModulus);
    }
  }
}

TEST_CASE("mat_vec row partitions merge to the same result") {
  SeededRng rng(13);
  std::uint64_t m = 37, n = 23;
  std::vector<std::uint8_t> data(m * n * 7 - 3);
  rng.fill(data);
  std::vector<Fp57> x(n);
  for (auto& v : x) v = fp_random_nonzero(rng);
  MatrixView view{data, m, n, 7};

  auto whole = mat_vec_stream(view, x);
  for (std::uint64_t split : {1ULL, 5ULL, 17ULL, 36ULL}) {
    std::vector<Fp57> parts(m);
    mat_vec_rows(view, x, 0, split, {parts.data(), split});
    mat_vec_rows(view, x, split, m, {parts.data() + split, m - split});
    CHECK(parts == whole);
  }
  CHECK(mat_vec_stream(view, x, 4) == whole);
}

TEST_CASE("interpolate_rows solves the hand system") {
  // One row: a + b = 3 at rho=1, 2a + 4b = 10 at rho=2.
  std::vector<Fp57> points{Fp57(1), Fp57(2)};
  Matrix<Fp57> y_cols(1, 2);
  y_cols.at(0, 0) = Fp57(3);
  y_cols.at(0, 1) = Fp57(10);
  auto m = interpolate_rows<Fp57>(points, y_cols);
  CHECK(m.at(0, 0) == Fp57(1));
  CHECK(m.at(0, 1) == Fp57(2));
}

TEST_CASE("interpolate_rows zero case") {
  std::vector<Fp57> points{Fp57(1), Fp57(2), Fp57(3)};
  Matrix<Fp57> y_cols(2, 3);
  auto m = interpolate_rows<Fp57>(points, y_cols);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(m.at(i, j) == Fp57(0));
}

TEST_CASE("interpolate_rows round trip") {
  SeededRng rng(17);
  SUBCASE("fixed 4x4 with points 2,3,5,7") {
    Matrix<Fp57> m(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) m.at(i, j) = fp_random_nonzero(rng);
    std::vector<Fp57> points{Fp57(2), Fp57(3), Fp57(5), Fp57(7)};
    Matrix<Fp57> y_cols(4, 4);
    for (std::size_t l = 0; l < 4; ++l) {
      auto y = m.mul_vec(powers(points[l], 4));
      for (std::size_t i = 0; i < 4; ++i) y_cols.at(i, l) = y[i];
    }
    CHECK(interpolate_rows<Fp57>(points, y_cols) == m);
  }
  SUBCASE("random shapes and points") {
    for (int it = 0; it < 20; ++it) {
      std::size_t mm = 1 + rng.next_u64() % 8;
      std::size_t nn = 1 + rng.next_u64() % 16;
      Matrix<Fp57> m(mm, nn);
      for (std::size_t i = 0; i < mm; ++i)
        for (std::size_t j = 0; j < nn; ++j)
          m.at(i, j) = Fp57::from_raw(rng.next_u64() % Fp57::kModulus);
      std::vector<Fp57> points;
      while (points.size() < nn) {
        Fp57 p = fp_random_nonzero(rng);
        bool dup = false;
        for (auto& q : points) dup |= (q == p);
        if (!dup) points.push_back(p);
      }
      Matrix<Fp57> y_cols(mm, nn);
      for (std::size_t l = 0; l < nn; ++l) {
        auto y = m.mul_vec(powers(points[l], nn));
        for (std::size_t i = 0; i < mm; ++i) y_cols.at(i, l) = y[i];
      }
      CHECK(interpolate_rows<Fp57>(points, y_cols) == m);
    }
  }
}

TEST_CASE("interpolation rejects repeated or zero points") {
  std::vector<Fp57> repeated{Fp57(4), Fp57(4)};
  Matrix<Fp57> y(1, 2);
  CHECK_THROWS_AS(interpolate_rows<Fp57>(repeated, y),
                  std::invalid_argument);
  std::vector<Fp57> with_zero{Fp57(0), Fp57(4)};
  CHECK_THROWS_AS(interpolate_rows<Fp57>(with_zero, y),
                  std::invalid_argument);
}

TEST_CASE("field arithmetic stays canonical near the modulus") {
  Fp57 top = Fp57::from_raw(Fp57::kModulus - 1);
  CHECK((top + Fp57(1)).value() == 0);
  CHECK((top * top).value() < Fp57::kModulus);
  CHECK((Fp57(0) - Fp57(1)).value() == Fp57::kModulus - 1);
  CHECK((top.inv() * top) == Fp57(1));
}
