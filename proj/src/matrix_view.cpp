#include "por/matrix_view.hpp"

#include <cstring>
#include <stdexcept>
#include <thread>

namespace por {

namespace {

// 2^113-bit products leave room for 2^15 additions in a 128-bit accumulator
// before a reduction is due.
constexpr std::size_t kLazySpan = 1u << 15;

constexpr std::uint64_t kChunkMask = (1ULL << 56) - 1;

}  // namespace

void mat_vec_rows(const MatrixView& view, std::span<const Fp57> x,
                  std::uint64_t row_begin, std::uint64_t row_end,
                  std::span<Fp57> y_out) {
  if (x.size() != view.cols) throw std::invalid_argument("|x| must equal n");
  const std::uint8_t* base = view.bytes.data();
  const std::uint8_t* end = base + view.bytes.size();
  const std::uint64_t stored = view.stored_cells();

  for (std::uint64_t i = row_begin; i < row_end; ++i) {
    const std::uint64_t c0 = i * view.cols;
    if (c0 >= stored) {
      y_out[i - row_begin] = Fp57{};
      continue;
    }
    // Cells of this row that have stored bytes; the rest are zero.
    const std::uint64_t jn =
        std::min<std::uint64_t>(view.cols, stored - c0);
    const std::uint8_t* p = base + c0 * view.chunk_bytes;

    __uint128_t acc = 0;
    std::uint64_t j = 0;
    // Fast path: one unaligned 8-byte load per 7-byte cell.
    while (j < jn && p + 8 <= end) {
      std::uint64_t span_end = std::min<std::uint64_t>(jn, j + kLazySpan);
      for (; j < span_end && p + 8 <= end; ++j, p += 7) {
        std::uint64_t cell;
        std::memcpy(&cell, p, 8);
        acc += static_cast<__uint128_t>(cell & kChunkMask) * x[j].value();
      }
      acc %= Fp57::kModulus;
    }
    // Tail: cells whose 8-byte window would overrun the buffer, including a
    // final partial chunk.
    for (; j < jn; ++j) {
      std::uint64_t cell = view.cell_raw64(c0 + j);
      acc += static_cast<__uint128_t>(cell) * x[j].value();
    }
    y_out[i - row_begin] =
        Fp57::from_raw(static_cast<std::uint64_t>(acc % Fp57::kModulus));
  }
}

std::vector<Fp57> mat_vec_stream(const MatrixView& view,
                                 std::span<const Fp57> x, unsigned threads) {
  if (x.size() != view.cols) throw std::invalid_argument("|x| must equal n");
  std::vector<Fp57> y(view.rows);
  if (view.rows == 0) return y;
  if (threads <= 1 || view.rows == 1) {
    mat_vec_rows(view, x, 0, view.rows, y);
    return y;
  }
  threads = std::min<std::uint64_t>(threads, view.rows);
  const std::uint64_t per = (view.rows + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    const std::uint64_t lo = static_cast<std::uint64_t>(w) * per;
    const std::uint64_t hi = std::min<std::uint64_t>(lo + per, view.rows);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      mat_vec_rows(view, x, lo, hi,
                   std::span<Fp57>(y.data() + lo, hi - lo));
    });
  }
  for (auto& th : pool) th.join();
  return y;
}

}  // namespace por
