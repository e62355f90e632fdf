#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "por/field.hpp"

namespace por {

/// A byte sequence interpreted in place as an m x n row-major matrix of
/// field elements, chunk_bytes bytes per cell. Nothing is re-encoded: the
/// view owns no data and cells past the end of the bytes read as zero.
struct MatrixView {
  std::span<const std::uint8_t> bytes;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::size_t chunk_bytes = kPrivateChunkBytes;

  std::uint64_t cell_count() const { return rows * cols; }

  /// Number of cells that have at least one stored byte.
  std::uint64_t stored_cells() const {
    return (bytes.size() + chunk_bytes - 1) / chunk_bytes;
  }

  /// Little-endian value of cell c (row-major linear index), zero-padded at
  /// the file tail and virtual zero past it.
  std::uint64_t cell_raw64(std::uint64_t c) const {
    std::uint64_t off = c * chunk_bytes;
    if (off >= bytes.size()) return 0;
    std::size_t avail = bytes.size() - off;
    if (avail > chunk_bytes) avail = chunk_bytes;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < avail; ++i)
      v |= static_cast<std::uint64_t>(bytes[off + i]) << (8 * i);
    return v;
  }
};

/// y = M x over the 57-bit field, streaming the raw bytes once. Rows may be
/// split across workers; each row is summed entirely by one worker, so the
/// result is independent of the partition.
std::vector<Fp57> mat_vec_stream(const MatrixView& view,
                                 std::span<const Fp57> x,
                                 unsigned threads = 1);

/// Single row range worker; exposed so partition invariance is testable.
void mat_vec_rows(const MatrixView& view, std::span<const Fp57> x,
                  std::uint64_t row_begin, std::uint64_t row_end,
                  std::span<Fp57> y_out);

}  // namespace por
