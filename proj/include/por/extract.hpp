#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "por/errors.hpp"
#include "por/field.hpp"
#include "por/interpolate.hpp"

namespace por {

/// Not enough distinct accepted challenges to invert the system.
class ExtractFail : public std::runtime_error {
 public:
  ExtractFail(std::size_t distinct, std::size_t needed)
      : std::runtime_error("extraction failed: " + std::to_string(distinct) +
                           " distinct accepted challenges, need " +
                           std::to_string(needed)),
        distinct_(distinct),
        needed_(needed) {}
  std::size_t distinct() const { return distinct_; }
  std::size_t needed() const { return needed_; }

 private:
  std::size_t distinct_;
  std::size_t needed_;
};

template <class F>
struct DecodedTranscript {
  F rho{};
  std::vector<F> y;
  bool accepted = false;
};

/// Rebuild the data matrix from audit transcripts alone: pick the first n
/// distinct accepted challenges, interpolate each row, and cross-check every
/// remaining accepted transcript against the result. A cross-check failure
/// means some accepted transcript was forged, which has negligible
/// probability against the real protocol.
template <class F>
Matrix<F> extract_matrix(std::uint64_t m, std::uint64_t n,
                         std::uint64_t e_required,
                         std::span<const DecodedTranscript<F>> transcripts) {
  if (transcripts.size() < e_required)
    throw std::invalid_argument(
        "need at least " + std::to_string(e_required) + " transcripts, got " +
        std::to_string(transcripts.size()));
  std::size_t accepted = 0;
  for (const auto& tr : transcripts) accepted += tr.accepted ? 1 : 0;
  if (2 * accepted <= e_required)
    throw std::invalid_argument("more than half of the audits must accept");

  // The first n distinct accepted challenges define the system; every other
  // accepted transcript (extra points and repeated challenges alike) becomes
  // a consistency check.
  std::vector<F> points;
  std::vector<const DecodedTranscript<F>*> defining;
  std::vector<const DecodedTranscript<F>*> checks;
  points.reserve(n);
  for (const auto& tr : transcripts) {
    if (!tr.accepted) continue;
    if (tr.y.size() != m)
      throw std::invalid_argument("transcript has wrong response length");
    bool seen = false;
    for (const F& p : points) seen |= (p == tr.rho);
    if (!seen && points.size() < n) {
      points.push_back(tr.rho);
      defining.push_back(&tr);
    } else {
      checks.push_back(&tr);
    }
  }
  if (points.size() < n) throw ExtractFail(points.size(), n);

  Matrix<F> y_cols(m, n);
  for (std::size_t l = 0; l < n; ++l)
    for (std::uint64_t i = 0; i < m; ++i) y_cols.at(i, l) = defining[l]->y[i];

  Matrix<F> data = interpolate_rows<F>(points, y_cols);

  for (const auto* tr : checks) {
    auto expect = data.mul_vec(powers(tr->rho, n));
    if (!std::equal(expect.begin(), expect.end(), tr->y.begin()))
      throw InconsistencyError(
          "accepted transcript disagrees with reconstruction");
  }
  return data;
}

/// Reconstructed matrix back to raw bytes, truncated to the true length.
/// A cell that cannot have come from byte data raises InconsistencyError.
template <class F, class CellWriter>
std::vector<std::uint8_t> matrix_to_bytes(const Matrix<F>& data,
                                          std::uint64_t n_bytes,
                                          std::size_t chunk_bytes,
                                          CellWriter&& write_cell) {
  const std::uint64_t stored =
      (n_bytes + chunk_bytes - 1) / chunk_bytes;
  std::vector<std::uint8_t> out(stored * chunk_bytes);
  for (std::uint64_t c = 0; c < stored; ++c) {
    const F& v = data.at(c / data.cols(), c % data.cols());
    if (!write_cell(v, std::span<std::uint8_t>(out.data() + c * chunk_bytes,
                                               chunk_bytes)))
      throw InconsistencyError("reconstructed cell is not raw data");
  }
  // Truncated tail bytes must be zero, or the transcripts lied.
  for (std::uint64_t b = n_bytes; b < out.size(); ++b)
    if (out[b] != 0)
      throw InconsistencyError("reconstructed tail spills past the file end");
  out.resize(n_bytes);
  return out;
}

/// Private-mode extraction: transcripts to file bytes.
std::vector<std::uint8_t> extract_private(
    std::uint64_t m, std::uint64_t n, std::uint64_t n_bytes,
    std::uint64_t e_required,
    std::span<const DecodedTranscript<Fp57>> transcripts);

}  // namespace por
