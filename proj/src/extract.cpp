#include "por/extract.hpp"

namespace por {

std::vector<std::uint8_t> extract_private(
    std::uint64_t m, std::uint64_t n, std::uint64_t n_bytes,
    std::uint64_t e_required,
    std::span<const DecodedTranscript<Fp57>> transcripts) {
  Matrix<Fp57> data = extract_matrix<Fp57>(m, n, e_required, transcripts);
  return matrix_to_bytes<Fp57>(
      data, n_bytes, kPrivateChunkBytes,
      [](const Fp57& v, std::span<std::uint8_t> out) {
        if (v.value() >> 56) return false;
        for (std::size_t b = 0; b < out.size(); ++b)
          out[b] = static_cast<std::uint8_t>(v.value() >> (8 * b));
        return true;
      });
}

}  // namespace por
