#pragma once

#include <cstdint>
#include <string>

namespace por {

enum class Mode : std::uint8_t {
  PrivateLocal = 0,   // control matrix kept by the client
  PrivateExtern = 1,  // control matrix encrypted and stored server-side
  Public = 2,         // control matrix hidden in group exponents
};

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::PrivateLocal: return "private-local";
    case Mode::PrivateExtern: return "private-extern";
    case Mode::Public: return "public";
  }
  return "?";
}

/// Block sizes stay a multiple of the cell size so a cell never straddles
/// two blocks; both are within 0.1% of 8 KiB.
inline constexpr std::size_t kPrivateBlockBytes = 8190;  // 7 * 1170
inline constexpr std::size_t kPublicBlockBytes = 8184;   // 31 * 264
inline constexpr std::size_t kPublicChunkBytes = 31;
inline constexpr std::size_t kPublicElemBytes = 32;

struct PorParams {
  Mode mode = Mode::PrivateLocal;
  std::uint32_t lambda = 40;
  std::uint32_t kappa = 112;
  std::uint64_t n_bytes = 0;

  std::uint64_t m = 0;  // rows
  std::uint64_t n = 0;  // columns
  std::uint32_t t = 1;  // control rows
  std::uint64_t e = 0;  // transcripts required by extraction

  std::size_t chunk_bytes = 0;
  std::size_t elem_bytes = 0;
  std::size_t block_bytes = 0;

  bool is_private() const { return mode != Mode::Public; }

  std::uint64_t cell_count() const { return m * n; }
  std::uint64_t stored_cells() const {
    return (n_bytes + chunk_bytes - 1) / chunk_bytes;
  }
  std::uint64_t leaf_count() const {
    return (n_bytes + block_bytes - 1) / block_bytes;
  }
};

/// Matrix shape, control-row count and extraction constant for a file of
/// n_bytes bytes. Throws ConstraintError when the field cannot support the
/// requested dimensions.
PorParams derive_params(std::uint64_t n_bytes, std::uint32_t lambda,
                        std::uint32_t kappa, Mode mode);

/// Effective computational security of the public mode for a given row
/// count: half the gap between the group order and m.
double public_effective_kappa(std::uint64_t m);

}  // namespace por
