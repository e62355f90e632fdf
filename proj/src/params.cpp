#include "por/params.hpp"

#include <cmath>
#include <stdexcept>

#include "por/errors.hpp"
#include "por/field.hpp"

namespace por {

namespace {

// Group order of the public mode, ~2^252; only its size matters here.
constexpr double kPublicOrderLog2 = 252.0;

std::uint64_t isqrt_ceil(std::uint64_t v) {
  if (v == 0) return 0;
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
  while (r > 0 && (r - 1) * (r - 1) >= v) --r;
  while (r * r < v) ++r;
  return r;
}

}  // namespace

double public_effective_kappa(std::uint64_t m) {
  return (kPublicOrderLog2 - std::log2(static_cast<double>(m))) / 2.0;
}

PorParams derive_params(std::uint64_t n_bytes, std::uint32_t lambda,
                        std::uint32_t kappa, Mode mode) {
  if (n_bytes == 0) throw std::invalid_argument("empty file");
  if (lambda == 0) throw std::invalid_argument("lambda must be positive");

  PorParams p;
  p.mode = mode;
  p.lambda = lambda;
  p.kappa = kappa;
  p.n_bytes = n_bytes;
  if (p.is_private()) {
    p.chunk_bytes = kPrivateChunkBytes;
    p.elem_bytes = kPrivateElemBytes;
    p.block_bytes = kPrivateBlockBytes;
  } else {
    p.chunk_bytes = kPublicChunkBytes;
    p.elem_bytes = kPublicElemBytes;
    p.block_bytes = kPublicBlockBytes;
  }

  const std::uint64_t chunks =
      (n_bytes + p.chunk_bytes - 1) / p.chunk_bytes;
  p.n = isqrt_ceil(chunks);
  p.m = (chunks + p.n - 1) / p.n;

  const double log2q = p.is_private()
                           ? std::log2(static_cast<double>(Fp57::kModulus))
                           : kPublicOrderLog2;
  const double log2m = std::log2(static_cast<double>(p.m));
  if (log2q <= log2m)
    throw ConstraintError("field too small: log2(q) <= log2(m)");
  p.t = static_cast<std::uint32_t>(
      std::ceil(static_cast<double>(lambda) / (log2q - log2m)));
  if (p.t == 0) p.t = 1;

  p.e = 4 * p.n + 24 * static_cast<std::uint64_t>(lambda);

  // q >= 16n + 96*lambda; the public group order dwarfs any feasible rhs.
  if (p.is_private()) {
    const __uint128_t rhs =
        16 * static_cast<__uint128_t>(p.n) + 96 * static_cast<__uint128_t>(lambda);
    if (static_cast<__uint128_t>(Fp57::kModulus) < rhs)
      throw ConstraintError("constraint violated: q >= 16n + 96*lambda");
  }
  return p;
}

}  // namespace por
