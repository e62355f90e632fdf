#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace por {

inline constexpr std::size_t kAeadKeyBytes = 32;
inline constexpr std::size_t kAeadTagBytes = 16;

using AeadKey = std::array<std::uint8_t, kAeadKeyBytes>;

/// Per-column authenticated encryption for the externalized control matrix.
/// Each column is sealed under a nonce derived from (column index, write
/// counter); the counter rides in clear at the front of the record so the
/// client stays stateless across writes.
class ColumnCipher {
 public:
  explicit ColumnCipher(const AeadKey& key) : key_(key) {}

  static std::size_t record_bytes(std::size_t plain_bytes) {
    return 8 + plain_bytes + kAeadTagBytes;
  }

  /// record = counter (u64 LE) || ciphertext || tag.
  std::vector<std::uint8_t> seal(std::uint64_t column, std::uint64_t counter,
                                 std::span<const std::uint8_t> plain) const;

  /// Throws IntegrityError when the tag does not verify.
  std::vector<std::uint8_t> open(std::uint64_t column,
                                 std::span<const std::uint8_t> record) const;

  static std::uint64_t record_counter(std::span<const std::uint8_t> record);

 private:
  AeadKey key_;
};

}  // namespace por
