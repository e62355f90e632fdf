#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "por/errors.hpp"

namespace por {

/// Little-endian binary writer used by the state files, manifests and wire
/// messages.
class ByteWriter {
 public:
  std::vector<std::uint8_t>& out() { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void u16_be(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  void u32_be(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8)
      buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void bytes(std::span<const std::uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }
  void str(const std::string& s) {
    bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }

 private:
  void raw(const void* p, std::size_t len) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + len);
  }
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; throws ProtocolError on truncation.
class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto b = take(2);
    std::uint16_t v;
    std::memcpy(&v, b.data(), 2);
    return v;
  }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v;
    std::memcpy(&v, b.data(), 4);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v;
    std::memcpy(&v, b.data(), 8);
    return v;
  }
  std::uint16_t u16_be() {
    auto b = take(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  std::uint32_t u32_be() {
    auto b = take(4);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
  }
  std::span<const std::uint8_t> take(std::size_t len) {
    if (remaining() < len) throw ProtocolError("truncated payload");
    auto s = data_.subspan(pos_, len);
    pos_ += len;
    return s;
  }
  std::span<const std::uint8_t> rest() { return take(remaining()); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace por
