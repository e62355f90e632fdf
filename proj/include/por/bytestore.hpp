#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace por {

/// Random-access byte storage backing a server store. The data file is kept
/// exactly as the client wrote it; views are stable for the store's life.
class ByteStore {
 public:
  virtual ~ByteStore() = default;
  virtual std::span<const std::uint8_t> view() const = 0;
  virtual void write(std::uint64_t offset,
                     std::span<const std::uint8_t> bytes) = 0;
  virtual void flush() {}

  std::uint64_t size() const { return view().size(); }
};

class MemStore final : public ByteStore {
 public:
  explicit MemStore(std::vector<std::uint8_t> bytes)
      : bytes_(std::move(bytes)) {}
  explicit MemStore(std::uint64_t size) : bytes_(size) {}

  std::span<const std::uint8_t> view() const override { return bytes_; }
  void write(std::uint64_t offset,
             std::span<const std::uint8_t> bytes) override;

 private:
  std::vector<std::uint8_t> bytes_;
};

/// mmap-backed file store.
class FileStore final : public ByteStore {
 public:
  /// Opens an existing file, or creates one of the given size when create > 0.
  static std::unique_ptr<FileStore> open(const std::string& path,
                                         std::uint64_t create_size = 0);
  ~FileStore() override;

  FileStore(const FileStore&) = delete;
  FileStore& operator=(const FileStore&) = delete;

  std::span<const std::uint8_t> view() const override {
    return {static_cast<const std::uint8_t*>(map_), size_};
  }
  void write(std::uint64_t offset,
             std::span<const std::uint8_t> bytes) override;
  void flush() override;

 private:
  FileStore(int fd, void* map, std::uint64_t size)
      : fd_(fd), map_(map), size_(size) {}
  int fd_;
  void* map_;
  std::uint64_t size_;
};

}  // namespace por
