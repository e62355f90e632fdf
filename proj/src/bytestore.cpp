#include "por/bytestore.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "por/errors.hpp"

namespace por {

void MemStore::write(std::uint64_t offset,
                     std::span<const std::uint8_t> bytes) {
  if (offset + bytes.size() > bytes_.size())
    throw std::out_of_range("write past end of store");
  std::memcpy(bytes_.data() + offset, bytes.data(), bytes.size());
}

std::unique_ptr<FileStore> FileStore::open(const std::string& path,
                                           std::uint64_t create_size) {
  int fd = ::open(path.c_str(), create_size ? (O_RDWR | O_CREAT) : O_RDWR,
                  0644);
  if (fd < 0)
    throw TransportError(TransportError::Code::Io,
                         "open " + path + ": " + std::strerror(errno));
  std::uint64_t size = create_size;
  if (create_size) {
    if (ftruncate(fd, static_cast<off_t>(create_size)) != 0) {
      ::close(fd);
      throw TransportError(TransportError::Code::Io,
                           "ftruncate " + path + ": " + std::strerror(errno));
    }
  } else {
    struct stat st{};
    if (fstat(fd, &st) != 0 || st.st_size <= 0) {
      ::close(fd);
      throw TransportError(TransportError::Code::Io, "stat " + path);
    }
    size = static_cast<std::uint64_t>(st.st_size);
  }
  void* map = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  if (map == MAP_FAILED) {
    ::close(fd);
    throw TransportError(TransportError::Code::Io,
                         "mmap " + path + ": " + std::strerror(errno));
  }
  return std::unique_ptr<FileStore>(new FileStore(fd, map, size));
}

FileStore::~FileStore() {
  munmap(map_, size_);
  ::close(fd_);
}

void FileStore::write(std::uint64_t offset,
                      std::span<const std::uint8_t> bytes) {
  if (offset + bytes.size() > size_)
    throw std::out_of_range("write past end of store");
  std::memcpy(static_cast<std::uint8_t*>(map_) + offset, bytes.data(),
              bytes.size());
}

void FileStore::flush() { msync(map_, size_, MS_ASYNC); }

}  // namespace por
