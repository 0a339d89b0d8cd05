#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

namespace corpusforge {

// Read-only memory mapping of a whole file. Move-only; unmaps on destruction.
// A zero-length file yields an empty span without creating a mapping.
class MappedFile {
 public:
  MappedFile() = default;
  explicit MappedFile(const std::filesystem::path& path);
  ~MappedFile();

  MappedFile(MappedFile&& other) noexcept;
  MappedFile& operator=(MappedFile&& other) noexcept;
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;

  std::span<const unsigned char> bytes() const { return {data_, size_}; }
  const unsigned char* data() const { return data_; }
  std::size_t size() const { return size_; }

 private:
  void reset() noexcept;

  const unsigned char* data_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace corpusforge
