#include "corpusforge/corpus_index.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "corpusforge/byte_order.hpp"
#include "corpusforge/error.hpp"

namespace corpusforge {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

DocumentIndex build_index(const std::filesystem::path& raw_path, std::size_t buffer_size) {
  if (buffer_size == 0) throw InvalidArgument("index buffer size must be positive");
  FilePtr f(std::fopen(raw_path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + raw_path.string() + ": " + std::strerror(errno));

  DocumentIndex index;
  std::vector<char> buf(buffer_size);
  std::uint64_t pos = 0;         // absolute offset of buf[0]
  std::uint64_t line_start = 0;  // absolute offset of the current line
  for (;;) {
    const std::size_t n = std::fread(buf.data(), 1, buf.size(), f.get());
    if (n == 0) {
      if (std::ferror(f.get())) throw IoError("read error on " + raw_path.string());
      break;
    }
    const char* begin = buf.data();
    const char* end = begin + n;
    for (const char* p = begin; p < end;) {
      const void* hit = std::memchr(p, '\n', static_cast<std::size_t>(end - p));
      if (hit == nullptr) break;
      const char* nl = static_cast<const char*>(hit);
      const std::uint64_t nl_abs = pos + static_cast<std::uint64_t>(nl - begin);
      if (nl_abs > line_start) index.spans.push_back({line_start, nl_abs - line_start});
      line_start = nl_abs + 1;
      p = nl + 1;
    }
    pos += n;
  }
  if (pos > line_start) index.spans.push_back({line_start, pos - line_start});
  index.source_size = pos;
  return index;
}

void write_index(const DocumentIndex& index, const std::filesystem::path& path) {
  std::vector<unsigned char> out(kIndexHeaderSize + index.spans.size() * 16);
  std::memcpy(out.data(), kIndexMagic, 8);
  le::store<std::uint32_t>(out.data() + 8, kIndexVersion);
  le::store<std::uint64_t>(out.data() + 12, index.source_size);
  le::store<std::uint64_t>(out.data() + 20, index.spans.size());
  unsigned char* p = out.data() + kIndexHeaderSize;
  for (const auto& s : index.spans) {
    le::store<std::uint64_t>(p, s.byte_offset);
    le::store<std::uint64_t>(p + 8, s.byte_length);
    p += 16;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed on " + path.string());
}

DocumentIndex load_index(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (data.size() < kIndexHeaderSize) throw FormatError(path.string() + ": truncated index header");
  if (std::memcmp(data.data(), kIndexMagic, 8) != 0) throw FormatError(path.string() + ": bad index magic");
  if (const auto v = le::load<std::uint32_t>(data.data() + 8); v != kIndexVersion)
    throw FormatError(path.string() + ": unsupported index version " + std::to_string(v));

  DocumentIndex index;
  index.source_size = le::load<std::uint64_t>(data.data() + 12);
  const std::uint64_t count = le::load<std::uint64_t>(data.data() + 20);
  if (count > (data.size() - kIndexHeaderSize) / 16 || data.size() != kIndexHeaderSize + count * 16)
    throw FormatError(path.string() + ": index length does not match doc_count");
  index.spans.resize(count);
  const unsigned char* p = data.data() + kIndexHeaderSize;
  std::uint64_t prev_end = 0;
  for (auto& s : index.spans) {
    s.byte_offset = le::load<std::uint64_t>(p);
    s.byte_length = le::load<std::uint64_t>(p + 8);
    p += 16;
    if (s.byte_offset < prev_end || s.byte_length > index.source_size ||
        s.byte_offset > index.source_size - s.byte_length)
      throw FormatError(path.string() + ": spans out of order or beyond source size");
    prev_end = s.byte_offset + s.byte_length;
  }
  return index;
}

IndexStatus verify_index(const DocumentIndex& index, const std::filesystem::path& raw_path) {
  std::error_code ec;
  const auto n = std::filesystem::file_size(raw_path, ec);
  return (!ec && n == index.source_size) ? IndexStatus::Ok : IndexStatus::Stale;
}

std::string read_document(const std::filesystem::path& raw_path, const DocumentIndex& index, std::size_t i) {
  if (i >= index.spans.size())
    throw OutOfRangeError("document " + std::to_string(i) + " out of range (count " +
                          std::to_string(index.spans.size()) + ")");
  const DocSpan s = index.spans[i];
  const int fd = ::open(raw_path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw IoError("cannot open " + raw_path.string() + ": " + std::strerror(errno));
  std::string out(s.byte_length, '\0');
  std::size_t done = 0;
  while (done < out.size()) {
    const ssize_t r = ::pread(fd, out.data() + done, out.size() - done, static_cast<off_t>(s.byte_offset + done));
    if (r <= 0) {
      const int err = errno;
      ::close(fd);
      throw IoError("short read on " + raw_path.string() + (r < 0 ? std::string(": ") + std::strerror(err) : ""));
    }
    done += static_cast<std::size_t>(r);
  }
  ::close(fd);
  return out;
}

std::filesystem::path index_path_for(const std::filesystem::path& raw_path) {
  return std::filesystem::path(raw_path.string() + ".didx");
}

DocumentIndex load_or_build_index(const std::filesystem::path& raw_path, bool write_sidecar) {
  const auto sidecar = index_path_for(raw_path);
  if (std::filesystem::exists(sidecar)) {
    try {
      DocumentIndex idx = load_index(sidecar);
      if (verify_index(idx, raw_path) == IndexStatus::Ok) return idx;
    } catch (const FormatError&) {
      // rebuilt below
    }
  }
  DocumentIndex idx = build_index(raw_path);
  if (write_sidecar) write_index(idx, sidecar);
  return idx;
}

}  // namespace corpusforge
