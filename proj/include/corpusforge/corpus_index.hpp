#pragma once

// Document-boundary index over a raw JSONL corpus, plus its `.didx` sidecar.
//
// Sidecar layout (little-endian):
//   0..7    magic "CFIDX001"
//   8..11   version u32 (= 1)
//   12..19  source_size u64
//   20..27  doc_count u64
//   28..    doc_count x (byte_offset u64, byte_length u64)

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace corpusforge {

struct DocSpan {
  std::uint64_t byte_offset = 0;
  std::uint64_t byte_length = 0;  // excludes the terminating newline
  bool operator==(const DocSpan&) const = default;
};

struct DocumentIndex {
  std::uint64_t source_size = 0;
  std::vector<DocSpan> spans;

  std::size_t size() const { return spans.size(); }
  bool operator==(const DocumentIndex&) const = default;
};

enum class IndexStatus { Ok, Stale };

inline constexpr char kIndexMagic[8] = {'C', 'F', 'I', 'D', 'X', '0', '0', '1'};
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::size_t kIndexHeaderSize = 28;
inline constexpr std::size_t kDefaultIndexBuffer = std::size_t{1} << 20;

// One streaming pass; a document is every non-empty newline-delimited line,
// including a final line without a trailing newline.
DocumentIndex build_index(const std::filesystem::path& raw_path, std::size_t buffer_size = kDefaultIndexBuffer);

void write_index(const DocumentIndex& index, const std::filesystem::path& path);
DocumentIndex load_index(const std::filesystem::path& path);

// Staleness is judged by file size alone.
IndexStatus verify_index(const DocumentIndex& index, const std::filesystem::path& raw_path);

// Exactly the document's bytes, via a single positioned read.
std::string read_document(const std::filesystem::path& raw_path, const DocumentIndex& index, std::size_t i);

// `<raw>.didx`
std::filesystem::path index_path_for(const std::filesystem::path& raw_path);

// Loads the sidecar when present and fresh, otherwise builds (and writes) it.
DocumentIndex load_or_build_index(const std::filesystem::path& raw_path, bool write_sidecar = true);

}  // namespace corpusforge
