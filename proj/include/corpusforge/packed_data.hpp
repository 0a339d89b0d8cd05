#pragma once

// Packed tokenized dataset (`.cfpk`), little-endian:
//
//   0..7    magic "CFPKD001"
//   8..11   version u32 (= 1)
//   12..15  token_width u32 in {1, 2, 4}
//   16..23  token_count u64
//   24..31  doc_count u64
//   32..39  index_offset u64 (== 40 + token_count * token_width)
//   40..    token payload
//   index_offset..  doc_count x (start_token u64, token_length u64)
//
// Documents are contiguous: span[i+1].start_token == span[i].start_token + span[i].token_length.
//
// Permutation sidecar (`.perm`): magic "CFPRM001", version u32, seed u64, n u64, n x u64 order.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "corpusforge/mapped_file.hpp"
#include "corpusforge/tokenizers.hpp"

namespace corpusforge {

inline constexpr char kPackedMagic[8] = {'C', 'F', 'P', 'K', 'D', '0', '0', '1'};
inline constexpr char kPermMagic[8] = {'C', 'F', 'P', 'R', 'M', '0', '0', '1'};
inline constexpr std::uint32_t kPackedVersion = 1;
inline constexpr std::uint32_t kPermVersion = 1;
inline constexpr std::size_t kPackedHeaderSize = 40;
inline constexpr std::size_t kPermHeaderSize = 28;

struct PackedHeader {
  std::uint32_t version = kPackedVersion;
  std::uint32_t token_width = 2;
  std::uint64_t token_count = 0;
  std::uint64_t doc_count = 0;
  std::uint64_t index_offset = kPackedHeaderSize;

  std::uint64_t expected_file_size() const { return index_offset + doc_count * 16; }
  bool operator==(const PackedHeader&) const = default;
};

struct TokenSpan {
  std::uint64_t start_token = 0;
  std::uint64_t token_length = 0;
  bool operator==(const TokenSpan&) const = default;
};

// Single-pass streaming writer: placeholder header, token payload, span index,
// then the header is patched in place. Exclusive; not thread-safe.
class PackedWriter {
 public:
  PackedWriter(const std::filesystem::path& path, unsigned token_width);
  ~PackedWriter();
  PackedWriter(const PackedWriter&) = delete;
  PackedWriter& operator=(const PackedWriter&) = delete;

  // Throws InvalidArgument for ids that do not fit the token width.
  void append_document(std::span<const TokenId> tokens);
  // Payload bytes already encoded at this writer's width.
  void append_encoded(std::span<const unsigned char> payload);

  PackedHeader finish();

  unsigned token_width() const { return width_; }
  std::uint64_t token_count() const { return tokens_; }
  std::uint64_t doc_count() const { return spans_.size(); }

 private:
  void flush_buffer();

  struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
  };

  std::filesystem::path path_;
  std::unique_ptr<std::FILE, FileCloser> file_;
  unsigned width_;
  std::uint32_t max_id_;
  std::uint64_t tokens_ = 0;
  std::vector<TokenSpan> spans_;
  std::vector<unsigned char> buffer_;
  bool finished_ = false;
};

// Immutable view over a memory-mapped packed file. Document lookups are two
// index loads plus a payload slice; safe for any number of concurrent readers.
class PackedReader {
 public:
  // Validates magic, version, width, index_offset and total length.
  static PackedReader open(const std::filesystem::path& path);

  const PackedHeader& header() const { return header_; }
  std::uint64_t doc_count() const { return header_.doc_count; }
  std::uint64_t token_count() const { return header_.token_count; }
  unsigned token_width() const { return header_.token_width; }

  TokenSpan span(std::uint64_t i) const;
  std::vector<TokenId> document_tokens(std::uint64_t i) const;
  // Raw payload bytes of document i.
  std::span<const unsigned char> document_bytes(std::uint64_t i) const;

  TokenId token(std::uint64_t pos) const;
  // Decodes tokens [first, first + count) into out (resized).
  void tokens(std::uint64_t first, std::uint64_t count, std::vector<TokenId>& out) const;

 private:
  PackedReader() = default;

  MappedFile file_;
  PackedHeader header_;
  const unsigned char* payload_ = nullptr;
  const unsigned char* index_ = nullptr;
};

inline PackedReader open_packed(const std::filesystem::path& path) { return PackedReader::open(path); }

// Header decoding alone (no length check against a file).
PackedHeader parse_packed_header(std::span<const unsigned char> bytes);

// ---------------------------------------------------------------------------
// Shuffling

// SplitMix64 with rejection-sampled bounded draws; bit-exact across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound); bound >= 1. Accepts x < floor(2^64 / bound) * bound.
  std::uint64_t bounded(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

struct Permutation {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> order;

  std::size_t size() const { return order.size(); }
  bool operator==(const Permutation&) const = default;
};

// Fisher-Yates from n-1 down to 1 over the identity order.
Permutation make_permutation(std::uint64_t n, std::uint64_t seed);
Permutation identity_permutation(std::uint64_t n);

void write_permutation(const Permutation& perm, const std::filesystem::path& path);
// Verifies magic, version, length and bijectivity.
Permutation load_permutation(const std::filesystem::path& path);

// `<packed>.perm`
std::filesystem::path permutation_path_for(const std::filesystem::path& packed_path);

// ---------------------------------------------------------------------------
// Chunking and samples

struct ChunkSpec {
  std::vector<std::vector<std::uint64_t>> assignments;

  std::size_t chunk_count() const { return assignments.size(); }
};

// k contiguous slices of perm.order; the first n % k hold ceil(n/k) documents.
// Requires 1 <= k <= max(1, n); throws InvalidArgument otherwise.
ChunkSpec chunk(const Permutation& perm, std::uint64_t k);

// Writes the listed documents, in order, as a new packed file with the source's width.
PackedHeader materialize_chunk(const PackedReader& reader, std::span<const std::uint64_t> documents,
                               const std::filesystem::path& out_path);

// floor((token_count - 1) / L); zero when token_count == 0.
std::uint64_t sample_count(const PackedReader& reader, std::uint64_t seq_len);

// Tokens [s*L, s*L + L], i.e. L + 1 ids for next-token targets.
std::vector<TokenId> get_sample(const PackedReader& reader, std::uint64_t s, std::uint64_t seq_len);

}  // namespace corpusforge
