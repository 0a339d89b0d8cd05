#include "corpusforge/packed_data.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <numeric>

#include "corpusforge/byte_order.hpp"
#include "corpusforge/error.hpp"

namespace corpusforge {

namespace {

constexpr std::size_t kWriteBuffer = std::size_t{1} << 20;

bool valid_width(std::uint32_t w) { return w == 1 || w == 2 || w == 4; }

std::uint32_t max_id_for_width(unsigned w) {
  return w == 4 ? 0xFFFFFFFFu : (std::uint32_t{1} << (8 * w)) - 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Writer

PackedWriter::PackedWriter(const std::filesystem::path& path, unsigned token_width)
    : path_(path), width_(token_width) {
  if (!valid_width(token_width)) throw InvalidArgument("token width must be 1, 2 or 4");
  max_id_ = max_id_for_width(width_);
  file_.reset(std::fopen(path.c_str(), "wb"));
  if (!file_) throw IoError("cannot create " + path.string() + ": " + std::strerror(errno));
  buffer_.reserve(kWriteBuffer);
  const unsigned char placeholder[kPackedHeaderSize] = {};
  if (std::fwrite(placeholder, 1, sizeof placeholder, file_.get()) != sizeof placeholder)
    throw IoError("write failed on " + path.string());
}

PackedWriter::~PackedWriter() = default;

void PackedWriter::flush_buffer() {
  if (buffer_.empty()) return;
  if (std::fwrite(buffer_.data(), 1, buffer_.size(), file_.get()) != buffer_.size())
    throw IoError("write failed on " + path_.string());
  buffer_.clear();
}

void PackedWriter::append_document(std::span<const TokenId> tokens) {
  if (finished_) throw InvalidArgument("append after finish");
  spans_.push_back({tokens_, tokens.size()});
  for (TokenId t : tokens) {
    if (t > max_id_)
      throw InvalidArgument("token id " + std::to_string(t) + " does not fit " + std::to_string(width_) + " bytes");
    if (buffer_.size() + width_ > kWriteBuffer) flush_buffer();
    const std::size_t at = buffer_.size();
    buffer_.resize(at + width_);
    le::store_width(buffer_.data() + at, t, width_);
  }
  tokens_ += tokens.size();
}

void PackedWriter::append_encoded(std::span<const unsigned char> payload) {
  if (finished_) throw InvalidArgument("append after finish");
  if (payload.size() % width_ != 0) throw InvalidArgument("payload is not a whole number of tokens");
  const std::uint64_t count = payload.size() / width_;
  spans_.push_back({tokens_, count});
  if (buffer_.size() + payload.size() > kWriteBuffer) flush_buffer();
  if (payload.size() >= kWriteBuffer) {
    if (std::fwrite(payload.data(), 1, payload.size(), file_.get()) != payload.size())
      throw IoError("write failed on " + path_.string());
  } else {
    buffer_.insert(buffer_.end(), payload.begin(), payload.end());
  }
  tokens_ += count;
}

PackedHeader PackedWriter::finish() {
  if (finished_) throw InvalidArgument("finish called twice");
  flush_buffer();
  for (const auto& s : spans_) {
    if (buffer_.size() + 16 > kWriteBuffer) flush_buffer();
    const std::size_t at = buffer_.size();
    buffer_.resize(at + 16);
    le::store<std::uint64_t>(buffer_.data() + at, s.start_token);
    le::store<std::uint64_t>(buffer_.data() + at + 8, s.token_length);
  }
  flush_buffer();

  PackedHeader h;
  h.token_width = width_;
  h.token_count = tokens_;
  h.doc_count = spans_.size();
  h.index_offset = kPackedHeaderSize + tokens_ * width_;

  unsigned char raw[kPackedHeaderSize];
  std::memcpy(raw, kPackedMagic, 8);
  le::store<std::uint32_t>(raw + 8, h.version);
  le::store<std::uint32_t>(raw + 12, h.token_width);
  le::store<std::uint64_t>(raw + 16, h.token_count);
  le::store<std::uint64_t>(raw + 24, h.doc_count);
  le::store<std::uint64_t>(raw + 32, h.index_offset);
  if (std::fseek(file_.get(), 0, SEEK_SET) != 0 || std::fwrite(raw, 1, sizeof raw, file_.get()) != sizeof raw)
    throw IoError("cannot patch header of " + path_.string());
  std::FILE* f = file_.release();
  if (std::fclose(f) != 0) throw IoError("close failed on " + path_.string());
  finished_ = true;
  return h;
}

// ---------------------------------------------------------------------------
// Reader

PackedHeader parse_packed_header(std::span<const unsigned char> bytes) {
  if (bytes.size() < kPackedHeaderSize) throw FormatError("packed file shorter than its 40-byte header");
  if (std::memcmp(bytes.data(), kPackedMagic, 8) != 0) throw FormatError("bad packed magic");
  PackedHeader h;
  h.version = le::load<std::uint32_t>(bytes.data() + 8);
  h.token_width = le::load<std::uint32_t>(bytes.data() + 12);
  h.token_count = le::load<std::uint64_t>(bytes.data() + 16);
  h.doc_count = le::load<std::uint64_t>(bytes.data() + 24);
  h.index_offset = le::load<std::uint64_t>(bytes.data() + 32);
  if (h.version != kPackedVersion) throw FormatError("unsupported packed version " + std::to_string(h.version));
  if (!valid_width(h.token_width)) throw FormatError("invalid token width " + std::to_string(h.token_width));
  return h;
}

PackedReader PackedReader::open(const std::filesystem::path& path) {
  PackedReader r;
  r.file_ = MappedFile(path);
  const auto bytes = r.file_.bytes();
  try {
    r.header_ = parse_packed_header(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const auto& h = r.header_;
  const std::uint64_t max_tokens = (~std::uint64_t{0} - kPackedHeaderSize) / h.token_width;
  if (h.token_count > max_tokens || h.index_offset != kPackedHeaderSize + h.token_count * h.token_width)
    throw FormatError(path.string() + ": index_offset does not match token_count x token_width");
  if (h.doc_count > (~std::uint64_t{0} - h.index_offset) / 16 || h.expected_file_size() != bytes.size())
    throw FormatError(path.string() + ": file length " + std::to_string(bytes.size()) + " does not match header (" +
                      std::to_string(h.doc_count) + " documents)");
  r.payload_ = bytes.data() + kPackedHeaderSize;
  r.index_ = bytes.data() + h.index_offset;
  // One linear pass over the span table; lookups stay constant-time afterwards.
  std::uint64_t next = 0;
  for (std::uint64_t i = 0; i < h.doc_count; ++i) {
    const unsigned char* p = r.index_ + i * 16;
    const std::uint64_t start = le::load<std::uint64_t>(p), len = le::load<std::uint64_t>(p + 8);
    if (start != next || len > h.token_count - start)
      throw FormatError(path.string() + ": span of document " + std::to_string(i) + " is not contiguous");
    next = start + len;
  }
  if (next != h.token_count) throw FormatError(path.string() + ": spans do not cover token_count");
  return r;
}

TokenSpan PackedReader::span(std::uint64_t i) const {
  if (i >= header_.doc_count)
    throw OutOfRangeError("document " + std::to_string(i) + " out of range (count " +
                          std::to_string(header_.doc_count) + ")");
  const unsigned char* p = index_ + i * 16;
  TokenSpan s{le::load<std::uint64_t>(p), le::load<std::uint64_t>(p + 8)};
  if (s.start_token > header_.token_count || s.token_length > header_.token_count - s.start_token)
    throw FormatError("span of document " + std::to_string(i) + " exceeds the payload");
  return s;
}

std::span<const unsigned char> PackedReader::document_bytes(std::uint64_t i) const {
  const TokenSpan s = span(i);
  return {payload_ + s.start_token * header_.token_width, s.token_length * header_.token_width};
}

std::vector<TokenId> PackedReader::document_tokens(std::uint64_t i) const {
  const TokenSpan s = span(i);
  std::vector<TokenId> out;
  tokens(s.start_token, s.token_length, out);
  return out;
}

TokenId PackedReader::token(std::uint64_t pos) const {
  if (pos >= header_.token_count) throw OutOfRangeError("token position out of range");
  return le::load_width(payload_ + pos * header_.token_width, header_.token_width);
}

void PackedReader::tokens(std::uint64_t first, std::uint64_t count, std::vector<TokenId>& out) const {
  if (first > header_.token_count || count > header_.token_count - first)
    throw OutOfRangeError("token range out of range");
  out.resize(count);
  const unsigned w = header_.token_width;
  const unsigned char* p = payload_ + first * w;
  switch (w) {
    case 1:
      for (std::uint64_t k = 0; k < count; ++k) out[k] = p[k];
      break;
    case 2:
      for (std::uint64_t k = 0; k < count; ++k) out[k] = le::load<std::uint16_t>(p + 2 * k);
      break;
    default:
      for (std::uint64_t k = 0; k < count; ++k) out[k] = le::load<std::uint32_t>(p + 4 * k);
      break;
  }
}

// ---------------------------------------------------------------------------
// Permutations

std::uint64_t SplitMix64::bounded(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("bounded draw needs bound >= 1");
  using u128 = unsigned __int128;
  const u128 limit = ((u128{1} << 64) / bound) * bound;
  for (;;) {
    const std::uint64_t x = next();
    if (u128{x} < limit) return x % bound;
  }
}

Permutation identity_permutation(std::uint64_t n) {
  Permutation p;
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), std::uint64_t{0});
  return p;
}

Permutation make_permutation(std::uint64_t n, std::uint64_t seed) {
  Permutation p = identity_permutation(n);
  p.seed = seed;
  SplitMix64 rng(seed);
  for (std::uint64_t i = n; i-- > 1;) {
    const std::uint64_t j = rng.bounded(i + 1);
    std::swap(p.order[i], p.order[j]);
  }
  return p;
}

void write_permutation(const Permutation& perm, const std::filesystem::path& path) {
  std::vector<unsigned char> out(kPermHeaderSize + perm.order.size() * 8);
  std::memcpy(out.data(), kPermMagic, 8);
  le::store<std::uint32_t>(out.data() + 8, kPermVersion);
  le::store<std::uint64_t>(out.data() + 12, perm.seed);
  le::store<std::uint64_t>(out.data() + 20, perm.order.size());
  for (std::size_t i = 0; i < perm.order.size(); ++i)
    le::store<std::uint64_t>(out.data() + kPermHeaderSize + 8 * i, perm.order[i]);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed on " + path.string());
}

Permutation load_permutation(const std::filesystem::path& path) {
  const MappedFile f(path);
  const auto b = f.bytes();
  if (b.size() < kPermHeaderSize) throw FormatError(path.string() + ": truncated permutation header");
  if (std::memcmp(b.data(), kPermMagic, 8) != 0) throw FormatError(path.string() + ": bad permutation magic");
  if (const auto v = le::load<std::uint32_t>(b.data() + 8); v != kPermVersion)
    throw FormatError(path.string() + ": unsupported permutation version " + std::to_string(v));
  Permutation p;
  p.seed = le::load<std::uint64_t>(b.data() + 12);
  const std::uint64_t n = le::load<std::uint64_t>(b.data() + 20);
  if (n > (b.size() - kPermHeaderSize) / 8 || b.size() != kPermHeaderSize + n * 8)
    throw FormatError(path.string() + ": permutation length does not match n");
  p.order.resize(n);
  std::vector<bool> seen(n, false);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t v = le::load<std::uint64_t>(b.data() + kPermHeaderSize + 8 * i);
    if (v >= n || seen[v]) throw FormatError(path.string() + ": order is not a permutation");
    seen[v] = true;
    p.order[i] = v;
  }
  return p;
}

std::filesystem::path permutation_path_for(const std::filesystem::path& packed_path) {
  return std::filesystem::path(packed_path.string() + ".perm");
}

// ---------------------------------------------------------------------------
// Chunks and samples

ChunkSpec chunk(const Permutation& perm, std::uint64_t k) {
  const std::uint64_t n = perm.order.size();
  if (k < 1 || k > std::max<std::uint64_t>(1, n))
    throw InvalidArgument("chunk count " + std::to_string(k) + " must be in [1, " +
                          std::to_string(std::max<std::uint64_t>(1, n)) + "]");
  ChunkSpec spec;
  spec.assignments.reserve(k);
  const std::uint64_t base = n / k;
  const std::uint64_t extra = n % k;
  std::uint64_t at = 0;
  for (std::uint64_t c = 0; c < k; ++c) {
    const std::uint64_t len = base + (c < extra ? 1 : 0);
    spec.assignments.emplace_back(perm.order.begin() + static_cast<std::ptrdiff_t>(at),
                                  perm.order.begin() + static_cast<std::ptrdiff_t>(at + len));
    at += len;
  }
  return spec;
}

PackedHeader materialize_chunk(const PackedReader& reader, std::span<const std::uint64_t> documents,
                               const std::filesystem::path& out_path) {
  PackedWriter writer(out_path, reader.token_width());
  for (std::uint64_t d : documents) writer.append_encoded(reader.document_bytes(d));
  return writer.finish();
}

std::uint64_t sample_count(const PackedReader& reader, std::uint64_t seq_len) {
  if (seq_len == 0) throw InvalidArgument("sequence length must be >= 1");
  const std::uint64_t n = reader.token_count();
  return n == 0 ? 0 : (n - 1) / seq_len;
}

std::vector<TokenId> get_sample(const PackedReader& reader, std::uint64_t s, std::uint64_t seq_len) {
  const std::uint64_t count = sample_count(reader, seq_len);
  if (s >= count)
    throw OutOfRangeError("sample " + std::to_string(s) + " out of range (count " + std::to_string(count) + ")");
  std::vector<TokenId> out;
  reader.tokens(s * seq_len, seq_len + 1, out);
  return out;
}

}  // namespace corpusforge
