#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpusforge/error.hpp"

namespace corpusforge {

using TokenId = std::uint32_t;

class TokenizerError : public Error {
 public:
  using Error::Error;
};
class VocabFormatError : public TokenizerError {
 public:
  using TokenizerError::TokenizerError;
};
class MergeFormatError : public TokenizerError {
 public:
  using TokenizerError::TokenizerError;
};
class OutOfVocabError : public TokenizerError {
 public:
  using TokenizerError::TokenizerError;
};

enum class TokenizerKind { Byte, Whitespace, Bpe };

struct TokenizerSpec {
  TokenizerKind kind = TokenizerKind::Byte;
  std::optional<std::filesystem::path> vocab_path;
  std::optional<std::filesystem::path> merges_path;
  std::optional<TokenId> eod_token_id;
  // When unset, whitespace/bpe tokenizers append an implicit "<unk>" piece
  // after the vocabulary file's last line.
  std::optional<TokenId> unk_token_id;
};

// Immutable after construction; encode/decode are safe to call concurrently.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  // Appends the ids of `text` to `out`.
  virtual void encode_into(std::string_view text, std::vector<TokenId>& out) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual TokenizerKind kind() const = 0;

  std::vector<TokenId> encode(std::string_view text) const {
    std::vector<TokenId> out;
    encode_into(text, out);
    return out;
  }
  std::optional<TokenId> eod_token_id() const { return eod_; }

 protected:
  void check_ids(std::span<const TokenId> ids) const;
  std::optional<TokenId> eod_;
};

// ids are the UTF-8 bytes. vocab_size is 256, or 257 when eod is configured as 256.
class ByteTokenizer final : public Tokenizer {
 public:
  explicit ByteTokenizer(std::optional<TokenId> eod = std::nullopt);

  void encode_into(std::string_view text, std::vector<TokenId>& out) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  TokenizerKind kind() const override { return TokenizerKind::Byte; }

 private:
  std::size_t vocab_size_ = 256;
};

// Pieces indexed by id plus a reverse lookup. Shared by whitespace and BPE.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws VocabFormatError on empty or duplicate pieces.
  explicit Vocabulary(std::vector<std::string> pieces);

  std::optional<TokenId> find(std::string_view piece) const;
  const std::string& piece(TokenId id) const { return pieces_[id]; }
  std::size_t size() const { return pieces_.size(); }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string_view, TokenId> ids_;
};

// One piece per line, id = line number (0-based).
std::vector<std::string> read_vocab_file(const std::filesystem::path& path);

// Splits on runs of Unicode whitespace; unknown words map to unk. Decoding
// joins pieces with a single space.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  WhitespaceTokenizer(std::vector<std::string> pieces, std::optional<TokenId> unk, std::optional<TokenId> eod);

  void encode_into(std::string_view text, std::vector<TokenId>& out) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  TokenizerKind kind() const override { return TokenizerKind::Whitespace; }
  TokenId unk_token_id() const { return unk_; }

 private:
  std::string_view piece_text(TokenId id) const;

  Vocabulary vocab_;
  TokenId unk_ = 0;
  std::size_t vocab_size_ = 0;
};

// Ordered merge rules; rank = position.
struct MergeTable {
  std::vector<std::pair<std::string, std::string>> merges;
};

// One "left right" pair per line, rank = line number.
MergeTable read_merges_file(const std::filesystem::path& path);

// Byte-level BPE without pre-tokenization: starts from the UTF-8 bytes of the
// whole text and repeatedly applies the lowest-rank adjacent merge (leftmost
// on ties) until no rule applies. Pieces absent from the vocabulary map to unk.
class BpeTokenizer final : public Tokenizer {
 public:
  BpeTokenizer(std::vector<std::string> pieces, const MergeTable& merges, std::optional<TokenId> unk,
               std::optional<TokenId> eod);

  void encode_into(std::string_view text, std::vector<TokenId>& out) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  TokenizerKind kind() const override { return TokenizerKind::Bpe; }
  TokenId unk_token_id() const { return unk_; }
  std::size_t merge_count() const { return merge_count_; }

 private:
  struct Rule {
    std::uint32_t rank;
    TokenId merged;
  };
  static std::uint64_t pair_key(TokenId a, TokenId b) { return (std::uint64_t{a} << 32) | b; }

  Vocabulary vocab_;
  std::unordered_map<std::uint64_t, Rule> rules_;
  std::vector<TokenId> byte_ids_;  // 256 entries; kNoPiece when the byte is not in the vocab
  TokenId unk_ = 0;
  std::size_t vocab_size_ = 0;
  std::size_t merge_count_ = 0;
};

std::shared_ptr<const Tokenizer> load_tokenizer(const TokenizerSpec& spec);

// Smallest of {1, 2, 4} bytes that can hold ids up to vocab_size - 1.
unsigned token_width_for(std::size_t vocab_size);

}  // namespace corpusforge
