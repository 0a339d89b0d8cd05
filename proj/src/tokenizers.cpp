#include "corpusforge/tokenizers.hpp"

#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace corpusforge {

namespace {

constexpr TokenId kNoPiece = std::numeric_limits<TokenId>::max();
constexpr std::string_view kImplicitUnk = "<unk>";

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (in.bad()) throw IoError("read error on " + path.string());
  return lines;
}

// Resolves the unk id: an explicit one must index the vocabulary, otherwise an
// implicit piece is appended. Returns the final vocab size.
std::size_t settle_specials(std::size_t pieces, std::optional<TokenId> unk, std::optional<TokenId> eod,
                            TokenId& unk_out) {
  std::size_t size = pieces;
  if (unk) {
    if (*unk >= pieces) throw VocabFormatError("unk_token_id " + std::to_string(*unk) + " is outside the vocabulary");
    unk_out = *unk;
  } else {
    unk_out = static_cast<TokenId>(pieces);
    ++size;
  }
  if (eod && *eod >= size)
    throw VocabFormatError("eod_token_id " + std::to_string(*eod) + " is outside the vocabulary");
  return size;
}

// Decodes one UTF-8 code point starting at s[i]; invalid sequences consume one
// byte and yield U+FFFD so they are never treated as whitespace.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int need = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    need = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k <= need; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(need) + 1;
  return cp;
}

// Unicode White_Space property.
bool is_unicode_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

}  // namespace

void Tokenizer::check_ids(std::span<const TokenId> ids) const {
  for (TokenId id : ids)
    if (id >= vocab_size())
      throw OutOfVocabError("token id " + std::to_string(id) + " >= vocab size " + std::to_string(vocab_size()));
}

// ---------------------------------------------------------------------------

ByteTokenizer::ByteTokenizer(std::optional<TokenId> eod) {
  if (eod) {
    if (*eod > 256) throw VocabFormatError("byte tokenizer eod_token_id must be <= 256");
    if (*eod == 256) vocab_size_ = 257;
  }
  eod_ = eod;
}

void ByteTokenizer::encode_into(std::string_view text, std::vector<TokenId>& out) const {
  out.reserve(out.size() + text.size());
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
}

std::string ByteTokenizer::decode(std::span<const TokenId> ids) const {
  check_ids(ids);
  std::string out;
  out.reserve(ids.size());
  for (TokenId id : ids)
    if (id < 256) out.push_back(static_cast<char>(id));
  return out;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw VocabFormatError("vocabulary is empty");
  if (pieces_.size() >= kNoPiece) throw VocabFormatError("vocabulary too large");
  ids_.reserve(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty()) throw VocabFormatError("empty piece on vocabulary line " + std::to_string(i));
    if (!ids_.emplace(pieces_[i], static_cast<TokenId>(i)).second)
      throw VocabFormatError("duplicate piece '" + pieces_[i] + "' on vocabulary line " + std::to_string(i));
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view piece) const {
  auto it = ids_.find(piece);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> read_vocab_file(const std::filesystem::path& path) { return read_lines(path); }

MergeTable read_merges_file(const std::filesystem::path& path) {
  MergeTable table;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() || line.find(' ', sp + 1) != std::string::npos)
      throw MergeFormatError("merges line " + std::to_string(line_no) + " is not 'left right'");
    table.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    ++line_no;
  }
  return table;
}

// ---------------------------------------------------------------------------

WhitespaceTokenizer::WhitespaceTokenizer(std::vector<std::string> pieces, std::optional<TokenId> unk,
                                         std::optional<TokenId> eod)
    : vocab_(std::move(pieces)) {
  vocab_size_ = settle_specials(vocab_.size(), unk, eod, unk_);
  eod_ = eod;
}

void WhitespaceTokenizer::encode_into(std::string_view text, std::vector<TokenId>& out) const {
  std::size_t i = 0;
  std::size_t word_start = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (word_start == std::string_view::npos) return;
    const auto id = vocab_.find(text.substr(word_start, end - word_start));
    out.push_back(id ? *id : unk_);
    word_start = std::string_view::npos;
  };
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t cp = next_code_point(text, i);
    if (is_unicode_space(cp)) {
      flush(at);
    } else if (word_start == std::string_view::npos) {
      word_start = at;
    }
  }
  flush(text.size());
}

std::string_view WhitespaceTokenizer::piece_text(TokenId id) const {
  return id < vocab_.size() ? std::string_view(vocab_.piece(id)) : kImplicitUnk;
}

std::string WhitespaceTokenizer::decode(std::span<const TokenId> ids) const {
  check_ids(ids);
  std::string out;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (k) out.push_back(' ');
    out += piece_text(ids[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

BpeTokenizer::BpeTokenizer(std::vector<std::string> pieces, const MergeTable& merges, std::optional<TokenId> unk,
                           std::optional<TokenId> eod)
    : vocab_(std::move(pieces)), byte_ids_(256, kNoPiece) {
  vocab_size_ = settle_specials(vocab_.size(), unk, eod, unk_);
  eod_ = eod;
  for (int b = 0; b < 256; ++b) {
    const char c = static_cast<char>(b);
    if (auto id = vocab_.find(std::string_view(&c, 1))) byte_ids_[static_cast<std::size_t>(b)] = *id;
  }
  rules_.reserve(merges.merges.size());
  for (std::size_t rank = 0; rank < merges.merges.size(); ++rank) {
    const auto& [left, right] = merges.merges[rank];
    const auto l = vocab_.find(left);
    const auto r = vocab_.find(right);
    const auto m = vocab_.find(left + right);
    if (!l || !r || !m)
      throw MergeFormatError("merge " + std::to_string(rank) + " ('" + left + "' '" + right +
                             "') references a piece absent from the vocabulary");
    if (!rules_.emplace(pair_key(*l, *r), Rule{static_cast<std::uint32_t>(rank), *m}).second)
      throw MergeFormatError("duplicate merge '" + left + " " + right + "' at rank " + std::to_string(rank));
  }
  merge_count_ = merges.merges.size();
}

void BpeTokenizer::encode_into(std::string_view text, std::vector<TokenId>& out) const {
  const std::size_t n = text.size();
  if (n == 0) return;

  // Doubly linked list of pieces keyed by the byte position where each starts.
  std::vector<TokenId> id(n);
  std::vector<std::uint32_t> next(n), prev(n);
  constexpr std::uint32_t kEnd = std::numeric_limits<std::uint32_t>::max();
  for (std::size_t i = 0; i < n; ++i) {
    id[i] = byte_ids_[static_cast<unsigned char>(text[i])];
    next[i] = i + 1 < n ? static_cast<std::uint32_t>(i + 1) : kEnd;
    prev[i] = i > 0 ? static_cast<std::uint32_t>(i - 1) : kEnd;
  }

  // (rank, left position) ordering reproduces "lowest rank, then leftmost".
  struct Candidate {
    std::uint32_t rank;
    std::uint32_t pos;
    TokenId left;
    TokenId right;
    bool operator>(const Candidate& o) const { return rank != o.rank ? rank > o.rank : pos > o.pos; }
  };
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  auto consider = [&](std::uint32_t pos) {
    if (pos == kEnd || next[pos] == kEnd) return;
    const TokenId a = id[pos];
    const TokenId b = id[next[pos]];
    if (a == kNoPiece || b == kNoPiece) return;
    if (auto it = rules_.find(pair_key(a, b)); it != rules_.end()) heap.push({it->second.rank, pos, a, b});
  };
  for (std::uint32_t i = 0; i + 1 < n; ++i) consider(i);

  while (!heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    const std::uint32_t r = next[c.pos];
    // Stale entries: the left piece was absorbed or either side changed.
    if (r == kEnd || id[c.pos] != c.left || id[r] != c.right || prev[r] != c.pos) continue;
    id[c.pos] = rules_.at(pair_key(c.left, c.right)).merged;
    next[c.pos] = next[r];
    if (next[r] != kEnd) prev[next[r]] = c.pos;
    id[r] = kNoPiece;
    prev[r] = kEnd;
    next[r] = kEnd;
    if (prev[c.pos] != kEnd) consider(prev[c.pos]);
    consider(c.pos);
  }

  for (std::uint32_t i = 0; i != kEnd; i = next[i]) out.push_back(id[i] == kNoPiece ? unk_ : id[i]);
}

std::string BpeTokenizer::decode(std::span<const TokenId> ids) const {
  check_ids(ids);
  std::string out;
  for (TokenId t : ids) out += t < vocab_.size() ? std::string_view(vocab_.piece(t)) : kImplicitUnk;
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const Tokenizer> load_tokenizer(const TokenizerSpec& spec) {
  switch (spec.kind) {
    case TokenizerKind::Byte:
      return std::make_shared<ByteTokenizer>(spec.eod_token_id);
    case TokenizerKind::Whitespace:
      if (!spec.vocab_path) throw TokenizerError("whitespace tokenizer requires vocab_path");
      return std::make_shared<WhitespaceTokenizer>(read_vocab_file(*spec.vocab_path), spec.unk_token_id,
                                                   spec.eod_token_id);
    case TokenizerKind::Bpe:
      if (!spec.vocab_path || !spec.merges_path) throw TokenizerError("bpe tokenizer requires vocab_path and merges_path");
      return std::make_shared<BpeTokenizer>(read_vocab_file(*spec.vocab_path), read_merges_file(*spec.merges_path),
                                            spec.unk_token_id, spec.eod_token_id);
  }
  throw TokenizerError("unknown tokenizer kind");
}

unsigned token_width_for(std::size_t vocab_size) {
  if (vocab_size <= 0x100) return 1;
  if (vocab_size <= 0x10000) return 2;
  return 4;
}

}  // namespace corpusforge
