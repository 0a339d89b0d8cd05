#include "corpusforge/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "corpusforge/packed_data.hpp"

namespace corpusforge {

namespace {

constexpr std::string_view kLetters = "etaoinshrdlcumwfgypbvkjxqz";
constexpr const char* kExtraWords[] = {"straße", "naïve", "café", "日本語", "данные", "ελληνικά"};

double unit_uniform(SplitMix64& rng) { return static_cast<double>(rng.next() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<std::string> synthetic_lexicon(std::uint64_t size, std::uint64_t seed) {
  SplitMix64 rng(seed ^ 0x5EED1E71C0ULL);
  std::set<std::string> seen;
  std::vector<std::string> words;
  for (const char* w : kExtraWords) {
    if (words.size() >= size) break;
    if (seen.insert(w).second) words.emplace_back(w);
  }
  while (words.size() < size) {
    const std::uint64_t len = 2 + rng.bounded(9);
    std::string w;
    for (std::uint64_t i = 0; i < len; ++i) {
      // Skewed letter choice so that frequent bigrams exist for BPE to learn.
      const double u = unit_uniform(rng);
      w.push_back(kLetters[static_cast<std::size_t>(u * u * static_cast<double>(kLetters.size()))]);
    }
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  std::rotate(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(words.size(), 6)),
              words.end());
  return words;
}

SyntheticCorpusInfo generate_synthetic_corpus(const std::filesystem::path& path, const SyntheticCorpusSpec& spec) {
  if (spec.min_words > spec.max_words || spec.lexicon_size == 0)
    throw InvalidArgument("synthetic corpus needs min_words <= max_words and a non-empty lexicon");
  const auto lexicon = synthetic_lexicon(spec.lexicon_size, spec.seed);
  // Zipf(1) sampling by inverting a cumulative table.
  std::vector<double> cdf(lexicon.size());
  double acc = 0;
  for (std::size_t i = 0; i < lexicon.size(); ++i) cdf[i] = (acc += 1.0 / static_cast<double>(i + 1));
  for (auto& c : cdf) c /= acc;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  SplitMix64 rng(spec.seed);
  SyntheticCorpusInfo info;
  std::string text;
  for (std::uint64_t d = 0; d < spec.documents; ++d) {
    if (spec.target_bytes && info.bytes >= spec.target_bytes) break;
    const std::uint64_t words = spec.min_words + rng.bounded(spec.max_words - spec.min_words + 1);
    text.clear();
    for (std::uint64_t w = 0; w < words; ++w) {
      if (w) text.push_back(rng.bounded(12) == 0 ? '\n' : ' ');
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), unit_uniform(rng));
      text += lexicon[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), lexicon.size() - 1)];
      if (rng.bounded(15) == 0) text.push_back(rng.bounded(2) ? '.' : ',');
    }
    std::string line;
    if (spec.malformed_every && (d + 1) % spec.malformed_every == 0) {
      line = "{\"id\":" + std::to_string(d) + ",\"text\":\"unterminated";
      ++info.malformed;
    } else {
      line = nlohmann::json{{"id", d}, {"text", text}}.dump();
    }
    line.push_back('\n');
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    info.bytes += line.size();
    ++info.lines;
  }
  if (!out) throw IoError("write failed on " + path.string());
  return info;
}

BpeTables learn_bpe_tables(const std::vector<std::string>& texts, std::size_t merges,
                           const std::vector<std::string>& extra_pieces) {
  std::map<std::string, std::uint64_t> word_counts;
  for (const auto& t : texts) {
    std::size_t i = 0;
    while (i < t.size()) {
      while (i < t.size() && (t[i] == ' ' || t[i] == '\n' || t[i] == '\t' || t[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < t.size() && !(t[j] == ' ' || t[j] == '\n' || t[j] == '\t' || t[j] == '\r')) ++j;
      if (j > i) ++word_counts[t.substr(i, j - i)];
      i = j;
    }
  }
  struct Word {
    std::vector<std::string> pieces;
    std::uint64_t count;
  };
  std::vector<Word> words;
  for (const auto& [w, c] : word_counts) {
    Word x{{}, c};
    for (char ch : w) x.pieces.emplace_back(1, ch);
    words.push_back(std::move(x));
  }

  BpeTables tables;
  std::set<std::string> known;
  for (int b = 0; b < 256; ++b) {
    if (b == '\n') continue;
    tables.pieces.emplace_back(1, static_cast<char>(b));
    known.insert(tables.pieces.back());
  }
  for (std::size_t m = 0; m < merges; ++m) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> freq;
    for (const auto& w : words)
      for (std::size_t k = 0; k + 1 < w.pieces.size(); ++k) freq[{w.pieces[k], w.pieces[k + 1]}] += w.count;
    if (freq.empty()) break;
    auto best = freq.begin();
    for (auto it = freq.begin(); it != freq.end(); ++it)
      if (it->second > best->second) best = it;
    const auto [left, right] = best->first;
    const std::string merged = left + right;
    tables.merges.merges.emplace_back(left, right);
    if (known.insert(merged).second) tables.pieces.push_back(merged);
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.pieces.size());
      for (std::size_t k = 0; k < w.pieces.size(); ++k) {
        if (k + 1 < w.pieces.size() && w.pieces[k] == left && w.pieces[k + 1] == right) {
          next.push_back(merged);
          ++k;
        } else {
          next.push_back(w.pieces[k]);
        }
      }
      w.pieces = std::move(next);
    }
  }
  for (const auto& p : extra_pieces)
    if (known.insert(p).second) tables.pieces.push_back(p);
  return tables;
}

void write_bpe_tables(const BpeTables& tables, const std::filesystem::path& vocab_path,
                      const std::filesystem::path& merges_path) {
  std::ofstream v(vocab_path, std::ios::binary | std::ios::trunc);
  for (const auto& p : tables.pieces) v << p << '\n';
  std::ofstream m(merges_path, std::ios::binary | std::ios::trunc);
  for (const auto& [l, r] : tables.merges.merges) m << l << ' ' << r << '\n';
  if (!v || !m) throw IoError("cannot write BPE tables");
}

std::vector<BenchRow> bench_pipeline(const std::filesystem::path& raw_path, const DocumentIndex& index,
                                     const Tokenizer& tokenizer, const std::vector<PipelineConfig>& sweep,
                                     const std::filesystem::path& work_dir) {
  std::filesystem::create_directories(work_dir);
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    PipelineConfig cfg = sweep[i];
    cfg.out_path = work_dir / ("bench_" + std::to_string(i) + ".cfpk");
    BenchRow row;
    row.workers = cfg.workers;
    row.batch_size = cfg.batch_size;
    row.queue_capacity = cfg.queue_capacity;
    row.stats = run_pipeline(raw_path, index, tokenizer, cfg);
    std::error_code ec;
    std::filesystem::remove(cfg.out_path, ec);
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "workers,batch_size,queue_capacity,documents,tokens,seconds,tokens_per_sec\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%zu,%zu,%zu,%llu,%llu,%.6f,%.1f\n", r.workers, r.batch_size, r.queue_capacity,
                  static_cast<unsigned long long>(r.stats.documents), static_cast<unsigned long long>(r.stats.tokens),
                  r.stats.elapsed_seconds, r.stats.tokens_per_second);
    out += line;
  }
  return out;
}

}  // namespace corpusforge
