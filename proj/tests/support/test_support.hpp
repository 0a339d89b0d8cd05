#pragma once

// Shared helpers for unit and acceptance tests: temp directories, file I/O,
// SHA-256, and reference implementations that avoid the library's own code
// paths (sequential pipeline, naive BPE, packed-file writer).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "corpusforge/config_graph.hpp"
#include "corpusforge/tokenizers.hpp"

namespace cftest {

std::filesystem::path fixture_dir();
std::filesystem::path fixture(const std::string& relative);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string sha256_hex(const std::filesystem::path& path);

// Queue-free, single-threaded tokenization: split lines by hand, parse JSON,
// encode, append eod, and write the packed format with its own encoder.
struct ReferenceResult {
  std::uint64_t documents = 0;
  std::uint64_t skipped = 0;
  std::uint64_t tokens = 0;
};
ReferenceResult reference_tokenize(const std::filesystem::path& raw_path, const corpusforge::Tokenizer& tokenizer,
                                   bool append_eod, const std::string& text_key,
                                   const std::filesystem::path& out_path);

// Writes a packed file from token lists without going through PackedWriter.
void write_packed_reference(const std::filesystem::path& path, unsigned width,
                            const std::vector<std::vector<std::uint32_t>>& docs);

// Repeatedly merges the single lowest-rank, leftmost adjacent pair.
std::vector<std::uint32_t> naive_bpe(const std::vector<std::string>& pieces,
                                     const std::vector<std::pair<std::string, std::string>>& merges,
                                     const std::string& text, std::uint32_t unk);

struct RandomBpeCase {
  std::vector<std::string> pieces;
  std::vector<std::pair<std::string, std::string>> merges;
  std::string text;
};
RandomBpeCase random_bpe_case(std::mt19937_64& rng);

// Random JSONL text: a mix of valid documents, malformed lines, missing keys,
// non-string values, empty texts, blank lines and CRLF endings.
std::string random_jsonl(std::mt19937_64& rng, std::size_t lines);

// Test components on interface "stage":
//   passthrough(upstream?: stage), join(left: stage, right: stage), failing()
// `calls` counts factory invocations per node label, `order` records them.
struct StageCounters {
  std::map<std::string, int> calls;
  std::vector<std::string> order;
};
struct Stage {
  std::string label;
  std::vector<std::shared_ptr<const Stage>> inputs;
};
void register_stage_components(corpusforge::config::Registry& registry, std::shared_ptr<StageCounters> counters);

std::string hex_decode(const std::string& hex);

}  // namespace cftest
