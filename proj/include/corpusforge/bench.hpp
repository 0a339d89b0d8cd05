#pragma once

// Seeded synthetic corpora and the tokenization throughput sweep.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "corpusforge/tokenize_pipeline.hpp"
#include "corpusforge/tokenizers.hpp"

namespace corpusforge {

struct SyntheticCorpusSpec {
  std::uint64_t documents = 1000;
  std::uint64_t min_words = 20;
  std::uint64_t max_words = 400;
  std::uint64_t lexicon_size = 5000;  // distinct words, Zipf-like frequencies
  std::uint64_t seed = 0;
  // Every n-th line (1-based) is written as broken JSON; 0 disables.
  std::uint64_t malformed_every = 0;
  // Stop early once the file reaches this many bytes; 0 disables.
  std::uint64_t target_bytes = 0;
};

struct SyntheticCorpusInfo {
  std::uint64_t lines = 0;
  std::uint64_t bytes = 0;
  std::uint64_t malformed = 0;
};

// JSONL lines of the form {"id":N,"text":"..."}; deterministic in the given SyntheticCorpusSpec.
SyntheticCorpusInfo generate_synthetic_corpus(const std::filesystem::path& path, const SyntheticCorpusSpec& spec);

// The lexicon used by the generator, most frequent word first.
std::vector<std::string> synthetic_lexicon(std::uint64_t size, std::uint64_t seed);

struct BpeTables {
  std::vector<std::string> pieces;
  MergeTable merges;
};

// Greedy pair-frequency merge learning over whitespace-separated words (merged
// pieces never contain a space). The base vocabulary holds every byte except
// '\n'; `extra_pieces` (e.g. an eod marker) are appended last. Bench fixture
// support only.
BpeTables learn_bpe_tables(const std::vector<std::string>& texts, std::size_t merges,
                           const std::vector<std::string>& extra_pieces = {});

void write_bpe_tables(const BpeTables& tables, const std::filesystem::path& vocab_path,
                      const std::filesystem::path& merges_path);

struct BenchRow {
  std::size_t workers = 0;
  std::size_t batch_size = 0;
  std::size_t queue_capacity = 0;
  PipelineStats stats;
};

// Runs the pipeline once per configuration over an already generated corpus.
// Outputs go to work_dir/bench_<n>.cfpk and are removed afterwards.
std::vector<BenchRow> bench_pipeline(const std::filesystem::path& raw_path, const DocumentIndex& index,
                                     const Tokenizer& tokenizer, const std::vector<PipelineConfig>& sweep,
                                     const std::filesystem::path& work_dir);

// Header `workers,batch_size,queue_capacity,documents,tokens,seconds,tokens_per_sec`.
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace corpusforge
