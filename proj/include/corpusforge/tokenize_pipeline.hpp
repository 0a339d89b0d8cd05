#pragma once

// Producer-consumer tokenization of one indexed JSONL file into a packed file.
//
//   reader --RawBatch--> [work queue] --> W workers --TokenBatch--> [output queue] --> writer
//
// The reader walks the document index in order and assigns each batch a
// sequence number; the writer restores that order with a reorder buffer, so
// the output is byte-identical for every worker count.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusforge/corpus_index.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/tokenizers.hpp"

namespace corpusforge {

// Logical CPUs minus the reader and writer threads, at least 1.
std::size_t default_worker_count();

struct PipelineConfig {
  std::size_t workers = default_worker_count();
  std::size_t batch_size = 128;      // documents per RawBatch
  std::size_t queue_capacity = 8;    // batches per queue
  bool append_eod = true;
  std::filesystem::path out_path;
  std::string text_key = "text";
  // Hard cap on batches parked in the writer's reorder buffer; 0 selects
  // max(4 * queue_capacity, 2 * workers). The reader never has more than
  // cap + 1 batches in flight, so the cap also bounds memory.
  std::size_t max_reorder = 0;

  std::size_t effective_max_reorder() const;
  void validate() const;  // throws InvalidArgument
};

struct RawBatch {
  std::uint64_t seq_no = 0;
  std::uint64_t first_ordinal = 0;
  std::string bytes;  // contiguous copy covering every document of the batch
  std::vector<std::pair<std::uint32_t, std::uint32_t>> docs;  // (offset, length) into bytes
};

struct TokenBatch {
  std::uint64_t seq_no = 0;
  std::vector<std::uint64_t> ordinals;  // kept documents, increasing
  std::vector<TokenId> tokens;          // concatenated token ids
  std::vector<std::uint64_t> lengths;   // per kept document
  std::uint64_t malformed = 0;
  std::uint64_t missing_text = 0;
  std::uint64_t empty = 0;
};

struct StageTime {
  double busy_seconds = 0;
  double idle_seconds = 0;
};

struct PipelineStats {
  std::uint64_t documents = 0;  // written to the packed file
  std::uint64_t skipped = 0;    // malformed + missing_text + empty
  std::uint64_t malformed = 0;
  std::uint64_t missing_text = 0;
  std::uint64_t empty = 0;
  std::uint64_t tokens = 0;
  double elapsed_seconds = 0;
  double tokens_per_second = 0;
  StageTime reader;
  StageTime workers;  // summed over worker threads
  StageTime writer;
  std::size_t work_queue_high_water = 0;
  std::size_t output_queue_high_water = 0;
  std::size_t reorder_high_water = 0;
  std::uint64_t batches = 0;
};

enum class ExtractStatus { Ok, MissingKey, NotString, Malformed };

struct ExtractResult {
  ExtractStatus status = ExtractStatus::Malformed;
  std::string text;

  bool ok() const { return status == ExtractStatus::Ok; }
};

// Parses a JSON object and pulls out a string field. Never throws.
ExtractResult extract_text(std::string_view raw, std::string_view key = "text");

// Test and instrumentation hooks; all optional.
struct PipelineHooks {
  std::function<void(std::uint64_t seq_no)> before_write;
  std::function<void(std::uint64_t seq_no)> before_tokenize;
};

class StaleIndexError : public Error {
 public:
  using Error::Error;
};

class ReorderOverflowError : public Error {
 public:
  using Error::Error;
};

// Throws StaleIndexError if the index does not match the raw file, IoError on
// I/O failure. Per-document problems are counted, never fatal. On failure the
// partially written output is removed.
PipelineStats run_pipeline(const std::filesystem::path& raw_path, const DocumentIndex& index,
                           const Tokenizer& tokenizer, const PipelineConfig& cfg, const PipelineHooks& hooks = {});

}  // namespace corpusforge
