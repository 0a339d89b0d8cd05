#pragma once

// Built-in components. Every CLI pipeline is an object graph over these:
//
//   interface            variant              instance type
//   tokenizer            byte|whitespace|bpe  const Tokenizer
//   corpus_source        jsonl                CorpusSource
//   tokenize_pipeline    producer_consumer    TokenizeJob
//   model_shape          transformer_block    ModelShape
//   collective_model     ring_alpha_beta      CollectiveModel
//   fsdp_planner         message_size_table   PlannerJob
//   tokenize_bench       synthetic            BenchJob

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "corpusforge/bench.hpp"
#include "corpusforge/comm_planner.hpp"
#include "corpusforge/config_graph.hpp"
#include "corpusforge/corpus_index.hpp"
#include "corpusforge/tokenize_pipeline.hpp"
#include "corpusforge/tokenizers.hpp"

namespace corpusforge {

struct CorpusSource {
  std::filesystem::path path;
  DocumentIndex index;
};

struct TokenizeJob {
  std::shared_ptr<const CorpusSource> source;
  std::shared_ptr<const Tokenizer> tokenizer;
  PipelineConfig config;

  PipelineStats run() const;
};

struct PlannerResult {
  std::vector<MessageSizeRow> table;
  std::optional<FsdpPlan> plan;  // when plan_dp and memory_cap_bytes are configured
  std::uint64_t plan_dp = 0;
};

struct PlannerJob {
  ModelShape shape;
  CollectiveModel collective;
  std::vector<std::uint64_t> dp_list;
  std::vector<std::uint64_t> g_list;
  std::optional<std::uint64_t> plan_dp;
  std::optional<std::uint64_t> memory_cap_bytes;

  PlannerResult run() const;
};

struct BenchJob {
  std::shared_ptr<const Tokenizer> tokenizer;
  SyntheticCorpusSpec corpus;
  std::vector<PipelineConfig> sweep;
  std::filesystem::path work_dir;

  std::vector<BenchRow> run() const;
};

namespace interfaces {
inline constexpr const char* kTokenizer = "tokenizer";
inline constexpr const char* kCorpusSource = "corpus_source";
inline constexpr const char* kTokenizePipeline = "tokenize_pipeline";
inline constexpr const char* kModelShape = "model_shape";
inline constexpr const char* kCollectiveModel = "collective_model";
inline constexpr const char* kFsdpPlanner = "fsdp_planner";
inline constexpr const char* kTokenizeBench = "tokenize_bench";
}  // namespace interfaces

void register_builtin_components(config::Registry& registry);
config::Registry builtin_registry();

}  // namespace corpusforge
