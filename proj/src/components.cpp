#include "corpusforge/components.hpp"

#include <limits>

namespace corpusforge {

namespace {

using config::Arguments;
using config::FactoryDescriptor;
using config::Instance;
using config::ParamKind;
namespace params = config::params;

std::uint64_t positive(const Arguments& a, std::string_view name) {
  const std::int64_t v = a.get_int(name);
  if (v < 1) throw InvalidArgument(std::string(name) + " must be >= 1");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t non_negative(const Arguments& a, std::string_view name) {
  const std::int64_t v = a.get_int(name);
  if (v < 0) throw InvalidArgument(std::string(name) + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::vector<std::uint64_t> positive_list(const Arguments& a, std::string_view name) {
  std::vector<std::uint64_t> out;
  for (std::int64_t v : a.get_int_list(name)) {
    if (v < 1) throw InvalidArgument(std::string(name) + " entries must be >= 1");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw InvalidArgument(std::string(name) + " must not be empty");
  return out;
}

std::optional<TokenId> optional_id(const Arguments& a, std::string_view name) {
  if (!a.has(name)) return std::nullopt;
  const std::int64_t v = a.get_int(name);
  if (v < 0 || v > std::numeric_limits<TokenId>::max()) throw InvalidArgument(std::string(name) + " out of range");
  return static_cast<TokenId>(v);
}

Instance make_tokenizer(const TokenizerSpec& spec) { return Instance(load_tokenizer(spec)); }

void register_tokenizers(config::Registry& r) {
  r.register_component(FactoryDescriptor{
      interfaces::kTokenizer, "byte",
      {params::optional(params::integer("eod_token_id"))},
      [](const Arguments& a) {
        TokenizerSpec spec;
        spec.kind = TokenizerKind::Byte;
        spec.eod_token_id = optional_id(a, "eod_token_id");
        return make_tokenizer(spec);
      }});
  r.register_component(FactoryDescriptor{
      interfaces::kTokenizer, "whitespace",
      {params::string("vocab_path"), params::optional(params::integer("unk_token_id")),
       params::optional(params::integer("eod_token_id"))},
      [](const Arguments& a) {
        TokenizerSpec spec;
        spec.kind = TokenizerKind::Whitespace;
        spec.vocab_path = a.get_string("vocab_path");
        spec.unk_token_id = optional_id(a, "unk_token_id");
        spec.eod_token_id = optional_id(a, "eod_token_id");
        return make_tokenizer(spec);
      }});
  r.register_component(FactoryDescriptor{
      interfaces::kTokenizer, "bpe",
      {params::string("vocab_path"), params::string("merges_path"), params::optional(params::integer("unk_token_id")),
       params::optional(params::integer("eod_token_id"))},
      [](const Arguments& a) {
        TokenizerSpec spec;
        spec.kind = TokenizerKind::Bpe;
        spec.vocab_path = a.get_string("vocab_path");
        spec.merges_path = a.get_string("merges_path");
        spec.unk_token_id = optional_id(a, "unk_token_id");
        spec.eod_token_id = optional_id(a, "eod_token_id");
        return make_tokenizer(spec);
      }});
}

PipelineConfig pipeline_config(const Arguments& a) {
  PipelineConfig cfg;
  cfg.workers = positive(a, "workers");
  cfg.batch_size = positive(a, "batch_size");
  cfg.queue_capacity = positive(a, "queue_capacity");
  cfg.append_eod = a.get_bool("append_eod");
  cfg.text_key = a.get_string("text_key");
  cfg.max_reorder = non_negative(a, "max_reorder");
  return cfg;
}

void register_data_pipeline(config::Registry& r) {
  r.register_component(FactoryDescriptor{
      interfaces::kCorpusSource, "jsonl",
      {params::string("path"), params::boolean("write_index", true)},
      [](const Arguments& a) {
        auto src = std::make_shared<CorpusSource>();
        src->path = a.get_string("path");
        src->index = load_or_build_index(src->path, a.get_bool("write_index"));
        return Instance(std::shared_ptr<const CorpusSource>(std::move(src)));
      }});

  r.register_component(FactoryDescriptor{
      interfaces::kTokenizePipeline, "producer_consumer",
      {params::dependency("source", interfaces::kCorpusSource),
       params::dependency("tokenizer", interfaces::kTokenizer), params::string("out_path"),
       params::integer("workers", static_cast<std::int64_t>(default_worker_count())),
       params::integer("batch_size", 128), params::integer("queue_capacity", 8), params::boolean("append_eod", true),
       params::string("text_key", "text"), params::integer("max_reorder", 0)},
      [](const Arguments& a) {
        auto job = std::make_shared<TokenizeJob>();
        job->source = a.dependency<const CorpusSource>("source");
        job->tokenizer = a.dependency<const Tokenizer>("tokenizer");
        job->config = pipeline_config(a);
        job->config.out_path = a.get_string("out_path");
        return Instance(std::shared_ptr<const TokenizeJob>(std::move(job)));
      }});

  r.register_component(FactoryDescriptor{
      interfaces::kTokenizeBench, "synthetic",
      {params::dependency("tokenizer", interfaces::kTokenizer), params::integer("documents", 20000),
       params::integer("min_words", 20), params::integer("max_words", 400), params::integer("lexicon_size", 5000),
       params::integer("seed", 0), params::list("workers", ParamKind::Int, {1, 2, 4}),
       params::list("batch_size", ParamKind::Int, {128}), params::list("queue_capacity", ParamKind::Int, {8}),
       params::string("work_dir", "bench_work")},
      [](const Arguments& a) {
        auto job = std::make_shared<BenchJob>();
        job->tokenizer = a.dependency<const Tokenizer>("tokenizer");
        job->corpus.documents = positive(a, "documents");
        job->corpus.min_words = non_negative(a, "min_words");
        job->corpus.max_words = non_negative(a, "max_words");
        job->corpus.lexicon_size = positive(a, "lexicon_size");
        job->corpus.seed = static_cast<std::uint64_t>(a.get_int("seed"));
        for (std::uint64_t w : positive_list(a, "workers"))
          for (std::uint64_t b : positive_list(a, "batch_size"))
            for (std::uint64_t q : positive_list(a, "queue_capacity")) {
              PipelineConfig cfg;
              cfg.workers = w;
              cfg.batch_size = b;
              cfg.queue_capacity = q;
              job->sweep.push_back(cfg);
            }
        job->work_dir = a.get_string("work_dir");
        return Instance(std::shared_ptr<const BenchJob>(std::move(job)));
      }});
}

void register_planner(config::Registry& r) {
  r.register_component(FactoryDescriptor{
      interfaces::kModelShape, "transformer_block",
      {params::integer("hidden"), params::integer("ffn_hidden"), params::integer("query_heads"),
       params::integer("kv_heads"), params::integer("head_dim"), params::integer("layers"),
       params::integer("dtype_bytes", 2)},
      [](const Arguments& a) {
        ModelShape s;
        s.hidden = positive(a, "hidden");
        s.ffn_hidden = positive(a, "ffn_hidden");
        s.query_heads = positive(a, "query_heads");
        s.kv_heads = positive(a, "kv_heads");
        s.head_dim = positive(a, "head_dim");
        s.layers = positive(a, "layers");
        s.dtype_bytes = static_cast<std::uint32_t>(positive(a, "dtype_bytes"));
        s.validate();
        return Instance(std::make_shared<const ModelShape>(s));
      }});

  r.register_component(FactoryDescriptor{
      interfaces::kCollectiveModel, "ring_alpha_beta",
      {params::floating("alpha_seconds"), params::floating("bandwidth_bytes_per_sec")},
      [](const Arguments& a) {
        CollectiveModel m{a.get_float("alpha_seconds"), a.get_float("bandwidth_bytes_per_sec")};
        m.validate();
        return Instance(std::make_shared<const CollectiveModel>(m));
      }});

  r.register_component(FactoryDescriptor{
      interfaces::kFsdpPlanner, "message_size_table",
      {params::dependency("shape", interfaces::kModelShape),
       params::dependency("collective", interfaces::kCollectiveModel), params::list("dp", ParamKind::Int),
       params::list("blocks_per_unit", ParamKind::Int), params::optional(params::integer("plan_dp")),
       params::optional(params::integer("memory_cap_bytes"))},
      [](const Arguments& a) {
        auto job = std::make_shared<PlannerJob>();
        job->shape = *a.dependency<const ModelShape>("shape");
        job->collective = *a.dependency<const CollectiveModel>("collective");
        job->dp_list = positive_list(a, "dp");
        job->g_list = positive_list(a, "blocks_per_unit");
        for (auto dp : job->dp_list)
          if (dp < 2) throw InvalidRanks("dp entries must be >= 2");
        if (a.has("plan_dp")) job->plan_dp = positive(a, "plan_dp");
        if (a.has("memory_cap_bytes")) job->memory_cap_bytes = positive(a, "memory_cap_bytes");
        if (job->plan_dp.has_value() != job->memory_cap_bytes.has_value())
          throw InvalidArgument("plan_dp and memory_cap_bytes must be given together");
        return Instance(std::shared_ptr<const PlannerJob>(std::move(job)));
      }});
}

}  // namespace

PipelineStats TokenizeJob::run() const { return run_pipeline(source->path, source->index, *tokenizer, config); }

PlannerResult PlannerJob::run() const {
  PlannerResult out;
  out.table = message_size_table(shape, dp_list, g_list, collective);
  if (plan_dp && memory_cap_bytes) {
    out.plan = plan_unit_size(shape, shape.layers, *plan_dp, collective, *memory_cap_bytes);
    out.plan_dp = *plan_dp;
  }
  return out;
}

std::vector<BenchRow> BenchJob::run() const {
  std::filesystem::create_directories(work_dir);
  const auto corpus_path = work_dir / "bench_corpus.jsonl";
  generate_synthetic_corpus(corpus_path, corpus);
  const DocumentIndex index = build_index(corpus_path);
  auto rows = bench_pipeline(corpus_path, index, *tokenizer, sweep, work_dir);
  std::error_code ec;
  std::filesystem::remove(corpus_path, ec);
  return rows;
}

void register_builtin_components(config::Registry& registry) {
  register_tokenizers(registry);
  register_data_pipeline(registry);
  register_planner(registry);
}

config::Registry builtin_registry() {
  config::Registry r;
  register_builtin_components(r);
  return r;
}

}  // namespace corpusforge
