#include "corpusforge/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "corpusforge/components.hpp"
#include "corpusforge/config_graph.hpp"
#include "corpusforge/corpus_index.hpp"
#include "corpusforge/packed_data.hpp"

namespace corpusforge::cli {

namespace {

using nlohmann::json;

struct GraphOptions {
  std::string config_path;
  std::string root;
  std::vector<std::string> overrides;
};

void add_graph_options(CLI::App* cmd, GraphOptions& o, const std::string& default_root, bool config_required) {
  auto* c = cmd->add_option("-c,--config", o.config_path, "YAML configuration document");
  if (config_required) c->required();
  o.root = default_root;
  cmd->add_option("--root", o.root, "root node_id")->capture_default_str();
  cmd->add_option("--set", o.overrides, "override node.config.key=value (repeatable)");
}

config::DependencyGraph load_graph(const GraphOptions& o, const config::Registry& registry, std::ostream& diag) {
  auto nodes = config::load_config(o.config_path);
  for (const auto& s : o.overrides) config::apply_override(nodes, s);
  std::vector<std::string> roots;
  if (!o.root.empty()) roots.push_back(o.root);
  auto graph = config::build_graph(std::move(nodes), registry, roots);
  for (const auto& w : graph.warnings) diag << w.format() << '\n';
  return graph;
}

std::vector<std::string> roots_of(const GraphOptions& o) {
  return o.root.empty() ? std::vector<std::string>{} : std::vector<std::string>{o.root};
}

json diagnostics_json(const std::vector<config::Diagnostic>& ds) {
  json arr = json::array();
  for (const auto& d : ds) {
    arr.push_back({{"level", d.severity == config::Severity::Error ? "ERROR" : "WARN"},
                   {"node_id", d.node_id},
                   {"kind", std::string(config::kind_name(d.kind))},
                   {"message", d.message}});
  }
  return arr;
}

json stats_json(const PipelineStats& s) {
  auto stage = [](const StageTime& t) { return json{{"busy_seconds", t.busy_seconds}, {"idle_seconds", t.idle_seconds}}; };
  return {{"documents", s.documents},
          {"skipped", s.skipped},
          {"malformed", s.malformed},
          {"missing_text", s.missing_text},
          {"empty", s.empty},
          {"tokens", s.tokens},
          {"batches", s.batches},
          {"seconds", s.elapsed_seconds},
          {"tokens_per_sec", s.tokens_per_second},
          {"reader", stage(s.reader)},
          {"workers", stage(s.workers)},
          {"writer", stage(s.writer)},
          {"work_queue_high_water", s.work_queue_high_water},
          {"output_queue_high_water", s.output_queue_high_water},
          {"reorder_high_water", s.reorder_high_water}};
}

json plan_json(const FsdpPlan& p) {
  return {{"blocks_per_unit", p.blocks_per_unit},
          {"shard_bytes", p.shard_bytes},
          {"busbw_bytes_per_sec", p.busbw_bytes_per_sec},
          {"step_comm_seconds", p.step_comm_seconds},
          {"peak_unit_bytes", p.peak_unit_bytes}};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path);
  os << text;
  if (!os) throw IoError("write failed on " + path);
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

void init_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_mt("corpusforge");
    logger->set_pattern("%L %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("CORPUSFORGE_LOG")) {
      const std::string level = env;
      if (level == "error") spdlog::set_level(spdlog::level::err);
      else if (level == "warn") spdlog::set_level(spdlog::level::warn);
      else if (level == "info") spdlog::set_level(spdlog::level::info);
      else if (level == "debug") spdlog::set_level(spdlog::level::debug);
      else spdlog::warn("ignoring unknown CORPUSFORGE_LOG level '{}'", level);
    }
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app{"corpusforge: corpus indexing, tokenization, packed datasets and FSDP communication planning"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable output");

  GraphOptions resolve_opts;
  bool instantiate = false;
  auto* resolve_cmd = app.add_subcommand("resolve", "validate a configuration's object graph");
  add_graph_options(resolve_cmd, resolve_opts, "", true);
  resolve_cmd->add_flag("--instantiate", instantiate, "also run every factory");

  std::string raw_path;
  std::size_t index_buffer = kDefaultIndexBuffer;
  auto* index_cmd = app.add_subcommand("index", "index document boundaries of a JSONL file");
  index_cmd->add_option("raw", raw_path, "JSONL corpus")->required();
  index_cmd->add_option("--buffer", index_buffer, "read buffer size in bytes")->check(CLI::PositiveNumber);

  GraphOptions tokenize_opts;
  auto* tokenize_cmd = app.add_subcommand("tokenize", "run the tokenization pipeline");
  add_graph_options(tokenize_cmd, tokenize_opts, "pipeline", true);

  std::string packed_path;
  std::uint64_t seed = 0;
  std::string perm_out;
  auto* shuffle_cmd = app.add_subcommand("shuffle", "write a seeded document permutation sidecar");
  shuffle_cmd->add_option("packed", packed_path, "packed dataset")->required();
  shuffle_cmd->add_option("--seed", seed, "permutation seed")->required();
  shuffle_cmd->add_option("--out", perm_out, "output path (default <packed>.perm)");

  std::string perm_path;
  std::uint64_t chunks = 1;
  std::string out_dir;
  auto* chunk_cmd = app.add_subcommand("chunk", "split a (permuted) packed dataset into k files");
  chunk_cmd->add_option("packed", packed_path, "packed dataset")->required();
  chunk_cmd->add_option("--perm", perm_path, "permutation sidecar (default: identity order)");
  chunk_cmd->add_option("-k,--chunks", chunks, "number of chunks")->required();
  chunk_cmd->add_option("--out-dir", out_dir, "output directory")->required();

  std::uint64_t sample_index = 0;
  std::uint64_t seq_len = 0;
  auto* sample_cmd = app.add_subcommand("sample", "print one fixed-length training sample");
  sample_cmd->add_option("packed", packed_path, "packed dataset")->required();
  sample_cmd->add_option("index", sample_index, "sample ordinal")->required();
  sample_cmd->add_option("seq_len", seq_len, "sequence length L (prints L+1 ids)")->required();

  GraphOptions plan_opts;
  std::string csv_out;
  auto* plan_cmd = app.add_subcommand("plan", "FSDP message-size table and unit-size plan");
  add_graph_options(plan_cmd, plan_opts, "planner", true);
  plan_cmd->add_option("--out", csv_out, "write the CSV here instead of stdout");

  GraphOptions bench_opts;
  auto* bench_cmd = app.add_subcommand("bench", "tokenization throughput sweep on a synthetic corpus");
  add_graph_options(bench_cmd, bench_opts, "bench", true);
  bench_cmd->add_option("--out", csv_out, "write the CSV here instead of stdout");

  for (auto* cmd : {resolve_cmd, index_cmd, tokenize_cmd, shuffle_cmd, chunk_cmd, sample_cmd, plan_cmd, bench_cmd})
    cmd->add_flag("--json", as_json, "machine-readable output");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const config::Registry registry = builtin_registry();
  // Diagnostics are the product of `resolve`; other commands report on stderr.
  std::ostream& diag = resolve_cmd->parsed() ? out : err;
  try {
    if (resolve_cmd->parsed()) {
      auto nodes = config::load_config(resolve_opts.config_path);
      for (const auto& s : resolve_opts.overrides) config::apply_override(nodes, s);
      const auto roots = roots_of(resolve_opts);
      const auto diagnostics = config::validate(nodes, registry, roots);
      const bool valid = std::none_of(diagnostics.begin(), diagnostics.end(),
                                      [](const auto& d) { return d.severity == config::Severity::Error; });
      json j{{"valid", valid}, {"diagnostics", diagnostics_json(diagnostics)}};
      if (valid) {
        const auto graph = config::build_graph(std::move(nodes), registry, roots);
        j["order"] = graph.order;
        if (instantiate) {
          const auto objects = config::resolve(graph, registry, roots);
          j["instantiated"] = objects.order;
        }
      }
      if (as_json) {
        out << j.dump() << '\n';
      } else {
        for (const auto& d : diagnostics) out << d.format() << '\n';
      }
      return valid ? kExitOk : kExitConfig;
    }

    if (index_cmd->parsed()) {
      const DocumentIndex idx = build_index(raw_path, index_buffer);
      const auto sidecar = index_path_for(raw_path);
      write_index(idx, sidecar);
      if (as_json) {
        out << json{{"path", raw_path}, {"index_path", sidecar.string()}, {"documents", idx.size()},
                    {"source_size", idx.source_size}}
                   .dump()
            << '\n';
      } else {
        out << "indexed " << idx.size() << " documents (" << idx.source_size << " bytes) -> " << sidecar.string()
            << '\n';
      }
      return kExitOk;
    }

    if (tokenize_cmd->parsed()) {
      const auto graph = load_graph(tokenize_opts, registry, err);
      const auto objects = config::resolve(graph, registry, roots_of(tokenize_opts));
      const auto job = objects.get<const TokenizeJob>(tokenize_opts.root);
      const PipelineStats s = job->run();
      if (as_json) {
        json j = stats_json(s);
        j["out_path"] = job->config.out_path.string();
        out << j.dump() << '\n';
      } else {
        out << "tokenized " << s.documents << " documents (" << s.tokens << " tokens, " << s.skipped
            << " skipped) in " << fixed(s.elapsed_seconds, 3) << " s (" << fixed(s.tokens_per_second, 0)
            << " tokens/s) -> " << job->config.out_path.string() << '\n';
      }
      return kExitOk;
    }

    if (shuffle_cmd->parsed()) {
      const auto reader = PackedReader::open(packed_path);
      const Permutation perm = make_permutation(reader.doc_count(), seed);
      const std::string target = perm_out.empty() ? permutation_path_for(packed_path).string() : perm_out;
      write_permutation(perm, target);
      if (as_json) {
        out << json{{"path", packed_path}, {"perm_path", target}, {"seed", seed}, {"documents", perm.size()}}.dump()
            << '\n';
      } else {
        out << "shuffled " << perm.size() << " documents with seed " << seed << " -> " << target << '\n';
      }
      return kExitOk;
    }

    if (chunk_cmd->parsed()) {
      const auto reader = PackedReader::open(packed_path);
      const Permutation perm = perm_path.empty() ? identity_permutation(reader.doc_count()) : load_permutation(perm_path);
      if (perm.size() != reader.doc_count())
        throw InvalidArgument("permutation covers " + std::to_string(perm.size()) + " documents but the dataset has " +
                              std::to_string(reader.doc_count()));
      const ChunkSpec spec = chunk(perm, chunks);
      std::filesystem::create_directories(out_dir);
      json files = json::array();
      for (std::size_t c = 0; c < spec.chunk_count(); ++c) {
        char name[32];
        std::snprintf(name, sizeof name, "chunk_%05zu.cfpk", c);
        const auto path = std::filesystem::path(out_dir) / name;
        const PackedHeader h = materialize_chunk(reader, spec.assignments[c], path);
        files.push_back({{"path", path.string()}, {"documents", h.doc_count}, {"tokens", h.token_count}});
      }
      if (as_json) {
        out << json{{"path", packed_path}, {"chunks", files}}.dump() << '\n';
      } else {
        out << "wrote " << spec.chunk_count() << " chunks of " << reader.doc_count() << " documents to " << out_dir
            << '\n';
      }
      return kExitOk;
    }

    if (sample_cmd->parsed()) {
      const auto reader = PackedReader::open(packed_path);
      const auto tokens = get_sample(reader, sample_index, seq_len);
      if (as_json) {
        out << json{{"sample", sample_index}, {"seq_len", seq_len}, {"tokens", tokens}}.dump() << '\n';
      } else {
        for (std::size_t i = 0; i < tokens.size(); ++i) out << (i ? " " : "") << tokens[i];
        out << '\n';
      }
      return kExitOk;
    }

    if (plan_cmd->parsed()) {
      const auto graph = load_graph(plan_opts, registry, err);
      const auto objects = config::resolve(graph, registry, roots_of(plan_opts));
      const PlannerResult r = objects.get<const PlannerJob>(plan_opts.root)->run();
      const std::string csv = to_csv(r.table);
      if (!csv_out.empty()) write_text_file(csv_out, csv);
      if (as_json) {
        json rows = json::array();
        for (const auto& row : r.table)
          rows.push_back({{"dp", row.dp},
                          {"blocks_per_unit", row.blocks_per_unit},
                          {"shard_bytes", row.shard_bytes},
                          {"busbw_bytes_per_sec", row.busbw_bytes_per_sec},
                          {"latency_share", row.latency_share},
                          {"step_comm_seconds", row.step_comm_seconds}});
        json j{{"rows", rows}};
        if (r.plan) {
          j["plan"] = plan_json(*r.plan);
          j["plan"]["dp"] = r.plan_dp;
        }
        if (!csv_out.empty()) j["csv_path"] = csv_out;
        out << j.dump() << '\n';
        return kExitOk;
      }
      std::ostringstream summary;
      summary << "planned " << r.table.size() << " rows";
      if (r.plan)
        summary << "; dp=" << r.plan_dp << " best blocks_per_unit=" << r.plan->blocks_per_unit
                << " shard_bytes=" << r.plan->shard_bytes << " step_comm_seconds=" << r.plan->step_comm_seconds;
      if (csv_out.empty()) {
        out << csv;
        err << summary.str() << '\n';
      } else {
        out << summary.str() << " -> " << csv_out << '\n';
      }
      return kExitOk;
    }

    if (bench_cmd->parsed()) {
      const auto graph = load_graph(bench_opts, registry, err);
      const auto objects = config::resolve(graph, registry, roots_of(bench_opts));
      const auto rows = objects.get<const BenchJob>(bench_opts.root)->run();
      const std::string csv = bench_csv(rows);
      if (!csv_out.empty()) write_text_file(csv_out, csv);
      if (as_json) {
        json arr = json::array();
        for (const auto& row : rows) {
          json j = stats_json(row.stats);
          j["batch_size"] = row.batch_size;
          j["queue_capacity"] = row.queue_capacity;
          j["worker_threads"] = row.workers;
          arr.push_back(j);
        }
        out << json{{"runs", arr}}.dump() << '\n';
      } else if (csv_out.empty()) {
        out << csv;
        err << "benchmarked " << rows.size() << " configurations\n";
      } else {
        out << "benchmarked " << rows.size() << " configurations -> " << csv_out << '\n';
      }
      return kExitOk;
    }
  } catch (const config::ConstructionError& e) {
    for (const auto& d : e.diagnostics()) diag << d.format() << '\n';
    return kExitFailure;
  } catch (const config::ConfigError& e) {
    if (as_json && resolve_cmd->parsed()) {
      out << json{{"valid", false}, {"diagnostics", diagnostics_json(e.diagnostics())}}.dump() << '\n';
    } else {
      for (const auto& d : e.diagnostics()) diag << d.format() << '\n';
    }
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace corpusforge::cli
