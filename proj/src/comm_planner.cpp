#include "corpusforge/comm_planner.hpp"

#include <cstdio>

namespace corpusforge {

namespace {
constexpr double kTieTolerance = 1e-12;
}  // namespace

void ModelShape::validate() const {
  if (hidden == 0 || ffn_hidden == 0 || query_heads == 0 || kv_heads == 0 || head_dim == 0 || layers == 0)
    throw InvalidArgument("model shape dimensions must be positive");
  if (kv_heads > query_heads) throw InvalidArgument("kv_heads must not exceed query_heads");
  if (dtype_bytes != 1 && dtype_bytes != 2 && dtype_bytes != 4) throw InvalidArgument("dtype_bytes must be 1, 2 or 4");
}

ModelShape ModelShape::llama3_8b() {
  ModelShape s;
  s.hidden = 4096;
  s.ffn_hidden = 14336;
  s.query_heads = 32;
  s.kv_heads = 8;
  s.head_dim = 128;
  s.layers = 32;
  s.dtype_bytes = 2;
  return s;
}

void CollectiveModel::validate() const {
  if (!(alpha_seconds >= 0)) throw InvalidArgument("alpha must be >= 0");
  if (!(bandwidth_bytes_per_sec > 0)) throw InvalidArgument("bandwidth must be > 0");
}

std::uint64_t block_param_count(const ModelShape& s) {
  s.validate();
  const std::uint64_t q = s.query_heads * s.head_dim;
  const std::uint64_t kv = s.kv_heads * s.head_dim;
  return s.hidden * q + 2 * s.hidden * kv + q * s.hidden + 3 * s.hidden * s.ffn_hidden + 2 * s.hidden;
}

std::uint64_t block_bytes(const ModelShape& s) { return block_param_count(s) * s.dtype_bytes; }

std::uint64_t fsdp_shard_bytes(std::uint64_t params, std::uint32_t dtype_bytes, std::uint64_t dp_degree) {
  if (params == 0 || dtype_bytes == 0 || dp_degree == 0) throw InvalidArgument("shard inputs must be positive");
  return (params + dp_degree - 1) / dp_degree * dtype_bytes;
}

double ring_allgather_time(const CollectiveModel& model, double shard_bytes, std::uint64_t ranks) {
  if (ranks < 2) throw InvalidRanks("ring collectives need at least 2 ranks");
  if (shard_bytes < 0) throw InvalidArgument("message size must be >= 0");
  return static_cast<double>(ranks - 1) * (model.alpha_seconds + shard_bytes / model.bandwidth_bytes_per_sec);
}

double ring_reduce_scatter_time(const CollectiveModel& model, double shard_bytes, std::uint64_t ranks) {
  return ring_allgather_time(model, shard_bytes, ranks);
}

double bus_bandwidth(double total_bytes, double seconds, std::uint64_t ranks) {
  if (ranks < 2) throw InvalidRanks("bus bandwidth needs at least 2 ranks");
  if (!(seconds > 0)) throw InvalidArgument("time must be > 0");
  const auto p = static_cast<double>(ranks);
  return total_bytes / seconds * (p - 1) / p;
}

FsdpPlan evaluate_unit_size(const ModelShape& shape, std::uint64_t layers, std::uint64_t g, std::uint64_t dp,
                            const CollectiveModel& model) {
  if (g == 0 || layers == 0) throw InvalidArgument("blocks_per_unit and layers must be positive");
  const std::uint64_t params = block_param_count(shape);
  FsdpPlan plan;
  plan.blocks_per_unit = g;
  plan.shard_bytes = fsdp_shard_bytes(g * params, shape.dtype_bytes, dp);
  plan.peak_unit_bytes = g * params * shape.dtype_bytes;
  const auto m = static_cast<double>(plan.shard_bytes);
  const double gather = ring_allgather_time(model, m, dp);
  const double scatter = ring_reduce_scatter_time(model, m, dp);
  const std::uint64_t units = (layers + g - 1) / g;
  plan.step_comm_seconds = static_cast<double>(units) * (2 * gather + scatter);
  plan.busbw_bytes_per_sec = gather > 0 ? bus_bandwidth(static_cast<double>(dp) * m, gather, dp) : 0;
  return plan;
}

double step_comm_time(const ModelShape& shape, std::uint64_t layers, std::uint64_t g, std::uint64_t dp,
                      const CollectiveModel& model) {
  return evaluate_unit_size(shape, layers, g, dp, model).step_comm_seconds;
}

FsdpPlan plan_unit_size(const ModelShape& shape, std::uint64_t layers, std::uint64_t dp,
                        const CollectiveModel& model, std::uint64_t memory_cap_bytes) {
  model.validate();
  const std::uint64_t one_block = block_bytes(shape);
  if (memory_cap_bytes < one_block)
    throw InfeasibleCap("memory cap " + std::to_string(memory_cap_bytes) + " B is below one block (" +
                        std::to_string(one_block) + " B)");
  FsdpPlan best = evaluate_unit_size(shape, layers, 1, dp, model);
  for (std::uint64_t g = 2; g <= layers; ++g) {
    if (g * one_block > memory_cap_bytes) break;
    FsdpPlan p = evaluate_unit_size(shape, layers, g, dp, model);
    // Equal within a relative 1e-12 counts as a tie and keeps the smaller g.
    if (p.step_comm_seconds < best.step_comm_seconds * (1 - kTieTolerance)) best = p;
  }
  return best;
}

std::vector<MessageSizeRow> message_size_table(const ModelShape& shape, const std::vector<std::uint64_t>& dp_list,
                                               const std::vector<std::uint64_t>& g_list,
                                               const CollectiveModel& model) {
  model.validate();
  std::vector<MessageSizeRow> rows;
  rows.reserve(dp_list.size() * g_list.size());
  for (std::uint64_t dp : dp_list) {
    for (std::uint64_t g : g_list) {
      const FsdpPlan p = evaluate_unit_size(shape, shape.layers, g, dp, model);
      const double t = ring_allgather_time(model, static_cast<double>(p.shard_bytes), dp);
      MessageSizeRow r;
      r.dp = dp;
      r.blocks_per_unit = g;
      r.shard_bytes = p.shard_bytes;
      r.busbw_bytes_per_sec = p.busbw_bytes_per_sec;
      r.latency_share = t > 0 ? static_cast<double>(dp - 1) * model.alpha_seconds / t : 0;
      r.step_comm_seconds = p.step_comm_seconds;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string to_csv(const std::vector<MessageSizeRow>& rows) {
  std::string out = "dp,blocks_per_unit,shard_bytes,busbw_bytes_per_sec,latency_share,step_comm_seconds\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%llu,%llu,%llu,%.6e,%.6e,%.6e\n", static_cast<unsigned long long>(r.dp),
                  static_cast<unsigned long long>(r.blocks_per_unit), static_cast<unsigned long long>(r.shard_bytes),
                  r.busbw_bytes_per_sec, r.latency_share, r.step_comm_seconds);
    out += line;
  }
  return out;
}

}  // namespace corpusforge
