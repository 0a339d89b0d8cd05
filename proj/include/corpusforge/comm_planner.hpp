#pragma once

// Analytic FSDP communication model.
//
// Per-rank shard of a unit of g transformer blocks:
//     shard_bytes = ceil(g * block_params / dp) * dtype_bytes
// Ring all-gather / reduce-scatter over p ranks (alpha-beta model):
//     t = (p - 1) * (alpha + shard_bytes / B)
// Bus bandwidth (nccl-tests convention), M = p * shard_bytes:
//     busbw = (M / t) * (p - 1) / p
// Per training step every unit does two all-gathers and one reduce-scatter, so
//     step_comm = ceil(layers / g) * 3 * t(g)

#include <cstdint>
#include <string>
#include <vector>

#include "corpusforge/error.hpp"

namespace corpusforge {

struct ModelShape {
  std::uint64_t hidden = 0;
  std::uint64_t ffn_hidden = 0;
  std::uint64_t query_heads = 0;
  std::uint64_t kv_heads = 0;
  std::uint64_t head_dim = 0;
  std::uint64_t layers = 1;
  std::uint32_t dtype_bytes = 2;

  void validate() const;  // throws InvalidArgument

  // h=4096, f=14336, 32 query heads, 8 kv heads, head_dim 128, 32 layers, bf16.
  static ModelShape llama3_8b();
};

struct CollectiveModel {
  double alpha_seconds = 0;             // per ring hop
  double bandwidth_bytes_per_sec = 1;   // link bandwidth B

  void validate() const;
};

struct FsdpPlan {
  std::uint64_t blocks_per_unit = 1;
  std::uint64_t shard_bytes = 0;        // per rank, per unit
  double busbw_bytes_per_sec = 0;
  double step_comm_seconds = 0;
  std::uint64_t peak_unit_bytes = 0;    // unsharded bytes of one unit
};

class InvalidRanks : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InfeasibleCap : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// q, k, v, o projections + gated MLP (3 matrices) + two norm vectors; no biases.
std::uint64_t block_param_count(const ModelShape& shape);
std::uint64_t block_bytes(const ModelShape& shape);

std::uint64_t fsdp_shard_bytes(std::uint64_t params, std::uint32_t dtype_bytes, std::uint64_t dp_degree);

// Throws InvalidRanks for ranks < 2.
double ring_allgather_time(const CollectiveModel& model, double shard_bytes, std::uint64_t ranks);
double ring_reduce_scatter_time(const CollectiveModel& model, double shard_bytes, std::uint64_t ranks);

double bus_bandwidth(double total_bytes, double seconds, std::uint64_t ranks);

// Modeled communication time of one step with units of g blocks.
double step_comm_time(const ModelShape& shape, std::uint64_t layers, std::uint64_t blocks_per_unit,
                      std::uint64_t dp, const CollectiveModel& model);

// Evaluates every g in [1, layers] and returns the one minimizing step time
// under g * block_bytes <= memory_cap_bytes, smallest g on ties.
// Throws InfeasibleCap when one block already exceeds the cap.
FsdpPlan plan_unit_size(const ModelShape& shape, std::uint64_t layers, std::uint64_t dp,
                        const CollectiveModel& model, std::uint64_t memory_cap_bytes);

// Plan fields for a fixed g (no cap check).
FsdpPlan evaluate_unit_size(const ModelShape& shape, std::uint64_t layers, std::uint64_t blocks_per_unit,
                            std::uint64_t dp, const CollectiveModel& model);

struct MessageSizeRow {
  std::uint64_t dp = 0;
  std::uint64_t blocks_per_unit = 0;
  std::uint64_t shard_bytes = 0;
  double busbw_bytes_per_sec = 0;
  double latency_share = 0;      // (p-1) * alpha / t
  double step_comm_seconds = 0;
};

// One row per (dp, g), dp-major, in the order given.
std::vector<MessageSizeRow> message_size_table(const ModelShape& shape, const std::vector<std::uint64_t>& dp_list,
                                               const std::vector<std::uint64_t>& g_list,
                                               const CollectiveModel& model);

// Header `dp,blocks_per_unit,shard_bytes,busbw_bytes_per_sec,latency_share,step_comm_seconds`;
// floating columns printed with %.6e.
std::string to_csv(const std::vector<MessageSizeRow>& rows);

}  // namespace corpusforge
