#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "corpusforge/comm_planner.hpp"
#include "test_support.hpp"

using namespace corpusforge;

namespace {

// Sum of explicit matrix dimension products, one line per weight.
std::uint64_t enumerate_params(const ModelShape& s) {
  const std::uint64_t h = s.hidden, q = s.query_heads * s.head_dim, kv = s.kv_heads * s.head_dim;
  std::uint64_t total = 0;
  total += h * q;              // W_q
  total += h * kv;             // W_k
  total += h * kv;             // W_v
  total += q * h;              // W_o
  total += h * s.ffn_hidden;   // W_gate
  total += h * s.ffn_hidden;   // W_up
  total += s.ffn_hidden * h;   // W_down
  total += h;                  // attention norm
  total += h;                  // mlp norm
  return total;
}

ModelShape random_shape(std::mt19937_64& rng) {
  ModelShape s;
  s.query_heads = 1 + rng() % 64;
  s.kv_heads = 1 + rng() % s.query_heads;
  s.head_dim = 1 + rng() % 256;
  s.hidden = 1 + rng() % 8192;
  s.ffn_hidden = 1 + rng() % 30000;
  s.layers = 1 + rng() % 80;
  s.dtype_bytes = std::array<std::uint32_t, 3>{1, 2, 4}[rng() % 3];
  return s;
}

}  // namespace

TEST_SUITE("comm_planner") {
  TEST_CASE("block parameter counts") {
    ModelShape unit{1, 1, 1, 1, 1, 1, 2};
    CHECK(block_param_count(unit) == 9);
    const auto golden = nlohmann::json::parse(cftest::read_file(cftest::fixture("golden/planner.json")));
    const auto llama = ModelShape::llama3_8b();
    CHECK(block_param_count(llama) == golden["llama3_8b_block_params"].get<std::uint64_t>());
    CHECK(block_param_count(llama) == 218112000ULL);
    auto wider = llama;
    wider.ffn_hidden *= 2;
    CHECK(block_param_count(wider) - block_param_count(llama) == 3 * llama.hidden * llama.ffn_hidden);
    CHECK(block_bytes(llama) == 436224000ULL);
  }

  TEST_CASE("property: parameter count matches the explicit enumerator") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
      const auto s = random_shape(rng);
      CHECK(block_param_count(s) == enumerate_params(s));
    }
  }

  TEST_CASE("shard bytes") {
    CHECK(fsdp_shard_bytes(1024, 2, 1024) == 2);
    CHECK(fsdp_shard_bytes(218112000, 2, 1024) == 426000);
    CHECK(fsdp_shard_bytes(1025, 2, 1024) == 4);
    CHECK(fsdp_shard_bytes(12345, 4, 1) == 12345 * 4);
    CHECK_THROWS_AS(fsdp_shard_bytes(1, 2, 0), InvalidArgument);
  }

  TEST_CASE("property: shard additivity") {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 2000; ++i) {
      const std::uint64_t dp = 1 + rng() % 4096;
      const std::uint64_t P = 1 + rng() % 100000000;
      const std::uint64_t g = 1 + rng() % 64;
      const std::uint32_t w = std::array<std::uint32_t, 3>{1, 2, 4}[rng() % 3];
      CHECK(fsdp_shard_bytes(g * P, w, dp) <= g * fsdp_shard_bytes(P, w, dp));
      const std::uint64_t divisible = P * dp;
      CHECK(fsdp_shard_bytes(g * divisible, w, dp) == g * fsdp_shard_bytes(divisible, w, dp));
    }
  }

  TEST_CASE("ring times") {
    CHECK(ring_allgather_time({0, 1}, 1, 2) == 1.0);
    CHECK(ring_allgather_time({2e-6, 1e9}, 0, 9) == doctest::Approx(8 * 2e-6));
    const auto golden = nlohmann::json::parse(cftest::read_file(cftest::fixture("golden/planner.json")));
    const double t = ring_allgather_time({1e-5, 1e10}, 426000, 1024);
    CHECK(t == doctest::Approx(golden["ring_time_alpha1e-5_B1e10_m426000_p1024"].get<double>()).epsilon(1e-12));
    CHECK(t == doctest::Approx(0.0538).epsilon(1e-3));
    CHECK(1023 * 1e-5 / t == doctest::Approx(0.19).epsilon(0.01));
    CHECK(ring_reduce_scatter_time({1e-5, 1e10}, 426000, 1024) == t);
    CHECK_THROWS_AS(ring_allgather_time({0, 1}, 1, 1), InvalidRanks);
    CHECK_THROWS_AS(ring_allgather_time({0, 1}, -1, 2), InvalidArgument);
  }

  TEST_CASE("bus bandwidth limits") {
    const CollectiveModel m{0, 5e9};
    CHECK(bus_bandwidth(2 * 1000.0, ring_allgather_time(m, 1000, 2), 2) == doctest::Approx(5e9).epsilon(1e-15));
    const CollectiveModel lat{1e-5, 5e9};
    const double huge = 1e15;
    CHECK(bus_bandwidth(64 * huge, ring_allgather_time(lat, huge, 64), 64) == doctest::Approx(5e9).epsilon(1e-6));
    CHECK_THROWS_AS(bus_bandwidth(1, 0, 4), InvalidArgument);
    CHECK_THROWS_AS(bus_bandwidth(1, 1, 1), InvalidRanks);
  }

  TEST_CASE("property: bus bandwidth increases with message size and stays below B") {
    for (std::uint64_t p : {8ULL, 64ULL, 1024ULL}) {
      const CollectiveModel m{1e-5, 2.5e10};
      double prev = 0;
      for (double bytes = 1024; bytes <= 1024.0 * 1024 * 1024; bytes *= 2) {
        const double bw = bus_bandwidth(p * bytes, ring_allgather_time(m, bytes, p), p);
        CHECK(bw > prev);
        CHECK(bw < m.bandwidth_bytes_per_sec);
        prev = bw;
      }
    }
  }

  TEST_CASE("plan limits") {
    const auto llama = ModelShape::llama3_8b();
    const auto unlimited = std::numeric_limits<std::uint64_t>::max();
    CHECK(plan_unit_size(llama, 32, 1024, {0, 1e10}, unlimited).blocks_per_unit == 1);
    CHECK(plan_unit_size(llama, 32, 1024, {1.0, 1e10}, unlimited).blocks_per_unit == 32);
    const auto p = plan_unit_size(llama, 32, 1024, {1e-5, 1e10}, 2ULL << 30);
    CHECK(p.blocks_per_unit == 4);
    CHECK(p.peak_unit_bytes == 4 * block_bytes(llama));
    CHECK(p.shard_bytes == fsdp_shard_bytes(4 * block_param_count(llama), 2, 1024));
    CHECK_THROWS_AS(plan_unit_size(llama, 32, 1024, {1e-5, 1e10}, block_bytes(llama) - 1), InfeasibleCap);
    CHECK(plan_unit_size(llama, 32, 1024, {1e-5, 1e10}, block_bytes(llama)).blocks_per_unit == 1);
    CHECK(step_comm_time(llama, 32, 32, 1024, {1e-5, 1e10}) <= step_comm_time(llama, 32, 1, 1024, {1e-5, 1e10}));
  }

  TEST_CASE("property: plan equals the brute-force argmin") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
      const auto s = random_shape(rng);
      const std::uint64_t dp = 2 + rng() % 2048;
      const CollectiveModel m{std::pow(10.0, -7.0 + 4.0 * (rng() % 1000) / 1000.0),
                              std::pow(10.0, 8.0 + 4.0 * (rng() % 1000) / 1000.0)};
      const std::uint64_t cap = block_bytes(s) * (1 + rng() % (s.layers + 2));
      const auto plan = plan_unit_size(s, s.layers, dp, m, cap);
      std::uint64_t best_g = 1;
      double best = step_comm_time(s, s.layers, 1, dp, m);
      for (std::uint64_t g = 2; g <= s.layers && g * block_bytes(s) <= cap; ++g) {
        const double t = step_comm_time(s, s.layers, g, dp, m);
        if (t < best * (1 - 1e-12)) {
          best = t;
          best_g = g;
        }
      }
      CAPTURE(i);
      CHECK(plan.blocks_per_unit == best_g);
      CHECK(plan.step_comm_seconds == best);
    }
  }

  TEST_CASE("message size table") {
    const auto llama = ModelShape::llama3_8b();
    const CollectiveModel m{1e-5, 1e10};
    const auto rows = message_size_table(llama, {8, 64, 1024}, {1, 2, 4, 8, 32}, m);
    REQUIRE(rows.size() == 15);
    bool found = false;
    for (const auto& r : rows) found |= r.dp == 1024 && r.blocks_per_unit == 1 && r.shard_bytes == 426000;
    CHECK(found);
    for (std::size_t g = 0; g < 5; ++g)
      for (std::size_t d = 1; d < 3; ++d) CHECK(rows[d * 5 + g].shard_bytes <= rows[(d - 1) * 5 + g].shard_bytes);
    for (std::size_t d = 0; d < 3; ++d)
      for (std::size_t g = 1; g < 5; ++g) CHECK(rows[d * 5 + g].shard_bytes >= rows[d * 5 + g - 1].shard_bytes);
    CHECK(to_csv(rows) == cftest::read_file(cftest::fixture("plan/expected.csv")));
  }
}
