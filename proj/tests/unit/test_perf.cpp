/*
 * Copyright (c) 2026, The s4cd Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <sstream>

#include "s4cd/kernelgen.hpp"
#include "s4cd/perf.hpp"
#include "s4cd/random.hpp"
#include "support/oracles.hpp"

namespace s4cd::perf {
namespace {

TEST(Occupancy, P100Example) {
  const auto r = occupancy(GpuSpec{}, KernelResourceUsage{1024, 37, 8192});
  EXPECT_EQ(r.warps_per_block, 32);
  EXPECT_EQ(r.registers_per_warp, 1216);
  EXPECT_EQ(r.registers_per_block, 38912);
  EXPECT_EQ(r.shared_per_block_total, 8704);
  EXPECT_EQ(r.blocks_by_shared, 7);
  EXPECT_EQ(r.blocks_by_registers, 1);
  EXPECT_EQ(r.resident_blocks, 1);
  EXPECT_EQ(r.active_warps, 32);
  EXPECT_EQ(r.occupancy(), 0.5);
  EXPECT_EQ(r.limiting_resource, Resource::registers);
}

TEST(Occupancy, MinimalFootprintSaturates) {
  const auto r = occupancy(GpuSpec{}, KernelResourceUsage{32, 1, 0});
  EXPECT_EQ(r.blocks_by_threads, 64);
  EXPECT_EQ(r.blocks_by_warps, 64);
  EXPECT_EQ(r.blocks_by_registers, 1024);
  EXPECT_EQ(r.resident_blocks, 64);
  EXPECT_EQ(r.occupancy(), 1.0);
  EXPECT_EQ(r.limiting_resource, Resource::threads);
}

TEST(Occupancy, MatchesBruteForce) {
  Rng rng(31);
  int checked = 0;
  for (int t = 0; t < 2000; ++t) {
    GpuSpec s;
    s.threads_per_warp = 32;
    s.max_threads_per_block = 32 * static_cast<std::int64_t>(1 + rng.below(32));
    s.max_threads_per_sm = 32 * static_cast<std::int64_t>(1 + rng.below(96));
    s.max_warps_per_sm = static_cast<std::int64_t>(1 + rng.below(96));
    s.register_alloc_unit = std::int64_t{1} << rng.below(9);
    s.max_registers_per_sm = static_cast<std::int64_t>(1024 + rng.below(200000));
    s.max_registers_per_block = s.max_registers_per_sm;
    s.shared_per_sm = static_cast<std::int64_t>(1024 + rng.below(200000));
    s.max_shared_per_block = s.shared_per_sm;
    s.runtime_shared_overhead = static_cast<std::int64_t>(rng.below(1024));
    KernelResourceUsage u;
    u.threads_per_block = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(s.max_threads_per_block)));
    u.registers_per_thread = static_cast<std::int64_t>(1 + rng.below(255));
    u.shared_bytes_per_block = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s.max_shared_per_block)));
    OccupancyReport r;
    try {
      r = occupancy(s, u);
    } catch (const validation_error&) {
      continue;  // per-block limit exceeded
    }
    ++checked;
    EXPECT_EQ(r.resident_blocks, oracle::occupancy_blocks_bruteforce(s, u));
    EXPECT_EQ(r.active_warps, r.resident_blocks * r.warps_per_block);
    EXPECT_EQ(r.resident_blocks,
              std::min({r.blocks_by_threads, r.blocks_by_registers, r.blocks_by_shared, r.blocks_by_warps}));
  }
  EXPECT_GT(checked, 500);
}

TEST(Occupancy, MonotoneInRegistersAndShared) {
  const GpuSpec s;
  for (std::int64_t threads : {64, 256, 1024}) {
    double prev = 2.0;
    for (std::int64_t regs = 1; regs <= 64; ++regs) {
      const double occ = occupancy(s, {threads, regs, 1024}).occupancy();
      EXPECT_LE(occ, prev);
      prev = occ;
    }
    prev = 2.0;
    for (std::int64_t sh = 0; sh <= 48 * 1024; sh += 512) {
      const double occ = occupancy(s, {threads, 16, sh}).occupancy();
      EXPECT_LE(occ, prev);
      prev = occ;
    }
  }
}

TEST(Occupancy, ErrorsNameTheResource) {
  auto message = [](const KernelResourceUsage& u) {
    try {
      occupancy(GpuSpec{}, u);
    } catch (const validation_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message({2048, 8, 0}).find("threads"), std::string::npos);
  EXPECT_NE(message({1024, 255, 0}).find("registers"), std::string::npos);
  EXPECT_NE(message({32, 8, 60000}).find("shared"), std::string::npos);
  GpuSpec bad;
  bad.threads_per_warp = 33;
  EXPECT_THROW(occupancy(bad, {}), validation_error);
}

TEST(Occupancy, Formatting) {
  const auto r = occupancy(GpuSpec{}, KernelResourceUsage{});
  const auto text = format_text(r);
  EXPECT_NE(text.find("registers"), std::string::npos);
  const auto json = format_json(r);
  EXPECT_NE(json.find("\"resident_blocks\": 1"), std::string::npos);
  EXPECT_NE(json.find("\"limiting_resource\": \"registers\""), std::string::npos);
}

TEST(Tiling, SingleTileIsBitIdentical) {
  const auto sys = random_stable_system(10, 5);
  EXPECT_EQ(tiled_kernel_materialize(sys.a, sys.b, sys.c, 40, 64).values,
            kernelgen::s4d_kernel(sys.a, sys.b, sys.c, 40).values);
}

TEST(Tiling, MatchesNaive) {
  const auto sys = random_stable_system(64, 6);
  const auto naive = kernelgen::s4d_kernel(sys.a, sys.b, sys.c, 1024);
  for (std::size_t tile : {1u, 7u, 8u, 16u, 32u, 64u})
    EXPECT_LE(max_abs_diff(tiled_kernel_materialize(sys.a, sys.b, sys.c, 1024, tile), naive), 1e-10) << tile;
}

TEST(Tiling, SingleStateGeometric) {
  const auto one = ComplexVec::from(std::vector<complex>{1.0});
  const auto half = ComplexVec::from(std::vector<complex>{0.5});
  EXPECT_EQ(tiled_kernel_materialize(half, one, one, 4, 2).values, (std::vector<double>{1, 0.5, 0.25, 0.125}));
  EXPECT_THROW(tiled_kernel_materialize(half, one, one, 4, 0), validation_error);
}

TEST(Bench, RowsPassTheGate) {
  const auto report = bench_tiling(32, 256, {8, 16, 32, 64}, 3, 9);
  ASSERT_EQ(report.rows.size(), 5u);
  EXPECT_TRUE(report.rejected.empty());
  EXPECT_EQ(report.rows[0].variant, "naive");
  EXPECT_EQ(report.rows[0].speedup, 1.0);
  for (const auto& r : report.rows) EXPECT_LE(r.max_abs_err, kTilingTolerance);
  std::ostringstream os;
  write_bench_csv(os, report);
  const std::string csv = os.str();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_THROW(bench_tiling(4, 8, {8}, 2), validation_error);
}

}  // namespace
}  // namespace s4cd::perf
