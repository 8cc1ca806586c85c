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

/**
 * @file perf.hpp
 * GPU occupancy arithmetic and a cache-blocked CPU materializer for the
 * Vandermonde kernel, with a small timing harness comparing it to the
 * naive path.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#if defined(__linux__)
#include <sched.h>
#endif

#include "s4cd/core.hpp"
#include "s4cd/kernelgen.hpp"
#include "s4cd/random.hpp"

namespace s4cd::perf {

// ---------------------------------------------------------------------------
// occupancy

/// Defaults are the Tesla P100 (compute capability 6.0) limits.
struct GpuSpec {
  std::int64_t max_threads_per_block = 1024;
  std::int64_t max_threads_per_sm = 2048;
  std::int64_t threads_per_warp = 32;
  std::int64_t max_registers_per_block = 65536;
  std::int64_t max_registers_per_sm = 65536;
  std::int64_t register_alloc_unit = 64;  // per-warp allocation granularity
  std::int64_t max_shared_per_block = 48 * 1024;
  std::int64_t runtime_shared_overhead = 512;
  std::int64_t shared_per_sm = 65536;
  std::int64_t sm_count = 56;
  std::int64_t max_warps_per_sm = 64;

  void validate() const {
    for (auto v : {max_threads_per_block, max_threads_per_sm, threads_per_warp, max_registers_per_block,
                   max_registers_per_sm, register_alloc_unit, max_shared_per_block, shared_per_sm, sm_count,
                   max_warps_per_sm})
      if (v <= 0) throw validation_error("GpuSpec: all limits must be positive");
    if (runtime_shared_overhead < 0) throw validation_error("GpuSpec: negative shared-memory overhead");
    if (max_threads_per_block % threads_per_warp != 0)
      throw validation_error("GpuSpec: threads_per_warp must divide max_threads_per_block");
  }
};

struct KernelResourceUsage {
  std::int64_t threads_per_block = 1024;
  std::int64_t registers_per_thread = 37;
  std::int64_t shared_bytes_per_block = 8192;
};

enum class Resource { threads, registers, shared, warps };

inline const char* to_string(Resource r) {
  switch (r) {
    case Resource::threads: return "threads";
    case Resource::registers: return "registers";
    case Resource::shared: return "shared";
    case Resource::warps: return "warps";
  }
  return "?";
}

struct OccupancyReport {
  std::int64_t warps_per_block = 0;
  std::int64_t registers_per_warp = 0;
  std::int64_t registers_per_block = 0;
  std::int64_t shared_per_block_total = 0;
  std::int64_t blocks_by_threads = 0;
  std::int64_t blocks_by_registers = 0;
  std::int64_t blocks_by_shared = 0;
  std::int64_t blocks_by_warps = 0;
  std::int64_t resident_blocks = 0;
  std::int64_t active_warps = 0;
  std::int64_t max_warps_per_sm = 0;
  Resource limiting_resource = Resource::threads;

  /// active_warps / max_warps_per_sm
  double occupancy() const { return static_cast<double>(active_warps) / static_cast<double>(max_warps_per_sm); }
};

inline constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

/**
 * Resident blocks per multiprocessor = min over the four per-SM budgets.
 * Registers are allocated per warp in multiples of register_alloc_unit.
 * Ties in the minimum report the first of threads, registers, shared, warps.
 */
inline OccupancyReport occupancy(const GpuSpec& spec, const KernelResourceUsage& usage) {
  spec.validate();
  if (usage.threads_per_block <= 0) throw validation_error("occupancy: threads_per_block must be positive");
  if (usage.registers_per_thread <= 0) throw validation_error("occupancy: registers_per_thread must be positive");
  if (usage.shared_bytes_per_block < 0) throw validation_error("occupancy: shared_bytes_per_block must be >= 0");
  if (usage.threads_per_block > spec.max_threads_per_block)
    throw validation_error("occupancy: threads per block " + std::to_string(usage.threads_per_block) +
                           " exceeds the per-block limit " + std::to_string(spec.max_threads_per_block));
  if (usage.shared_bytes_per_block > spec.max_shared_per_block)
    throw validation_error("occupancy: shared memory per block " + std::to_string(usage.shared_bytes_per_block) +
                           " B exceeds the per-block limit " + std::to_string(spec.max_shared_per_block) + " B");

  OccupancyReport r;
  r.max_warps_per_sm = spec.max_warps_per_sm;
  r.warps_per_block = ceil_div(usage.threads_per_block, spec.threads_per_warp);
  r.registers_per_warp = ceil_div(usage.registers_per_thread * spec.threads_per_warp, spec.register_alloc_unit) *
                         spec.register_alloc_unit;
  r.registers_per_block = r.registers_per_warp * r.warps_per_block;
  if (r.registers_per_block > spec.max_registers_per_block)
    throw validation_error("occupancy: registers per block " + std::to_string(r.registers_per_block) +
                           " exceed the per-block limit " + std::to_string(spec.max_registers_per_block));
  r.shared_per_block_total = usage.shared_bytes_per_block + spec.runtime_shared_overhead;

  r.blocks_by_threads = spec.max_threads_per_sm / usage.threads_per_block;
  r.blocks_by_registers = spec.max_registers_per_sm / r.registers_per_block;
  r.blocks_by_shared = r.shared_per_block_total > 0 ? spec.shared_per_sm / r.shared_per_block_total
                                                    : std::numeric_limits<std::int64_t>::max();
  r.blocks_by_warps = spec.max_warps_per_sm / r.warps_per_block;

  r.resident_blocks = r.blocks_by_threads;
  r.limiting_resource = Resource::threads;
  const std::pair<std::int64_t, Resource> others[] = {{r.blocks_by_registers, Resource::registers},
                                                      {r.blocks_by_shared, Resource::shared},
                                                      {r.blocks_by_warps, Resource::warps}};
  for (const auto& [blocks, res] : others) {
    if (blocks < r.resident_blocks) {
      r.resident_blocks = blocks;
      r.limiting_resource = res;
    }
  }
  r.active_warps = r.resident_blocks * r.warps_per_block;
  return r;
}

inline std::string format_text(const OccupancyReport& r) {
  std::ostringstream os;
  auto line = [&](const char* key, const std::string& value) {
    os << std::left;
    os.width(26);
    os << key << value << '\n';
  };
  line("warps_per_block", std::to_string(r.warps_per_block));
  line("registers_per_warp", std::to_string(r.registers_per_warp));
  line("registers_per_block", std::to_string(r.registers_per_block));
  line("shared_per_block_total", std::to_string(r.shared_per_block_total) + " B");
  line("blocks_by_threads", std::to_string(r.blocks_by_threads));
  line("blocks_by_registers", std::to_string(r.blocks_by_registers));
  line("blocks_by_shared", std::to_string(r.blocks_by_shared));
  line("blocks_by_warps", std::to_string(r.blocks_by_warps));
  line("resident_blocks", std::to_string(r.resident_blocks));
  line("active_warps", std::to_string(r.active_warps) + " / " + std::to_string(r.max_warps_per_sm));
  char occ[32];
  std::snprintf(occ, sizeof occ, "%.2f%%", 100.0 * r.occupancy());
  line("occupancy", occ);
  line("limiting_resource", to_string(r.limiting_resource));
  return os.str();
}

inline std::string format_json(const OccupancyReport& r) {
  std::ostringstream os;
  char occ[32];
  std::snprintf(occ, sizeof occ, "%.6g", r.occupancy());
  os << "{\n"
     << "  \"warps_per_block\": " << r.warps_per_block << ",\n"
     << "  \"registers_per_warp\": " << r.registers_per_warp << ",\n"
     << "  \"registers_per_block\": " << r.registers_per_block << ",\n"
     << "  \"shared_per_block_total\": " << r.shared_per_block_total << ",\n"
     << "  \"blocks_limited_by\": {\"threads\": " << r.blocks_by_threads << ", \"registers\": "
     << r.blocks_by_registers << ", \"shared\": " << r.blocks_by_shared << ", \"warps\": " << r.blocks_by_warps
     << "},\n"
     << "  \"resident_blocks\": " << r.resident_blocks << ",\n"
     << "  \"active_warps\": " << r.active_warps << ",\n"
     << "  \"max_warps_per_sm\": " << r.max_warps_per_sm << ",\n"
     << "  \"occupancy\": " << occ << ",\n"
     << "  \"limiting_resource\": \"" << to_string(r.limiting_resource) << "\"\n"
     << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// tiled Vandermonde kernel

/**
 * Same result as kernelgen::s4d_kernel without the N x L matrix. The (n, l)
 * space is walked in tile x tile blocks; each n keeps its running power
 * A_n^l across l-tiles, and every K_l accumulates n in ascending order.
 */
inline Kernel tiled_kernel_materialize(const ComplexVec& a_discrete, const ComplexVec& b, const ComplexVec& c,
                                       std::size_t length, std::size_t tile = 32) {
  if (tile < 1) throw validation_error("tiled_kernel_materialize: tile must be >= 1");
  kernelgen::detail::check_system(a_discrete, b, c, length);
  const std::size_t n_state = a_discrete.size();

  std::vector<double> bc_re(n_state), bc_im(n_state);
  for (std::size_t n = 0; n < n_state; ++n) {
    bc_re[n] = b.re[n] * c.re[n] - b.im[n] * c.im[n];
    bc_im[n] = b.re[n] * c.im[n] + b.im[n] * c.re[n];
  }

  Kernel k(1, length);
  double* out = k.values.data();
  std::vector<double> pow_re(tile), pow_im(tile);
  for (std::size_t n0 = 0; n0 < n_state; n0 += tile) {
    const std::size_t n1 = std::min(n_state, n0 + tile);
    std::fill(pow_re.begin(), pow_re.end(), 1.0);
    std::fill(pow_im.begin(), pow_im.end(), 0.0);
    for (std::size_t l0 = 0; l0 < length; l0 += tile) {
      const std::size_t l1 = std::min(length, l0 + tile);
      for (std::size_t n = n0; n < n1; ++n) {
        const double ar = a_discrete.re[n], ai = a_discrete.im[n];
        const double wr = bc_re[n], wi = bc_im[n];
        double pr = pow_re[n - n0], pi = pow_im[n - n0];
        for (std::size_t l = l0; l < l1; ++l) {
          out[l] += wr * pr - wi * pi;
          const double nr = pr * ar - pi * ai;
          pi = pr * ai + pi * ar;
          pr = nr;
        }
        pow_re[n - n0] = pr;
        pow_im[n - n0] = pi;
      }
    }
  }
  kernelgen::detail::check_output(k);
  return k;
}

inline double max_abs_diff(const Kernel& a, const Kernel& b) {
  if (a.values.size() != b.values.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

/// Random stable discrete system: |A_n| in [0.5, 0.9999], B, C ~ N(0, 1/N) per plane.
struct RandomSystem {
  ComplexVec a, b, c;
};

inline RandomSystem random_stable_system(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  RandomSystem s{ComplexVec(n), ComplexVec(n), ComplexVec(n)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    s.a.set(i, std::polar(rng.uniform(0.5, 0.9999), rng.uniform(-3.14159, 3.14159)));
    s.b.set(i, {rng.normal(0.0, scale), rng.normal(0.0, scale)});
    s.c.set(i, {rng.normal(0.0, scale), rng.normal(0.0, scale)});
  }
  return s;
}

// ---------------------------------------------------------------------------
// benchmark

inline constexpr double kTilingTolerance = 1e-10;

struct BenchRow {
  std::string variant;  // "naive" or "tiled"
  std::size_t tile = 0;
  std::size_t n = 0, l = 0;
  double median_ns = 0.0;
  double speedup = 1.0;  // naive median / this median
  double max_abs_err = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::string> rejected;  // variants that failed the correctness gate
};

/// Best effort: keep the timing thread on the CPU it starts on.
inline void pin_current_thread() {
#if defined(__linux__)
  const int cpu = sched_getcpu();
  if (cpu >= 0) {
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu, &set);
    sched_setaffinity(0, sizeof(set), &set);
  }
#endif
}

template <typename Fn>
double median_time_ns(Fn&& fn, std::size_t repeats) {
  fn();  // warm-up
  std::vector<double> samples;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t m = samples.size() / 2;
  return samples.size() % 2 ? samples[m] : 0.5 * (samples[m - 1] + samples[m]);
}

/**
 * Times the naive Vandermonde path and each tiled variant on one random
 * stable system. A tiled variant is only timed after matching the naive
 * output within 1e-10; failures are listed in `rejected` instead.
 */
inline BenchReport bench_tiling(std::size_t n, std::size_t l, const std::vector<std::size_t>& tiles,
                                std::size_t repeats, std::uint64_t seed = 1) {
  if (repeats < 3) throw validation_error("bench_tiling: repeats must be >= 3");
  if (tiles.empty()) throw validation_error("bench_tiling: no tile sizes given");
  pin_current_thread();
  const auto sys = random_stable_system(n, seed);
  const Kernel reference = kernelgen::s4d_kernel(sys.a, sys.b, sys.c, l);

  BenchReport report;
  volatile double sink = 0.0;
  const double naive_ns = median_time_ns(
      [&] { sink = sink + kernelgen::s4d_kernel(sys.a, sys.b, sys.c, l).values.back(); }, repeats);
  report.rows.push_back({"naive", 0, n, l, naive_ns, 1.0, 0.0});

  for (std::size_t tile : tiles) {
    const double err = max_abs_diff(tiled_kernel_materialize(sys.a, sys.b, sys.c, l, tile), reference);
    if (!(err <= kTilingTolerance)) {
      report.rejected.push_back("tiled(" + std::to_string(tile) + ") max_abs_err=" + std::to_string(err));
      continue;
    }
    const double ns = median_time_ns(
        [&] { sink = sink + tiled_kernel_materialize(sys.a, sys.b, sys.c, l, tile).values.back(); }, repeats);
    report.rows.push_back({"tiled", tile, n, l, ns, naive_ns / ns, err});
  }
  return report;
}

inline void write_bench_csv(std::ostream& os, const BenchReport& report) {
  os << "variant,tile,n,l,median_ns,speedup\n";
  for (const auto& r : report.rows) {
    char speed[32];
    std::snprintf(speed, sizeof speed, "%.4f", r.speedup);
    os << r.variant << ',' << r.tile << ',' << r.n << ',' << r.l << ',' << static_cast<std::int64_t>(r.median_ns)
       << ',' << speed << '\n';
  }
}

}  // namespace s4cd::perf
