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

// Test-only reference implementations. Each one takes a different route
// from the library code it checks and shares none of its helpers beyond
// plain data types.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "s4cd/core.hpp"
#include "s4cd/model.hpp"
#include "s4cd/perf.hpp"

namespace s4cd::oracle {

/// Elementwise S4ConvD kernel: std::exp on std::complex and a textbook sigmoid.
inline std::vector<double> s4convd_elementwise(const DiagonalSSMParams& p, std::size_t length) {
  std::vector<double> k(length, 0.0);
  const double dt = std::exp(p.log_dt);
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (std::size_t l = 0; l < length; ++l) {
    for (std::size_t n = 0; n < p.state_dim(); ++n) {
      const std::complex<double> a(-std::exp(p.log_a_re[n]), p.a_im[n]);
      const std::complex<double> z = std::exp(static_cast<double>(l) * dt * a) * std::complex<double>(p.b.re[n], p.b.im[n]);
      const std::complex<double> gate(sig(z.real()), sig(z.imag()));
      k[l] += (std::complex<double>(p.c.re[n], p.c.im[n]) * gate).real();
    }
  }
  return k;
}

/// Naive O(n^2) DFT with exponent sign `sign`.
inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x, int sign = -1) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/**
 * Largest block count k whose summed footprint fits every per-SM budget,
 * found by trying k = 0, 1, 2, ... directly.
 */
inline std::int64_t occupancy_blocks_bruteforce(const perf::GpuSpec& s, const perf::KernelResourceUsage& u) {
  const std::int64_t warps = (u.threads_per_block + s.threads_per_warp - 1) / s.threads_per_warp;
  std::int64_t regs_warp = u.registers_per_thread * s.threads_per_warp;
  while (regs_warp % s.register_alloc_unit != 0) ++regs_warp;
  const std::int64_t regs_block = regs_warp * warps;
  const std::int64_t shared_block = u.shared_bytes_per_block + s.runtime_shared_overhead;
  std::int64_t best = 0;
  for (std::int64_t k = 1; k <= 100000; ++k) {
    const bool fits = k * u.threads_per_block <= s.max_threads_per_sm && k * regs_block <= s.max_registers_per_sm &&
                      k * shared_block <= s.shared_per_sm && k * warps <= s.max_warps_per_sm;
    if (!fits) break;
    best = k;
  }
  return best;
}

/// Central finite difference of f with respect to x (restored afterwards).
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double fp = f();
  x = saved - h;
  const double fm = f();
  x = saved;
  return (fp - fm) / (2.0 * h);
}

}  // namespace s4cd::oracle
