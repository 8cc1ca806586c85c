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
 * @file seqconv.hpp
 * Causal convolution y_l = sum_{m<=l} k_m u_{l-m}, by zero-padded FFT or by
 * the direct O(L^2) sum, plus the matching cross-correlation used for
 * gradients.
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "s4cd/core.hpp"
#include "s4cd/fft.hpp"
#include "s4cd/parallel.hpp"

namespace s4cd::seqconv {

enum class Mode { fft, direct };

struct ConvPlan {
  std::size_t length = 0;
  std::size_t fft_length = 0;  // power of two >= 2 * length
  Mode mode = Mode::fft;

  static ConvPlan for_length(std::size_t length, Mode mode = Mode::fft) {
    if (length < 1) throw validation_error("ConvPlan: length must be >= 1");
    return {length, fft::next_pow2(2 * length), mode};
  }

  void validate() const {
    if (length < 1) throw validation_error("ConvPlan: length must be >= 1");
    if (fft_length < 2 * length || !fft::is_pow2(fft_length))
      throw validation_error("ConvPlan: fft_length must be a power of two >= 2L");
  }
};

using Spectrum = std::vector<complex>;

/// Zero-pads x to the plan size and transforms it.
inline Spectrum to_spectrum(std::span<const double> x, const fft::Plan& plan) {
  Spectrum s(plan.size(), complex{0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i];
  plan.forward(s);
  return s;
}

/// First `length` real samples of IFFT(a * b) or IFFT(a * conj(b)).
inline std::vector<double> product_head(const Spectrum& a, const Spectrum& b, bool conj_b, std::size_t length,
                                        const fft::Plan& plan) {
  Spectrum p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * (conj_b ? std::conj(b[i]) : b[i]);
  plan.inverse(p);
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = p[i].real();
  return out;
}

inline std::vector<double> causal_conv_direct(std::span<const double> u, std::span<const double> k) {
  const std::size_t len = u.size();
  std::vector<double> y(len, 0.0);
  for (std::size_t l = 0; l < len; ++l) {
    double acc = 0.0;
    for (std::size_t m = 0; m <= l; ++m) acc += k[m] * u[l - m];
    y[l] = acc;
  }
  return y;
}

/// r_m = sum_j g_{j+m} u_j, the adjoint of causal convolution with respect to k (and, swapping roles, to u).
inline std::vector<double> causal_correlate_direct(std::span<const double> g, std::span<const double> u) {
  const std::size_t len = g.size();
  std::vector<double> r(len, 0.0);
  for (std::size_t m = 0; m < len; ++m) {
    double acc = 0.0;
    for (std::size_t j = 0; j + m < len; ++j) acc += g[j + m] * u[j];
    r[m] = acc;
  }
  return r;
}

namespace detail {
inline void check_pair(std::span<const double> a, std::span<const double> b, const ConvPlan& plan) {
  plan.validate();
  if (a.size() != plan.length || b.size() != plan.length)
    throw validation_error("seqconv: operand length does not match plan length");
  if (!all_finite(a) || !all_finite(b)) throw validation_error("seqconv: non-finite input");
}
inline void check_result(std::span<const double> y) {
  if (!all_finite(y)) throw numeric_error("seqconv: non-finite output (overflow)");
}
}  // namespace detail

inline std::vector<double> causal_conv(std::span<const double> u, std::span<const double> k, const ConvPlan& plan) {
  detail::check_pair(u, k, plan);
  std::vector<double> y;
  if (plan.mode == Mode::direct) {
    y = causal_conv_direct(u, k);
  } else {
    const fft::Plan fp(plan.fft_length);
    y = product_head(to_spectrum(u, fp), to_spectrum(k, fp), false, plan.length, fp);
  }
  detail::check_result(y);
  return y;
}

inline std::vector<double> causal_conv(std::span<const double> u, const Kernel& k, const ConvPlan& plan) {
  if (k.channels != 1) throw validation_error("causal_conv: expected a single-channel kernel");
  return causal_conv(u, k.row(0), plan);
}

inline std::vector<double> causal_correlate(std::span<const double> g, std::span<const double> u,
                                            const ConvPlan& plan) {
  detail::check_pair(g, u, plan);
  std::vector<double> r;
  if (plan.mode == Mode::direct) {
    r = causal_correlate_direct(g, u);
  } else {
    const fft::Plan fp(plan.fft_length);
    r = product_head(to_spectrum(g, fp), to_spectrum(u, fp), true, plan.length, fp);
  }
  detail::check_result(r);
  return r;
}

/// batch (B, H, L) convolved row-wise with kernels (H, L).
inline Tensor3 batched_conv(const Tensor3& batch, const Kernel& kernels, const ConvPlan& plan) {
  plan.validate();
  if (batch.d1 != kernels.channels || batch.d2 != kernels.length || batch.d2 != plan.length)
    throw validation_error("batched_conv: shape mismatch between batch, kernels and plan");
  Tensor3 out(batch.d0, batch.d1, batch.d2);
  const std::size_t rows = batch.d0 * batch.d1;
  parallel_for(rows, [&](std::size_t r) {
    const std::size_t b = r / batch.d1, h = r % batch.d1;
    const auto y = causal_conv(batch.row(b, h), kernels.row(h), plan);
    std::copy(y.begin(), y.end(), out.row(b, h).begin());
  });
  return out;
}

}  // namespace s4cd::seqconv
