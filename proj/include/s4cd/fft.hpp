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

/** Iterative in-place radix-2 FFT over std::complex<double>. */

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "s4cd/core.hpp"

namespace s4cd::fft {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/**
 * Twiddles and bit-reversal table for one transform size. Building the
 * plan once and reusing it across rows keeps per-row work to the butterflies.
 */
class Plan {
 public:
  explicit Plan(std::size_t n) : n_(n), rev_(n), twiddle_(n / 2) {
    if (!is_pow2(n)) throw validation_error("fft::Plan: size must be a power of two");
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      rev_[i] = r;
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(ang), std::sin(ang)};
    }
  }

  std::size_t size() const { return n_; }

  void forward(std::span<complex> a) const { run(a, false); }

  /// Inverse including the 1/n normalization.
  void inverse(std::span<complex> a) const {
    run(a, true);
    const double inv = 1.0 / static_cast<double>(n_);
    for (auto& z : a) z *= inv;
  }

 private:
  void run(std::span<complex> a, bool invert) const {
    if (a.size() != n_) throw validation_error("fft::Plan: buffer size does not match plan");
    for (std::size_t i = 0; i < n_; ++i)
      if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          complex w = twiddle_[k * stride];
          if (invert) w = std::conj(w);
          const complex u = a[start + k];
          const complex v = a[start + k + half] * w;
          a[start + k] = u + v;
          a[start + k + half] = u - v;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<complex> twiddle_;
};

inline void forward(std::span<complex> a) { Plan(a.size()).forward(a); }
inline void inverse(std::span<complex> a) { Plan(a.size()).inverse(a); }

}  // namespace s4cd::fft
