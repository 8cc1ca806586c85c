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

#include <cmath>
#include <complex>

#include "s4cd/fft.hpp"
#include "s4cd/random.hpp"
#include "s4cd/seqconv.hpp"
#include "support/oracles.hpp"

namespace s4cd::seqconv {
namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(Fft, MatchesNaiveDft) {
  Rng rng(3);
  for (std::size_t n : {1u, 2u, 4u, 8u, 64u, 256u}) {
    std::vector<complex> x(n);
    for (auto& z : x) z = {rng.normal(), rng.normal()};
    auto y = x;
    fft::forward(y);
    const auto ref = oracle::dft(x);
    for (std::size_t k = 0; k < n; ++k) EXPECT_LE(std::abs(y[k] - ref[k]), 1e-10 * static_cast<double>(n)) << n;
  }
}

TEST(Fft, RoundTripAndParseval) {
  Rng rng(4);
  std::vector<complex> x(512);
  for (auto& z : x) z = {rng.normal(), rng.normal()};
  auto y = x;
  fft::forward(y);
  double ex = 0.0, ey = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ex += std::norm(x[i]);
    ey += std::norm(y[i]);
  }
  EXPECT_NEAR(ey / static_cast<double>(x.size()), ex, 1e-9 * ex);
  fft::inverse(y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(y[i] - x[i]), 1e-12);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  EXPECT_THROW(fft::Plan(12), validation_error);
  EXPECT_EQ(fft::next_pow2(17), 32u);
  EXPECT_EQ(fft::next_pow2(16), 16u);
}

TEST(ConvPlan, PadsToTwiceLength) {
  const auto p = ConvPlan::for_length(100);
  EXPECT_EQ(p.fft_length, 256u);
  EXPECT_EQ(ConvPlan::for_length(64).fft_length, 128u);
  EXPECT_THROW(ConvPlan::for_length(0), validation_error);
  EXPECT_THROW((ConvPlan{16, 16, Mode::fft}.validate()), validation_error);
}

TEST(CausalConv, DeltaKernelIsIdentity) {
  Rng rng(1);
  const auto u = random_vec(16, rng);
  std::vector<double> k(16, 0.0);
  k[0] = 1.0;
  const auto y = causal_conv(u, k, ConvPlan::for_length(16));
  EXPECT_LE(max_diff(y, u), 1e-14);
}

TEST(CausalConv, ZeroInputGivesZero) {
  Rng rng(2);
  const std::vector<double> u(16, 0.0);
  const auto y = causal_conv(u, random_vec(16, rng), ConvPlan::for_length(16));
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(CausalConv, FftMatchesDirect) {
  Rng rng(5);
  const auto u = random_vec(16, rng), k = random_vec(16, rng);
  const auto a = causal_conv(u, k, ConvPlan::for_length(16, Mode::fft));
  const auto b = causal_conv(u, k, ConvPlan::for_length(16, Mode::direct));
  EXPECT_LE(max_diff(a, b), 1e-10);
}

TEST(CausalConv, FftMatchesHandLoopAcrossLengths) {
  Rng rng(6);
  for (std::size_t len : {1u, 2u, 3u, 17u, 100u, 1000u, 4096u}) {
    const auto u = random_vec(len, rng), k = random_vec(len, rng);
    std::vector<double> ref(len, 0.0);
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t m = 0; m <= l; ++m) ref[l] += k[m] * u[l - m];
    EXPECT_LE(max_diff(causal_conv(u, k, ConvPlan::for_length(len)), ref), 1e-10) << len;
  }
}

TEST(CausalConv, Causality) {
  Rng rng(7);
  const std::size_t len = 64;
  const auto u = random_vec(len, rng), k = random_vec(len, rng);
  const auto plan = ConvPlan::for_length(len);
  const auto y = causal_conv(u, k, plan);
  for (std::size_t p : {1u, 10u, 33u, 63u}) {
    auto cut = u;
    for (std::size_t j = p; j < len; ++j) cut[j] = 0.0;
    const auto yc = causal_conv(cut, k, plan);
    for (std::size_t l = 0; l < p; ++l) EXPECT_NEAR(yc[l], y[l], 1e-10);
  }
}

TEST(CausalConv, Linearity) {
  Rng rng(8);
  const std::size_t len = 128;
  const auto u = random_vec(len, rng), v = random_vec(len, rng), k = random_vec(len, rng);
  const double alpha = 1.7, beta = -0.3;
  std::vector<double> mix(len);
  for (std::size_t i = 0; i < len; ++i) mix[i] = alpha * u[i] + beta * v[i];
  const auto plan = ConvPlan::for_length(len);
  const auto yu = causal_conv(u, k, plan), yv = causal_conv(v, k, plan), ym = causal_conv(mix, k, plan);
  for (std::size_t i = 0; i < len; ++i) EXPECT_NEAR(ym[i], alpha * yu[i] + beta * yv[i], 1e-10);
}

TEST(CausalConv, Errors) {
  std::vector<double> u(8, 1.0), k(7, 1.0);
  EXPECT_THROW(causal_conv(u, k, ConvPlan::for_length(8)), validation_error);
  k.push_back(NAN);
  EXPECT_THROW(causal_conv(u, k, ConvPlan::for_length(8)), validation_error);
  std::vector<double> huge(8, 1e300);
  EXPECT_THROW(causal_conv(huge, huge, ConvPlan::for_length(8, Mode::direct)), numeric_error);
}

TEST(CausalCorrelate, IsAdjointOfConvolution) {
  // <g, conv(u, k)> = <corr(g, u), k>
  Rng rng(9);
  const std::size_t len = 50;
  const auto g = random_vec(len, rng), u = random_vec(len, rng), k = random_vec(len, rng);
  const auto plan = ConvPlan::for_length(len);
  const auto y = causal_conv(u, k, plan);
  const auto r = causal_correlate(g, u, plan);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    lhs += g[i] * y[i];
    rhs += r[i] * k[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-9);
  EXPECT_LE(max_diff(r, causal_correlate(g, u, ConvPlan::for_length(len, Mode::direct))), 1e-10);
}

TEST(BatchedConv, SingleRowReducesToCausalConv) {
  Rng rng(10);
  Tensor3 x(1, 1, 20);
  for (auto& v : x.data) v = rng.normal();
  Kernel k(1, 20);
  for (auto& v : k.values) v = rng.normal();
  const auto plan = ConvPlan::for_length(20);
  const auto y = batched_conv(x, k, plan);
  EXPECT_EQ(y.data, causal_conv(x.row(0, 0), k, plan));
}

TEST(BatchedConv, MatchesRowLoop) {
  Rng rng(11);
  Tensor3 x(2, 4, 32);
  for (auto& v : x.data) v = rng.normal();
  Kernel k(4, 32);
  for (auto& v : k.values) v = rng.normal();
  const auto plan = ConvPlan::for_length(32);
  const auto y = batched_conv(x, k, plan);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t h = 0; h < 4; ++h) EXPECT_LE(max_diff(y.row(b, h), causal_conv(x.row(b, h), k.row(h), plan)), 1e-12);
}

TEST(BatchedConv, DuplicatedRowsGiveDuplicatedOutputs) {
  Rng rng(12);
  Tensor3 x(2, 3, 16);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t l = 0; l < 16; ++l) x(0, h, l) = x(1, h, l) = rng.normal();
  Kernel k(3, 16);
  for (auto& v : k.values) v = rng.normal();
  const auto y = batched_conv(x, k, ConvPlan::for_length(16));
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t l = 0; l < 16; ++l) EXPECT_EQ(y(0, h, l), y(1, h, l));
}

TEST(BatchedConv, ShapeMismatch) {
  EXPECT_THROW(batched_conv(Tensor3(1, 2, 8), Kernel(3, 8), ConvPlan::for_length(8)), validation_error);
  EXPECT_THROW(batched_conv(Tensor3(1, 2, 8), Kernel(2, 8), ConvPlan::for_length(9)), validation_error);
}

}  // namespace
}  // namespace s4cd::seqconv
