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

#include "s4cd/kernelgen.hpp"
#include "s4cd/perf.hpp"
#include "s4cd/random.hpp"
#include "support/oracles.hpp"

namespace s4cd::kernelgen {
namespace {

ComplexVec scalar(complex z) { return ComplexVec::from(std::vector<complex>{z}); }

double max_diff(const Kernel& a, const Kernel& b) { return perf::max_abs_diff(a, b); }

DiagonalSSMParams random_params(std::size_t n, Rng& rng) {
  DiagonalSSMParams p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.log_a_re[i] = rng.uniform(-2.0, 1.0);
    p.a_im[i] = rng.uniform(-5.0, 5.0);
    p.b.set(i, {rng.normal(), rng.normal()});
    p.c.set(i, {rng.normal(), rng.normal()});
  }
  p.log_dt = rng.uniform(std::log(0.01), std::log(0.5));
  return p;
}

TEST(S4DKernel, UnitPoleIsConstant) {
  const Kernel k = s4d_kernel(scalar(1.0), scalar(1.0), scalar(1.0), 4);
  EXPECT_EQ(k.values, (std::vector<double>{1, 1, 1, 1}));
}

TEST(S4DKernel, GeometricPowers) {
  const Kernel k = s4d_kernel(scalar(0.5), scalar(1.0), scalar(1.0), 4);
  EXPECT_EQ(k.values, (std::vector<double>{1, 0.5, 0.25, 0.125}));
}

TEST(S4DKernel, ZeroPoleFirstColumnIsOne) {
  // 0^0 = 1
  const Kernel k = s4d_kernel(scalar(0.0), scalar(2.0), scalar(3.0), 3);
  EXPECT_EQ(k.values, (std::vector<double>{6, 0, 0}));
}

TEST(S4DKernel, MatchesRecurrenceSmall) {
  const auto sys = perf::random_stable_system(4, 1234);
  const Kernel k = s4d_kernel(sys.a, sys.b, sys.c, 32);
  const Kernel r = ssm_recurrence_impulse(sys.a, sys.b, sys.c, 32);
  EXPECT_LE(max_diff(k, r), 1e-10);
}

TEST(S4DKernel, MatchesRecurrenceRandomInstances) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    const std::size_t len = 1 + rng.below(256);
    const auto sys = perf::random_stable_system(n, rng.next());
    EXPECT_LE(max_diff(s4d_kernel(sys.a, sys.b, sys.c, len), ssm_recurrence_impulse(sys.a, sys.b, sys.c, len)), 1e-10)
        << "n=" << n << " L=" << len;
  }
}

TEST(S4DKernel, RejectsMismatchAndNonFinite) {
  ComplexVec a(3), b(2), c(3);
  EXPECT_THROW(s4d_kernel(a, b, c, 4), validation_error);
  ComplexVec bb(3);
  bb.re[1] = NAN;
  EXPECT_THROW(s4d_kernel(a, bb, c, 4), validation_error);
  EXPECT_THROW(s4d_kernel(a, c, c, 0), validation_error);
}

TEST(Recurrence, SingleStepMemory) {
  const Kernel k = ssm_recurrence_impulse(scalar(0.0), scalar(1.0), scalar(1.0), 5);
  EXPECT_EQ(k.values, (std::vector<double>{1, 0, 0, 0, 0}));
}

TEST(Recurrence, HandUnrolled) {
  // 3 * 2 * 0.5^l
  const Kernel k = ssm_recurrence_impulse(scalar(0.5), scalar(2.0), scalar(3.0), 3);
  EXPECT_EQ(k.values, (std::vector<double>{6, 3, 1.5}));
}

TEST(S4ConvDKernel, ZeroInputMatrixGivesHalf) {
  DiagonalSSMParams p(1);
  p.b.set(0, 0.0);
  p.c.set(0, 1.0);
  p.log_a_re[0] = 0.7;
  p.a_im[0] = -2.0;
  const Kernel k = s4convd_kernel(p, 3);
  EXPECT_EQ(k.values, (std::vector<double>{0.5, 0.5, 0.5}));
}

TEST(S4ConvDKernel, FirstTapIndependentOfAAndDt) {
  Rng rng(5);
  auto p = random_params(6, rng);
  double expected = 0.0;
  for (std::size_t n = 0; n < 6; ++n)
    expected += (p.c[n] * complex{sigmoid(p.b.re[n]), sigmoid(p.b.im[n])}).real();
  for (int trial = 0; trial < 5; ++trial) {
    for (auto& x : p.log_a_re) x = rng.uniform(-3, 3);
    for (auto& x : p.a_im) x = rng.uniform(-9, 9);
    p.log_dt = rng.uniform(-5, 1);
    EXPECT_NEAR(s4convd_kernel(p, 4).values[0], expected, 1e-14);
  }
}

TEST(S4ConvDKernel, MatchesElementwiseOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(2, rng);
    const auto k = s4convd_kernel(p, 16);
    const auto ref = oracle::s4convd_elementwise(p, 16);
    for (std::size_t l = 0; l < 16; ++l) EXPECT_NEAR(k.values[l], ref[l], 1e-12);
  }
}

TEST(S4ConvDKernel, BoundedBySumOfCMagnitudes) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_params(1 + rng.below(16), rng);
    double bound = 0.0;
    for (std::size_t n = 0; n < p.state_dim(); ++n) bound += std::abs(p.c[n]) * std::sqrt(2.0);
    for (double v : s4convd_kernel(p, 64).values) EXPECT_LE(std::abs(v), bound);
  }
}

TEST(S4ConvDKernel, AsymptoteIsHalfGate) {
  Rng rng(17);
  auto p = random_params(8, rng);
  for (auto& x : p.log_a_re) x = std::log(2.0);  // |Re A| = 2 for every mode
  p.log_dt = std::log(0.5);                       // t_l |Re A| = l
  double limit = 0.0;
  for (std::size_t n = 0; n < 8; ++n) limit += (p.c[n] * complex{0.5, 0.5}).real();
  const auto k = s4convd_kernel(p, 64);
  for (std::size_t l = 40; l < 64; ++l) EXPECT_NEAR(k.values[l], limit, 1e-8) << l;
}

TEST(S4ConvDKernel, ScalingBMovesGatesAwayFromHalf) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const double br = rng.normal(), bi = rng.normal(), s = rng.uniform(1.01, 5.0);
    EXPECT_GE(std::abs(sigmoid(s * br) - 0.5), std::abs(sigmoid(br) - 0.5));
    EXPECT_GE(std::abs(sigmoid(s * bi) - 0.5), std::abs(sigmoid(bi) - 0.5));
    // through the kernel: single mode with C = 1 exposes the real gate, C = -i the imaginary one
    DiagonalSSMParams p(1);
    p.b.set(0, {br, bi});
    p.c.set(0, 1.0);
    const double g0 = s4convd_kernel(p, 1).values[0];
    p.b.set(0, {s * br, s * bi});
    const double g1 = s4convd_kernel(p, 1).values[0];
    EXPECT_GE(std::abs(g1 - 0.5), std::abs(g0 - 0.5));
  }
}

TEST(S4ConvDKernel, RejectsBadInput) {
  DiagonalSSMParams p(2);
  EXPECT_THROW(s4convd_kernel(p, 0), validation_error);
  p.b.re.pop_back();
  EXPECT_THROW(s4convd_kernel(p, 3), validation_error);
}

TEST(Variant, ParseRoundTrip) {
  EXPECT_EQ(parse_variant(to_string(Variant::s4d_vandermonde)), Variant::s4d_vandermonde);
  EXPECT_EQ(parse_variant("S4CONVD_ADAPTIVE"), Variant::s4convd_adaptive);
  EXPECT_THROW(parse_variant("cauchy"), validation_error);
  EXPECT_THROW((KernelSpec{Variant::s4d_vandermonde, 0, 4}.validate()), validation_error);
}

}  // namespace
}  // namespace s4cd::kernelgen
