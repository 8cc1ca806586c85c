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
#include <numbers>

#include "s4cd/core.hpp"
#include "s4cd/random.hpp"

namespace s4cd {
namespace {

TEST(ComplexExp, ZeroIsOne) {
  const complex z = complex_exp({0.0, 0.0});
  EXPECT_EQ(z.real(), 1.0);
  EXPECT_EQ(z.imag(), 0.0);
}

TEST(ComplexExp, EulerIdentity) {
  const complex z = complex_exp({0.0, std::numbers::pi});
  EXPECT_NEAR(z.real(), -1.0, 1e-12);
  EXPECT_NEAR(z.imag(), 0.0, 1e-12);
}

TEST(ComplexExp, LogTwoPlusQuarterTurn) {
  // e^{ln 2}(cos pi/2 + i sin pi/2) = 2i
  const complex z = complex_exp({std::log(2.0), std::numbers::pi / 2});
  EXPECT_NEAR(z.real(), 0.0, 1e-12);
  EXPECT_NEAR(z.imag(), 2.0, 1e-12);
}

TEST(ComplexExp, AdditionTheoremProperty) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const complex a{rng.uniform(-7, 7), rng.uniform(-7, 7)};
    const complex b{rng.uniform(-7, 7), rng.uniform(-7, 7)};
    if (std::abs(a) > 10 || std::abs(b) > 10) continue;
    const complex lhs = complex_exp(a + b);
    const complex rhs = complex_exp(a) * complex_exp(b);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs)) << a << " " << b;
  }
}

TEST(MaterializeA, UnitDecay) {
  DiagonalSSMParams p(1);
  const auto a = materialize_a(p);
  EXPECT_EQ(a.re[0], -1.0);
  EXPECT_EQ(a.im[0], 0.0);
}

TEST(MaterializeA, HandComputed) {
  DiagonalSSMParams p(1);
  p.log_a_re[0] = std::log(2.0);
  p.a_im[0] = 3.0;
  const auto a = materialize_a(p);
  EXPECT_NEAR(a.re[0], -2.0, 1e-15);
  EXPECT_EQ(a.im[0], 3.0);
}

TEST(MaterializeA, RealPartAlwaysNegative) {
  Rng rng(3);
  DiagonalSSMParams p(64);
  for (int trial = 0; trial < 50; ++trial) {
    for (std::size_t n = 0; n < 64; ++n) {
      p.log_a_re[n] = rng.uniform(-30, 30);
      p.a_im[n] = rng.normal(0, 100);
    }
    const auto a = materialize_a(p);
    for (double re : a.re) EXPECT_LT(re, 0.0);
  }
}

TEST(MaterializeA, RejectsNonFinite) {
  DiagonalSSMParams p(2);
  p.a_im[1] = std::nan("");
  EXPECT_THROW(materialize_a(p), validation_error);
  DiagonalSSMParams q(2);
  q.log_dt = INFINITY;
  EXPECT_THROW(materialize_a(q), validation_error);
}

TEST(ComplexVec, MismatchedPlanesRejected) {
  EXPECT_THROW(ComplexVec({1.0, 2.0}, {1.0}), validation_error);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-15);
}

}  // namespace
}  // namespace s4cd
