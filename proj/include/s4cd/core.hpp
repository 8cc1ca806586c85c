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
 * @file core.hpp
 * Numeric building blocks shared by every module: complex planes, the
 * diagonal SSM parameter block, dense 3-d tensors and convolution kernels.
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace s4cd {

using complex = std::complex<double>;

/// Bad shapes, out-of-range settings or non-finite parameters.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or missing input data.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf detected during a numerical pass.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double sigmoid(double x) {
  // branch keeps exp() from overflowing for large |x|
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// e^z = e^{Re z}(cos Im z + i sin Im z)
inline complex complex_exp(complex z) {
  const double mag = std::exp(z.real());
  return {mag * std::cos(z.imag()), mag * std::sin(z.imag())};
}

/// Split-plane complex vector (structure of arrays).
struct ComplexVec {
  std::vector<double> re;
  std::vector<double> im;

  ComplexVec() = default;
  explicit ComplexVec(std::size_t n) : re(n, 0.0), im(n, 0.0) {}
  ComplexVec(std::vector<double> r, std::vector<double> i) : re(std::move(r)), im(std::move(i)) {
    if (re.size() != im.size()) throw validation_error("ComplexVec: re/im length mismatch");
  }
  static ComplexVec from(std::span<const complex> zs) {
    ComplexVec v(zs.size());
    for (std::size_t n = 0; n < zs.size(); ++n) {
      v.re[n] = zs[n].real();
      v.im[n] = zs[n].imag();
    }
    return v;
  }

  std::size_t size() const { return re.size(); }
  complex operator[](std::size_t n) const { return {re[n], im[n]}; }
  void set(std::size_t n, complex z) {
    re[n] = z.real();
    im[n] = z.imag();
  }
  bool finite() const { return re.size() == im.size() && all_finite(re) && all_finite(im); }
};

/**
 * One single-input single-output diagonal SSM.
 *
 * Re A is stored as log(-Re A) so every mode decays; Im A is free.
 * The sampling step is kept as log(dt).
 */
struct DiagonalSSMParams {
  std::vector<double> log_a_re;
  std::vector<double> a_im;
  ComplexVec b;
  ComplexVec c;
  double d = 0.0;
  double log_dt = 0.0;

  DiagonalSSMParams() = default;
  explicit DiagonalSSMParams(std::size_t n) : log_a_re(n, 0.0), a_im(n, 0.0), b(n), c(n) {}

  std::size_t state_dim() const { return log_a_re.size(); }
  double dt() const { return std::exp(log_dt); }

  void validate() const {
    const std::size_t n = log_a_re.size();
    if (a_im.size() != n || b.size() != n || c.size() != n || b.im.size() != n || c.im.size() != n)
      throw validation_error("DiagonalSSMParams: inconsistent state dimensions");
    if (!all_finite(log_a_re) || !all_finite(a_im) || !b.finite() || !c.finite() ||
        !std::isfinite(d) || !std::isfinite(log_dt))
      throw validation_error("DiagonalSSMParams: non-finite parameter");
    for (double x : log_a_re)
      if (!(std::exp(x) > 0.0)) throw validation_error("DiagonalSSMParams: log_a_re underflows");
  }
};

/// Continuous-time diagonal A_n = -exp(log_a_re_n) + i a_im_n.
inline ComplexVec materialize_a(const DiagonalSSMParams& p) {
  p.validate();
  ComplexVec a(p.state_dim());
  for (std::size_t n = 0; n < a.size(); ++n) {
    a.re[n] = -std::exp(p.log_a_re[n]);
    a.im[n] = p.a_im[n];
  }
  return a;
}

/// Dense row-major 3-d tensor.
struct Tensor3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : d0(a), d1(b), d2(c), data(a * b * c, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data[(i * d1 + j) * d2 + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * d1 + j) * d2 + k];
  }
  std::span<double> row(std::size_t i, std::size_t j) { return {data.data() + (i * d1 + j) * d2, d2}; }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {data.data() + (i * d1 + j) * d2, d2};
  }
  bool same_shape(const Tensor3& o) const { return d0 == o.d0 && d1 == o.d1 && d2 == o.d2; }
};

/// Inputs laid out (batch, length, features); timestamps are epoch hours per (batch, step) or empty.
struct SequenceBatch {
  Tensor3 data;
  std::vector<std::int64_t> timestamps;

  std::size_t batch() const { return data.d0; }
  std::size_t length() const { return data.d1; }
  std::size_t features() const { return data.d2; }
};

/// Real convolution kernel, one row of length L per channel.
struct Kernel {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<double> values;

  Kernel() = default;
  Kernel(std::size_t h, std::size_t l) : channels(h), length(l), values(h * l, 0.0) {}

  std::span<double> row(std::size_t h) { return {values.data() + h * length, length}; }
  std::span<const double> row(std::size_t h) const { return {values.data() + h * length, length}; }
  double& operator()(std::size_t h, std::size_t l) { return values[h * length + l]; }
  double operator()(std::size_t h, std::size_t l) const { return values[h * length + l]; }
};

}  // namespace s4cd
