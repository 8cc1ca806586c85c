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
 * @file kernelgen.hpp
 * Kernel materialization from diagonal SSM parameters.
 *
 *  - s4d_kernel:      K_l = Re sum_n C_n A_n^l B_n through an explicit
 *                     N x L Vandermonde matrix (A already discrete).
 *  - s4convd_kernel:  K_l = Re sum_n C_n g(e^{t_l A_n} B_n), t_l = l dt,
 *                     where g applies the logistic sigmoid to the real and
 *                     imaginary planes separately.
 *  - ssm_recurrence_impulse: unit-impulse response of the discrete
 *                     recurrence, used to check s4d_kernel.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <string>

#include "s4cd/core.hpp"

namespace s4cd::kernelgen {

enum class Variant { s4d_vandermonde, s4convd_adaptive };

inline const char* to_string(Variant v) {
  return v == Variant::s4d_vandermonde ? "s4d" : "s4convd";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "s4d" || s == "S4D_VANDERMONDE") return Variant::s4d_vandermonde;
  if (s == "s4convd" || s == "S4CONVD_ADAPTIVE") return Variant::s4convd_adaptive;
  throw validation_error("unknown kernel variant '" + s + "' (expected s4d or s4convd)");
}

struct KernelSpec {
  Variant variant = Variant::s4convd_adaptive;
  std::size_t length = 1;
  std::size_t state_dim = 1;

  void validate() const {
    if (length < 1 || state_dim < 1) throw validation_error("KernelSpec: length and state_dim must be >= 1");
  }
};

namespace detail {

inline void check_system(const ComplexVec& a, const ComplexVec& b, const ComplexVec& c, std::size_t len) {
  if (len < 1) throw validation_error("kernel length must be >= 1");
  if (a.size() != b.size() || a.size() != c.size() || a.size() == 0)
    throw validation_error("kernel: A, B, C must have the same non-zero length");
  if (!a.finite() || !b.finite() || !c.finite()) throw validation_error("kernel: non-finite input");
}

inline void warn_unstable(const ComplexVec& a) {
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (std::abs(a[n]) > 1.0) {
      std::cerr << "warning: |A_" << n << "| = " << std::abs(a[n]) << " > 1, kernel will grow\n";
      return;
    }
  }
}

inline void check_output(const Kernel& k) {
  if (!all_finite(k.values)) throw numeric_error("kernel: non-finite value produced");
}

}  // namespace detail

/**
 * Vandermonde route. The matrix VL(A)_{n,l} = A_n^l (with A^0 = 1) is
 * materialized row by row with running products, then contracted with
 * B.C summing over n in ascending order for every l.
 */
inline Kernel s4d_kernel(const ComplexVec& a_discrete, const ComplexVec& b, const ComplexVec& c,
                         std::size_t length) {
  detail::check_system(a_discrete, b, c, length);
  detail::warn_unstable(a_discrete);
  const std::size_t n_state = a_discrete.size();

  std::vector<double> v_re(n_state * length), v_im(n_state * length);
  for (std::size_t n = 0; n < n_state; ++n) {
    double pr = 1.0, pi = 0.0;
    const double ar = a_discrete.re[n], ai = a_discrete.im[n];
    for (std::size_t l = 0; l < length; ++l) {
      v_re[n * length + l] = pr;
      v_im[n * length + l] = pi;
      const double nr = pr * ar - pi * ai;
      pi = pr * ai + pi * ar;
      pr = nr;
    }
  }

  std::vector<double> bc_re(n_state), bc_im(n_state);
  for (std::size_t n = 0; n < n_state; ++n) {
    bc_re[n] = b.re[n] * c.re[n] - b.im[n] * c.im[n];
    bc_im[n] = b.re[n] * c.im[n] + b.im[n] * c.re[n];
  }

  Kernel k(1, length);
  for (std::size_t l = 0; l < length; ++l) {
    double acc = 0.0;
    for (std::size_t n = 0; n < n_state; ++n)
      acc += bc_re[n] * v_re[n * length + l] - bc_im[n] * v_im[n * length + l];
    k.values[l] = acc;
  }
  detail::check_output(k);
  return k;
}

/// Adaptive sigmoid-gated kernel sampled at t_l = l * exp(log_dt).
inline Kernel s4convd_kernel(const DiagonalSSMParams& params, std::size_t length) {
  if (length < 1) throw validation_error("kernel length must be >= 1");
  const ComplexVec a = materialize_a(params);
  const std::size_t n_state = a.size();
  const double dt = params.dt();

  Kernel k(1, length);
  for (std::size_t l = 0; l < length; ++l) {
    const double t = static_cast<double>(l) * dt;
    double acc = 0.0;
    for (std::size_t n = 0; n < n_state; ++n) {
      const complex e = complex_exp(complex{t * a.re[n], t * a.im[n]});
      const double zr = e.real() * params.b.re[n] - e.imag() * params.b.im[n];
      const double zi = e.real() * params.b.im[n] + e.imag() * params.b.re[n];
      acc += params.c.re[n] * sigmoid(zr) - params.c.im[n] * sigmoid(zi);
    }
    k.values[l] = acc;
  }
  detail::check_output(k);
  return k;
}

/**
 * Unit-impulse response of x_{l+1} = A x_l + B u_{l+1}, y_l = Re(C x_l),
 * with the impulse entering at l = 0 so that y_0 = Re(C B).
 */
inline Kernel ssm_recurrence_impulse(const ComplexVec& a_discrete, const ComplexVec& b, const ComplexVec& c,
                                     std::size_t length) {
  detail::check_system(a_discrete, b, c, length);
  const std::size_t n_state = a_discrete.size();
  std::vector<complex> x(n_state);
  for (std::size_t n = 0; n < n_state; ++n) x[n] = b[n];

  Kernel k(1, length);
  for (std::size_t l = 0; l < length; ++l) {
    double y = 0.0;
    for (std::size_t n = 0; n < n_state; ++n) y += (c[n] * x[n]).real();
    k.values[l] = y;
    for (std::size_t n = 0; n < n_state; ++n) x[n] = a_discrete[n] * x[n];
  }
  detail::check_output(k);
  return k;
}

/// Zero-order-hold pole map exp(dt * A) used to feed s4d_kernel.
inline ComplexVec discretize_a(const DiagonalSSMParams& params) {
  const ComplexVec a = materialize_a(params);
  const double dt = params.dt();
  ComplexVec out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) out.set(n, complex_exp(dt * a[n]));
  return out;
}

}  // namespace s4cd::kernelgen
