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
 * @file model.hpp
 * Linear encoder -> per-channel diagonal SSM convolution with D skip ->
 * smooth activation -> dropout -> linear decoder.
 *
 * Each of the H encoder channels owns one SISO diagonal system. The kernel
 * actually convolved is dt * K where K comes from kernelgen, i.e. the sampled
 * continuous-time impulse response weighted by the sampling step.
 */

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "s4cd/core.hpp"
#include "s4cd/fft.hpp"
#include "s4cd/kernelgen.hpp"
#include "s4cd/parallel.hpp"
#include "s4cd/random.hpp"
#include "s4cd/seqconv.hpp"

namespace s4cd::model {

using kernelgen::Variant;

struct ModelConfig {
  std::size_t input_dim = 4;
  std::size_t measurement_dim = 128;  // H
  std::size_t state_dim = 64;         // N
  std::size_t output_dim = 1;
  double dropout = 0.01;
  std::size_t seq_len = 168;
  Variant variant = Variant::s4convd_adaptive;

  void validate() const {
    if (input_dim < 1 || measurement_dim < 1 || state_dim < 1 || output_dim < 1 || seq_len < 1)
      throw validation_error("ModelConfig: all dimensions must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw validation_error("ModelConfig: dropout must lie in [0, 1)");
  }
};

struct ModelParams {
  std::size_t input_dim = 0, hidden = 0, state_dim = 0, output_dim = 0;
  std::vector<double> enc_w;  // hidden x input_dim, row-major
  std::vector<double> enc_b;  // hidden
  std::vector<DiagonalSSMParams> ssm;
  std::vector<double> dec_w;  // output_dim x hidden, row-major
  std::vector<double> dec_b;  // output_dim

  static ModelParams zeros(std::size_t input_dim, std::size_t hidden, std::size_t state_dim,
                           std::size_t output_dim) {
    ModelParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.state_dim = state_dim;
    p.output_dim = output_dim;
    p.enc_w.assign(hidden * input_dim, 0.0);
    p.enc_b.assign(hidden, 0.0);
    p.ssm.assign(hidden, DiagonalSSMParams(state_dim));
    p.dec_w.assign(output_dim * hidden, 0.0);
    p.dec_b.assign(output_dim, 0.0);
    return p;
  }
  static ModelParams zeros_like(const ModelParams& o) {
    return zeros(o.input_dim, o.hidden, o.state_dim, o.output_dim);
  }

  /// Visits every parameter array in checkpoint order.
  template <typename Fn>
  void for_each_array(Fn&& fn) {
    fn(std::string("encoder.weight"), std::span<double>(enc_w));
    fn(std::string("encoder.bias"), std::span<double>(enc_b));
    for (std::size_t h = 0; h < ssm.size(); ++h) {
      auto& s = ssm[h];
      const std::string pre = "ssm[" + std::to_string(h) + "].";
      fn(pre + "log_a_re", std::span<double>(s.log_a_re));
      fn(pre + "a_im", std::span<double>(s.a_im));
      fn(pre + "b.re", std::span<double>(s.b.re));
      fn(pre + "b.im", std::span<double>(s.b.im));
      fn(pre + "c.re", std::span<double>(s.c.re));
      fn(pre + "c.im", std::span<double>(s.c.im));
      fn(pre + "d", std::span<double>(&s.d, 1));
      fn(pre + "log_dt", std::span<double>(&s.log_dt, 1));
    }
    fn(std::string("decoder.weight"), std::span<double>(dec_w));
    fn(std::string("decoder.bias"), std::span<double>(dec_b));
  }
  template <typename Fn>
  void for_each_array(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each_array(
        [&](const std::string& name, std::span<double> xs) { fn(name, std::span<const double>(xs)); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_array([&](const std::string&, std::span<const double> xs) { n += xs.size(); });
    return n;
  }

  void validate_against(const ModelConfig& cfg) const {
    if (input_dim != cfg.input_dim || hidden != cfg.measurement_dim || state_dim != cfg.state_dim ||
        output_dim != cfg.output_dim)
      throw validation_error("ModelParams: dimensions do not match the model configuration");
    if (enc_w.size() != hidden * input_dim || enc_b.size() != hidden || ssm.size() != hidden ||
        dec_w.size() != output_dim * hidden || dec_b.size() != output_dim)
      throw validation_error("ModelParams: inconsistent array sizes");
    for (const auto& s : ssm) {
      if (s.state_dim() != state_dim) throw validation_error("ModelParams: inconsistent state dimension");
      s.validate();
    }
    if (!all_finite(enc_w) || !all_finite(enc_b) || !all_finite(dec_w) || !all_finite(dec_b))
      throw validation_error("ModelParams: non-finite weight");
  }

  bool operator==(const ModelParams& o) const {
    if (input_dim != o.input_dim || hidden != o.hidden || state_dim != o.state_dim || output_dim != o.output_dim)
      return false;
    std::vector<double> a, b;
    for_each_array([&](const std::string&, std::span<const double> xs) { a.insert(a.end(), xs.begin(), xs.end()); });
    o.for_each_array([&](const std::string&, std::span<const double> xs) { b.insert(b.end(), xs.begin(), xs.end()); });
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
  }
};

/**
 * Initialization:
 *   encoder/decoder ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
 *   log_a_re = log 0.5, a_im_n = pi * n;  B = 1;  C ~ N(0, 1/N) per plane;
 *   D ~ N(0, 1);  log dt ~ U(log 0.001, log 0.1).
 */
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  auto p = ModelParams::zeros(cfg.input_dim, cfg.measurement_dim, cfg.state_dim, cfg.output_dim);
  const double enc_bound = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
  for (auto& w : p.enc_w) w = rng.uniform(-enc_bound, enc_bound);
  for (auto& b : p.enc_b) b = rng.uniform(-enc_bound, enc_bound);
  const double c_std = 1.0 / std::sqrt(static_cast<double>(cfg.state_dim));
  for (auto& s : p.ssm) {
    for (std::size_t n = 0; n < cfg.state_dim; ++n) {
      s.log_a_re[n] = std::log(0.5);
      s.a_im[n] = std::numbers::pi * static_cast<double>(n);
      s.b.re[n] = 1.0;
      s.b.im[n] = 0.0;
      s.c.re[n] = rng.normal(0.0, c_std);
      s.c.im[n] = rng.normal(0.0, c_std);
    }
    s.d = rng.normal();
    s.log_dt = rng.uniform(std::log(0.001), std::log(0.1));
  }
  const double dec_bound = 1.0 / std::sqrt(static_cast<double>(cfg.measurement_dim));
  for (auto& w : p.dec_w) w = rng.uniform(-dec_bound, dec_bound);
  for (auto& b : p.dec_b) b = rng.uniform(-dec_bound, dec_bound);
  return p;
}

// ---------------------------------------------------------------------------
// activation: x * sigmoid(1.702 x)

inline constexpr double kActScale = 1.702;

inline double activation(double x) { return x * sigmoid(kActScale * x); }

inline double activation_grad(double x) {
  const double s = sigmoid(kActScale * x);
  return s + kActScale * x * s * (1.0 - s);
}

// ---------------------------------------------------------------------------

/// Raw kernelgen output for one channel (before the dt weighting).
inline std::vector<double> raw_channel_kernel(const DiagonalSSMParams& s, std::size_t length, Variant variant) {
  Kernel k = variant == Variant::s4d_vandermonde
                 ? kernelgen::s4d_kernel(kernelgen::discretize_a(s), s.b, s.c, length)
                 : kernelgen::s4convd_kernel(s, length);
  return std::move(k.values);
}

/// The kernels the layer convolves with: dt_h * K_h, one row per channel.
inline Kernel layer_kernels(const ModelParams& p, std::size_t length, Variant variant) {
  Kernel k(p.hidden, length);
  parallel_for(p.hidden, [&](std::size_t h) {
    const auto raw = raw_channel_kernel(p.ssm[h], length, variant);
    const double dt = p.ssm[h].dt();
    auto row = k.row(h);
    for (std::size_t l = 0; l < length; ++l) row[l] = dt * raw[l];
  });
  return k;
}

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  Tensor3 encoded;      // v   (B, H, L)
  Kernel kernels;       // dt*K (H, L)
  Tensor3 pre_act;      // y   (B, H, L)
  Tensor3 dropout_mul;  // (B, H, L), empty when dropout is inactive
  Tensor3 hidden_out;   // z   (B, H, L), decoder input
  Tensor3 output;       // (B, L, O)
};

inline void check_layer(std::span<const double> xs, const char* layer) {
  if (!all_finite(xs)) throw numeric_error(std::string("non-finite values after layer '") + layer + "'");
}

/// Inverted-dropout multiplier for element (b, h, l); 0 or 1/(1-p).
inline double dropout_multiplier(std::uint64_t rng_seed, double p, std::size_t b, std::size_t h, std::size_t l,
                                 std::size_t hidden, std::size_t length) {
  const std::uint64_t idx = (static_cast<std::uint64_t>(b) * hidden + h) * length + l;
  return hash_uniform(rng_seed, idx) < p ? 0.0 : 1.0 / (1.0 - p);
}

inline ForwardCache forward_cached(const ModelParams& params, const ModelConfig& cfg, const SequenceBatch& batch,
                                   bool train_mode, std::uint64_t rng_seed) {
  params.validate_against(cfg);
  if (batch.features() != cfg.input_dim)
    throw validation_error("forward: batch has " + std::to_string(batch.features()) + " features, model expects " +
                           std::to_string(cfg.input_dim));
  if (batch.length() < 1 || batch.batch() < 1) throw validation_error("forward: empty batch");
  if (!all_finite(batch.data.data)) throw numeric_error("non-finite values in the input batch");

  const std::size_t nb = batch.batch(), len = batch.length(), nh = params.hidden, nf = params.input_dim,
                    no = params.output_dim;
  const bool use_dropout = train_mode && cfg.dropout > 0.0;

  ForwardCache c;
  c.encoded = Tensor3(nb, nh, len);
  c.pre_act = Tensor3(nb, nh, len);
  c.hidden_out = Tensor3(nb, nh, len);
  if (use_dropout) c.dropout_mul = Tensor3(nb, nh, len);
  c.kernels = layer_kernels(params, len, cfg.variant);
  check_layer(c.kernels.values, "ssm kernel");

  const auto conv_plan = seqconv::ConvPlan::for_length(len);
  const fft::Plan fp(conv_plan.fft_length);

  parallel_for(nh, [&](std::size_t h) {
    const auto kf = seqconv::to_spectrum(c.kernels.row(h), fp);
    const double d = params.ssm[h].d;
    for (std::size_t b = 0; b < nb; ++b) {
      auto v = c.encoded.row(b, h);
      for (std::size_t l = 0; l < len; ++l) {
        double acc = params.enc_b[h];
        for (std::size_t f = 0; f < nf; ++f) acc += params.enc_w[h * nf + f] * batch.data(b, l, f);
        v[l] = acc;
      }
      const auto y = seqconv::product_head(seqconv::to_spectrum(v, fp), kf, false, len, fp);
      auto pre = c.pre_act.row(b, h);
      auto z = c.hidden_out.row(b, h);
      for (std::size_t l = 0; l < len; ++l) {
        pre[l] = y[l] + d * v[l];
        double a = activation(pre[l]);
        if (use_dropout) {
          const double m = dropout_multiplier(rng_seed, cfg.dropout, b, h, l, nh, len);
          c.dropout_mul(b, h, l) = m;
          a *= m;
        }
        z[l] = a;
      }
    }
  });
  check_layer(c.encoded.data, "encoder");
  check_layer(c.pre_act.data, "ssm convolution");
  check_layer(c.hidden_out.data, "activation");

  c.output = Tensor3(nb, len, no);
  parallel_for(nb, [&](std::size_t b) {
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t o = 0; o < no; ++o) {
        double acc = params.dec_b[o];
        for (std::size_t h = 0; h < nh; ++h) acc += params.dec_w[o * nh + h] * c.hidden_out(b, h, l);
        c.output(b, l, o) = acc;
      }
  });
  check_layer(c.output.data, "decoder");
  return c;
}

/// (B, L, input_dim) -> (B, L, output_dim). Dropout only when train_mode is set.
inline Tensor3 forward(const ModelParams& params, const ModelConfig& cfg, const SequenceBatch& batch,
                       bool train_mode = false, std::uint64_t rng_seed = 0) {
  return forward_cached(params, cfg, batch, train_mode, rng_seed).output;
}

/**
 * Step-by-step evaluation of the S4D-variant layer through the state
 * recurrence x_l = A_disc x_{l-1} + dt B u_l, y_l = Re(C x_l) + D u_l.
 * Used to cross-check the convolutional path; eval mode only.
 */
inline Tensor3 forward_recurrent(const ModelParams& params, const ModelConfig& cfg, const SequenceBatch& batch) {
  if (cfg.variant != Variant::s4d_vandermonde)
    throw validation_error("forward_recurrent: only the S4D variant has a linear recurrence");
  params.validate_against(cfg);
  if (batch.features() != cfg.input_dim) throw validation_error("forward_recurrent: feature mismatch");
  const std::size_t nb = batch.batch(), len = batch.length(), nh = params.hidden, nf = params.input_dim,
                    no = params.output_dim, ns = params.state_dim;

  Tensor3 z(nb, nh, len);
  for (std::size_t h = 0; h < nh; ++h) {
    const auto& s = params.ssm[h];
    const ComplexVec a = kernelgen::discretize_a(s);
    const double dt = s.dt();
    for (std::size_t b = 0; b < nb; ++b) {
      std::vector<complex> x(ns, complex{0.0, 0.0});
      for (std::size_t l = 0; l < len; ++l) {
        double u = params.enc_b[h];
        for (std::size_t f = 0; f < nf; ++f) u += params.enc_w[h * nf + f] * batch.data(b, l, f);
        double y = s.d * u;
        for (std::size_t n = 0; n < ns; ++n) {
          x[n] = a[n] * x[n] + dt * s.b[n] * u;
          y += (s.c[n] * x[n]).real();
        }
        z(b, h, l) = activation(y);
      }
    }
  }
  Tensor3 out(nb, len, no);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t o = 0; o < no; ++o) {
        double acc = params.dec_b[o];
        for (std::size_t h = 0; h < nh; ++h) acc += params.dec_w[o * nh + h] * z(b, h, l);
        out(b, l, o) = acc;
      }
  return out;
}

/// Maps a log1p-space output back to meter units: max(expm1(x), 0).
inline double to_meter_units(double log_space) { return std::max(std::expm1(log_space), 0.0); }

inline Tensor3 predict(const ModelParams& params, const ModelConfig& cfg, const SequenceBatch& batch) {
  Tensor3 out = forward(params, cfg, batch, false, 0);
  for (auto& x : out.data) x = to_meter_units(x);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: "S4CD1", u32 LE dims (input, H, N, output), then every array
// as f64 LE in ModelParams field order.

inline constexpr char kCheckpointMagic[] = "S4CD1";
inline constexpr std::size_t kMagicLen = 5;

namespace detail {
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}
inline std::uint64_t get_le(const std::string& in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size()) throw data_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += static_cast<std::size_t>(bytes);
  return v;
}
}  // namespace detail

inline std::string serialize(const ModelParams& p) {
  std::string out(kCheckpointMagic, kMagicLen);
  detail::put_u32(out, static_cast<std::uint32_t>(p.input_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(p.hidden));
  detail::put_u32(out, static_cast<std::uint32_t>(p.state_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(p.output_dim));
  p.for_each_array([&](const std::string&, std::span<const double> xs) {
    for (double x : xs) detail::put_f64(out, x);
  });
  return out;
}

inline ModelParams deserialize(const std::string& bytes) {
  if (bytes.size() < kMagicLen || bytes.compare(0, kMagicLen, kCheckpointMagic) != 0)
    throw data_error("checkpoint: bad magic (expected S4CD1)");
  std::size_t pos = kMagicLen;
  const auto in = static_cast<std::size_t>(detail::get_le(bytes, pos, 4));
  const auto hid = static_cast<std::size_t>(detail::get_le(bytes, pos, 4));
  const auto st = static_cast<std::size_t>(detail::get_le(bytes, pos, 4));
  const auto out = static_cast<std::size_t>(detail::get_le(bytes, pos, 4));
  if (in == 0 || hid == 0 || st == 0 || out == 0) throw data_error("checkpoint: zero dimension");
  const std::size_t expected = kMagicLen + 16 +
                               8 * (hid * in + hid + hid * (6 * st + 2) + out * hid + out);
  if (bytes.size() != expected) throw data_error("checkpoint: size does not match header dimensions");
  auto p = ModelParams::zeros(in, hid, st, out);
  p.for_each_array([&](const std::string&, std::span<double> xs) {
    for (double& x : xs) x = std::bit_cast<double>(detail::get_le(bytes, pos, 8));
  });
  return p;
}

inline void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot write checkpoint '" + path + "'");
  const std::string bytes = serialize(p);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw data_error("failed writing checkpoint '" + path + "'");
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot read checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace s4cd::model
