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
 * @file training.hpp
 * Masked log-space MSE, hand-written reverse pass through the whole model
 * (kernel construction and FFT convolution included), SGD with classical
 * momentum, and the seeded epoch loop.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "s4cd/core.hpp"
#include "s4cd/dataio.hpp"
#include "s4cd/metrics.hpp"
#include "s4cd/model.hpp"
#include "s4cd/parallel.hpp"
#include "s4cd/random.hpp"
#include "s4cd/seqconv.hpp"

namespace s4cd::training {

using model::ModelConfig;
using model::ModelParams;

/// Gradients, one array per parameter array, same layout as ModelParams.
struct GradientTape {
  ModelParams grad;
};

namespace detail {
inline std::size_t count_mask(std::span<const std::uint8_t> mask) {
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}
inline void check_loss_shapes(const Tensor3& pred, const Tensor3& target, std::span<const std::uint8_t> mask) {
  if (!pred.same_shape(target)) throw validation_error("loss: prediction/target shape mismatch");
  if (mask.size() != pred.d0 * pred.d1 || pred.d2 != 1)
    throw validation_error("loss: mask must cover (B, L) with output_dim 1");
}
}  // namespace detail

/// Mean squared error over entries whose mask is set.
inline double loss(const Tensor3& pred, const Tensor3& target_log1p, std::span<const std::uint8_t> mask) {
  detail::check_loss_shapes(pred, target_log1p, mask);
  const std::size_t count = detail::count_mask(mask);
  if (count == 0) throw validation_error("loss: mask selects no valid targets");
  double acc = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double diff = pred.data[i] - target_log1p.data[i];
    acc += diff * diff;
  }
  return acc / static_cast<double>(count);
}

/**
 * Adds d(loss)/d(params of one SSM channel) given d(loss)/d(model kernel),
 * where the model kernel is dt * K and K is the s4d or s4convd kernel.
 *
 * With E = exp(t A), t = l dt, z = E B the per-mode response:
 *   s4d:     K_l = Re sum_n C_n z_n
 *   s4convd: K_l = Re sum_n C_n (sig(Re z_n) + i sig(Im z_n))
 * Complex parameters are differentiated plane by plane.
 */
inline void kernel_backward(const DiagonalSSMParams& s, std::span<const double> grad_model_kernel,
                            std::span<const double> raw_kernel, model::Variant variant, DiagonalSSMParams& g) {
  const std::size_t len = grad_model_kernel.size(), ns = s.state_dim();
  const double dt = s.dt();

  for (std::size_t l = 0; l < len; ++l) g.log_dt += grad_model_kernel[l] * dt * raw_kernel[l];

  for (std::size_t n = 0; n < ns; ++n) {
    const double a_re = -std::exp(s.log_a_re[n]), a_im = s.a_im[n];
    const double b_re = s.b.re[n], b_im = s.b.im[n], c_re = s.c.re[n], c_im = s.c.im[n];
    for (std::size_t l = 0; l < len; ++l) {
      const double gk = dt * grad_model_kernel[l];
      if (gk == 0.0) continue;
      const double t = static_cast<double>(l) * dt;
      const complex e = complex_exp({t * a_re, t * a_im});
      const double e_re = e.real(), e_im = e.imag();
      const double z_re = e_re * b_re - e_im * b_im;
      const double z_im = e_re * b_im + e_im * b_re;

      double gz_re, gz_im;
      if (variant == model::Variant::s4d_vandermonde) {
        g.c.re[n] += gk * z_re;
        g.c.im[n] -= gk * z_im;
        gz_re = gk * c_re;
        gz_im = -gk * c_im;
      } else {
        const double sr = sigmoid(z_re), si = sigmoid(z_im);
        g.c.re[n] += gk * sr;
        g.c.im[n] -= gk * si;
        gz_re = gk * c_re * sr * (1.0 - sr);
        gz_im = -gk * c_im * si * (1.0 - si);
      }
      // z = E * B
      g.b.re[n] += gz_re * e_re + gz_im * e_im;
      g.b.im[n] += -gz_re * e_im + gz_im * e_re;
      const double ge_re = gz_re * b_re + gz_im * b_im;
      const double ge_im = -gz_re * b_im + gz_im * b_re;
      // E = exp(w), w = t A: dE = E dw
      const double gw_re = ge_re * e_re + ge_im * e_im;
      const double gw_im = -ge_re * e_im + ge_im * e_re;
      g.log_a_re[n] += gw_re * t * a_re;
      g.a_im[n] += gw_im * t;
      g.log_dt += (gw_re * a_re + gw_im * a_im) * t;
    }
  }
}

/// Loss and full parameter gradient for one minibatch; the dropout mask is the one forward() draws for rng_seed.
inline std::pair<double, GradientTape> backward(const ModelParams& params, const ModelConfig& cfg,
                                                const SequenceBatch& batch, const Tensor3& target,
                                                std::span<const std::uint8_t> mask, bool train_mode,
                                                std::uint64_t rng_seed) {
  const auto cache = model::forward_cached(params, cfg, batch, train_mode, rng_seed);
  const double value = loss(cache.output, target, mask);

  const std::size_t nb = batch.batch(), len = batch.length(), nh = params.hidden, nf = params.input_dim,
                    no = params.output_dim;
  const double scale = 2.0 / static_cast<double>(detail::count_mask(mask));

  Tensor3 g_out(nb, len, no);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) g_out.data[i] = scale * (cache.output.data[i] - target.data[i]);

  GradientTape tape{ModelParams::zeros_like(params)};
  ModelParams& g = tape.grad;

  for (std::size_t o = 0; o < no; ++o) {
    double acc = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t l = 0; l < len; ++l) acc += g_out(b, l, o);
    g.dec_b[o] = acc;
  }

  const auto conv_plan = seqconv::ConvPlan::for_length(len);
  const fft::Plan fp(conv_plan.fft_length);
  const bool use_dropout = !cache.dropout_mul.data.empty();

  parallel_for(nh, [&](std::size_t h) {
    const auto& s = params.ssm[h];
    auto& gs = g.ssm[h];
    std::vector<double> g_kernel(len, 0.0);
    std::vector<double> g_pre(len), g_v(len);
    const auto kf = seqconv::to_spectrum(cache.kernels.row(h), fp);

    for (std::size_t o = 0; o < no; ++o) {
      double acc = 0.0;
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t l = 0; l < len; ++l) acc += g_out(b, l, o) * cache.hidden_out(b, h, l);
      g.dec_w[o * nh + h] = acc;
    }

    for (std::size_t b = 0; b < nb; ++b) {
      const auto v = cache.encoded.row(b, h);
      const auto pre = cache.pre_act.row(b, h);
      for (std::size_t l = 0; l < len; ++l) {
        double gz = 0.0;
        for (std::size_t o = 0; o < no; ++o) gz += params.dec_w[o * nh + h] * g_out(b, l, o);
        if (use_dropout) gz *= cache.dropout_mul(b, h, l);
        g_pre[l] = gz * model::activation_grad(pre[l]);
      }
      // y = conv(v, k) + d v
      const auto gf = seqconv::to_spectrum(g_pre, fp);
      const auto gk_b = seqconv::product_head(gf, seqconv::to_spectrum(v, fp), true, len, fp);
      const auto gv_conv = seqconv::product_head(gf, kf, true, len, fp);
      for (std::size_t l = 0; l < len; ++l) {
        g_kernel[l] += gk_b[l];
        gs.d += g_pre[l] * v[l];
        g_v[l] = gv_conv[l] + s.d * g_pre[l];
      }
      for (std::size_t l = 0; l < len; ++l) {
        g.enc_b[h] += g_v[l];
        for (std::size_t f = 0; f < nf; ++f) g.enc_w[h * nf + f] += g_v[l] * batch.data(b, l, f);
      }
    }

    const auto raw = model::raw_channel_kernel(s, len, cfg.variant);
    kernel_backward(s, g_kernel, raw, cfg.variant, gs);
  });

  g.for_each_array([&](const std::string& name, std::span<const double> xs) {
    if (!all_finite(xs)) throw numeric_error("non-finite gradient for parameter '" + name + "'");
  });
  return {value, std::move(tape)};
}

// ---------------------------------------------------------------------------
// optimizer

struct OptimizerState {
  double lr = 0.001;
  double momentum = 0.9;
  ModelParams velocity;

  static OptimizerState for_params(const ModelParams& p, double lr = 0.001, double momentum = 0.9) {
    if (!(lr >= 0.0) || !(momentum >= 0.0 && momentum < 1.0))
      throw validation_error("OptimizerState: need lr >= 0 and 0 <= momentum < 1");
    return {lr, momentum, ModelParams::zeros_like(p)};
  }
};

namespace detail {
template <typename Fn>
void zip_arrays(ModelParams& a, const ModelParams& b, Fn&& fn) {
  std::vector<std::span<const double>> bs;
  b.for_each_array([&](const std::string&, std::span<const double> xs) { bs.push_back(xs); });
  std::size_t i = 0;
  a.for_each_array([&](const std::string&, std::span<double> xs) {
    if (i >= bs.size() || bs[i].size() != xs.size()) throw validation_error("parameter trees are not congruent");
    fn(xs, bs[i]);
    ++i;
  });
}
}  // namespace detail

/// v <- mu v + g;  theta <- theta - lr v.
inline void sgd_step(ModelParams& params, const GradientTape& tape, OptimizerState& state) {
  detail::zip_arrays(state.velocity, tape.grad, [&](std::span<double> v, std::span<const double> gr) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = state.momentum * v[i] + gr[i];
  });
  detail::zip_arrays(params, state.velocity, [&](std::span<double> p, std::span<const double> v) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= state.lr * v[i];
  });
}

inline double global_norm(const ModelParams& g) {
  double acc = 0.0;
  g.for_each_array([&](const std::string&, std::span<const double> xs) {
    for (double x : xs) acc += x * x;
  });
  return std::sqrt(acc);
}

inline void clip_gradient(GradientTape& tape, double max_norm) {
  const double norm = global_norm(tape.grad);
  if (max_norm <= 0.0 || norm <= max_norm) return;
  const double f = max_norm / norm;
  tape.grad.for_each_array([&](const std::string&, std::span<double> xs) {
    for (double& x : xs) x *= f;
  });
}

// ---------------------------------------------------------------------------
// loop

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double lr = 0.001;
  double momentum = 0.9;
  std::size_t log_interval = 200;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // 0 disables clipping
  std::ostream* log = nullptr;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double rmsle = 0.0;
};

struct EvalResult {
  double loss = 0.0;
  double rmsle = 0.0;
  Tensor3 outputs;  // (W, L, 1) log space
};

/// Eval-mode pass over every window: masked log-space MSE and RMSLE in meter units.
inline EvalResult evaluate(const ModelParams& params, const ModelConfig& cfg, const dataio::WindowSet& ws,
                           std::size_t batch_size = 64) {
  if (ws.empty()) throw validation_error("evaluate: empty window set");
  EvalResult r;
  r.outputs = Tensor3(ws.size(), ws.length, 1);
  for (std::size_t start = 0; start < ws.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(ws.size(), start + batch_size); ++i) idx.push_back(i);
    const auto mb = dataio::gather(ws, idx);
    const auto out = model::forward(params, cfg, mb.batch, false, 0);
    std::copy(out.data.begin(), out.data.end(),
              r.outputs.data.begin() + static_cast<std::ptrdiff_t>(start * ws.length));
  }
  Tensor3 target(ws.size(), ws.length, 1);
  target.data = ws.targets;
  r.loss = loss(r.outputs, target, ws.mask);
  std::vector<double> pred, actual;
  for (std::size_t i = 0; i < ws.mask.size(); ++i) {
    if (!ws.mask[i]) continue;
    pred.push_back(model::to_meter_units(r.outputs.data[i]));
    actual.push_back(std::expm1(ws.targets[i]));
  }
  r.rmsle = metrics::rmsle(pred, actual);
  return r;
}

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

inline std::uint64_t batch_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch_index) {
  return mix_seed(mix_seed(seed, epoch), batch_index);
}

/**
 * Minibatch SGD over `train` in a seeded shuffle order. After each epoch the
 * model is evaluated on train and (if non-empty) val; one history record per
 * split per epoch.
 */
inline TrainResult train(const ModelConfig& cfg, ModelParams params, const dataio::WindowSet& train_set,
                         const dataio::WindowSet& val_set, const TrainOptions& opt) {
  cfg.validate();
  if (train_set.empty()) throw validation_error("train: empty training split");
  if (opt.batch_size < 1) throw validation_error("train: batch_size must be >= 1");
  if (train_set.features != cfg.input_dim || train_set.length != cfg.seq_len)
    throw validation_error("train: window shape does not match the model configuration");

  TrainResult result;
  auto state = OptimizerState::for_params(params, opt.lr, opt.momentum);
  Rng order_rng(mix_seed(opt.seed, 0x5348554646ULL));
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    order_rng.shuffle(order);
    double running = 0.0;
    std::size_t running_n = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size, ++batch_index) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(opt.batch_size, order.size() - start));
      const auto mb = dataio::gather(train_set, idx);
      if (detail::count_mask(mb.mask) == 0) continue;
      std::pair<double, GradientTape> lg;
      try {
        lg = backward(params, cfg, mb.batch, mb.targets, mb.mask, true, batch_seed(opt.seed, epoch, batch_index));
      } catch (const numeric_error& e) {
        throw numeric_error("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index) + ": " +
                            e.what());
      }
      if (!std::isfinite(lg.first))
        throw numeric_error("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(batch_index));
      if (opt.clip_norm > 0.0) clip_gradient(lg.second, opt.clip_norm);
      sgd_step(params, lg.second, state);
      running += lg.first;
      ++running_n;
      if (opt.log && opt.log_interval > 0 && (batch_index + 1) % opt.log_interval == 0) {
        *opt.log << "epoch " << epoch << " batch " << batch_index + 1 << " running loss "
                 << running / static_cast<double>(running_n) << '\n';
        running = 0.0;
        running_n = 0;
      }
    }
    try {
      params.validate_against(cfg);
    } catch (const validation_error&) {
      throw numeric_error("parameters became non-finite during epoch " + std::to_string(epoch));
    }
    const auto tr = evaluate(params, cfg, train_set);
    result.history.push_back({epoch, "train", tr.loss, tr.rmsle});
    if (!val_set.empty()) {
      const auto va = evaluate(params, cfg, val_set);
      result.history.push_back({epoch, "val", va.loss, va.rmsle});
    }
    if (opt.log) {
      *opt.log << "epoch " << epoch << " train loss " << tr.loss << " rmsle " << tr.rmsle;
      if (!val_set.empty()) *opt.log << " | val rmsle " << result.history.back().rmsle;
      *opt.log << '\n';
    }
  }
  result.params = std::move(params);
  return result;
}

/// `epoch,split,loss,rmsle` with shortest round-trip numbers.
inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,split,loss,rmsle\n";
  for (const auto& r : history)
    os << r.epoch << ',' << r.split << ',' << dataio::format_real(r.loss) << ',' << dataio::format_real(r.rmsle)
       << '\n';
}

}  // namespace s4cd::training
