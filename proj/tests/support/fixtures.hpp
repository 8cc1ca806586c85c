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

// Small models, batches and window sets shared by the unit tests.

#pragma once

#include <cstdint>

#include "s4cd/dataio.hpp"
#include "s4cd/model.hpp"
#include "s4cd/random.hpp"

namespace s4cd::fixture {

inline model::ModelConfig tiny_config(kernelgen::Variant v, std::size_t h = 4, std::size_t n = 3, std::size_t len = 16) {
  model::ModelConfig c;
  c.input_dim = 3;
  c.measurement_dim = h;
  c.state_dim = n;
  c.output_dim = 1;
  c.dropout = 0.0;
  c.seq_len = len;
  c.variant = v;
  return c;
}

/// init_params with every SSM field moved off its structured starting point.
inline model::ModelParams scrambled_params(const model::ModelConfig& c, std::uint64_t seed) {
  auto p = model::init_params(c, seed);
  Rng rng(seed ^ 0xabcdefULL);
  for (auto& s : p.ssm) {
    for (std::size_t n = 0; n < s.state_dim(); ++n) {
      s.log_a_re[n] = rng.uniform(-1.5, 0.5);
      s.a_im[n] = rng.uniform(-3.0, 3.0);
      s.b.set(n, {rng.normal(), rng.normal()});
      s.c.set(n, {rng.normal(), rng.normal()});
    }
    s.log_dt = rng.uniform(std::log(0.05), std::log(0.5));
  }
  return p;
}

inline SequenceBatch random_batch(std::size_t b, std::size_t len, std::size_t f, std::uint64_t seed) {
  Rng rng(seed);
  SequenceBatch x;
  x.data = Tensor3(b, len, f);
  for (auto& v : x.data.data) v = rng.normal();
  x.timestamps.assign(b * len, 0);
  return x;
}

inline Tensor3 random_target(std::size_t b, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  Tensor3 t(b, len, 1);
  for (auto& v : t.data) v = rng.uniform(0.0, 2.0);
  return t;
}

/// Windows cut from a small noiseless synthetic dataset.
inline dataio::WindowSet synth_windows(std::size_t len, std::size_t buildings = 2, std::size_t weeks = 2) {
  dataio::SynthOptions o;
  o.n_buildings = buildings;
  o.hours = weeks * 168;
  o.noise = 0.0;
  const auto ds = dataio::synth_dataset(o);
  return dataio::make_windows(dataio::build_series(ds.joined), dataio::FeatureSet::minimal4, len, len);
}

}  // namespace s4cd::fixture
