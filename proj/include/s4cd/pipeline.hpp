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
 * @file pipeline.hpp
 * Run configuration (flat `key = value` files) and the data -> windows ->
 * training path shared by the CLI and the acceptance suite.
 */

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "s4cd/core.hpp"
#include "s4cd/dataio.hpp"
#include "s4cd/model.hpp"
#include "s4cd/training.hpp"

namespace s4cd::pipeline {

/// Unreadable or invalid configuration.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // model
  std::size_t input_dim = 4;
  std::size_t measurement_dim = 128;
  std::size_t state_dim = 64;
  std::size_t output_dim = 1;
  double dropout = 0.01;
  std::size_t seq_len = 168;
  std::string kernel_variant = "s4convd";
  // optimizer / loop
  std::size_t batch_size = 16;
  double lr = 0.001;
  double momentum = 0.9;
  std::size_t log_interval = 200;
  std::size_t num_epochs = 100;
  double clip_norm = 0.0;
  std::uint64_t seed = 0;
  // data
  std::string data = "synth";
  std::string feature_set = "minimal4";
  std::size_t window_stride = 24;
  std::uint64_t synth_seed = 42;
  std::size_t synth_buildings = 8;
  std::size_t synth_weeks = 8;
  double synth_noise = 0.05;
  // io
  std::string output_dir = ".";

  model::ModelConfig model_config() const {
    model::ModelConfig m;
    m.input_dim = input_dim;
    m.measurement_dim = measurement_dim;
    m.state_dim = state_dim;
    m.output_dim = output_dim;
    m.dropout = dropout;
    m.seq_len = seq_len;
    m.variant = kernelgen::parse_variant(kernel_variant);
    return m;
  }

  training::TrainOptions train_options() const {
    training::TrainOptions t;
    t.epochs = num_epochs;
    t.batch_size = batch_size;
    t.lr = lr;
    t.momentum = momentum;
    t.log_interval = log_interval;
    t.seed = seed;
    t.clip_norm = clip_norm;
    return t;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc{} || p != last)
    throw config_error("invalid value '" + text + "' for '" + key + "'");
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter num(T RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}
inline Setter str(std::string RunConfig::*field) {
  return [field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"input_dim", num(&RunConfig::input_dim)},
      {"measurement_dim", num(&RunConfig::measurement_dim)},
      {"state_dim", num(&RunConfig::state_dim)},
      {"output_dim", num(&RunConfig::output_dim)},
      {"dropout", num(&RunConfig::dropout)},
      {"seq_len", num(&RunConfig::seq_len)},
      {"kernel_variant", str(&RunConfig::kernel_variant)},
      {"batch_size", num(&RunConfig::batch_size)},
      {"lr", num(&RunConfig::lr)},
      {"learning_rate", num(&RunConfig::lr)},
      {"momentum", num(&RunConfig::momentum)},
      {"log_interval", num(&RunConfig::log_interval)},
      {"num_epochs", num(&RunConfig::num_epochs)},
      {"epochs", num(&RunConfig::num_epochs)},
      {"clip_norm", num(&RunConfig::clip_norm)},
      {"seed", num(&RunConfig::seed)},
      {"data", str(&RunConfig::data)},
      {"feature_set", str(&RunConfig::feature_set)},
      {"window_stride", num(&RunConfig::window_stride)},
      {"synth_seed", num(&RunConfig::synth_seed)},
      {"synth_buildings", num(&RunConfig::synth_buildings)},
      {"synth_weeks", num(&RunConfig::synth_weeks)},
      {"synth_noise", num(&RunConfig::synth_noise)},
      {"output_dir", str(&RunConfig::output_dir)},
  };
  return table;
}

}  // namespace detail

/// Keys accepted in config files (snake_case) and, kebab-cased, as flags.
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  return keys;
}

inline std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

inline void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = normalize_key(raw_key);
  const auto& table = detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) throw config_error("unknown configuration key '" + raw_key + "'");
  it->second(cfg, key, value);
}

/// Flat `key = value` lines; `#` starts a comment.
inline void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "<config>") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const config_error& e) {
      throw config_error(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

inline std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  os << "input_dim = " << c.input_dim << "\nmeasurement_dim = " << c.measurement_dim
     << "\nstate_dim = " << c.state_dim << "\noutput_dim = " << c.output_dim
     << "\ndropout = " << dataio::format_real(c.dropout) << "\nseq_len = " << c.seq_len
     << "\nkernel_variant = " << c.kernel_variant << "\nbatch_size = " << c.batch_size
     << "\nlr = " << dataio::format_real(c.lr) << "\nmomentum = " << dataio::format_real(c.momentum)
     << "\nlog_interval = " << c.log_interval << "\nnum_epochs = " << c.num_epochs
     << "\nclip_norm = " << dataio::format_real(c.clip_norm) << "\nseed = " << c.seed << "\ndata = " << c.data
     << "\nfeature_set = " << c.feature_set << "\nwindow_stride = " << c.window_stride
     << "\nsynth_seed = " << c.synth_seed << "\nsynth_buildings = " << c.synth_buildings
     << "\nsynth_weeks = " << c.synth_weeks << "\nsynth_noise = " << dataio::format_real(c.synth_noise)
     << "\noutput_dir = " << c.output_dir << '\n';
  return os.str();
}

/// Validates everything a run needs; config_error on failure.
inline void validate(const RunConfig& c) {
  try {
    const auto m = c.model_config();
    m.validate();
    const auto fs = dataio::parse_feature_set(c.feature_set);
    if (dataio::feature_count(fs) != c.input_dim)
      throw config_error("feature_set '" + c.feature_set + "' yields " +
                         std::to_string(dataio::feature_count(fs)) + " features but input_dim = " +
                         std::to_string(c.input_dim));
    if (c.output_dim != 1) throw config_error("output_dim must be 1 (one log1p reading per step)");
  } catch (const validation_error& e) {
    throw config_error(e.what());
  }
  if (c.batch_size < 1) throw config_error("batch_size must be >= 1");
  if (!(c.lr >= 0.0)) throw config_error("lr must be >= 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw config_error("momentum must lie in [0, 1)");
  if (c.window_stride < 1) throw config_error("window_stride must be >= 1");
  if (c.synth_buildings < 1 || c.synth_weeks < 1) throw config_error("synthetic dataset must be non-empty");
}

// ---------------------------------------------------------------------------

inline dataio::SynthOptions synth_options(const RunConfig& c) {
  dataio::SynthOptions o;
  o.seed = c.synth_seed;
  o.n_buildings = c.synth_buildings;
  o.hours = c.synth_weeks * 168;
  o.noise = c.synth_noise;
  return o;
}

/// Raw joined records from `data`: "synth" or a directory holding the three ASHRAE CSVs.
inline std::vector<dataio::JoinedRecord> load_records(const RunConfig& c, std::ostream* log = nullptr) {
  if (c.data == "synth") return dataio::synth_dataset(synth_options(c)).joined;
  if (!std::filesystem::is_directory(c.data))
    throw data_error("data '" + c.data + "' is neither 'synth' nor a directory");
  auto loaded = dataio::load_dataset_dir(c.data);
  if (log && loaded.warnings) *log << "skipped " << loaded.warnings << " malformed rows\n";
  return std::move(loaded.records);
}

struct PreparedData {
  dataio::DatasetSplit split;
  dataio::WindowSet train, val, test;
};

/// clean -> temporal split -> windows. Train windows use window_stride; val/test do not overlap.
inline PreparedData prepare_data(const RunConfig& c, std::ostream* log = nullptr) {
  const auto fs = dataio::parse_feature_set(c.feature_set);
  PreparedData d;
  d.split = dataio::temporal_split(dataio::clean(load_records(c, log)));
  d.train = dataio::make_windows(dataio::build_series(d.split.train), fs, c.seq_len, c.window_stride);
  d.val = dataio::make_windows(dataio::build_series(d.split.val), fs, c.seq_len, c.seq_len);
  d.test = dataio::make_windows(dataio::build_series(d.split.test), fs, c.seq_len, c.seq_len);
  return d;
}

inline training::TrainResult run_training(const RunConfig& c, const PreparedData& d, std::ostream* log = nullptr) {
  validate(c);
  const auto mc = c.model_config();
  auto opts = c.train_options();
  opts.log = log;
  return training::train(mc, model::init_params(mc, c.seed), d.train, d.val, opts);
}

/// Last recorded RMSLE for `split`, or NaN when absent.
inline double final_rmsle(const std::vector<training::EpochRecord>& history, const std::string& split) {
  for (auto it = history.rbegin(); it != history.rend(); ++it)
    if (it->split == split) return it->rmsle;
  return dataio::kMissing;
}

}  // namespace s4cd::pipeline
