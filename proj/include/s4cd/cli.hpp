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
 * @file cli.hpp
 * `s4cd` command line: train, eval, predict, kernel-dump, bench-tiling,
 * occupancy, make-synth.
 *
 * Exit codes: 0 ok, 2 configuration/usage, 3 data, 4 numeric abort.
 * Results go to stdout, diagnostics to stderr.
 */

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "s4cd/core.hpp"
#include "s4cd/dataio.hpp"
#include "s4cd/model.hpp"
#include "s4cd/perf.hpp"
#include "s4cd/pipeline.hpp"
#include "s4cd/training.hpp"

namespace s4cd::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

inline constexpr const char* kCheckpointFile = "model.s4cd";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kPredictionsFile = "predictions.csv";
inline constexpr const char* kConfigFile = "config.txt";

namespace detail {

inline std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

/// Every RunConfig key as a string-valued --kebab-case flag; only flags actually given are applied.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "flat key = value config file");
    for (const auto& key : pipeline::config_keys()) {
      options[key] = app.add_option("--" + kebab(key), values[key]);
    }
  }

  /// defaults < extra_config (if any) < --config file < command-line flags
  pipeline::RunConfig resolve(const std::optional<std::string>& extra_config = std::nullopt) const {
    pipeline::RunConfig cfg;
    if (extra_config) pipeline::apply_config_file(cfg, *extra_config);
    if (!config_path.empty()) pipeline::apply_config_file(cfg, config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) pipeline::apply_setting(cfg, key, values.at(key));
    return cfg;
  }
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw data_error("failed writing '" + path.string() + "'");
}

/// Checkpoint dims win over whatever the config says.
inline void adopt_checkpoint_dims(pipeline::RunConfig& cfg, const model::ModelParams& p) {
  cfg.input_dim = p.input_dim;
  cfg.measurement_dim = p.hidden;
  cfg.state_dim = p.state_dim;
  cfg.output_dim = p.output_dim;
}

inline std::optional<std::string> sibling_config(const std::string& checkpoint, const std::string& explicit_cfg) {
  if (!explicit_cfg.empty()) return std::nullopt;
  const auto p = std::filesystem::path(checkpoint).parent_path() / kConfigFile;
  if (std::filesystem::exists(p)) return p.string();
  return std::nullopt;
}

inline void write_predictions(std::ostream& os, const dataio::WindowSet& ws, const Tensor3& outputs) {
  os << "building_id,meter,timestamp,prediction\n";
  for (std::size_t w = 0; w < ws.size(); ++w)
    for (std::size_t l = 0; l < ws.length; ++l)
      os << ws.building_id[w] << ',' << ws.meter[w] << ',' << dataio::format_timestamp(ws.target_hours[w * ws.length + l])
         << ',' << dataio::format_real(model::to_meter_units(outputs(w, l, 0))) << '\n';
}

}  // namespace detail

/**
 * Runs one command. `args` excludes the program name.
 */
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"s4cd: diagonal state-space sequence models for meter forecasting"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model; writes model.s4cd, history.csv, config.txt");
  detail::ConfigFlags train_flags;
  train_flags.attach(*train);

  // eval / predict
  auto* eval = app.add_subcommand("eval", "test RMSLE of a checkpoint; writes predictions.csv");
  detail::ConfigFlags eval_flags;
  std::string eval_ckpt, eval_split = "test";
  eval_flags.attach(*eval);
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--split", eval_split, "train | val | test | all")->check(CLI::IsMember({"train", "val", "test", "all"}));

  auto* predict = app.add_subcommand("predict", "predictions over the whole dataset; writes predictions.csv");
  detail::ConfigFlags predict_flags;
  std::string predict_ckpt;
  predict_flags.attach(*predict);
  predict->add_option("--checkpoint", predict_ckpt)->required();

  // kernel-dump
  auto* kdump = app.add_subcommand("kernel-dump", "CSV of the layer kernels, one row per channel");
  detail::ConfigFlags kdump_flags;
  std::string kdump_ckpt, kdump_output;
  std::size_t kdump_len = 0;
  kdump_flags.attach(*kdump);
  kdump->add_option("--checkpoint", kdump_ckpt)->required();
  kdump->add_option("--l,--length", kdump_len, "kernel length (default seq_len)");
  kdump->add_option("--output", kdump_output, "file instead of stdout");

  // bench-tiling
  auto* bench = app.add_subcommand("bench-tiling", "naive vs tiled Vandermonde kernel timing");
  std::size_t bench_n = 4096, bench_l = 8192, bench_repeats = 5;
  std::uint64_t bench_seed = 1;
  std::vector<std::size_t> bench_tiles{8, 16, 32, 64};
  std::string bench_output;
  bench->add_option("--n", bench_n, "state dimension")->check(CLI::PositiveNumber);
  bench->add_option("--l", bench_l, "kernel length")->check(CLI::PositiveNumber);
  bench->add_option("--tile,--tiles", bench_tiles, "tile sizes, comma separated")->delimiter(',');
  bench->add_option("--repeats", bench_repeats, "timed repetitions (>= 3)");
  bench->add_option("--seed", bench_seed);
  bench->add_option("--output", bench_output, "also write the CSV here");

  // occupancy
  auto* occ = app.add_subcommand("occupancy", "GPU occupancy for a kernel's resource usage");
  perf::GpuSpec spec;
  perf::KernelResourceUsage usage;
  bool occ_json = false;
  occ->add_option("--threads-per-block", usage.threads_per_block);
  occ->add_option("--registers-per-thread", usage.registers_per_thread);
  occ->add_option("--shared-bytes-per-block", usage.shared_bytes_per_block);
  occ->add_option("--max-threads-per-block", spec.max_threads_per_block);
  occ->add_option("--max-threads-per-sm", spec.max_threads_per_sm);
  occ->add_option("--threads-per-warp", spec.threads_per_warp);
  occ->add_option("--max-registers-per-block", spec.max_registers_per_block);
  occ->add_option("--max-registers-per-sm", spec.max_registers_per_sm);
  occ->add_option("--register-alloc-unit", spec.register_alloc_unit);
  occ->add_option("--max-shared-per-block", spec.max_shared_per_block);
  occ->add_option("--runtime-shared-overhead", spec.runtime_shared_overhead);
  occ->add_option("--shared-per-sm", spec.shared_per_sm);
  occ->add_option("--sm-count", spec.sm_count);
  occ->add_option("--max-warps-per-sm", spec.max_warps_per_sm);
  occ->add_flag("--json", occ_json, "key/value JSON instead of aligned text");

  // make-synth
  auto* synth = app.add_subcommand("make-synth", "write a synthetic ASHRAE-format dataset to --output-dir");
  detail::ConfigFlags synth_flags;
  synth_flags.attach(*synth);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (train->parsed()) {
      const auto cfg = train_flags.resolve();
      pipeline::validate(cfg);
      const auto data = pipeline::prepare_data(cfg, &err);
      if (data.train.empty()) throw data_error("training split produced no windows (series shorter than seq_len + 1?)");
      const auto result = pipeline::run_training(cfg, data, &err);
      const std::filesystem::path dir(cfg.output_dir);
      std::filesystem::create_directories(dir);
      model::save_checkpoint(result.params, (dir / kCheckpointFile).string());
      std::ostringstream hist;
      training::write_history_csv(hist, result.history);
      detail::write_file(dir / kHistoryFile, hist.str());
      detail::write_file(dir / kConfigFile, pipeline::to_config_text(cfg));
      const double val = pipeline::final_rmsle(result.history, "val");
      if (std::isnan(val))
        out << "train_rmsle " << dataio::format_real(pipeline::final_rmsle(result.history, "train")) << '\n';
      else
        out << "val_rmsle " << dataio::format_real(val) << '\n';
      return kOk;
    }

    if (eval->parsed() || predict->parsed()) {
      const bool is_eval = eval->parsed();
      const auto& flags = is_eval ? eval_flags : predict_flags;
      const std::string& ckpt = is_eval ? eval_ckpt : predict_ckpt;
      auto params = model::load_checkpoint(ckpt);
      auto cfg = flags.resolve(detail::sibling_config(ckpt, flags.config_path));
      detail::adopt_checkpoint_dims(cfg, params);
      pipeline::validate(cfg);
      const auto mc = cfg.model_config();
      const auto fs = dataio::parse_feature_set(cfg.feature_set);

      dataio::WindowSet ws;
      std::string split_name = is_eval ? eval_split : "all";
      if (split_name == "all") {
        ws = dataio::make_windows(dataio::build_series(dataio::clean(pipeline::load_records(cfg, &err))), fs,
                                  cfg.seq_len, cfg.seq_len);
      } else {
        auto data = pipeline::prepare_data(cfg, &err);
        if (split_name == "test") {
          ws = std::move(data.test);
        } else if (split_name == "val") {
          ws = std::move(data.val);
        } else {
          ws = dataio::make_windows(dataio::build_series(data.split.train), fs, cfg.seq_len, cfg.seq_len);
        }
      }
      if (ws.empty()) throw data_error("no complete windows in split '" + split_name + "'");
      const auto res = training::evaluate(params, mc, ws);

      const std::filesystem::path dir(cfg.output_dir);
      std::filesystem::create_directories(dir);
      std::ostringstream preds;
      detail::write_predictions(preds, ws, res.outputs);
      detail::write_file(dir / kPredictionsFile, preds.str());
      if (is_eval) out << split_name << "_rmsle " << dataio::format_real(res.rmsle) << '\n';
      else out << "predictions " << (dir / kPredictionsFile).string() << '\n';
      return kOk;
    }

    if (kdump->parsed()) {
      auto params = model::load_checkpoint(kdump_ckpt);
      auto cfg = kdump_flags.resolve(detail::sibling_config(kdump_ckpt, kdump_flags.config_path));
      detail::adopt_checkpoint_dims(cfg, params);
      const auto mc = cfg.model_config();
      params.validate_against(mc);
      const std::size_t len = kdump_len > 0 ? kdump_len : cfg.seq_len;
      const Kernel k = model::layer_kernels(params, len, mc.variant);
      if (!all_finite(k.values)) throw numeric_error("kernel-dump: non-finite kernel values");
      std::ostringstream csv;
      for (std::size_t h = 0; h < k.channels; ++h) {
        for (std::size_t l = 0; l < len; ++l) csv << (l ? "," : "") << dataio::format_real(k(h, l));
        csv << '\n';
      }
      if (kdump_output.empty()) out << csv.str();
      else detail::write_file(kdump_output, csv.str());
      return kOk;
    }

    if (bench->parsed()) {
      const auto report = perf::bench_tiling(bench_n, bench_l, bench_tiles, bench_repeats, bench_seed);
      std::ostringstream csv;
      perf::write_bench_csv(csv, report);
      out << csv.str();
      if (!bench_output.empty()) detail::write_file(bench_output, csv.str());
      for (const auto& r : report.rejected) err << "rejected " << r << '\n';
      return report.rejected.empty() ? kOk : kNumeric;
    }

    if (occ->parsed()) {
      const auto report = perf::occupancy(spec, usage);
      out << (occ_json ? perf::format_json(report) : perf::format_text(report));
      return kOk;
    }

    if (synth->parsed()) {
      const auto cfg = synth_flags.resolve();
      if (cfg.synth_buildings < 1 || cfg.synth_weeks < 1) throw pipeline::config_error("empty synthetic dataset");
      const auto ds = dataio::synth_dataset(pipeline::synth_options(cfg));
      dataio::write_dataset_csv(ds, cfg.output_dir);
      out << "wrote " << ds.meters.size() << " meter rows to " << cfg.output_dir << '\n';
      return kOk;
    }
  } catch (const pipeline::config_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const validation_error& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const data_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const numeric_error& e) {
    err << "numeric abort: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace s4cd::cli
