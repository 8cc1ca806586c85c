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
 * @file dataio.hpp
 * ASHRAE-format CSV ingestion, weather join, minimal cleaning, per-step
 * feature vectors, temporal train/val/test split, synthetic datasets and
 * fixed-length training windows.
 *
 * Timestamps are carried as whole hours since the Unix epoch (UTC).
 */

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "s4cd/core.hpp"
#include "s4cd/random.hpp"

namespace s4cd::dataio {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double x) { return std::isnan(x); }

enum class MeterType : int { electricity = 0, chilledwater = 1, steam = 2, hotwater = 3 };

// ---------------------------------------------------------------------------
// time

/// "YYYY-MM-DD HH:MM:SS" -> hours since epoch. Minutes/seconds must be zero.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != ' ' || s[13] != ':' || s[16] != ':')
    return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc{} || p != s.data() + pos + len) return std::nullopt;
    return v;
  };
  const auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), h = num(11, 2), mi = num(14, 2), se = num(17, 2);
  if (!y || !mo || !d || !h || !mi || !se) return std::nullopt;
  if (*h > 23 || *mi != 0 || *se != 0) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*mo)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 24 + *h;
}

inline std::chrono::year_month_day civil_date(std::int64_t hour) {
  const std::int64_t day = (hour >= 0 ? hour / 24 : (hour - 23) / 24);
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{day}}};
}

inline int hour_of_day(std::int64_t hour) { return static_cast<int>(((hour % 24) + 24) % 24); }

inline std::string format_timestamp(std::int64_t hour) {
  const auto ymd = civil_date(hour);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:00:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day(hour));
  return buf;
}

struct TimeFeatures {
  double hour_sin = 0.0;
  double hour_cos = 1.0;
  int day_of_week = 0;  // Monday = 0
  bool is_holiday = false;
};

/// Fixed-date holidays only: Jan 1, Dec 25, Dec 26.
inline bool is_fixed_holiday(std::int64_t hour) {
  const auto ymd = civil_date(hour);
  const unsigned m = static_cast<unsigned>(ymd.month()), d = static_cast<unsigned>(ymd.day());
  return (m == 1 && d == 1) || (m == 12 && (d == 25 || d == 26));
}

inline TimeFeatures time_features(std::int64_t hour) {
  TimeFeatures tf;
  const double angle = 2.0 * std::numbers::pi * hour_of_day(hour) / 24.0;
  tf.hour_sin = std::sin(angle);
  tf.hour_cos = std::cos(angle);
  const std::int64_t day = (hour >= 0 ? hour / 24 : (hour - 23) / 24);
  // 1970-01-01 was a Thursday (Monday-based index 3)
  tf.day_of_week = static_cast<int>(((day + 3) % 7 + 7) % 7);
  tf.is_holiday = is_fixed_holiday(hour);
  return tf;
}

// ---------------------------------------------------------------------------
// records

struct MeterRecord {
  int building_id = 0;
  int meter = 0;
  std::int64_t hour = 0;
  double meter_reading = kMissing;
};

struct WeatherRecord {
  int site_id = 0;
  std::int64_t hour = 0;
  double air_temperature = kMissing;
  double cloud_coverage = kMissing;
  double dew_temperature = kMissing;
};

/// A meter reading joined with its site's weather at the same hour.
struct JoinedRecord {
  int building_id = 0;
  int site_id = 0;
  int meter = 0;
  std::int64_t hour = 0;
  double meter_reading = kMissing;
  double air_temperature = kMissing;
  double cloud_coverage = kMissing;
  double dew_temperature = kMissing;

  bool dew_above_air() const {
    return !is_missing(air_temperature) && !is_missing(dew_temperature) && dew_temperature > air_temperature;
  }
};

struct LoadResult {
  std::vector<JoinedRecord> records;
  std::size_t warnings = 0;
  std::size_t weather_unmatched = 0;
};

// ---------------------------------------------------------------------------
// csv

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

namespace detail {

struct CsvTable {
  std::vector<std::string> header;
  std::ifstream stream;

  std::size_t column(const std::string& name, const std::string& path) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw data_error("'" + path + "': missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable open_csv(const std::string& path) {
  CsvTable t;
  t.stream.open(path);
  if (!t.stream) throw data_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(t.stream, line)) throw data_error("'" + path + "': missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  t.header = split_csv_line(line);
  return t;
}

inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return kMissing;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/**
 * Reads the three ASHRAE tables and joins meter rows to weather through the
 * building -> site mapping. Malformed rows are skipped and counted; rows
 * without a weather match keep missing weather fields.
 */
inline LoadResult load_csv(const std::string& meter_path, const std::string& weather_path,
                           const std::string& metadata_path) {
  LoadResult result;

  std::unordered_map<int, int> site_of_building;
  {
    auto t = detail::open_csv(metadata_path);
    const auto c_site = t.column("site_id", metadata_path), c_bld = t.column("building_id", metadata_path);
    std::string line;
    while (std::getline(t.stream, line)) {
      if (line.empty() || line == "\r") continue;
      const auto f = split_csv_line(line);
      if (f.size() != t.header.size()) {
        ++result.warnings;
        continue;
      }
      const auto site = detail::parse_int(f[c_site]), bld = detail::parse_int(f[c_bld]);
      if (!site || !bld) {
        ++result.warnings;
        continue;
      }
      site_of_building[*bld] = *site;
    }
  }

  std::map<std::pair<int, std::int64_t>, WeatherRecord> weather;
  {
    auto t = detail::open_csv(weather_path);
    const auto c_site = t.column("site_id", weather_path), c_ts = t.column("timestamp", weather_path),
               c_at = t.column("air_temperature", weather_path), c_cc = t.column("cloud_coverage", weather_path),
               c_dt = t.column("dew_temperature", weather_path);
    std::string line;
    while (std::getline(t.stream, line)) {
      if (line.empty() || line == "\r") continue;
      const auto f = split_csv_line(line);
      if (f.size() != t.header.size()) {
        ++result.warnings;
        continue;
      }
      const auto site = detail::parse_int(f[c_site]);
      const auto hour = parse_timestamp(f[c_ts]);
      const auto at = detail::parse_real(f[c_at]), cc = detail::parse_real(f[c_cc]),
                 dt = detail::parse_real(f[c_dt]);
      if (!site || !hour || !at || !cc || !dt) {
        ++result.warnings;
        continue;
      }
      weather[{*site, *hour}] = WeatherRecord{*site, *hour, *at, *cc, *dt};
    }
  }

  auto t = detail::open_csv(meter_path);
  const auto c_bld = t.column("building_id", meter_path), c_m = t.column("meter", meter_path),
             c_ts = t.column("timestamp", meter_path), c_r = t.column("meter_reading", meter_path);
  std::string line;
  while (std::getline(t.stream, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != t.header.size()) {
      ++result.warnings;
      continue;
    }
    const auto bld = detail::parse_int(f[c_bld]), meter = detail::parse_int(f[c_m]);
    const auto hour = parse_timestamp(f[c_ts]);
    const auto reading = detail::parse_real(f[c_r]);
    if (!bld || !meter || *meter < 0 || *meter > 3 || !hour || !reading ||
        (!is_missing(*reading) && (*reading < 0.0 || !std::isfinite(*reading)))) {
      ++result.warnings;
      continue;
    }
    const auto site_it = site_of_building.find(*bld);
    if (site_it == site_of_building.end()) {
      ++result.warnings;
      continue;
    }
    JoinedRecord r;
    r.building_id = *bld;
    r.site_id = site_it->second;
    r.meter = *meter;
    r.hour = *hour;
    r.meter_reading = *reading;
    if (const auto w = weather.find({r.site_id, r.hour}); w != weather.end()) {
      r.air_temperature = w->second.air_temperature;
      r.cloud_coverage = w->second.cloud_coverage;
      r.dew_temperature = w->second.dew_temperature;
    } else {
      ++result.weather_unmatched;
    }
    result.records.push_back(r);
  }
  return result;
}

// ---------------------------------------------------------------------------
// clean

/**
 * Weather imputation only: forward-fill within a site when the last observed
 * value is at most 24 h older, otherwise the site mean (global mean if the
 * site has no observations, 0 if nothing is observed anywhere). Meter
 * readings and outliers are left untouched.
 */
inline std::vector<JoinedRecord> clean(std::vector<JoinedRecord> records) {
  constexpr std::int64_t kMaxGap = 24;
  using Field = double JoinedRecord::*;
  const std::array<Field, 3> fields{&JoinedRecord::air_temperature, &JoinedRecord::cloud_coverage,
                                    &JoinedRecord::dew_temperature};

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(records[a].site_id, records[a].hour) < std::tie(records[b].site_id, records[b].hour);
  });

  for (const Field field : fields) {
    double g_sum = 0.0;
    std::size_t g_cnt = 0;
    std::map<int, std::pair<double, std::size_t>> site_stats;
    for (const auto& r : records) {
      if (is_missing(r.*field)) continue;
      g_sum += r.*field;
      ++g_cnt;
      auto& st = site_stats[r.site_id];
      st.first += r.*field;
      ++st.second;
    }
    const double global_mean = g_cnt ? g_sum / static_cast<double>(g_cnt) : 0.0;

    std::vector<double> filled(records.size());
    std::optional<int> cur_site;
    bool have_last = false;
    std::int64_t last_hour = 0;
    double last_value = 0.0;
    for (const std::size_t i : order) {
      const auto& r = records[i];
      if (cur_site != r.site_id) {
        cur_site = r.site_id;
        have_last = false;
      }
      double v = r.*field;
      if (!is_missing(v)) {
        have_last = true;
        last_hour = r.hour;
        last_value = v;
      } else if (have_last && r.hour - last_hour <= kMaxGap) {
        v = last_value;
      } else {
        const auto it = site_stats.find(r.site_id);
        v = it != site_stats.end() ? it->second.first / static_cast<double>(it->second.second) : global_mean;
      }
      filled[i] = v;
    }
    for (std::size_t i = 0; i < records.size(); ++i) records[i].*field = filled[i];
  }
  return records;
}

// ---------------------------------------------------------------------------
// features

enum class FeatureSet { paper_eq2, minimal4 };

inline FeatureSet parse_feature_set(const std::string& s) {
  if (s == "minimal4" || s == "MINIMAL4") return FeatureSet::minimal4;
  if (s == "paper_eq2" || s == "PAPER_EQ2" || s == "eq2") return FeatureSet::paper_eq2;
  throw validation_error("unknown feature set '" + s + "' (expected minimal4 or paper_eq2)");
}

inline const char* to_string(FeatureSet f) { return f == FeatureSet::minimal4 ? "minimal4" : "paper_eq2"; }

inline std::size_t feature_count(FeatureSet f) { return f == FeatureSet::minimal4 ? 4 : 11; }

/// One hourly step of a (building, meter) series with the co-located readings of all four meter types.
struct SeriesStep {
  std::int64_t hour = 0;
  double reading = kMissing;
  std::array<double, 4> building_meters{kMissing, kMissing, kMissing, kMissing};
  double air_temperature = kMissing;
  double cloud_coverage = kMissing;
  double dew_temperature = kMissing;
};

/**
 * MINIMAL4:  [log1p(reading), T_a / 50, hour_sin, hour_cos]
 * PAPER_EQ2: [E, C, S, H, T_a, CC, T_d, hour_sin, hour_cos, day_of_week / 6, is_holiday]
 * Meter slots are log1p'd; a missing reading enters as 0.
 */
inline std::vector<double> feature_vector(const SeriesStep& s, FeatureSet set) {
  const TimeFeatures tf = time_features(s.hour);
  auto lg = [](double x) { return is_missing(x) ? 0.0 : std::log1p(x); };
  if (set == FeatureSet::minimal4) return {lg(s.reading), s.air_temperature / 50.0, tf.hour_sin, tf.hour_cos};
  return {lg(s.building_meters[0]),
          lg(s.building_meters[1]),
          lg(s.building_meters[2]),
          lg(s.building_meters[3]),
          s.air_temperature,
          s.cloud_coverage,
          s.dew_temperature,
          tf.hour_sin,
          tf.hour_cos,
          tf.day_of_week / 6.0,
          tf.is_holiday ? 1.0 : 0.0};
}

struct Series {
  int building_id = 0;
  int meter = 0;
  std::vector<SeriesStep> steps;  // consecutive hours
};

/**
 * Groups cleaned records into contiguous hourly series per (building, meter).
 * Hours absent inside a series become steps with a missing reading and the
 * previous step's weather.
 */
inline std::vector<Series> build_series(const std::vector<JoinedRecord>& records) {
  std::map<std::pair<int, std::int64_t>, std::array<double, 4>> building_hour;
  std::map<std::pair<int, int>, std::vector<const JoinedRecord*>> groups;
  for (const auto& r : records) {
    auto [it, inserted] = building_hour.try_emplace({r.building_id, r.hour});
    if (inserted) it->second.fill(kMissing);
    it->second[static_cast<std::size_t>(r.meter)] = r.meter_reading;
    groups[{r.building_id, r.meter}].push_back(&r);
  }
  std::vector<Series> out;
  for (auto& [key, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->hour < b->hour; });
    Series s;
    s.building_id = key.first;
    s.meter = key.second;
    for (const auto* r : rows) {
      if (!s.steps.empty() && r->hour == s.steps.back().hour) continue;  // duplicate timestamp: keep first
      while (!s.steps.empty() && s.steps.back().hour + 1 < r->hour) {
        SeriesStep gap = s.steps.back();
        gap.hour += 1;
        gap.reading = kMissing;
        if (const auto it = building_hour.find({s.building_id, gap.hour}); it != building_hour.end())
          gap.building_meters = it->second;
        else
          gap.building_meters.fill(kMissing);
        s.steps.push_back(gap);
      }
      SeriesStep st;
      st.hour = r->hour;
      st.reading = r->meter_reading;
      st.building_meters = building_hour.at({r->building_id, r->hour});
      st.air_temperature = r->air_temperature;
      st.cloud_coverage = r->cloud_coverage;
      st.dew_temperature = r->dew_temperature;
      s.steps.push_back(st);
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Per-step feature rows for every record (same order as build_series' steps).
inline std::vector<std::vector<double>> assemble_features(const std::vector<JoinedRecord>& records, FeatureSet set) {
  std::vector<std::vector<double>> out;
  for (const auto& s : build_series(records))
    for (const auto& st : s.steps) out.push_back(feature_vector(st, set));
  return out;
}

// ---------------------------------------------------------------------------
// split

struct SplitRatios {
  double train = 0.5770;
  double val = 0.1694;
  double test = 0.2536;
};

struct DatasetSplit {
  std::vector<JoinedRecord> train, val, test;
  std::int64_t val_start = 0;   // first hour in val
  std::int64_t test_start = 0;  // first hour in test
};

/**
 * Contiguous cuts in time. Records are ordered by timestamp and the cut
 * points fall at round(ratio * n); a cut inside a run of equal timestamps
 * moves to the start of that run so no timestamp straddles two splits.
 */
inline DatasetSplit temporal_split(std::vector<JoinedRecord> records, SplitRatios ratios = {}) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw validation_error("temporal_split: ratios must be non-negative and sum to 1");
  std::stable_sort(records.begin(), records.end(),
                   [](const JoinedRecord& a, const JoinedRecord& b) { return a.hour < b.hour; });
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (i == 0 || records[i].hour != records[i - 1].hour) ++distinct;
  if (distinct < 3) throw validation_error("temporal_split: need at least 3 distinct timestamps");

  const auto n = static_cast<double>(records.size());
  auto cut_at = [&](double frac) {
    auto idx = static_cast<std::size_t>(std::llround(frac * n));
    idx = std::min(idx, records.size());
    while (idx > 0 && idx < records.size() && records[idx].hour == records[idx - 1].hour) --idx;
    return idx;
  };
  const std::size_t c1 = cut_at(ratios.train);
  const std::size_t c2 = std::max(c1, cut_at(ratios.train + ratios.val));

  DatasetSplit split;
  split.train.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(c1));
  split.val.assign(records.begin() + static_cast<std::ptrdiff_t>(c1), records.begin() + static_cast<std::ptrdiff_t>(c2));
  split.test.assign(records.begin() + static_cast<std::ptrdiff_t>(c2), records.end());
  split.val_start = c1 < records.size() ? records[c1].hour : records.back().hour + 1;
  split.test_start = c2 < records.size() ? records[c2].hour : records.back().hour + 1;
  return split;
}

// ---------------------------------------------------------------------------
// synthetic data

struct SynthOptions {
  std::uint64_t seed = 42;
  std::size_t n_buildings = 8;
  std::size_t hours = 8 * 168;
  double noise = 0.05;                  // relative Gaussian noise on readings
  std::int64_t start_hour = 403224;     // 2016-01-01 00:00
};

struct SynthBuilding {
  int building_id = 0;
  int site_id = 0;
  double base = 100.0;
  double daily_amp = 0.3;
  double daily_phase = 0.0;
  double weekly_amp = 0.2;
  double temp_coef = 0.01;
  double site_temp = 15.0;
};

struct SynthDataset {
  std::vector<SynthBuilding> buildings;
  std::vector<MeterRecord> meters;
  std::vector<WeatherRecord> weather;
  std::vector<JoinedRecord> joined;
};

inline double synth_air_temperature(const SynthBuilding& b, std::int64_t hour) {
  return b.site_temp + 8.0 * std::sin(2.0 * std::numbers::pi * (hour_of_day(hour) - 9) / 24.0);
}

/// Noiseless reading: daily sinusoid, weekday/weekend square wave and a temperature term. Period 168 h.
inline double synth_mean(const SynthBuilding& b, std::int64_t hour) {
  const double daily = std::sin(2.0 * std::numbers::pi * hour_of_day(hour) / 24.0 + b.daily_phase);
  const double weekly = time_features(hour).day_of_week < 5 ? 1.0 : -1.0;
  const double temp = synth_air_temperature(b, hour) - b.site_temp;
  return b.base * (1.0 + b.daily_amp * daily + b.weekly_amp * weekly + b.temp_coef * temp);
}

/// Buildings 2k and 2k+1 share site k; one electricity meter each.
inline SynthDataset synth_dataset(const SynthOptions& opt) {
  if (opt.n_buildings < 1) throw validation_error("synth_dataset: n_buildings must be >= 1");
  Rng rng(opt.seed);
  SynthDataset ds;
  for (std::size_t i = 0; i < opt.n_buildings; ++i) {
    SynthBuilding b;
    b.building_id = static_cast<int>(i);
    b.site_id = static_cast<int>(i / 2);
    b.base = std::exp(rng.uniform(std::log(20.0), std::log(500.0)));
    b.daily_amp = rng.uniform(0.1, 0.4);
    b.daily_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    b.weekly_amp = rng.uniform(0.05, 0.3);
    b.temp_coef = rng.uniform(0.0, 0.02);
    b.site_temp = 5.0 + 3.0 * static_cast<double>(b.site_id);
    ds.buildings.push_back(b);
  }
  for (std::size_t i = 0; i < opt.n_buildings; i += 2) {
    const auto& b = ds.buildings[i];
    for (std::size_t t = 0; t < opt.hours; ++t) {
      const std::int64_t hour = opt.start_hour + static_cast<std::int64_t>(t);
      const double ta = synth_air_temperature(b, hour);
      const double cc = std::round(4.5 + 4.5 * std::cos(2.0 * std::numbers::pi * hour_of_day(hour) / 24.0));
      ds.weather.push_back({b.site_id, hour, ta, cc, ta - 4.0});
    }
  }
  for (const auto& b : ds.buildings) {
    for (std::size_t t = 0; t < opt.hours; ++t) {
      const std::int64_t hour = opt.start_hour + static_cast<std::int64_t>(t);
      const double noise = opt.noise > 0.0 ? opt.noise * rng.normal() : 0.0;
      const double reading = std::max(0.0, synth_mean(b, hour) * (1.0 + noise));
      ds.meters.push_back({b.building_id, 0, hour, reading});
    }
  }
  std::map<std::pair<int, std::int64_t>, const WeatherRecord*> wx;
  for (const auto& w : ds.weather) wx[{w.site_id, w.hour}] = &w;
  for (const auto& m : ds.meters) {
    const auto& b = ds.buildings[static_cast<std::size_t>(m.building_id)];
    const auto* w = wx.at({b.site_id, m.hour});
    ds.joined.push_back({m.building_id, b.site_id, m.meter, m.hour, m.meter_reading, w->air_temperature,
                         w->cloud_coverage, w->dew_temperature});
  }
  return ds;
}

/// Shortest round-trip decimal text for a double; empty for missing.
inline std::string format_real(double x) {
  if (is_missing(x)) return {};
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

inline constexpr const char* kMeterFile = "train.csv";
inline constexpr const char* kWeatherFile = "weather_train.csv";
inline constexpr const char* kMetadataFile = "building_metadata.csv";

/// Writes the three ASHRAE-schema CSVs into dir (created if needed).
inline void write_dataset_csv(const SynthDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw data_error("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  {
    auto f = open(kMeterFile);
    f << "building_id,meter,timestamp,meter_reading\n";
    for (const auto& m : ds.meters)
      f << m.building_id << ',' << m.meter << ',' << format_timestamp(m.hour) << ',' << format_real(m.meter_reading)
        << '\n';
  }
  {
    auto f = open(kWeatherFile);
    f << "site_id,timestamp,air_temperature,cloud_coverage,dew_temperature\n";
    for (const auto& w : ds.weather)
      f << w.site_id << ',' << format_timestamp(w.hour) << ',' << format_real(w.air_temperature) << ','
        << format_real(w.cloud_coverage) << ',' << format_real(w.dew_temperature) << '\n';
  }
  {
    auto f = open(kMetadataFile);
    f << "site_id,building_id,primary_use,square_feet,year_built,floor_count\n";
    for (const auto& b : ds.buildings) f << b.site_id << ',' << b.building_id << ",Office,10000,,\n";
  }
}

inline LoadResult load_dataset_dir(const std::filesystem::path& dir) {
  return load_csv((dir / kMeterFile).string(), (dir / kWeatherFile).string(), (dir / kMetadataFile).string());
}

// ---------------------------------------------------------------------------
// windows

/**
 * Fixed-length windows over series: inputs are the features at steps
 * s..s+L-1, targets the log1p readings at steps s+1..s+L.
 */
struct WindowSet {
  std::size_t length = 0;
  std::size_t features = 0;
  std::vector<double> inputs;   // (W, L, F)
  std::vector<double> targets;  // (W, L) log1p space
  std::vector<std::uint8_t> mask;
  std::vector<int> building_id, meter;
  std::vector<std::int64_t> target_hours;  // (W, L)

  std::size_t size() const { return building_id.size(); }
  bool empty() const { return building_id.empty(); }
};

struct Minibatch {
  SequenceBatch batch;
  Tensor3 targets;  // (B, L, 1)
  std::vector<std::uint8_t> mask;
};

inline Minibatch gather(const WindowSet& ws, std::span<const std::size_t> idx) {
  const std::size_t len = ws.length, nf = ws.features;
  Minibatch mb;
  mb.batch.data = Tensor3(idx.size(), len, nf);
  mb.batch.timestamps.resize(idx.size() * len);
  mb.targets = Tensor3(idx.size(), len, 1);
  mb.mask.resize(idx.size() * len);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t w = idx[i];
    std::copy_n(ws.inputs.begin() + static_cast<std::ptrdiff_t>(w * len * nf), len * nf,
                mb.batch.data.data.begin() + static_cast<std::ptrdiff_t>(i * len * nf));
    for (std::size_t l = 0; l < len; ++l) {
      mb.targets(i, l, 0) = ws.targets[w * len + l];
      mb.mask[i * len + l] = ws.mask[w * len + l];
      mb.batch.timestamps[i * len + l] = ws.target_hours[w * len + l] - 1;
    }
  }
  return mb;
}

/// Windows of length L (needs L+1 steps) every `stride` steps; windows with more than half their targets missing are dropped.
inline WindowSet make_windows(const std::vector<Series>& series, FeatureSet set, std::size_t length,
                              std::size_t stride) {
  if (length < 1 || stride < 1) throw validation_error("make_windows: length and stride must be >= 1");
  WindowSet ws;
  ws.length = length;
  ws.features = feature_count(set);
  for (const auto& s : series) {
    if (s.steps.size() < length + 1) continue;
    std::vector<std::vector<double>> feats;
    feats.reserve(s.steps.size());
    for (const auto& st : s.steps) feats.push_back(feature_vector(st, set));
    for (std::size_t start = 0; start + length + 1 <= s.steps.size(); start += stride) {
      std::size_t missing = 0;
      for (std::size_t l = 0; l < length; ++l) missing += is_missing(s.steps[start + l + 1].reading) ? 1 : 0;
      if (2 * missing > length) continue;
      for (std::size_t l = 0; l < length; ++l) {
        const auto& f = feats[start + l];
        ws.inputs.insert(ws.inputs.end(), f.begin(), f.end());
        const auto& tgt = s.steps[start + l + 1];
        ws.targets.push_back(is_missing(tgt.reading) ? 0.0 : std::log1p(tgt.reading));
        ws.mask.push_back(is_missing(tgt.reading) ? 0 : 1);
        ws.target_hours.push_back(tgt.hour);
      }
      ws.building_id.push_back(s.building_id);
      ws.meter.push_back(s.meter);
    }
  }
  return ws;
}

}  // namespace s4cd::dataio
