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

#pragma once

#include <cmath>
#include <span>

#include "s4cd/core.hpp"

namespace s4cd::metrics {

namespace detail {
inline void check_lengths(std::span<const double> pred, std::span<const double> actual) {
  if (pred.empty() || actual.empty()) throw validation_error("metric: empty input");
  if (pred.size() != actual.size()) throw validation_error("metric: length mismatch");
}
}  // namespace detail

/// Root mean squared logarithmic error, natural log. Inputs must be finite and >= 0.
inline double rmsle(std::span<const double> pred, std::span<const double> actual) {
  detail::check_lengths(pred, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(actual[i])) throw validation_error("rmsle: non-finite input");
    if (pred[i] < 0.0 || actual[i] < 0.0) throw validation_error("rmsle: negative input (clamp predictions first)");
    const double diff = std::log1p(pred[i]) - std::log1p(actual[i]);
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

inline double rmse(std::span<const double> pred, std::span<const double> actual) {
  detail::check_lengths(pred, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(actual[i])) throw validation_error("rmse: non-finite input");
    const double diff = pred[i] - actual[i];
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

}  // namespace s4cd::metrics
