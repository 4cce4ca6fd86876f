/*
 * Copyright 2026 The plfm Authors
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

// Scoring of predictive marginals against ground truth.

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "plfm/errors.hpp"

namespace plfm::apps {

inline double rmse(const std::vector<double>& mean, const std::vector<double>& truth) {
  if (mean.size() != truth.size() || mean.empty()) throw InvalidParameter("rmse: need equal, non-empty series");
  double acc = 0.0;
  for (size_t i = 0; i < mean.size(); ++i) acc += (mean[i] - truth[i]) * (mean[i] - truth[i]);
  return std::sqrt(acc / static_cast<double>(mean.size()));
}

// Mean Gaussian log-density of the truth under the predictive marginals.
inline double ell(const std::vector<double>& mean, const std::vector<double>& var, const std::vector<double>& truth) {
  if (mean.size() != truth.size() || var.size() != truth.size() || mean.empty())
    throw InvalidParameter("ell: need equal, non-empty series");
  double acc = 0.0;
  for (size_t i = 0; i < mean.size(); ++i) {
    if (!(var[i] > 0)) throw NumericError("ell: predictive variance must be positive");
    double r = truth[i] - mean[i];
    acc += -0.5 * (std::log(2.0 * std::numbers::pi * var[i]) + r * r / var[i]);
  }
  return acc / static_cast<double>(mean.size());
}

struct Metrics {
  std::string method;
  std::string dataset;
  int day = 0;
  double rmse = 0.0;
  double ell = 0.0;
  int n_basis = 0;
  std::optional<double> runtime_ms;  // set only when timing is requested
};

inline nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j = {{"method", m.method}, {"dataset", m.dataset}, {"day", m.day},
                      {"rmse", m.rmse},     {"ell", m.ell},         {"n_basis", m.n_basis}};
  j["runtime_ms"] = m.runtime_ms ? nlohmann::json(*m.runtime_ms) : nlohmann::json(nullptr);
  return j;
}

}  // namespace plfm::apps
