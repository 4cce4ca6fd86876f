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

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "plfm/errors.hpp"
#include "plfm/parallel.hpp"
#include "plfm/rng.hpp"

namespace plfm {

struct InitializationError : Error {
  using Error::Error;
};

enum class Transform { Identity, Log, Logit };

// Search space; the optimizer works on transformed coordinates.
struct ParamSpace {
  std::vector<std::string> names;
  std::vector<double> init, lower, upper;
  std::vector<Transform> transform;

  ParamSpace& add(std::string name, double x0, double lo, double hi, Transform t = Transform::Log) {
    names.push_back(std::move(name));
    init.push_back(x0);
    lower.push_back(lo);
    upper.push_back(hi);
    transform.push_back(t);
    return *this;
  }

  int dim() const { return static_cast<int>(names.size()); }

  int index(const std::string& name) const {
    for (int i = 0; i < dim(); ++i)
      if (names[i] == name) return i;
    throw InvalidParameter("unknown parameter '" + name + "'");
  }

  void validate() const {
    for (int i = 0; i < dim(); ++i) {
      if (!(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] < upper[i]))
        throw InvalidParameter("parameter '" + names[i] + "': bounds must be finite and ordered");
      if (!(init[i] > lower[i] && init[i] < upper[i]))
        throw InvalidParameter("parameter '" + names[i] + "': initial point must be interior");
      if (transform[i] == Transform::Log && !(lower[i] > 0))
        throw InvalidParameter("parameter '" + names[i] + "': log transform needs a positive lower bound");
    }
  }

  Eigen::VectorXd to_internal(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd x(dim());
    for (int i = 0; i < dim(); ++i) {
      switch (transform[i]) {
        case Transform::Identity: x[i] = theta[i]; break;
        case Transform::Log: x[i] = std::log(theta[i]); break;
        case Transform::Logit: {
          double p = (theta[i] - lower[i]) / (upper[i] - lower[i]);
          x[i] = std::log(p / (1.0 - p));
          break;
        }
      }
    }
    return x;
  }

  Eigen::VectorXd to_external(const Eigen::VectorXd& x) const {
    Eigen::VectorXd theta(dim());
    for (int i = 0; i < dim(); ++i) {
      switch (transform[i]) {
        case Transform::Identity: theta[i] = x[i]; break;
        case Transform::Log: theta[i] = std::exp(x[i]); break;
        case Transform::Logit: theta[i] = lower[i] + (upper[i] - lower[i]) / (1.0 + std::exp(-x[i])); break;
      }
    }
    return theta;
  }

  bool inside(const Eigen::VectorXd& theta) const {
    for (int i = 0; i < dim(); ++i)
      if (!(theta[i] >= lower[i] && theta[i] <= upper[i])) return false;
    return true;
  }

  Eigen::VectorXd initial() const { return Eigen::Map<const Eigen::VectorXd>(init.data(), dim()); }
};

struct FitOptions {
  double initial_step = 0.3;  // simplex edge in transformed coordinates
  double restart_jitter = 0.5;
  double ftol = 1e-9;
  double xtol = 1e-7;
  int jobs = 1;
};

struct FitResult {
  Eigen::VectorXd params;
  double value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int restarts = 0;
  bool truncated = false;
  std::vector<double> trace;  // best-so-far after each evaluation
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

struct NmRun {
  Eigen::VectorXd best_x;
  double best = std::numeric_limits<double>::infinity();  // minimized (negated objective)
  std::vector<double> values;                              // raw objective per evaluation
  bool truncated = false;
};

inline NmRun nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                         int budget, const FitOptions& opt) {
  const int n = static_cast<int>(x0.size());
  NmRun run;
  auto eval = [&](const Eigen::VectorXd& x) {
    double v = f(x);
    run.values.push_back(-v);
    if (v < run.best) {
      run.best = v;
      run.best_x = x;
    }
    return v;
  };
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 0; i < n; ++i) xs[i + 1][i] += opt.initial_step;
  for (int i = 0; i <= n; ++i) {
    if (static_cast<int>(run.values.size()) >= budget) {
      run.truncated = true;
      return run;
    }
    fs[i] = eval(xs[i]);
  }
  std::vector<int> order(n + 1);
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int ib = order[0], iw = order[n], isw = order[n - 1];
    double spread = fs[iw] - fs[ib];
    double size = 0.0;
    for (int i = 0; i <= n; ++i) size = std::max(size, (xs[i] - xs[ib]).cwiseAbs().maxCoeff());
    if (std::isfinite(spread) && spread <= opt.ftol * (1.0 + std::abs(fs[ib])) && size <= opt.xtol) break;
    if (static_cast<int>(run.values.size()) >= budget) {
      run.truncated = true;
      break;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) c += xs[order[k]];
    c /= n;
    auto remaining = [&] { return budget - static_cast<int>(run.values.size()); };
    Eigen::VectorXd xr = c + (c - xs[iw]);
    double fr = eval(xr);
    if (fr < fs[ib]) {
      if (remaining() <= 0) {
        xs[iw] = xr, fs[iw] = fr;
        continue;
      }
      Eigen::VectorXd xe = c + 2.0 * (c - xs[iw]);
      double fe = eval(xe);
      if (fe < fr)
        xs[iw] = xe, fs[iw] = fe;
      else
        xs[iw] = xr, fs[iw] = fr;
      continue;
    }
    if (fr < fs[isw]) {
      xs[iw] = xr, fs[iw] = fr;
      continue;
    }
    if (remaining() <= 0) continue;
    bool outside = fr < fs[iw];
    Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (xs[iw] - c));
    double fc = eval(xc);
    if (outside ? fc <= fr : fc < fs[iw]) {
      xs[iw] = xc, fs[iw] = fc;
      continue;
    }
    for (int k = 1; k <= n; ++k) {
      int i = order[k];
      if (remaining() <= 0) break;
      xs[i] = xs[ib] + 0.5 * (xs[i] - xs[ib]);
      fs[i] = eval(xs[i]);
    }
  }
  return run;
}

}  // namespace detail

// Maximizes objective over the space with Nelder-Mead restarts. budget is the
// total evaluation count, split evenly over restarts.
inline FitResult fit(const Objective& objective, const ParamSpace& space, int budget, int restarts,
                     std::uint64_t seed, const FitOptions& opt = {}) {
  space.validate();
  const int n = space.dim();
  if (n < 1) throw InvalidParameter("fit: empty parameter space");
  if (restarts < 1) throw InvalidParameter("fit: need at least one restart");
  if (budget < n + 2) throw InvalidParameter("fit: budget must be at least dimension + 2");
  Eigen::VectorXd theta0 = space.initial();
  double v0 = objective(theta0);
  if (!std::isfinite(v0)) throw InitializationError("fit: objective is not finite at the initial point");

  auto minimized = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd theta = space.to_external(x);
    if (!space.inside(theta)) return std::numeric_limits<double>::infinity();
    double v = objective(theta);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };

  int per = std::max(n + 2, (budget - 1) / restarts);
  std::vector<detail::NmRun> runs(restarts);
  Eigen::VectorXd x0 = space.to_internal(theta0);
  parallel_for(restarts, opt.jobs, [&](int r) {
    Eigen::VectorXd start = x0;
    if (r > 0) {
      CounterRng rng(seed, static_cast<std::uint64_t>(r));
      for (int i = 0; i < n; ++i) start[i] += opt.restart_jitter * rng.normal();
      Eigen::VectorXd th = space.to_external(start);
      for (int i = 0; i < n; ++i) th[i] = std::clamp(th[i], space.lower[i], space.upper[i]);
      start = space.to_internal(th);
      for (int i = 0; i < n; ++i)
        if (!std::isfinite(start[i])) start[i] = x0[i];
    }
    runs[r] = detail::nelder_mead(minimized, start, per, opt);
  });

  FitResult res;
  res.restarts = restarts;
  res.params = theta0;
  res.value = v0;
  res.evaluations = 1;
  res.trace.push_back(v0);
  for (const auto& run : runs) {
    for (double v : run.values) {
      ++res.evaluations;
      res.trace.push_back(std::max(res.trace.back(), v));
    }
    if (-run.best > res.value) {
      res.value = -run.best;
      res.params = space.to_external(run.best_x);
    }
    res.truncated = res.truncated || run.truncated;
  }
  return res;
}

inline nlohmann::json fit_report(const ParamSpace& space, const FitResult& r) {
  nlohmann::json params = nlohmann::json::object();
  for (int i = 0; i < space.dim(); ++i) params[space.names[i]] = r.params[i];
  return {{"params", params},
          {"loglik", r.value},
          {"evaluations", r.evaluations},
          {"restarts", r.restarts},
          {"truncated", r.truncated}};
}

}  // namespace plfm
