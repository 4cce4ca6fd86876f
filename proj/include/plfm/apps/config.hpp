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

// JSON run configurations. Every object is checked for unknown keys, and
// absent keys keep their defaults.

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plfm/apps/compare.hpp"
#include "plfm/apps/queue.hpp"
#include "plfm/apps/thermal.hpp"
#include "plfm/errors.hpp"
#include "plfm/kernels_json.hpp"

namespace plfm::apps {

class ConfigReader {
 public:
  ConfigReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) { return j_.at(key); }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
    out = j_.at(key).get<double>();
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
    out = j_.at(key).get<int>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) throw ConfigError(where_ + "." + key + ": expected true or false");
    out = j_.at(key).get<bool>();
  }

  void text(const std::string& key, std::string& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
    out = j_.at(key).get<std::string>();
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where_ + "." + key + ": expected an array of numbers");
    out.clear();
    for (const json& x : v) {
      if (!x.is_number()) throw ConfigError(where_ + "." + key + ": expected an array of numbers");
      out.push_back(x.get<double>());
    }
  }

  void kernel(const std::string& key, KernelSpec& out) {
    if (has(key)) out = kernel_from_json(j_.at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

struct EigenbasisConfig {
  KernelSpec kernel = PeriodicMatern{1.5, 1.0, 0.5, 10.0};
  int basis_points = 200;
  double period = 10.0;
  double gamma = 0.01;
  int max_functions = 0;
  int grid_points = 200;
};

inline EigenbasisConfig eigenbasis_config(const json& j) {
  EigenbasisConfig c;
  ConfigReader r(j, "eigenbasis");
  r.kernel("kernel", c.kernel);
  r.integer("basis_points", c.basis_points);
  if (kernel_period(c.kernel) > 0) c.period = kernel_period(c.kernel);
  r.number("period", c.period);
  r.number("gamma", c.gamma);
  r.integer("max_functions", c.max_functions);
  r.integer("grid_points", c.grid_points);
  r.finish();
  if (c.grid_points < 2) throw ConfigError("eigenbasis.grid_points: need at least 2");
  if (c.max_functions < 0) throw ConfigError("eigenbasis.max_functions: must be non-negative");
  return c;
}

inline CompareProtocol compare_config(const json& j) {
  CompareProtocol p;
  ConfigReader r(j, "compare-bases");
  r.kernel("kernel", p.kernel);
  r.number("window", p.window);
  r.integer("grid_points", p.grid_points);
  r.integer("basis_points", p.basis_points);
  r.integer("max_functions", p.max_functions);
  r.number("gamma", p.gamma);
  r.integer("spectral_points", p.spectral_points);
  r.number("measure_every", p.measure_every);
  r.number("noise_var", p.noise_var);
  r.integer("draws", p.draws);
  r.finish();
  p.validate();
  return p;
}

struct FitConfig {
  int budget = 150;
  int restarts = 1;
};

inline FitConfig fit_config(const json& j, const std::string& where) {
  FitConfig f;
  ConfigReader r(j, where);
  r.integer("budget", f.budget);
  r.integer("restarts", f.restarts);
  r.finish();
  if (f.budget < 1 || f.restarts < 1) throw ConfigError(where + ": budget and restarts must be positive");
  return f;
}

struct QueueConfig {
  QueueScenario scenario;
  QueueModelOptions model;
  FitConfig fit;
  std::optional<json> params;  // fixed parameters, skipping the fit
  std::string arrivals_csv;    // measured arrival rates replacing the synthetic draw
  std::string dataset = "synthetic";
};

inline QueueScenario queue_scenario(const json& j) {
  QueueScenario sc;
  ConfigReader r(j, "queue.scenario");
  r.number("period", sc.period);
  r.number("step", sc.step);
  r.integer("train_days", sc.train_days);
  r.integer("test_days", sc.test_days);
  r.number("mean_rate", sc.mean_rate);
  r.kernel("arrival_kernel", sc.arrival_kernel);
  r.number("sqm_l", sc.sqm_l);
  r.number("noise_sd", sc.noise_sd);
  r.number("train_interval", sc.train_interval);
  r.number("test_interval", sc.test_interval);
  r.number("sim_step", sc.sim_step);
  if (r.has("service")) {
    ConfigReader s(r.at("service"), "queue.scenario.service");
    s.numbers("start", sc.service.start);
    s.numbers("rate", sc.service.rate);
    s.finish();
  }
  r.finish();
  sc.validate();
  return sc;
}

inline QueueConfig queue_config(const json& j) {
  QueueConfig c;
  ConfigReader r(j, "queue");
  if (r.has("scenario")) c.scenario = queue_scenario(r.at("scenario"));
  std::string method = to_string(c.model.method);
  r.text("method", method);
  c.model.method = queue_method(method);
  if (r.has("model")) {
    ConfigReader m(r.at("model"), "queue.model");
    m.integer("basis_points", c.model.basis_points);
    m.number("gamma", c.model.gamma);
    m.integer("max_functions", c.model.max_functions);
    m.number("init_var", c.model.init_var);
    m.finish();
  }
  if (r.has("fit")) c.fit = fit_config(r.at("fit"), "queue.fit");
  if (r.has("params")) c.params = r.at("params");
  r.text("arrivals_csv", c.arrivals_csv);
  r.text("dataset", c.dataset);
  r.finish();
  return c;
}

// Parameter vector in the method's search space; missing names keep their
// starting values.
inline Eigen::VectorXd queue_params(const json& j, const ParamSpace& space) {
  ConfigReader r(j, "queue.params");
  Eigen::VectorXd th = Eigen::Map<const Eigen::VectorXd>(space.init.data(), space.dim());
  for (int i = 0; i < space.dim(); ++i) r.number(space.names[i], th[i]);
  r.finish();
  return th;
}

struct ThermalConfig {
  ThermalScenario scenario;
  ThermalModelOptions model;
  FitConfig fit;
  std::optional<ThermalParams> params;
  int particles = 64;
  std::string data_csv;  // recorded data replacing the synthetic scenario
  std::string dataset = "synthetic";
};

inline ThermalScenario thermal_scenario(const json& j) {
  ThermalScenario sc;
  ConfigReader r(j, "thermal.scenario");
  r.number("period", sc.period);
  r.number("step", sc.step);
  r.integer("train_days", sc.train_days);
  r.integer("test_days", sc.test_days);
  r.number("alpha", sc.alpha);
  r.number("beta", sc.beta);
  r.number("ext_mean", sc.ext_mean);
  r.number("ext_sigma", sc.ext_sigma);
  r.number("ext_l", sc.ext_l);
  r.kernel("residual_kernel", sc.residual_kernel);
  r.number("residual_sqm_l", sc.residual_sqm_l);
  r.number("int_noise_sd", sc.int_noise_sd);
  r.number("ext_noise_sd", sc.ext_noise_sd);
  r.number("track_interval", sc.track_interval);
  r.number("t_int0", sc.t_int0);
  if (r.has("setpoint")) {
    ConfigReader s(r.at("setpoint"), "thermal.scenario.setpoint");
    s.numbers("start", sc.setpoint.start);
    s.numbers("temp", sc.setpoint.temp);
    s.finish();
    sc.setpoint.period = sc.period;
  }
  r.finish();
  sc.validate();
  return sc;
}

inline ThermalParams thermal_params(const json& j) {
  ThermalParams p;
  ConfigReader r(j, "thermal.params");
  r.number("alpha", p.alpha);
  r.number("beta", p.beta);
  r.number("ext_mean", p.ext_mean);
  r.number("ext_sigma", p.ext_sigma);
  r.number("ext_l", p.ext_l);
  r.number("int_noise", p.int_noise);
  r.number("ext_noise", p.ext_noise);
  r.number("res_sigma", p.res_sigma);
  r.number("res_l", p.res_l);
  r.number("quasi", p.quasi);
  r.number("res_q", p.res_q);
  r.number("res_decay", p.res_decay);
  r.numbers("res_freq", p.res_freq);
  r.number("gamma", p.gamma);
  r.number("psi", p.psi);
  r.finish();
  return p;
}

inline ThermalConfig thermal_config(const json& j) {
  ThermalConfig c;
  ConfigReader r(j, "thermal");
  if (r.has("scenario")) c.scenario = thermal_scenario(r.at("scenario"));
  std::string method = to_string(c.model.method);
  r.text("method", method);
  c.model.method = thermal_method(method);
  if (r.has("model")) {
    ConfigReader m(r.at("model"), "thermal.model");
    m.integer("basis_points", c.model.basis_points);
    m.number("gamma", c.model.gamma);
    m.integer("max_functions", c.model.max_functions);
    m.integer("resonators", c.model.resonators);
    m.boolean("envelope", c.model.envelope);
    m.finish();
  }
  if (r.has("fit")) c.fit = fit_config(r.at("fit"), "thermal.fit");
  if (r.has("params")) c.params = thermal_params(r.at("params"));
  r.integer("particles", c.particles);
  r.text("data_csv", c.data_csv);
  r.text("dataset", c.dataset);
  r.finish();
  if (c.particles < 1) throw ConfigError("thermal.particles: need at least one particle");
  return c;
}

}  // namespace plfm::apps
