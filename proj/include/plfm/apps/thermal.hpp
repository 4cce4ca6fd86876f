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

// Home-thermal scenario: dT_int/dt = alpha (T_ext - T_int) + beta E(t) + R(t),
// or the envelope variant with an unobserved wall temperature T_env. Time is in
// minutes; E is a thermostat-controlled heater and R a residual heat force.

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "plfm/apps/csv.hpp"
#include "plfm/apps/metrics.hpp"
#include "plfm/apps/synthetic.hpp"
#include "plfm/baselines/resonator.hpp"
#include "plfm/eigenbasis.hpp"
#include "plfm/filter.hpp"
#include "plfm/learn.hpp"
#include "plfm/lfm.hpp"
#include "plfm/rng.hpp"

namespace plfm::apps {

// Daily schedule of (minute of day, setpoint) pairs, each holding until the next.
struct Setpoint {
  std::vector<double> start{0.0, 360.0, 540.0, 1020.0, 1380.0};
  std::vector<double> temp{16.0, 21.0, 16.0, 21.0, 16.0};
  double period = 1440.0;

  double operator()(double t) const {
    double m = t - period * std::floor(t / period);
    double v = temp.front();
    for (size_t i = 0; i < start.size(); ++i)
      if (m >= start[i]) v = temp[i];
    return v;
  }
  void validate() const {
    if (start.empty() || start.size() != temp.size()) throw ConfigError("setpoint: need matching start/temp lists");
    if (start.front() != 0.0) throw ConfigError("setpoint: schedule must start at minute 0");
    for (size_t i = 1; i < start.size(); ++i)
      if (!(start[i] > start[i - 1] && start[i] < period)) throw ConfigError("setpoint: starts must increase within a day");
  }
};

struct ThermalScenario {
  double period = 1440.0;
  double step = 10.0;  // control and filter step
  int train_days = 4;
  int test_days = 1;
  double alpha = 1.0 / 400.0;
  double beta = 0.06;
  double ext_mean = 6.0;
  double ext_sigma = 4.0;
  double ext_l = 720.0;
  KernelSpec residual_kernel = PeriodicMatern{1.5, 0.012, 0.3, 1440.0};
  double residual_sqm_l = 20.0;  // in cycles
  double int_noise_sd = 0.1;
  double ext_noise_sd = 0.3;
  double track_interval = 100.0;
  double t_int0 = 18.0;
  Setpoint setpoint;

  double train_end() const { return period * train_days; }
  double horizon() const { return period * (train_days + test_days); }
  void validate() const {
    setpoint.validate();
    if (!(alpha > 0 && beta > 0 && ext_sigma > 0 && ext_l > 0 && residual_sqm_l > 0 && int_noise_sd > 0 &&
          ext_noise_sd > 0 && step > 0 && period > 0))
      throw ConfigError("thermal scenario: rates, scales and noise levels must be positive");
    if (train_days < 1 || test_days < 1) throw ConfigError("thermal scenario: need at least one train and test day");
    if (std::abs(std::remainder(period, step)) > 1e-9 || std::abs(std::remainder(track_interval, step)) > 1e-9)
      throw ConfigError("thermal scenario: period and tracking interval must be multiples of the step");
    if (std::abs(step - std::round(step)) > 1e-12) throw ConfigError("thermal scenario: step must be whole minutes");
    plfm::validate(residual_kernel);
  }
};

// One-minute records, matching the time_min,t_int,t_ext,setpoint,heater layout.
struct ThermalRecords {
  std::vector<double> time, t_int, t_ext, setpoint, heater;
  size_t index(double t) const {
    long i = std::lround(t - time.front());
    if (i < 0 || static_cast<size_t>(i) >= time.size() || std::abs(time[static_cast<size_t>(i)] - t) > 1e-9)
      throw InvalidParameter("thermal records: no record at t = " + std::to_string(t));
    return static_cast<size_t>(i);
  }
};

struct ThermalData {
  ThermalRecords truth;
  ThermalRecords measured;  // noisy temperatures, same heater and setpoint
  std::vector<double> residual;
};

// Threshold controller evaluated every step on the true internal temperature;
// T_int is integrated with RK4 at one-minute steps, inputs linear in between.
inline ThermalData thermal_generate(const ThermalScenario& sc, std::uint64_t seed) {
  sc.validate();
  const int days = sc.train_days + sc.test_days;
  const size_t minutes = static_cast<size_t>(std::lround(sc.horizon())) + 1;
  CounterRng ext_rng(seed, 11), res_rng(seed, 12), noise_rng(seed, 13);
  Series ext = matern32_path(sc.ext_sigma, sc.ext_l, sc.ext_mean, 0.0, 1.0, minutes, ext_rng);

  const long per_cycle = std::lround(sc.period / sc.step);
  Eigen::VectorXd grid(per_cycle);
  for (long i = 0; i < per_cycle; ++i) grid[i] = sc.step * static_cast<double>(i);
  GridSampler sampler(sc.residual_kernel, grid);
  std::vector<Eigen::VectorXd> cycles = sqm_cycle_draws(sampler, days + 1, 1.0, sc.residual_sqm_l, res_rng);
  Series res{0.0, sc.step, {}};
  for (long i = 0; i <= per_cycle * days; ++i) res.v.push_back(cycles[i / per_cycle][i % per_cycle]);

  ThermalData d;
  ThermalRecords& tr = d.truth;
  double T = sc.t_int0;
  double heater = 0.0;
  const long per_step = std::lround(sc.step);
  for (size_t m = 0; m < minutes; ++m) {
    double t = static_cast<double>(m);
    if (m % static_cast<size_t>(per_step) == 0) heater = T < sc.setpoint(t) ? 1.0 : 0.0;
    tr.time.push_back(t);
    tr.t_int.push_back(T);
    tr.t_ext.push_back(ext.v[m]);
    tr.setpoint.push_back(sc.setpoint(t));
    tr.heater.push_back(heater);
    d.residual.push_back(res.at(t));
    if (m + 1 == minutes) break;
    auto f = [&](double tt, double x) { return sc.alpha * (ext.at(tt) - x) + sc.beta * heater + res.at(tt); };
    double k1 = f(t, T), k2 = f(t + 0.5, T + 0.5 * k1), k3 = f(t + 0.5, T + 0.5 * k2), k4 = f(t + 1.0, T + k3);
    T += (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
  }
  d.measured = tr;
  for (size_t m = 0; m < minutes; ++m) {
    d.measured.t_int[m] += sc.int_noise_sd * noise_rng.normal();
    d.measured.t_ext[m] += sc.ext_noise_sd * noise_rng.normal();
  }
  return d;
}

inline const std::vector<std::string>& thermal_header() {
  static const std::vector<std::string> h{"time_min", "t_int", "t_ext", "setpoint", "heater"};
  return h;
}

inline Table thermal_table(const ThermalRecords& r) {
  return {thermal_header(), {r.time, r.t_int, r.t_ext, r.setpoint, r.heater}};
}

// Recorded data must start at minute 0 with one row per minute.
inline ThermalRecords thermal_records(const Table& t) {
  ThermalRecords r{t.column("time_min"), t.column("t_int"), t.column("t_ext"), t.column("setpoint"),
                   t.column("heater")};
  for (size_t i = 0; i < r.time.size(); ++i)
    if (std::abs(r.time[i] - static_cast<double>(i)) > 1e-9)
      throw ConfigError("thermal: records must start at minute 0 with one row per minute");
  return r;
}

enum class ThermalMethod { With, Without, QuasiSqm, QuasiCqm, QuasiWqm, Hart, Resonator };

inline ThermalMethod thermal_method(const std::string& s) {
  if (s == "with") return ThermalMethod::With;
  if (s == "without") return ThermalMethod::Without;
  if (s == "quasi-sqm") return ThermalMethod::QuasiSqm;
  if (s == "quasi-cqm") return ThermalMethod::QuasiCqm;
  if (s == "quasi-wqm") return ThermalMethod::QuasiWqm;
  if (s == "hart") return ThermalMethod::Hart;
  if (s == "resonator") return ThermalMethod::Resonator;
  throw ConfigError("unknown thermal method '" + s +
                    "' (with, without, quasi-sqm, quasi-cqm, quasi-wqm, hart, resonator)");
}

inline std::string to_string(ThermalMethod m) {
  switch (m) {
    case ThermalMethod::With: return "with";
    case ThermalMethod::Without: return "without";
    case ThermalMethod::QuasiSqm: return "quasi-sqm";
    case ThermalMethod::QuasiCqm: return "quasi-cqm";
    case ThermalMethod::QuasiWqm: return "quasi-wqm";
    case ThermalMethod::Hart: return "hart";
    case ThermalMethod::Resonator: return "resonator";
  }
  return "";
}

struct ThermalParams {
  double alpha = 1.0 / 400.0;
  double beta = 0.04;
  double ext_mean = 6.0, ext_sigma = 4.0, ext_l = 720.0;
  double int_noise = 0.01, ext_noise = 0.09;  // variances
  double res_sigma = 0.01;
  double res_l = 0.3;         // phase units for periodic bases, minutes for hart
  double quasi = 3.0;         // SQM cycles, CQM minutes, WQM growth
  double res_q = 1e-8;        // resonator white-noise density
  double res_decay = 1e-4;    // resonator decay rate (B = -res_decay)
  std::vector<double> res_freq;  // resonator frequencies, cycles per minute
  double gamma = 0.05, psi = 0.005;  // envelope couplings
};

struct ThermalModelOptions {
  ThermalMethod method = ThermalMethod::QuasiSqm;
  int basis_points = 144;
  double gamma = 0.01;
  int max_functions = 30;
  int resonators = 4;
  bool envelope = false;
};

struct ThermalModel {
  AugmentedModel model;
  std::shared_ptr<const EigenBasis> basis;
  int ext_state = 0;  // index of T_ext in the state
  bool measure_int = true, measure_ext = true;
  int n_basis() const { return basis ? basis->size() : 0; }
};

// Residual block for the resonator method: J damped oscillators plus a bias.
inline LtiSde resonator_residual(const ThermalParams& p, Eigen::MatrixXd& init_cov) {
  const int J = static_cast<int>(p.res_freq.size());
  LtiSde s;
  s.F = Eigen::MatrixXd::Zero(2 * J + 1, 2 * J + 1);
  s.L = Eigen::MatrixXd::Zero(2 * J + 1, J);
  s.q = Eigen::MatrixXd::Zero(J, J);
  s.extract = Eigen::RowVectorXd::Zero(2 * J + 1);
  init_cov = Eigen::MatrixXd::Zero(2 * J + 1, 2 * J + 1);
  for (int j = 0; j < J; ++j) {
    double w = 2.0 * std::numbers::pi * p.res_freq[j];
    LtiSde b = resonator_block(-w * w, -p.res_decay, p.res_q);
    s.F.block(2 * j, 2 * j, 2, 2) = b.F;
    s.L.block(2 * j, j, 2, 1) = b.L;
    s.q(j, j) = b.q(0, 0);
    s.extract[2 * j] = 1.0;
    init_cov.block(2 * j, 2 * j, 2, 2) = stationary_covariance(b);
  }
  s.extract[2 * J] = 1.0;
  init_cov(2 * J, 2 * J) = p.res_sigma * p.res_sigma;
  return s;
}

// Measurements: rows for T_int and/or T_ext, in that order.
inline ThermalModel thermal_build(const ThermalModelOptions& opt, const ThermalScenario& sc, const ThermalParams& p,
                                  bool measure_int = true, bool measure_ext = true) {
  if (!(p.alpha > 0 && p.beta > 0 && p.ext_sigma > 0 && p.ext_l > 0))
    throw InvalidParameter("thermal_build: alpha, beta and the external scales must be positive");
  if (opt.envelope && !(p.gamma > 0 && p.psi > 0)) throw InvalidParameter("thermal_build: gamma and psi must be positive");
  const int E = opt.envelope ? 2 : 1;
  TargetSpec t;
  t.F = Eigen::MatrixXd::Zero(E, E);
  if (opt.envelope) {
    t.F << -p.alpha, p.alpha, p.gamma, -p.gamma - p.psi;
  } else {
    t.F(0, 0) = -p.alpha;
  }
  // Inputs u = (E(t), 1): heater on T_int, constant pulling T_ext to its mean.
  t.known_input = Eigen::MatrixXd::Zero(E, 2);
  t.known_input(0, 0) = p.beta;
  t.init_mean = Eigen::VectorXd::Constant(E, sc.t_int0);
  t.init_cov = Eigen::MatrixXd::Identity(E, E);

  ForceSpec ext = nonperiodic_force("t_ext", matern32_block(p.ext_sigma, p.ext_l), Eigen::VectorXd::Zero(E));
  ext.coupling[E - 1] = opt.envelope ? p.psi : p.alpha;
  double rho = std::sqrt(3.0) / p.ext_l;
  ext.known_input = Eigen::MatrixXd::Zero(2, 2);
  ext.known_input(1, 1) = rho * rho * p.ext_mean;

  std::vector<ForceSpec> forces{ext};
  Eigen::VectorXd on_int = Eigen::VectorXd::Zero(E);
  on_int[0] = 1.0;
  ThermalModel tm;
  auto periodic = [&](QuasiSpec qs, double basis_sigma) {
    tm.basis = std::make_shared<const EigenBasis>(EigenBasis::build(
        PeriodicMatern{1.5, basis_sigma, p.res_l, sc.period}, opt.basis_points, sc.period, opt.gamma, opt.max_functions));
    forces.push_back(periodic_force("residual", tm.basis, qs, on_int));
  };
  switch (opt.method) {
    case ThermalMethod::Without: break;
    case ThermalMethod::With: periodic({}, p.res_sigma); break;
    case ThermalMethod::QuasiSqm: periodic({Quasi::Sqm, p.res_sigma, p.quasi}, 1.0); break;
    case ThermalMethod::QuasiCqm: periodic({Quasi::Cqm, p.res_sigma, p.quasi}, 1.0); break;
    case ThermalMethod::QuasiWqm: {
      QuasiSpec qs;
      qs.type = Quasi::Wqm;
      qs.xi0 = 1.0;
      qs.xi = p.quasi;
      periodic(qs, p.res_sigma);
      break;
    }
    case ThermalMethod::Hart:
      forces.push_back(nonperiodic_force("residual", matern32_block(p.res_sigma, p.res_l), on_int));
      break;
    case ThermalMethod::Resonator: {
      if (p.res_freq.empty()) throw InvalidParameter("thermal_build: resonator method needs frequencies");
      Eigen::MatrixXd c0;
      ForceSpec f = nonperiodic_force("residual", resonator_residual(p, c0), on_int);
      f.init_cov = c0;
      forces.push_back(f);
      break;
    }
  }

  MeasurementSpec ms;
  int rows = (measure_int ? 1 : 0) + (measure_ext ? 1 : 0);
  if (rows == 0) throw InvalidParameter("thermal_build: need at least one measured channel");
  ms.H_target = Eigen::MatrixXd::Zero(rows, E);
  ms.Z = Eigen::MatrixXd::Zero(rows, rows);
  int r = 0;
  if (measure_int) {
    ms.H_target(r, 0) = 1.0;
    ms.Z(r, r) = p.int_noise;
    ++r;
  }
  if (measure_ext) {
    ms.force_rows.push_back({r, 0, 1.0});
    ms.Z(r, r) = p.ext_noise;
  }
  tm.model = AugmentedModel::assemble(t, std::move(forces), ms);
  tm.ext_state = tm.model.layout().force_spans[0].start;
  tm.measure_int = measure_int;
  tm.measure_ext = measure_ext;
  if (!tm.model.has_varying_weights()) tm.model.enable_step_cache(0.0, sc.step);
  return tm;
}

inline GaussianState thermal_initial_state(const ThermalModel& tm, const ThermalParams& p) {
  GaussianState s = tm.model.initial_state(0.0);
  s.mean[tm.ext_state] = p.ext_mean;
  return s;
}

inline Eigen::VectorXd thermal_inputs(double heater) { return Eigen::Vector2d(heater, 1.0); }

struct ThermalRun {
  std::vector<double> t, mean, var;  // T_int after each step from record_from on
  double loglik = 0.0;
  int updates = 0;
  GaussianState state;
};

// Kalman run over (t_start, t_end] with the recorded heater as known input.
// Measurements are taken every `interval` minutes (0 disables them).
inline ThermalRun thermal_filter(const ThermalModel& tm, const ThermalScenario& sc, const ThermalRecords& rec,
                                 GaussianState s, double t_end, double interval, double record_from) {
  ThermalRun run;
  const double t_start = s.t;
  const long steps = std::lround((t_end - t_start) / sc.step);
  const long every = interval > 0 ? std::lround(interval / sc.step) : 0;
  const Eigen::MatrixXd& H = tm.model.H();
  for (long k = 0; k < steps; ++k) {
    double t0 = t_start + sc.step * static_cast<double>(k), t1 = t0 + sc.step;
    s = propagate(tm.model, std::move(s), t1, thermal_inputs(rec.heater[rec.index(t0)]));
    long n = std::lround(t1 / sc.step);
    if (every > 0 && n % every == 0) {
      size_t i = rec.index(t1);
      Eigen::VectorXd y(H.rows());
      int r = 0;
      if (tm.measure_int) y[r++] = rec.t_int[i];
      if (tm.measure_ext) y[r] = rec.t_ext[i];
      UpdateResult u = update(s, H, tm.model.Z(), y);
      s = std::move(u.state);
      run.loglik += u.log_likelihood;
      ++run.updates;
    }
    if (t1 > record_from + 1e-9) {
      run.t.push_back(t1);
      run.mean.push_back(s.mean[0]);
      run.var.push_back(s.cov(0, 0));
    }
  }
  run.state = std::move(s);
  return run;
}

struct ThermalFit {
  ThermalModelOptions options;
  ThermalParams params;
  FitResult ext_fit, fit;
  ParamSpace ext_space, space;
  int n_basis = 0;
};

// Two stages: the external-temperature block on its own measurements, then the
// room and residual parameters on both channels with the external block fixed.
inline ThermalFit thermal_fit(const ThermalModelOptions& opt, const ThermalScenario& sc, const ThermalData& data,
                              int budget, int restarts, std::uint64_t seed, int jobs = 1) {
  ThermalFit out;
  out.options = opt;
  ThermalParams base;
  FitOptions fo;
  fo.jobs = jobs;
  const ThermalRecords& rec = data.measured;
  double ext_avg = 0.0;
  long n_train = 0;
  for (size_t i = 0; i < rec.time.size() && rec.time[i] <= sc.train_end(); ++i, ++n_train) ext_avg += rec.t_ext[i];
  ext_avg /= static_cast<double>(std::max(n_train, 1L));

  ThermalModelOptions ext_opt = opt;
  ext_opt.method = ThermalMethod::Without;
  out.ext_space.add("ext_mean", ext_avg, -60.0, 60.0, Transform::Identity)
      .add("ext_sigma", 3.0, 0.05, 50.0)
      .add("ext_l", 600.0, 10.0, 1e5)
      .add("ext_noise", 0.1, 1e-6, 25.0);
  Objective ext_obj = [&](const Eigen::VectorXd& th) {
    try {
      ThermalParams p = base;
      p.ext_mean = th[0];
      p.ext_sigma = th[1];
      p.ext_l = th[2];
      p.ext_noise = th[3];
      ThermalModel tm = thermal_build(ext_opt, sc, p, false, true);
      return thermal_filter(tm, sc, rec, thermal_initial_state(tm, p), sc.train_end(), sc.step, sc.train_end()).loglik;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  out.ext_fit = fit(ext_obj, out.ext_space, std::max(budget / 3, 6), restarts, seed, fo);
  base.ext_mean = out.ext_fit.params[0];
  base.ext_sigma = out.ext_fit.params[1];
  base.ext_l = out.ext_fit.params[2];
  base.ext_noise = out.ext_fit.params[3];

  ParamSpace& s = out.space;
  s.add("alpha", 1.0 / 300.0, 1e-5, 0.5).add("beta", 0.03, 1e-4, 5.0).add("int_noise", 0.02, 1e-6, 25.0);
  const ThermalMethod m = opt.method;
  const bool has_periodic = m == ThermalMethod::With || m == ThermalMethod::QuasiSqm || m == ThermalMethod::QuasiCqm ||
                            m == ThermalMethod::QuasiWqm;
  if (opt.envelope) s.add("gamma", 0.02, 1e-6, 10.0).add("psi", 0.002, 1e-6, 10.0);
  if (m != ThermalMethod::Without) s.add("res_sigma", 0.01, 1e-5, 1.0);
  if (has_periodic) s.add("res_l", 0.5, 0.05, 5.0);
  if (m == ThermalMethod::Hart) s.add("res_l", 240.0, 5.0, 1e5);
  if (m == ThermalMethod::QuasiSqm) s.add("quasi", 2.0, 0.1, 100.0);
  if (m == ThermalMethod::QuasiCqm) s.add("quasi", 2880.0, 100.0, 1e6);
  if (m == ThermalMethod::QuasiWqm) s.add("quasi", 0.2, 1e-4, 10.0);
  if (m == ThermalMethod::Resonator) {
    // Frequencies start at contiguous multiples of 1 / D.
    const int J = std::max(opt.resonators, 1);
    const double fmax = 2.0 * J / sc.period;
    for (int j = 0; j < J; ++j)
      s.add("f" + std::to_string(j + 1), (j + 1) / sc.period, 0.0, fmax, Transform::Logit);
    s.add("res_decay", 1e-3, 1e-8, 1.0).add("res_q", 1e-9, 1e-16, 1e-2);
  }
  auto unpack = [&](const Eigen::VectorXd& th) {
    ThermalParams p = base;
    for (int i = 0; i < s.dim(); ++i) {
      const std::string& n = s.names[i];
      if (n == "alpha") p.alpha = th[i];
      else if (n == "beta") p.beta = th[i];
      else if (n == "int_noise") p.int_noise = th[i];
      else if (n == "res_sigma") p.res_sigma = th[i];
      else if (n == "res_l") p.res_l = th[i];
      else if (n == "quasi") p.quasi = th[i];
      else if (n == "res_decay") p.res_decay = th[i];
      else if (n == "res_q") p.res_q = th[i];
      else if (n == "gamma") p.gamma = th[i];
      else if (n == "psi") p.psi = th[i];
      else if (n[0] == 'f') p.res_freq.push_back(th[i]);
    }
    return p;
  };
  Objective obj = [&](const Eigen::VectorXd& th) {
    try {
      ThermalParams p = unpack(th);
      ThermalModel tm = thermal_build(opt, sc, p);
      return thermal_filter(tm, sc, rec, thermal_initial_state(tm, p), sc.train_end(), sc.step, sc.train_end()).loglik;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  out.fit = fit(obj, s, budget, restarts, seed, fo);
  out.params = unpack(out.fit.params);
  out.n_basis = thermal_build(opt, sc, out.params).n_basis();
  return out;
}

inline nlohmann::json to_json(const ThermalParams& p) {
  nlohmann::json j = {{"alpha", p.alpha},         {"beta", p.beta},         {"ext_mean", p.ext_mean},
                      {"ext_sigma", p.ext_sigma}, {"ext_l", p.ext_l},       {"int_noise", p.int_noise},
                      {"ext_noise", p.ext_noise}, {"res_sigma", p.res_sigma}, {"res_l", p.res_l},
                      {"quasi", p.quasi},         {"res_q", p.res_q},       {"res_decay", p.res_decay},
                      {"res_freq", p.res_freq},   {"gamma", p.gamma},       {"psi", p.psi}};
  return j;
}

struct ThermalForecast {
  std::vector<double> t, mean, var, truth, heater_fraction;
  Metrics metrics;
};

// State filtered through the training days, the starting point for day-ahead work.
inline GaussianState thermal_train_state(const ThermalModel& tm, const ThermalScenario& sc, const ThermalParams& p,
                                         const ThermalData& data) {
  return thermal_filter(tm, sc, data.measured, thermal_initial_state(tm, p), sc.train_end(), sc.step, sc.train_end())
      .state;
}

inline ThermalForecast thermal_predict_day(const ThermalModel& tm, const ThermalScenario& sc, const ThermalParams& p,
                                           const ThermalData& data, int particles, std::uint64_t seed,
                                           const std::string& method, const std::string& dataset) {
  GaussianState s0 = thermal_train_state(tm, sc, p, data);
  RbpfOptions o;
  o.particles = particles;
  o.step = sc.step;
  o.horizon = sc.period;
  o.seed = seed;
  o.setpoint = sc.setpoint;
  o.inputs = [](double, int h) { return thermal_inputs(h); };
  std::vector<RbpfStep> steps = rbpf_predict_day(tm.model, s0, o);
  ThermalForecast f;
  for (const RbpfStep& st : steps) {
    f.t.push_back(st.t);
    f.mean.push_back(st.mean);
    f.var.push_back(st.var);
    f.heater_fraction.push_back(st.heater_fraction);
    f.truth.push_back(data.truth.t_int[data.truth.index(st.t)]);
  }
  f.metrics = {method, dataset, sc.train_days + 1, rmse(f.mean, f.truth), ell(f.mean, f.var, f.truth), tm.n_basis(), {}};
  return f;
}

// Plain Kalman tracking over the test day with the heater known and both
// channels measured every track_interval minutes.
inline ThermalForecast thermal_track_day(const ThermalModel& tm, const ThermalScenario& sc, const ThermalParams& p,
                                         const ThermalData& data, const std::string& method,
                                         const std::string& dataset) {
  GaussianState s0 = thermal_train_state(tm, sc, p, data);
  ThermalRun run = thermal_filter(tm, sc, data.measured, s0, sc.train_end() + sc.period, sc.track_interval,
                                  sc.train_end());
  ThermalForecast f;
  f.t = run.t;
  f.mean = run.mean;
  f.var = run.var;
  for (double t : f.t) {
    f.truth.push_back(data.truth.t_int[data.truth.index(t)]);
    f.heater_fraction.push_back(data.truth.heater[data.truth.index(t - sc.step)]);
  }
  f.metrics = {method, dataset, sc.train_days + 1, rmse(f.mean, f.truth), ell(f.mean, f.var, f.truth), tm.n_basis(), {}};
  return f;
}

}  // namespace plfm::apps
