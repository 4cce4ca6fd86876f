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

// Queue-length tracking with the pointwise stationary fluid-flow approximation
// dL/dt = -Omega L / (1 + L) + zeta(t), where zeta is a latent arrival rate.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "plfm/apps/csv.hpp"
#include "plfm/apps/metrics.hpp"
#include "plfm/apps/synthetic.hpp"
#include "plfm/eigenbasis.hpp"
#include "plfm/filter.hpp"
#include "plfm/learn.hpp"
#include "plfm/lfm.hpp"

namespace plfm::apps {

inline double queue_linearize(double omega, double lbar) {
  if (lbar < 0) throw ContractViolation("queue_linearize: mean queue length must be non-negative");
  return -omega / (1.0 + lbar);
}

// Piecewise-constant service rate; rate[i] applies from start[i] on.
struct ServiceRate {
  std::vector<double> start{0.0};
  std::vector<double> rate{10.0};

  double operator()(double t) const {
    double r = rate.front();
    for (size_t i = 0; i < start.size(); ++i)
      if (t >= start[i]) r = rate[i];
    return r;
  }
  void validate() const {
    if (start.empty() || start.size() != rate.size()) throw ConfigError("service: need matching start/rate lists");
    for (size_t i = 0; i < rate.size(); ++i) {
      if (!(rate[i] > 0)) throw ConfigError("service: rates must be positive");
      if (i > 0 && !(start[i] > start[i - 1])) throw ConfigError("service: start times must increase");
    }
  }
};

// Fixed-step RK4 of the nonlinear ODE, L clamped at zero after every step. The
// service rate is frozen at each step midpoint. Output is on zeta's grid; the
// step must divide the grid spacing.
inline std::vector<double> queue_simulate(const Series& zeta, const std::function<double(double)>& omega, double l0,
                                          double step) {
  if (!(step > 0)) throw InvalidParameter("queue_simulate: step must be positive");
  long sub = std::lround(zeta.dt / step);
  if (sub < 1 || std::abs(sub * step - zeta.dt) > 1e-9 * zeta.dt)
    throw InvalidParameter("queue_simulate: step must divide the arrival grid spacing");
  for (double v : zeta.v)
    if (!std::isfinite(v)) throw InvalidParameter("queue_simulate: non-finite arrival rate");
  std::vector<double> out{std::max(l0, 0.0)};
  double L = out.front();
  for (size_t i = 1; i < zeta.v.size(); ++i) {
    for (long s = 0; s < sub; ++s) {
      double t = zeta.time(i - 1) + static_cast<double>(s) * step;
      double w = omega(t + 0.5 * step);
      auto f = [&](double tt, double x) { return -w * x / (1.0 + x) + zeta.at(tt); };
      double k1 = f(t, L);
      double k2 = f(t + 0.5 * step, L + 0.5 * step * k1);
      double k3 = f(t + 0.5 * step, L + 0.5 * step * k2);
      double k4 = f(t + step, L + step * k3);
      L = std::max(0.0, L + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
    }
    out.push_back(L);
  }
  return out;
}

struct QueueScenario {
  double period = 1440.0;  // minutes
  double step = 2.0;
  int train_days = 3;
  int test_days = 1;
  double mean_rate = 3.5;
  KernelSpec arrival_kernel = PeriodicMatern{1.5, 1.5, 0.25, 1440.0};
  double sqm_l = 20.0;  // in cycles
  double noise_sd = 0.25;
  double train_interval = 40.0;
  double test_interval = 180.0;
  double sim_step = 0.025;
  ServiceRate service;

  double train_end() const { return period * train_days; }
  double horizon() const { return period * (train_days + test_days); }
  void validate() const {
    service.validate();
    if (!(period > 0 && step > 0 && sim_step > 0 && noise_sd > 0 && sqm_l > 0))
      throw ConfigError("queue scenario: period, step, sim_step, noise_sd and sqm_l must be positive");
    if (train_days < 1 || test_days < 1) throw ConfigError("queue scenario: need at least one train and test day");
    if (std::abs(std::remainder(period, step)) > 1e-9 || std::abs(std::remainder(train_interval, step)) > 1e-9 ||
        std::abs(std::remainder(test_interval, step)) > 1e-9)
      throw ConfigError("queue scenario: period and intervals must be multiples of the step");
    plfm::validate(arrival_kernel);
  }
};

struct QueueData {
  Series arrivals;                  // arrival rate on the step grid
  std::vector<double> truth;        // queue length on the same grid
  std::vector<double> meas_t, meas_y;
};

// Train measurements every train_interval up to the end of training, then
// test measurements every test_interval.
inline std::vector<double> queue_measurement_times(const QueueScenario& sc) {
  std::vector<double> t;
  for (double x = sc.train_interval; x <= sc.train_end() + 1e-9; x += sc.train_interval) t.push_back(x);
  for (double x = sc.train_end() + sc.test_interval; x <= sc.horizon() + 1e-9; x += sc.test_interval) t.push_back(x);
  return t;
}

// Simulates the queue for a given arrival-rate trace, resampled onto the step
// grid, and draws noisy measurements on the scenario schedule.
inline QueueData queue_from_arrivals(const QueueScenario& sc, const Series& arrivals, std::uint64_t seed) {
  sc.validate();
  if (arrivals.v.size() < 2 || arrivals.t0 > 1e-9 || arrivals.time(arrivals.v.size() - 1) < sc.horizon() - 1e-9)
    throw ConfigError("queue: arrival trace must cover [0, " + std::to_string(sc.horizon()) + "] minutes");
  QueueData d;
  d.arrivals = {0.0, sc.step, {}};
  const long n = std::lround(sc.horizon() / sc.step) + 1;
  for (long i = 0; i < n; ++i) d.arrivals.v.push_back(arrivals.at(sc.step * static_cast<double>(i)));
  d.truth = queue_simulate(d.arrivals, sc.service, 0.0, sc.sim_step);

  CounterRng noise(seed, 2);
  for (double t : queue_measurement_times(sc)) {
    size_t i = static_cast<size_t>(std::lround(t / sc.step));
    d.meas_t.push_back(t);
    d.meas_y.push_back(d.truth[i] + sc.noise_sd * noise.normal());
  }
  return d;
}

// Uniformly spaced time_min,arrival_rate table as a series.
inline Series arrival_series(const Table& t) {
  const std::vector<double>& tm = t.column("time_min");
  const std::vector<double>& v = t.column("arrival_rate");
  if (tm.size() < 2) throw ConfigError("queue: arrival table needs at least two rows");
  double dt = tm[1] - tm[0];
  if (!(dt > 0)) throw ConfigError("queue: arrival times must increase");
  for (size_t i = 1; i < tm.size(); ++i)
    if (std::abs(tm[i] - tm[0] - dt * static_cast<double>(i)) > 1e-6 * dt)
      throw ConfigError("queue: arrival times must be uniformly spaced");
  return {tm[0], dt, v};
}

inline QueueData queue_generate(const QueueScenario& sc, std::uint64_t seed) {
  sc.validate();
  const long per_cycle = std::lround(sc.period / sc.step);
  const int days = sc.train_days + sc.test_days;
  Eigen::VectorXd day_grid(per_cycle);
  for (long i = 0; i < per_cycle; ++i) day_grid[i] = sc.step * static_cast<double>(i);
  GridSampler sampler(sc.arrival_kernel, day_grid);
  CounterRng rng(seed, 1);
  std::vector<Eigen::VectorXd> cycles = sqm_cycle_draws(sampler, days + 1, 1.0, sc.sqm_l, rng);

  Series arrivals{0.0, sc.step, {}};
  const long n = per_cycle * days + 1;
  for (long i = 0; i < n; ++i) arrivals.v.push_back(sc.mean_rate + cycles[i / per_cycle][i % per_cycle]);
  return queue_from_arrivals(sc, arrivals, seed);
}

enum class QueueMethod { Matern, Periodic, QuasiCqm, QuasiSqm, QuasiWqm };

inline QueueMethod queue_method(const std::string& s) {
  if (s == "matern") return QueueMethod::Matern;
  if (s == "periodic") return QueueMethod::Periodic;
  if (s == "quasi-cqm") return QueueMethod::QuasiCqm;
  if (s == "quasi-sqm") return QueueMethod::QuasiSqm;
  if (s == "quasi-wqm") return QueueMethod::QuasiWqm;
  throw ConfigError("unknown queue method '" + s + "' (matern, periodic, quasi-cqm, quasi-sqm, quasi-wqm)");
}

inline std::string to_string(QueueMethod m) {
  switch (m) {
    case QueueMethod::Matern: return "matern";
    case QueueMethod::Periodic: return "periodic";
    case QueueMethod::QuasiCqm: return "quasi-cqm";
    case QueueMethod::QuasiSqm: return "quasi-sqm";
    case QueueMethod::QuasiWqm: return "quasi-wqm";
  }
  return "";
}

struct QueueModelOptions {
  QueueMethod method = QueueMethod::QuasiSqm;
  int basis_points = 144;
  double gamma = 0.01;
  int max_functions = 30;  // roster cap on top of the gamma rule
  double init_var = 1.0;   // prior variance of L(0)
};

// Named parameters: mean_rate, sigma, l (minutes for matern, phase units for
// the periodic bases), quasi (SQM cycles, CQM minutes, WQM growth) and noise_var.
struct QueueModel {
  AugmentedModel model;
  std::shared_ptr<const EigenBasis> basis;
  double mean_rate = 0.0;
  int n_basis() const { return basis ? basis->size() : 0; }
};

inline QueueModel queue_build(const QueueModelOptions& opt, const QueueScenario& sc, double mean_rate, double sigma,
                              double l, double quasi, double noise_var) {
  TargetSpec t;
  t.F = Eigen::MatrixXd::Zero(1, 1);  // replaced by the relinearized drift every step
  t.known_input = Eigen::MatrixXd::Ones(1, 1);
  t.init_cov = Eigen::MatrixXd::Constant(1, 1, opt.init_var);
  MeasurementSpec ms;
  ms.H_target = Eigen::MatrixXd::Ones(1, 1);
  ms.Z = Eigen::MatrixXd::Constant(1, 1, noise_var);
  QueueModel q;
  q.mean_rate = mean_rate;
  std::vector<ForceSpec> forces;
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  if (opt.method == QueueMethod::Matern) {
    forces.push_back(nonperiodic_force("arrivals", matern32_block(sigma, l), one));
  } else {
    QuasiSpec qs;
    double basis_sigma = 1.0;
    switch (opt.method) {
      case QueueMethod::Periodic: basis_sigma = sigma; break;
      case QueueMethod::QuasiCqm: qs = {Quasi::Cqm, sigma, quasi}; break;
      case QueueMethod::QuasiSqm: qs = {Quasi::Sqm, sigma, quasi}; break;
      case QueueMethod::QuasiWqm:
        basis_sigma = sigma;
        qs.type = Quasi::Wqm;
        qs.xi0 = 1.0;
        qs.xi = quasi;
        break;
      default: break;
    }
    q.basis = std::make_shared<const EigenBasis>(
        EigenBasis::build(PeriodicMatern{1.5, basis_sigma, l, sc.period}, opt.basis_points, sc.period, opt.gamma,
                          opt.max_functions));
    forces.push_back(periodic_force("arrivals", q.basis, qs, one));
  }
  q.model = AugmentedModel::assemble(t, std::move(forces), ms);
  if (q.basis && !q.model.has_varying_weights()) q.model.enable_step_cache(0.0, sc.step);
  return q;
}

struct QueueRun {
  std::vector<double> t, mean, var;  // filtered L after each step from record_from on
  std::vector<double> zeta;           // filtered arrival rate at the same times
  double loglik = 0.0;
  int updates = 0;
};

// Kalman run over [0, t_end] with the drift relinearized at the filtered mean
// before every step. Measurements must sit on the step grid.
inline QueueRun queue_filter(const QueueModel& qm, const QueueScenario& sc, const std::function<double(double)>& omega,
                             const std::vector<double>& meas_t, const std::vector<double>& meas_y, double t_end,
                             double record_from) {
  if (meas_t.size() != meas_y.size()) throw InvalidParameter("queue_filter: measurement lists differ in length");
  for (double t : meas_t)
    if (!(t > 1e-9 && t <= t_end + 1e-9)) throw InvalidParameter("queue_filter: measurement outside horizon");
  QueueRun run;
  GaussianState s = qm.model.initial_state(0.0);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, qm.mean_rate);
  const long steps = std::lround(t_end / sc.step);
  size_t next = 0;
  Eigen::MatrixXd drift(1, 1);
  for (long k = 0; k < steps; ++k) {
    double t0 = sc.step * static_cast<double>(k), t1 = sc.step * static_cast<double>(k + 1);
    drift(0, 0) = queue_linearize(omega(t0 + 0.5 * sc.step), std::max(s.mean[0], 0.0));
    s = propagate(qm.model, std::move(s), t1, u, &drift);
    while (next < meas_t.size() && meas_t[next] < t1 - 1e-9) {
      if (meas_t[next] > t0 + 1e-9) throw InvalidParameter("queue_filter: measurement off the step grid");
      ++next;
    }
    if (next < meas_t.size() && std::abs(meas_t[next] - t1) <= 1e-9) {
      UpdateResult r = update(s, qm.model.H(), qm.model.Z(), Eigen::VectorXd::Constant(1, meas_y[next]));
      s = std::move(r.state);
      run.loglik += r.log_likelihood;
      ++run.updates;
      ++next;
    }
    if (t1 > record_from + 1e-9) {
      run.t.push_back(t1);
      run.mean.push_back(s.mean[0]);
      run.var.push_back(s.cov(0, 0));
      run.zeta.push_back(qm.mean_rate + qm.model.force_value(s.mean, t1).sum());
    }
  }
  return run;
}

struct QueueFit {
  QueueModelOptions options;
  ParamSpace space;
  FitResult fit;
  int n_basis = 0;
};

inline ParamSpace queue_param_space(QueueMethod m, double rate0) {
  ParamSpace s;
  s.add("mean_rate", rate0, -50.0, 50.0, Transform::Identity);
  s.add("sigma", 2.0, 1e-2, 50.0);
  if (m == QueueMethod::Matern)
    s.add("l", 120.0, 2.0, 1e4);
  else
    s.add("l", 0.5, 0.05, 5.0);
  switch (m) {
    case QueueMethod::QuasiSqm: s.add("quasi", 2.0, 0.1, 100.0); break;
    case QueueMethod::QuasiCqm: s.add("quasi", 2880.0, 100.0, 1e6); break;
    case QueueMethod::QuasiWqm: s.add("quasi", 0.2, 1e-4, 10.0); break;
    default: break;
  }
  s.add("noise_var", 0.5, 1e-4, 25.0);
  return s;
}

inline QueueModel queue_build(const QueueModelOptions& opt, const QueueScenario& sc, const ParamSpace& space,
                              const Eigen::VectorXd& th) {
  auto get = [&](const char* n, double dflt) {
    for (int i = 0; i < space.dim(); ++i)
      if (space.names[i] == n) return th[i];
    return dflt;
  };
  return queue_build(opt, sc, get("mean_rate", 0.0), get("sigma", 1.0), get("l", 1.0), get("quasi", 1.0),
                     get("noise_var", 1.0));
}

// Maximum-likelihood fit on the training measurements (t <= end of training).
inline QueueFit queue_fit(const QueueModelOptions& opt, const QueueScenario& sc, const QueueData& data, int budget,
                          int restarts, std::uint64_t seed, int jobs = 1) {
  std::vector<double> tt, yy;
  for (size_t i = 0; i < data.meas_t.size(); ++i)
    if (data.meas_t[i] <= sc.train_end() + 1e-9) {
      tt.push_back(data.meas_t[i]);
      yy.push_back(data.meas_y[i]);
    }
  if (tt.empty()) throw InvalidParameter("queue_fit: no training measurements");
  double lbar = 0.0;
  for (double y : yy) lbar += std::max(y, 0.0);
  lbar /= static_cast<double>(yy.size());
  double omega0 = sc.service(0.0);
  double rate0 = std::clamp(omega0 * lbar / (1.0 + lbar), -49.0, 49.0);

  QueueFit out;
  out.options = opt;
  out.space = queue_param_space(opt.method, rate0);
  Objective obj = [&](const Eigen::VectorXd& th) {
    try {
      QueueModel qm = queue_build(opt, sc, out.space, th);
      return queue_filter(qm, sc, sc.service, tt, yy, sc.train_end(), sc.train_end()).loglik;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  FitOptions fo;
  fo.jobs = jobs;
  out.fit = fit(obj, out.space, budget, restarts, seed, fo);
  out.n_basis = queue_build(opt, sc, out.space, out.fit.params).n_basis();
  return out;
}

struct QueueTrack {
  QueueRun run;
  std::vector<double> truth;
  Metrics metrics;
};

// Filters all measurements and scores the filtered mean over the test days.
inline QueueTrack queue_track(const QueueModel& qm, const QueueScenario& sc, const QueueData& data,
                              const std::string& method, const std::string& dataset) {
  QueueTrack tr;
  tr.run = queue_filter(qm, sc, sc.service, data.meas_t, data.meas_y, sc.horizon(), sc.train_end());
  for (double t : tr.run.t) tr.truth.push_back(data.truth[static_cast<size_t>(std::lround(t / sc.step))]);
  tr.metrics.method = method;
  tr.metrics.dataset = dataset;
  tr.metrics.day = sc.train_days + 1;
  tr.metrics.rmse = rmse(tr.run.mean, tr.truth);
  tr.metrics.ell = ell(tr.run.mean, tr.run.var, tr.truth);
  tr.metrics.n_basis = qm.n_basis();
  return tr;
}

}  // namespace plfm::apps
