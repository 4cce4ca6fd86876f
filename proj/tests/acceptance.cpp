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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "plfm/apps/compare.hpp"
#include "plfm/apps/queue.hpp"
#include "plfm/apps/thermal.hpp"
#include "plfm/baselines/dense_gp.hpp"
#include "plfm/baselines/resonator.hpp"
#include "plfm/filter.hpp"
#include "plfm/lfm.hpp"
#include "plfm/linalg.hpp"
#include "support.hpp"

using namespace plfm;
using namespace plfm::apps;
using plfm::testing::linspace;
using plfm::testing::rel_err;

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

TargetSpec scalar_target(double f, double p0) {
  TargetSpec t;
  t.F = scalar(f);
  t.init_cov = scalar(p0);
  return t;
}

MeasurementSpec observe_first(int E, double z) {
  MeasurementSpec m;
  m.H_target = Eigen::MatrixXd::Zero(1, E);
  m.H_target(0, 0) = 1.0;
  m.Z = scalar(z);
  return m;
}

struct PsdTally {
  int checked = 0;
  int failed = 0;
  void check(const Eigen::MatrixXd& c) {
    ++checked;
    if (!is_symmetric_psd(c)) ++failed;
  }
  void check_variances(const std::vector<double>& v) {
    for (double x : v) {
      ++checked;
      if (!(std::isfinite(x) && x >= 0.0)) ++failed;
    }
  }
};

PsdTally g_psd;

Outcome criterion1() {
  Outcome o;
  auto t0 = Clock::now();
  plfm::testing::FirstOrderLfmOracle oracle;
  oracle.a = 0.6;
  oracle.c = 1.2;
  oracle.sigma = 0.8;
  oracle.l = 1.7;
  oracle.p0 = 0.3;
  const double z = 0.04;
  AugmentedModel m = AugmentedModel::assemble(
      scalar_target(-oracle.a, oracle.p0),
      {nonperiodic_force("u", matern12_block(oracle.sigma, oracle.l), Eigen::VectorXd::Constant(1, oracle.c))},
      observe_first(1, z));
  CounterRng rng(1, 0);
  const int n = 20;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 0.5 * (i + 1) - 0.4 * rng.uniform();
    y[i] = rng.normal();
  }
  auto k = [&](double a, double b) { return oracle.cov(a, b); };
  KalmanRun run(m, m.initial_state(0.0));
  double worst_mean = 0.0, worst_var = 0.0;
  for (int i = 0; i < n; ++i) {
    run.predict_to(x[i]);
    run.update(y.segment(i, 1));
    g_psd.check(run.state().cov);
    DenseGp gp(k, z, x.head(i + 1), y.head(i + 1));
    GpPrediction p = gp.predict(x.segment(i, 1));
    worst_mean = std::max(worst_mean, rel_err(run.state().mean[0], p.mean[0]));
    worst_var = std::max(worst_var, rel_err(run.state().cov(0, 0), p.var[0]));
  }
  double ll_gap = std::abs(run.log_likelihood() - DenseGp(k, z, x, y).log_marginal_likelihood());
  double secs = seconds_since(t0);
  o.detail << "mean rel " << worst_mean << ", var rel " << worst_var << ", loglik gap " << ll_gap << ", " << secs
           << " s";
  o.require(worst_mean <= 1e-6, "mean");
  o.require(worst_var <= 1e-6, "variance");
  o.require(ll_gap <= 1e-8, "log-likelihood");
  o.require(secs < 1.0, "runtime");
  return o;
}

Outcome criterion2() {
  Outcome o;
  auto t0 = Clock::now();
  CompareProtocol p;
  EigenBasis b = EigenBasis::build(p.kernel, p.basis_points, p.window, p.gamma, p.max_functions);
  double err = kpca_cov_error(b, p.kernel, compare_grid(p));
  double secs = seconds_since(t0);
  o.detail << "J " << b.size() << ", N " << p.basis_points << ", max error " << err << ", " << secs << " s";
  o.require(b.size() == 22, "22 functions");
  o.require(err <= 1e-4, "reconstruction");
  o.require(secs < 1.0, "runtime");
  return o;
}

Outcome criterion3() {
  Outcome o;
  auto t0 = Clock::now();
  CompareProtocol p;
  std::vector<CompareRow> rows = compare_bases(p, 0);
  std::map<int, std::map<std::string, CompareRow>> by_draw;
  for (const CompareRow& r : rows) by_draw[r.draw][r.method] = r;
  int wins = 0;
  double ell_k = 0.0, ell_s = 0.0;
  for (auto& [d, m] : by_draw) {
    const CompareRow &k = m.at("kpca"), &s = m.at("ssgpr");
    wins += k.rmse < s.rmse;
    ell_k += k.ell;
    ell_s += s.ell;
  }
  const double draws = static_cast<double>(by_draw.size());
  ell_k /= draws;
  ell_s /= draws;
  double secs = seconds_since(t0);
  o.detail << "KPCA wins " << wins << "/" << by_draw.size() << ", mean ELL KPCA " << ell_k << " SSGPR " << ell_s << ", "
           << secs << " s";
  o.require(by_draw.size() == 20, "20 draws");
  o.require(wins >= 16, "RMSE wins");
  o.require(ell_k > ell_s, "ELL ordering");
  o.require(ell_s < -100.0, "SSGPR ELL");
  o.require(secs < 30.0, "runtime");
  return o;
}

std::shared_ptr<const EigenBasis> unit_constant_basis() {
  return std::make_shared<const EigenBasis>(EigenBasis::build(Constant{1.0}, 4, 1.0));
}

Outcome criterion4() {
  Outcome o;
  auto t0 = Clock::now();
  double sqm_gap = 0.0;
  for (double sigma : {0.1, 1.0, 3.7})
    for (double l : {0.5, 2.0, 20.0, 400.0}) {
      JumpModel j = sqm_jump(sigma, l);
      sqm_gap = std::max(sqm_gap, std::abs(j.G_star * j.G_star * sigma * sigma + j.Q_star - sigma * sigma) /
                                      (sigma * sigma));
    }

  auto basis = unit_constant_basis();
  QuasiSpec wqm;
  wqm.type = Quasi::Wqm;
  wqm.xi0 = 0.4;
  wqm.xi = 1.3;
  AugmentedModel mw = AugmentedModel::assemble(scalar_target(-1.0, 0.5),
                                               {periodic_force("p", basis, wqm, Eigen::VectorXd::Ones(1))},
                                               observe_first(1, 1.0));
  double wqm_gap = 0.0;
  GaussianState s = mw.initial_state(0.0);
  for (int c = 1; c <= 8; ++c) {
    double before = s.cov(1, 1);
    s = propagate(mw, s, c + 0.5);
    wqm_gap = std::max(wqm_gap, std::abs(s.cov(1, 1) - before - wqm.xi));
    wqm_gap = std::max(wqm_gap, std::abs(mw.initial_state(c + 0.25).cov(1, 1) - (wqm.xi0 + c * wqm.xi)));
  }

  // The target starts as a frozen copy of the weight, so their cross
  // covariance after m changepoints is the chain covariance.
  double chain_gap = 0.0;
  for (double l : {0.7, 2.5, 10.0}) {
    const double sigma = 1.4;
    QuasiSpec sqm{Quasi::Sqm, sigma, l};
    AugmentedModel ms = AugmentedModel::assemble(
        scalar_target(0.0, 1.0), {periodic_force("p", basis, sqm, Eigen::VectorXd::Zero(1))}, observe_first(1, 1.0));
    GaussianState c = ms.initial_state(0.0);
    c.cov = Eigen::MatrixXd::Constant(2, 2, sigma * sigma);
    for (int m = 1; m <= 10; ++m) {
      c = propagate(ms, c, m + 0.5);
      g_psd.check(c.cov);
      chain_gap = std::max(chain_gap, std::abs(c.cov(0, 1) - sigma * sigma * std::exp(-m / l)));
    }
  }
  double secs = seconds_since(t0);
  o.detail << "SQM stationarity " << sqm_gap << ", WQM increment " << wqm_gap << ", chain " << chain_gap << ", " << secs
           << " s";
  o.require(sqm_gap <= 1e-14, "SQM stationarity");
  o.require(wqm_gap <= 1e-12, "WQM increments");
  o.require(chain_gap <= 1e-10, "chain covariance");
  o.require(secs < 1.0, "runtime");
  return o;
}

Outcome criterion5() {
  Outcome o;
  auto t0 = Clock::now();
  EigenBasis b = EigenBasis::build(NonStatPeriodic{1.0, 20.0, 10.0, 0.8}, 100, 10.0, 1e-6);
  std::vector<double> grid = linspace(0.0, 10.0, 20001);
  double track = 0.0;
  if (b.size() < 4) o.require(false, "fewer than 4 eigenfunctions");
  for (int j = 0; j < std::min(4, b.size()); ++j) {
    std::vector<double> psi = resonator_track_eigenfunction(b, j, default_resonator_offset(b, j), grid);
    for (size_t i = 0; i < grid.size(); ++i) track = std::max(track, std::abs(psi[i] - b.eigenfunction(j, grid[i])));
  }

  // Stationary periodic kernels have sinusoidal eigenfunctions, so the
  // profile is a constant (2 pi k / D)^2. Points where phi is within 5% of
  // its peak of a zero are skipped because the ratio is ill conditioned there.
  auto spread = [&](const KernelSpec& k, double d) {
    EigenBasis s = EigenBasis::build(k, 200, d, 1e-8, 5);
    std::vector<double> sample = linspace(0.0, d, 997);
    double worst = 0.0;
    for (int j = 1; j < s.size(); ++j) {
      double peak = 0.0;
      for (double t : sample) peak = std::max(peak, std::abs(s.eigenfunction(j, t)));
      std::vector<double> pts;
      for (double t : sample)
        if (std::abs(s.eigenfunction(j, t)) > 0.05 * peak) pts.push_back(t);
      std::vector<double> prof = resonator_frequency_profile(s, j, pts, 0.0);
      auto [lo, hi] = std::minmax_element(prof.begin(), prof.end());
      worst = std::max(worst, (*hi - *lo) / std::abs(*hi));
    }
    return worst;
  };
  double flat = std::max(spread(PeriodicSE{0.7, 2.0}, 2.0), spread(PeriodicSE{1.5, 10.0}, 10.0));
  // Reported only: a Matern-3/2 kernel is twice differentiable, so aliasing
  // in the Nystrom second derivative shrinks like (k / N)^2 instead of vanishing.
  double matern = spread(PeriodicMatern{1.5, 1.0, 0.8, 5.0}, 5.0);
  EigenBasis c = EigenBasis::build(Constant{1.0}, 20, 1.0);
  for (double v : resonator_frequency_profile(c, 0, linspace(0.0, 0.95, 20), 0.0)) flat = std::max(flat, std::abs(v));
  double secs = seconds_since(t0);
  o.detail << "eigenfunction sup error " << track << ", stationary profile spread " << flat
           << " (periodic Matern-3/2 at N=200: " << matern << "), " << secs << " s";
  o.require(track < 1e-3, "tracking");
  o.require(flat < 1e-6, "stationary profiles");
  o.require(secs < 5.0, "runtime");
  return o;
}

Outcome criterion6() {
  Outcome o;
  auto t0 = Clock::now();
  QueueScenario base;
  QueueScenario split = base;
  split.service.start = {0.0, base.train_end(), base.train_end() + 720.0};
  split.service.rate = {10.0, 15.0, 5.0};
  int wins = 0, split_wins = 0, max_basis = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    QueueData d = queue_generate(base, seed);
    QueueData d2 = queue_generate(split, seed);
    double rmse[2][2];
    int i = 0;
    for (QueueMethod m : {QueueMethod::QuasiSqm, QueueMethod::Matern}) {
      QueueModelOptions opt;
      opt.method = m;
      QueueFit f = queue_fit(opt, base, d, 150, 1, seed);
      QueueModel qm = queue_build(opt, base, f.space, f.fit.params);
      if (m == QueueMethod::QuasiSqm) max_basis = std::max(max_basis, f.n_basis);
      QueueTrack a = queue_track(qm, base, d, to_string(m), "omega10");
      QueueTrack b = queue_track(qm, split, d2, to_string(m), "omega15-5");
      g_psd.check_variances(a.run.var);
      g_psd.check_variances(b.run.var);
      rmse[i][0] = a.metrics.rmse;
      rmse[i][1] = b.metrics.rmse;
      ++i;
    }
    wins += rmse[0][0] < rmse[1][0];
    split_wins += rmse[0][1] < rmse[1][1];
    std::printf("  queue seed %d: omega10 quasi %.4g matern %.4g | split quasi %.4g matern %.4g\n", seed, rmse[0][0],
                rmse[1][0], rmse[0][1], rmse[1][1]);
  }
  double secs = seconds_since(t0);
  o.detail << "quasi wins " << wins << "/" << seeds << " (omega 10), " << split_wins << "/" << seeds
           << " (15/5 split), max basis " << max_basis << ", " << secs << " s";
  o.require(wins >= 8, "omega 10 ordering");
  o.require(split_wins >= 8, "split ordering");
  o.require(max_basis <= 30, "roster size");
  o.require(secs < 300.0, "runtime");
  return o;
}

Outcome criterion7() {
  Outcome o;
  auto t0 = Clock::now();
  ThermalScenario sc;
  int wins = 0, tracked = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    ThermalData d = thermal_generate(sc, seed);
    std::map<ThermalMethod, double> pred;
    double track = 0.0;
    for (ThermalMethod m : {ThermalMethod::QuasiSqm, ThermalMethod::Without, ThermalMethod::Hart}) {
      ThermalModelOptions opt;
      opt.method = m;
      ThermalFit f = thermal_fit(opt, sc, d, 300, 1, seed);
      ThermalModel tm = thermal_build(opt, sc, f.params);
      ThermalForecast p = thermal_predict_day(tm, sc, f.params, d, 64, seed, to_string(m), "synthetic");
      g_psd.check_variances(p.var);
      pred[m] = p.metrics.rmse;
      if (m == ThermalMethod::QuasiSqm) {
        ThermalForecast t = thermal_track_day(tm, sc, f.params, d, to_string(m), "synthetic");
        g_psd.check_variances(t.var);
        track = t.metrics.rmse;
      }
    }
    double sqm = pred[ThermalMethod::QuasiSqm];
    wins += sqm < pred[ThermalMethod::Without] && sqm < pred[ThermalMethod::Hart];
    tracked += track < sqm;
    std::printf("  thermal seed %d: predict quasi-sqm %.4g without %.4g hart %.4g | track quasi-sqm %.4g\n", seed, sqm,
                pred[ThermalMethod::Without], pred[ThermalMethod::Hart], track);
  }
  double secs = seconds_since(t0);
  o.detail << "quasi-sqm beats both in " << wins << "/" << seeds << ", tracking below prediction in " << tracked << "/"
           << seeds << ", " << secs << " s";
  o.require(wins >= 7, "ordering");
  o.require(tracked == seeds, "tracking below prediction");
  o.require(secs < 600.0, "runtime");
  return o;
}

double frozen_coupling_order() {
  auto basis = std::make_shared<const EigenBasis>(EigenBasis::build(PeriodicSE{0.8, 1.0}, 64, 1.0, 1e-4));
  QuasiSpec cqm{Quasi::Cqm, 1.0, 2.0};
  AugmentedModel m = AugmentedModel::assemble(scalar_target(-1.0, 0.5),
                                              {periodic_force("p", basis, cqm, Eigen::VectorXd::Ones(1))},
                                              observe_first(1, 1.0));
  double worst = std::numeric_limits<double>::infinity(), prev = 0.0;
  for (double dt : {0.01, 0.005, 0.0025, 0.00125, 0.000625}) {
    Eigen::MatrixXd whole = m.discretize(0.2, 0.2 + 2 * dt).G;
    Eigen::MatrixXd split = m.discretize(0.2 + dt, 0.2 + 2 * dt).G * m.discretize(0.2, 0.2 + dt).G;
    double defect = (whole - split).cwiseAbs().maxCoeff();
    if (prev > 0) worst = std::min(worst, std::log2(prev / defect));
    prev = defect;
  }
  return worst;
}

int second_derivative_failures(int& checked) {
  auto fd2 = [](const KernelSpec& k, double t, double tp, double h) {
    return (eval(k, t + h, tp) - 2 * eval(k, t, tp) + eval(k, t - h, tp)) / (h * h);
  };
  std::vector<KernelSpec> ks = {NonStatPeriodic{1.0, 20.0, 10.0, 0.8},
                                NonStatPeriodic{2.0, 1.5, 5.0, 2.0},
                                PeriodicSE{3, 0.7},
                                PeriodicMatern{1.5, 1.3, 0.9, 4.0},
                                Matern{1.5, 1.1, 2.0},
                                SquaredExponential{1.2, 3.0},
                                product(PeriodicSE{1.0, 3.0}, SquaredExponential{1.0, 5.0})};
  CounterRng rng(88);
  int failures = 0;
  for (const auto& k : ks)
    for (int i = 0; i < 100; ++i) {
      double t = 30 * rng.uniform(), tp = 30 * rng.uniform();
      double an = second_time_derivative(k, t, tp), fd = fd2(k, t, tp, 1e-4);
      ++checked;
      failures += std::abs(an - fd) > 1e-4 * std::max(std::abs(an), 1e-2);
    }
  return failures;
}

void psd_through_filter() {
  auto basis = std::make_shared<const EigenBasis>(EigenBasis::build(PeriodicMatern{1.5, 1, 0.6, 1.0}, 64, 1.0));
  std::vector<QuasiSpec> quasi = {{Quasi::Cqm, 1.0, 3.0}, {Quasi::Sqm, 0.8, 2.0}};
  QuasiSpec wqm;
  wqm.type = Quasi::Wqm;
  quasi.push_back(wqm);
  for (const QuasiSpec& q : quasi) {
    AugmentedModel m = AugmentedModel::assemble(
        scalar_target(-0.7, 0.5),
        {nonperiodic_force("u", matern32_block(1.0, 0.5), Eigen::VectorXd::Ones(1)),
         periodic_force("p", basis, q, Eigen::VectorXd::Ones(1))},
        observe_first(1, 0.01));
    KalmanRun run(m, m.initial_state(0.0));
    CounterRng rng(3);
    for (int k = 1; k <= 120; ++k) {
      double t = 0.05 * k;
      g_psd.check(m.discretize(t - 0.05, t).Q);
      run.predict_to(t);
      g_psd.check(run.state().cov);
      run.update(Eigen::VectorXd::Constant(1, rng.normal()));
      g_psd.check(run.state().cov);
    }
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> m;
  if (fs::exists(dir))
    for (const auto& e : fs::directory_iterator(dir)) m[e.path().filename().string()] = slurp(e.path());
  return m;
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(PLFM_CLI_PATH) + " " + args + " > " + (log / "stdout.txt").string() + " 2> " +
                    (log / "stderr.txt").string();
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Returns the number of commands whose outputs differ between reruns.
int cli_mismatches(int& commands_run) {
  fs::path d = fs::temp_directory_path() / "plfm_acceptance_cli";
  fs::remove_all(d);
  fs::create_directories(d);
  std::ofstream(d / "q.json") << R"({"method": "quasi-sqm", "fit": {"budget": 20}})";
  std::ofstream(d / "t.json") << R"({"method": "quasi-sqm", "particles": 16, "fit": {"budget": 20}})";
  const std::string cfg = std::string(PLFM_SOURCE_DIR) + "/configs/";
  const std::string q = (d / "q.json").string(), t = (d / "t.json").string();
  const std::vector<std::string> commands = {
      "eigenbasis --config " + cfg + "eigenbasis_periodic.json",
      "eigenbasis --config " + cfg + "eigenbasis_nonstat.json",
      "compare-bases --config " + cfg + "compare_bases.json",
      "queue simulate --config " + q,
      "queue fit --config " + q,
      "queue track --config " + q,
      "thermal simulate --config " + t,
      "thermal fit --config " + t,
      "thermal predict --config " + t,
      "thermal track --config " + t,
  };
  int bad = 0;
  for (size_t i = 0; i < commands.size(); ++i) {
    fs::path a = d / ("a" + std::to_string(i)), b = d / ("b" + std::to_string(i));
    int ra = run_cli(commands[i] + " --seed 23 --out " + a.string(), d);
    int rb = run_cli(commands[i] + " --seed 23 --jobs 2 --out " + b.string(), d);
    auto oa = outputs(a), ob = outputs(b);
    ++commands_run;
    if (ra != 0 || rb != 0 || oa.empty() || oa != ob) {
      ++bad;
      std::printf("  cli mismatch: %s\n", commands[i].c_str());
    }
  }
  return bad;
}

Outcome criterion8() {
  Outcome o;
  auto t0 = Clock::now();
  psd_through_filter();
  int fd_checked = 0;
  int fd_failures = second_derivative_failures(fd_checked);
  double order = frozen_coupling_order();
  int commands = 0;
  int mismatches = cli_mismatches(commands);
  double secs = seconds_since(t0);
  o.detail << "PSD " << g_psd.checked - g_psd.failed << "/" << g_psd.checked << ", second derivatives "
           << fd_checked - fd_failures << "/" << fd_checked << ", frozen-coupling order " << order << ", CLI identical "
           << commands - mismatches << "/" << commands << ", " << secs << " s";
  o.require(g_psd.failed == 0, "PSD");
  o.require(fd_failures == 0, "second derivatives");
  o.require(order >= 2.0, "step-halving order");
  o.require(mismatches == 0, "CLI reproducibility");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 oracle equivalence", criterion1},     {"2 Nystrom reconstruction", criterion2},
      {"3 KPCA vs SSGPR", criterion3},          {"4 changepoint identities", criterion4},
      {"5 resonator equivalence", criterion5},  {"6 queue ordering", criterion6},
      {"7 thermal ordering", criterion7},       {"8 numerical hygiene", criterion8},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
