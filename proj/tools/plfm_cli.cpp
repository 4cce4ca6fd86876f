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
// plfm command-line driver: eigenbasis spectra, basis comparison, and the
// queue and thermal pipelines. Outputs are CSV and JSON under --out.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "plfm/apps/compare.hpp"
#include "plfm/apps/config.hpp"
#include "plfm/apps/csv.hpp"
#include "plfm/apps/metrics.hpp"
#include "plfm/apps/queue.hpp"
#include "plfm/apps/thermal.hpp"
#include "plfm/eigenbasis.hpp"
#include "plfm/kernels_json.hpp"
#include "plfm/learn.hpp"

namespace fs = std::filesystem;
using namespace plfm;
using namespace plfm::apps;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  int jobs = 1;
  bool timing = false;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

json load_config(const Globals& g) {
  if (g.config.empty()) return json::object();
  std::ifstream f(g.config);
  if (!f) throw ConfigError("cannot open config '" + g.config + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + g.config + "' is not valid JSON: " + e.what());
  }
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

void check_finite(const json& j, const std::string& where) {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    throw NumericError("non-finite value in " + where);
  if (j.is_structured())
    for (const auto& v : j) check_finite(v, where);
}

void write_json(const Globals& g, const std::string& name, const json& j) {
  check_finite(j, name);
  std::ofstream f(out_path(g, name), std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + name + "' for writing");
  f << j.dump(2) << '\n';
  if (!f) throw ConfigError("write failed for '" + name + "'");
}

void write_table(const Globals& g, const std::string& name, const Table& t) { write_csv(out_path(g, name), t); }

void write_metrics(const Globals& g, Metrics m) {
  if (g.timing)
    m.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - g.start).count();
  write_json(g, "metrics.json", to_json(m));
}

// eigenbasis ---------------------------------------------------------------

void cmd_eigenbasis(const Globals& g) {
  EigenbasisConfig c = eigenbasis_config(load_config(g));
  EigenBasis b = EigenBasis::build(c.kernel, c.basis_points, c.period, c.gamma, c.max_functions);
  Table spec{{"j", "mu"}, {{}, {}}};
  for (int j = 0; j < b.size(); ++j) {
    spec.columns[0].push_back(j + 1);
    spec.columns[1].push_back(b.mu_scaled(j));
  }
  write_table(g, "spectrum.csv", spec);
  Table fn;
  fn.header.push_back("t");
  for (int j = 0; j < b.size(); ++j) fn.header.push_back("phi_" + std::to_string(j + 1));
  fn.columns.resize(fn.header.size());
  for (int i = 0; i < c.grid_points; ++i) {
    double t = c.period * i / c.grid_points;
    Eigen::VectorXd phi = b.eigenfunctions(t);
    fn.columns[0].push_back(t);
    for (int j = 0; j < b.size(); ++j) fn.columns[j + 1].push_back(phi[j]);
  }
  write_table(g, "eigenfunctions.csv", fn);
  write_json(g, "basis.json",
             {{"kernel", kernel_to_json(c.kernel)},
              {"basis_points", c.basis_points},
              {"period", c.period},
              {"gamma", c.gamma},
              {"n_basis", b.size()}});
}

// compare-bases ------------------------------------------------------------

void cmd_compare(const Globals& g) {
  CompareProtocol p = compare_config(load_config(g));
  std::vector<CompareRow> rows = compare_bases(p, g.seed);
  Table t{{"method", "basis_count", "max_cov_error", "rmse", "ell"}, {}};
  t.columns.resize(5);
  std::ostringstream csv;
  csv << join_header(t.header) << '\n';
  json summary = json::object();
  int kpca_wins = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const CompareRow& r = rows[i];
    csv << r.method << ',' << r.basis_count << ',' << format_number(r.max_cov_error) << ',' << format_number(r.rmse)
        << ',' << format_number(r.ell) << '\n';
    json& s = summary[r.method];
    if (s.is_null()) s = json::object();
    s["rmse"] = s.value("rmse", 0.0) + r.rmse / p.draws;
    s["ell"] = s.value("ell", 0.0) + r.ell / p.draws;
    s["max_cov_error"] = std::max(s.value("max_cov_error", 0.0), r.max_cov_error);
    s["basis_count"] = r.basis_count;
    if (r.method == "kpca" && i + 1 < rows.size() && r.rmse < rows[i + 1].rmse) ++kpca_wins;
  }
  std::ofstream f(out_path(g, "compare_bases.csv"), std::ios::binary);
  f << csv.str();
  if (!f) throw ConfigError("write failed for 'compare_bases.csv'");
  summary["draws"] = p.draws;
  summary["kpca_rmse_wins"] = kpca_wins;
  write_json(g, "summary.json", summary);
}

// queue --------------------------------------------------------------------

QueueData queue_data(const QueueConfig& c, const Globals& g) {
  if (c.arrivals_csv.empty()) return queue_generate(c.scenario, g.seed);
  return queue_from_arrivals(c.scenario, arrival_series(read_csv(c.arrivals_csv, {"time_min", "arrival_rate"})),
                             g.seed);
}

struct QueueFitted {
  ParamSpace space;
  Eigen::VectorXd params;
  json report;
  int n_basis = 0;
};

QueueFitted queue_fitted(const QueueConfig& c, const QueueData& d, const Globals& g) {
  QueueFitted f;
  if (c.params) {
    f.space = queue_param_space(c.model.method, c.scenario.mean_rate);
    f.params = queue_params(*c.params, f.space);
    json p = json::object();
    for (int i = 0; i < f.space.dim(); ++i) p[f.space.names[i]] = f.params[i];
    f.report = {{"params", p}, {"fitted", false}};
  } else {
    QueueFit fit = queue_fit(c.model, c.scenario, d, c.fit.budget, c.fit.restarts, g.seed, g.jobs);
    f.space = fit.space;
    f.params = fit.fit.params;
    f.report = fit_report(fit.space, fit.fit);
    f.report["fitted"] = true;
  }
  f.n_basis = queue_build(c.model, c.scenario, f.space, f.params).n_basis();
  f.report["method"] = to_string(c.model.method);
  f.report["n_basis"] = f.n_basis;
  return f;
}

void cmd_queue(const std::string& sub, const Globals& g) {
  QueueConfig c = queue_config(load_config(g));
  QueueData d = queue_data(c, g);
  if (sub == "simulate") {
    std::vector<double> t;
    for (size_t i = 0; i < d.arrivals.v.size(); ++i) t.push_back(d.arrivals.time(i));
    write_table(g, "arrivals.csv", {{"time_min", "arrival_rate"}, {t, d.arrivals.v}});
    write_table(g, "queue_truth.csv", {{"time_min", "queue_len"}, {t, d.truth}});
    write_table(g, "measurements.csv", {{"time_min", "queue_len"}, {d.meas_t, d.meas_y}});
    return;
  }
  QueueFitted f = queue_fitted(c, d, g);
  if (sub == "fit") {
    write_json(g, "fit.json", f.report);
    return;
  }
  QueueModel qm = queue_build(c.model, c.scenario, f.space, f.params);
  QueueTrack tr = queue_track(qm, c.scenario, d, to_string(c.model.method), c.dataset);
  write_table(g, "track.csv",
              {{"time_min", "mean", "var", "truth", "arrival_rate"}, {tr.run.t, tr.run.mean, tr.run.var, tr.truth, tr.run.zeta}});
  write_json(g, "fit.json", f.report);
  write_metrics(g, tr.metrics);
}

// thermal ------------------------------------------------------------------

ThermalData thermal_data(const ThermalConfig& c, const Globals& g) {
  if (c.data_csv.empty()) return thermal_generate(c.scenario, g.seed);
  ThermalData d;
  d.truth = thermal_records(read_csv(c.data_csv, thermal_header()));
  d.measured = d.truth;
  if (d.truth.time.back() < c.scenario.horizon())
    throw ConfigError("thermal: data must cover " + std::to_string(c.scenario.horizon()) + " minutes");
  return d;
}

struct ThermalFitted {
  ThermalParams params;
  json report;
};

ThermalFitted thermal_fitted(const ThermalConfig& c, const ThermalData& d, const Globals& g) {
  ThermalFitted f;
  if (c.params) {
    f.params = *c.params;
    f.report = {{"fitted", false}};
  } else {
    ThermalFit fit = thermal_fit(c.model, c.scenario, d, c.fit.budget, c.fit.restarts, g.seed, g.jobs);
    f.params = fit.params;
    f.report = {{"fitted", true},
                {"external", fit_report(fit.ext_space, fit.ext_fit)},
                {"room", fit_report(fit.space, fit.fit)}};
  }
  f.report["method"] = to_string(c.model.method);
  f.report["envelope"] = c.model.envelope;
  f.report["params"] = to_json(f.params);
  f.report["n_basis"] = thermal_build(c.model, c.scenario, f.params).n_basis();
  return f;
}

Table forecast_table(const ThermalForecast& f) {
  return {{"time_min", "mean", "var", "truth", "heater"}, {f.t, f.mean, f.var, f.truth, f.heater_fraction}};
}

void cmd_thermal(const std::string& sub, const Globals& g) {
  ThermalConfig c = thermal_config(load_config(g));
  ThermalData d = thermal_data(c, g);
  if (sub == "simulate") {
    write_table(g, "thermal_truth.csv", thermal_table(d.truth));
    write_table(g, "thermal_measured.csv", thermal_table(d.measured));
    return;
  }
  ThermalFitted f = thermal_fitted(c, d, g);
  write_json(g, "fit.json", f.report);
  if (sub == "fit") return;
  ThermalModel tm = thermal_build(c.model, c.scenario, f.params);
  const std::string method = to_string(c.model.method);
  ThermalForecast fc = sub == "predict"
                           ? thermal_predict_day(tm, c.scenario, f.params, d, c.particles, g.seed, method, c.dataset)
                           : thermal_track_day(tm, c.scenario, f.params, d, method, c.dataset);
  write_table(g, sub + ".csv", forecast_table(fc));
  write_metrics(g, fc.metrics);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plfm: latent force models with periodic and quasi-periodic forces"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "worker cap for fitting")->check(CLI::PositiveNumber);
  app.add_flag("--timing", g.timing, "record wall-clock runtime in metrics.json");

  std::function<void()> run;
  app.add_subcommand("eigenbasis", "eigenvalue spectrum and eigenfunction grid")->callback([&] {
    run = [&] { cmd_eigenbasis(g); };
  });
  app.add_subcommand("compare-bases", "eigenfunction vs sparse-spectrum regression on GP draws")->callback([&] {
    run = [&] { cmd_compare(g); };
  });
  CLI::App* queue = app.add_subcommand("queue", "queue-length tracking");
  queue->require_subcommand(1);
  for (auto [s, help] : {std::pair{"simulate", "synthetic arrivals, queue truth and measurements"},
                         std::pair{"fit", "maximum-likelihood fit on the training days"},
                         std::pair{"track", "fit, then filter and score the test day"}})
    queue->add_subcommand(s, help)->callback([&, s] { run = [&, s] { cmd_queue(s, g); }; });
  CLI::App* thermal = app.add_subcommand("thermal", "home-thermal prediction");
  thermal->require_subcommand(1);
  for (auto [s, help] : {std::pair{"simulate", "synthetic building records, true and measured"},
                         std::pair{"fit", "maximum-likelihood fit on the training days"},
                         std::pair{"predict", "fit, then particle day-ahead prediction of the test day"},
                         std::pair{"track", "fit, then Kalman tracking of the test day"}})
    thermal->add_subcommand(s, help)->callback([&, s] { run = [&, s] { cmd_thermal(s, g); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    run();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
