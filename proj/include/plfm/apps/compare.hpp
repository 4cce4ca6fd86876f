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

// Eigenfunction (KPCA) and sparse-spectrum regression on draws from a known
// stationary GP, with the generating hyperparameters given to both methods.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "plfm/apps/metrics.hpp"
#include "plfm/apps/synthetic.hpp"
#include "plfm/baselines/dense_gp.hpp"
#include "plfm/baselines/ssgpr.hpp"
#include "plfm/eigenbasis.hpp"
#include "plfm/rng.hpp"

namespace plfm::apps {

struct CompareProtocol {
  KernelSpec kernel = SquaredExponential{1.0, 10.0};
  double window = 100.0;
  int grid_points = 200;
  int basis_points = 200;
  int max_functions = 22;
  double gamma = 1e-12;
  int spectral_points = 22;
  double measure_every = 10.0;
  double noise_var = 1e-8;
  int draws = 20;

  void validate() const {
    plfm::validate(kernel);
    if (!(window > 0 && measure_every > 0 && noise_var > 0))
      throw ConfigError("compare-bases: window, measurement spacing and noise must be positive");
    if (grid_points < 2 || basis_points < 2 || max_functions < 1 || spectral_points < 1 || draws < 1)
      throw ConfigError("compare-bases: counts must be positive");
    if (!(gamma > 0 && gamma <= 1)) throw ConfigError("compare-bases: gamma must lie in (0, 1]");
  }
};

struct CompareRow {
  int draw = 0;
  std::string method;
  int basis_count = 0;
  double max_cov_error = 0.0;
  double rmse = 0.0;
  double ell = 0.0;
};

inline Eigen::VectorXd compare_grid(const CompareProtocol& p) {
  return Eigen::VectorXd::LinSpaced(p.grid_points, 0.0, p.window * (p.grid_points - 1) / p.grid_points);
}

inline double kpca_cov_error(const EigenBasis& b, const KernelSpec& k, const Eigen::VectorXd& grid) {
  Eigen::MatrixXd phi(grid.size(), b.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) phi.row(i) = b.eigenfunctions(grid[i]).transpose();
  Eigen::MatrixXd approx = phi * b.mu_scaled_all().asDiagonal() * phi.transpose();
  return (approx - eval_matrix(k, grid, grid)).cwiseAbs().maxCoeff();
}

inline double ssgpr_cov_error(const SsgprModel& m, const KernelSpec& k, const Eigen::VectorXd& grid) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    for (Eigen::Index j = 0; j < grid.size(); ++j)
      e = std::max(e, std::abs(m.implied_kernel(grid[i] - grid[j]) - eval(k, grid[i], grid[j])));
  return e;
}

// Two rows per draw (kpca, ssgpr). Scores use the latent variance plus the
// measurement noise at every grid point.
inline std::vector<CompareRow> compare_bases(const CompareProtocol& p, std::uint64_t seed) {
  p.validate();
  const Eigen::VectorXd grid = compare_grid(p);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double r = std::remainder(grid[i], p.measure_every);
    if (std::abs(r) < 1e-9 * p.window) idx.push_back(i);
  }
  if (idx.empty()) throw ConfigError("compare-bases: no measurement falls on the grid");
  Eigen::VectorXd x(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) x[static_cast<Eigen::Index>(i)] = grid[idx[i]];

  EigenBasis basis = EigenBasis::build(p.kernel, p.basis_points, p.window, p.gamma, p.max_functions);
  auto kpca_features = [&](const Eigen::VectorXd& t) {
    Eigen::MatrixXd f(t.size(), basis.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) f.row(i) = basis.eigenfunctions(t[i]).transpose();
    return f;
  };
  const Eigen::MatrixXd kf_x = kpca_features(x), kf_grid = kpca_features(grid);
  const double kpca_err = kpca_cov_error(basis, p.kernel, grid);

  GridSampler sampler(p.kernel, grid);
  std::vector<CompareRow> rows;
  auto score = [&](int d, const std::string& name, int count, double err, const GpPrediction& g,
                   const Eigen::VectorXd& truth) {
    std::vector<double> mean(g.mean.data(), g.mean.data() + g.mean.size());
    std::vector<double> var(g.var.size()), tr(truth.data(), truth.data() + truth.size());
    for (Eigen::Index i = 0; i < g.var.size(); ++i) var[i] = std::max(g.var[i], 0.0) + p.noise_var;
    rows.push_back({d, name, count, err, rmse(mean, tr), ell(mean, var, tr)});
  };
  for (int d = 0; d < p.draws; ++d) {
    CounterRng rng(seed, static_cast<std::uint64_t>(d));
    Eigen::VectorXd f = sampler.sample(rng);
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = f[idx[i]] + std::sqrt(p.noise_var) * rng.normal();

    GpPrediction kp = bayes_linear_regress(kf_x, y, basis.mu_scaled_all(), p.noise_var, kf_grid);
    score(d, "kpca", basis.size(), kpca_err, kp, f);

    SsgprModel sm = ssgpr_build(p.kernel, p.spectral_points, seed * 1000003ULL + static_cast<std::uint64_t>(d),
                                p.noise_var);
    score(d, "ssgpr", p.spectral_points, ssgpr_cov_error(sm, p.kernel, grid), ssgpr_regress(sm, x, y, grid), f);
  }
  return rows;
}

}  // namespace plfm::apps
