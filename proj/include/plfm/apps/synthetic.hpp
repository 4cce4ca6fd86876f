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

// Exact draws from the GP priors used by the synthetic scenarios.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "plfm/errors.hpp"
#include "plfm/kernels.hpp"
#include "plfm/linalg.hpp"
#include "plfm/lti.hpp"
#include "plfm/rng.hpp"

namespace plfm::apps {

// Values on a uniform grid t0 + i * dt, linearly interpolated in between and
// held constant beyond the ends.
struct Series {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> v;

  double time(size_t i) const { return t0 + dt * static_cast<double>(i); }
  double at(double t) const {
    if (v.empty()) throw InvalidParameter("Series: empty");
    double x = (t - t0) / dt;
    if (x <= 0) return v.front();
    size_t i = static_cast<size_t>(std::floor(x));
    if (i + 1 >= v.size()) return v.back();
    double f = x - static_cast<double>(i);
    return (1.0 - f) * v[i] + f * v[i + 1];
  }
};

// Zero-mean Gaussian draws with the kernel's covariance on a fixed grid. A
// symmetric square root is used so that rank-deficient Gram matrices are fine.
class GridSampler {
 public:
  GridSampler(const KernelSpec& k, const Eigen::VectorXd& grid) {
    Eigen::MatrixXd K = eval_matrix(k, grid, grid);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(K));
    if (es.info() != Eigen::Success) throw NumericError("GridSampler: eigendecomposition failed");
    root_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  Eigen::VectorXd sample(CounterRng& rng) const {
    Eigen::VectorXd z(root_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return root_ * z;
  }

  Eigen::Index size() const { return root_.rows(); }

 private:
  Eigen::MatrixXd root_;
};

// Per-cycle draws of an SQM-modulated periodic process: cycle d + 1 keeps a
// fraction exp(-1/l) of cycle d, which realizes sigma^2 exp(-|c - c'| / l) times
// the periodic kernel exactly.
inline std::vector<Eigen::VectorXd> sqm_cycle_draws(const GridSampler& periodic, int cycles, double sigma, double l,
                                                    CounterRng& rng) {
  if (cycles < 1 || !(l > 0) || !(sigma >= 0)) throw InvalidParameter("sqm_cycle_draws: bad arguments");
  const double rho = std::exp(-1.0 / l), innov = std::sqrt(-std::expm1(-2.0 / l));
  std::vector<Eigen::VectorXd> out;
  out.push_back(sigma * periodic.sample(rng));
  for (int c = 1; c < cycles; ++c) out.push_back(rho * out.back() + innov * sigma * periodic.sample(rng));
  return out;
}

// Stationary Matern-3/2 path (plus a constant mean) on a uniform grid, using
// the exact state-space transition.
inline Series matern32_path(double sigma, double l, double mean, double t0, double dt, size_t n, CounterRng& rng) {
  LtiSde blk = matern32_block(sigma, l);
  Discretized d = van_loan(blk.F, blk.noise(), dt);
  auto root = [](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
    return Eigen::MatrixXd(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
  };
  Eigen::MatrixXd r0 = root(stationary_covariance(blk)), rq = root(d.Q);
  Eigen::Vector2d x = r0 * Eigen::Vector2d(rng.normal(), rng.normal());
  Series s{t0, dt, {}};
  s.v.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (i > 0) x = d.G * x + rq * Eigen::Vector2d(rng.normal(), rng.normal());
    s.v.push_back(mean + (blk.extract * x)(0));
  }
  return s;
}

}  // namespace plfm::apps
