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

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "plfm/eigenbasis.hpp"
#include "plfm/errors.hpp"
#include "plfm/filter.hpp"
#include "plfm/learn.hpp"
#include "plfm/linalg.hpp"
#include "plfm/lti.hpp"

namespace plfm {

// exp([[0, 1], [a, b]] h) in closed form.
inline Eigen::Matrix2d oscillator_transition(double a, double b, double h) {
  double disc = 0.25 * b * b + a;
  double x = disc * h * h;
  double c, s;
  if (std::abs(x) < 1e-10) {
    c = 1.0 + 0.5 * x;
    s = h * (1.0 + x / 6.0);
  } else if (disc > 0) {
    double r = std::sqrt(disc);
    c = std::cosh(r * h);
    s = std::sinh(r * h) / r;
  } else {
    double r = std::sqrt(-disc);
    c = std::cos(r * h);
    s = std::sin(r * h) / r;
  }
  Eigen::Matrix2d m;
  m << -0.5 * b, 1.0, a, 0.5 * b;
  Eigen::Matrix2d out = c * Eigen::Matrix2d::Identity() + s * m;
  return std::exp(0.5 * b * h) * out;
}

struct Resonator {
  double A = 0.0;  // -(2 pi f)^2 for a harmonic resonator
  double B = 0.0;  // decay, B <= 0
  double frequency() const { return A < 0 ? std::sqrt(-A) / (2.0 * std::numbers::pi) : 0.0; }
};

struct ResonatorModel {
  std::vector<Resonator> resonators;
  bool bias = true;
  double q = 0.0;          // white-noise spectral density shared by all resonators
  double noise_var = 0.0;  // measurement noise
  double prior_var = 1.0;  // prior variance of each resonator value and of the bias
};

// Offset used when turning an eigenfunction into a strictly positive carrier.
inline double default_resonator_offset(const EigenBasis& basis, int j, int grid_points = 2000) {
  double m = 0.0;
  for (int i = 0; i < grid_points; ++i)
    m = std::max(m, std::abs(basis.eigenfunction(j, basis.period() * i / grid_points)));
  return 3.0 * m;
}

// (2 pi f_j(t))^2 = -(phi_j + offset)'' / (phi_j + offset) on the grid.
inline std::vector<double> resonator_frequency_profile(const EigenBasis& basis, int j,
                                                       const std::vector<double>& grid, double offset) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    double v = basis.eigenfunction(j, t) + offset;
    if (std::abs(v) < 1e-6) throw InvalidParameter("resonator profile: offset too small, carrier crosses zero");
    out.push_back(-basis.eigenfunction_second_derivative(j, t) / v);
  }
  return out;
}

struct ResonatorTrajectory {
  std::vector<double> t;
  std::vector<double> psi;
  std::vector<double> dpsi;
};

// Noise-free propagation of d2psi = A(t) psi + B dpsi with A frozen at each
// step midpoint and the exact 2x2 exponential per step.
inline ResonatorTrajectory resonator_integrate(const std::function<double(double)>& a_of_t, double b,
                                               Eigen::Vector2d x0, const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParameter("resonator_integrate: empty grid");
  ResonatorTrajectory tr;
  tr.t = grid;
  tr.psi.push_back(x0[0]);
  tr.dpsi.push_back(x0[1]);
  Eigen::Vector2d x = x0;
  for (size_t k = 1; k < grid.size(); ++k) {
    double h = grid[k] - grid[k - 1];
    if (!(h > 0)) throw InvalidParameter("resonator_integrate: grid must be increasing");
    double a = a_of_t(0.5 * (grid[k] + grid[k - 1]));
    if (!std::isfinite(a)) throw NumericError("resonator_integrate: non-finite profile");
    x = oscillator_transition(a, b, h) * x;
    tr.psi.push_back(x[0]);
    tr.dpsi.push_back(x[1]);
  }
  return tr;
}

inline ResonatorTrajectory resonator_integrate(const Resonator& r, Eigen::Vector2d x0,
                                               const std::vector<double>& grid) {
  return resonator_integrate([a = r.A](double) { return a; }, r.B, x0, grid);
}

// Resonator driven by an eigenfunction's frequency profile, started on the
// offset eigenfunction. Returns psi - offset, which tracks phi_j.
inline std::vector<double> resonator_track_eigenfunction(const EigenBasis& basis, int j, double offset,
                                                         const std::vector<double>& grid) {
  auto profile = [&](double t) {
    double v = basis.eigenfunction(j, t) + offset;
    if (std::abs(v) < 1e-6) throw InvalidParameter("resonator profile: offset too small, carrier crosses zero");
    return basis.eigenfunction_second_derivative(j, t) / v;
  };
  Eigen::Vector2d x0(basis.eigenfunction(j, grid.front()) + offset, basis.eigenfunction_first_derivative(j, grid.front()));
  ResonatorTrajectory tr = resonator_integrate(profile, 0.0, x0, grid);
  for (double& v : tr.psi) v -= offset;
  return tr.psi;
}

struct ResonatorFitResult {
  ResonatorModel model;
  FitResult fit;
  ParamSpace space;
};

namespace detail {

inline double resonator_loglik(const ResonatorModel& m, const std::vector<double>& t, const std::vector<double>& y,
                               double bias_prior) {
  const int J = static_cast<int>(m.resonators.size());
  const int C = 2 * J + (m.bias ? 1 : 0);
  GaussianState s;
  s.mean = Eigen::VectorXd::Zero(C);
  s.cov = Eigen::MatrixXd::Zero(C, C);
  s.t = t.front();
  for (int j = 0; j < J; ++j) {
    s.cov(2 * j, 2 * j) = m.prior_var;
    s.cov(2 * j + 1, 2 * j + 1) = std::max(-m.resonators[j].A, 1e-12) * m.prior_var;
  }
  if (m.bias) s.cov(C - 1, C - 1) = bias_prior;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, C);
  for (int j = 0; j < J; ++j) H(0, 2 * j) = 1.0;
  if (m.bias) H(0, C - 1) = 1.0;
  Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(1, 1, m.noise_var);
  double ll = 0.0;
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(C, C), Q = Eigen::MatrixXd::Zero(C, C);
  Eigen::VectorXd b;
  for (size_t k = 0; k < t.size(); ++k) {
    if (k > 0) {
      double h = t[k] - t[k - 1];
      for (int j = 0; j < J; ++j) {
        LtiSde blk = resonator_block(m.resonators[j].A, m.resonators[j].B, m.q);
        G.block(2 * j, 2 * j, 2, 2) = oscillator_transition(m.resonators[j].A, m.resonators[j].B, h);
        Q.block(2 * j, 2 * j, 2, 2) = van_loan(blk.F, blk.noise(), h).Q;
      }
      s = predict(s, G, Q, b);
    }
    UpdateResult r = update(s, H, Z, Eigen::VectorXd::Constant(1, y[k]));
    s = r.state;
    ll += r.log_likelihood;
  }
  return ll;
}

}  // namespace detail

// Fits J constant-coefficient resonators plus a bias to a time series by
// maximizing the Kalman innovation log-likelihood.
inline ResonatorFitResult resonator_fit(const std::vector<double>& t, const std::vector<double>& y, int J,
                                        double period, int budget, std::uint64_t seed, int restarts = 1) {
  if (J < 1) throw InvalidParameter("resonator_fit: need at least one resonator");
  if (t.size() != y.size() || t.size() < 2) throw InvalidParameter("resonator_fit: need matching t and y");
  if (!(period > 0)) throw InvalidParameter("resonator_fit: period must be positive");
  double mean = 0.0, var = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  for (double v : y) var += (v - mean) * (v - mean);
  var = std::max(var / static_cast<double>(y.size()), 1e-12);
  double bias_prior = var + mean * mean;

  ParamSpace space;
  double fmax = 2.0 * J / period;
  for (int j = 0; j < J; ++j) space.add("f" + std::to_string(j + 1), (j + 1) / period, 0.0, fmax, Transform::Logit);
  for (int j = 0; j < J; ++j) space.add("decay" + std::to_string(j + 1), 0.1 / period, 1e-9 / period, 10.0 / period);
  space.add("q", 1e-2 * var / period, 1e-14 * var / period, 1e4 * var / period);
  space.add("noise_var", 1e-2 * var, 1e-10 * var, 10.0 * var);

  auto unpack = [&](const Eigen::VectorXd& th) {
    ResonatorModel m;
    m.prior_var = var;
    for (int j = 0; j < J; ++j) {
      double w = 2.0 * std::numbers::pi * th[j];
      m.resonators.push_back({-w * w, -th[J + j]});
    }
    m.q = th[2 * J];
    m.noise_var = th[2 * J + 1];
    return m;
  };
  Objective obj = [&](const Eigen::VectorXd& th) {
    try {
      return detail::resonator_loglik(unpack(th), t, y, bias_prior);
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  ResonatorFitResult out;
  out.fit = fit(obj, space, budget, restarts, seed);
  out.model = unpack(out.fit.params);
  out.space = space;
  return out;
}

}  // namespace plfm
