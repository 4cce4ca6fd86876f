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
#include <limits>
#include <numbers>
#include <vector>

#include "plfm/errors.hpp"
#include "plfm/lfm.hpp"
#include "plfm/linalg.hpp"
#include "plfm/rng.hpp"
#include "plfm/state.hpp"

namespace plfm {

inline GaussianState predict(const GaussianState& s, const Eigen::MatrixXd& G, const Eigen::MatrixXd& Q,
                             const Eigen::VectorXd& b = {}) {
  if (G.rows() != s.dim() || G.cols() != s.dim() || Q.rows() != s.dim() || Q.cols() != s.dim() ||
      (b.size() != 0 && b.size() != s.dim()))
    throw InvalidParameter("predict: dimension mismatch");
  GaussianState out;
  out.mean = G * s.mean;
  if (b.size() > 0) out.mean += b;
  out.cov = symmetrize(G * s.cov * G.transpose() + Q);
  out.t = s.t;
  return out;
}

inline GaussianState predict(const GaussianState& s, const Transition& tr) {
  GaussianState out = predict(s, tr.G, tr.Q, tr.b);
  out.t = tr.t1;
  return out;
}

// Uses the [[Phi, M], [0, I]] structure; cost O(a w^2) instead of O(C^3).
inline GaussianState predict(const GaussianState& s, const ConstantWeightTransition& tr) {
  const Eigen::Index a = tr.Phi.rows(), w = tr.M.cols();
  if (a + w != s.dim()) throw InvalidParameter("predict: dimension mismatch");
  GaussianState out;
  out.t = tr.t1;
  out.mean = s.mean;
  out.mean.head(a) = tr.Phi * s.mean.head(a) + tr.M * s.mean.tail(w) + tr.b;
  const auto paa = s.cov.topLeftCorner(a, a);
  const auto paw = s.cov.topRightCorner(a, w);
  const auto pww = s.cov.bottomRightCorner(w, w);
  Eigen::MatrixXd y = tr.Phi * paw + tr.M * pww;
  Eigen::MatrixXd x = tr.Phi * paa + tr.M * paw.transpose();
  out.cov = s.cov;
  out.cov.topLeftCorner(a, a) = symmetrize(x * tr.Phi.transpose() + y * tr.M.transpose() + tr.Qa);
  out.cov.topRightCorner(a, w) = y;
  out.cov.bottomLeftCorner(w, a) = y.transpose();
  return out;
}

struct UpdateResult {
  GaussianState state;
  Eigen::VectorXd innovation;
  Eigen::MatrixXd S;
  double log_likelihood = 0.0;  // log N(y; H mean, S)
};

inline double gaussian_log_density(const Eigen::VectorXd& v, const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw NumericError("innovation covariance is not positive definite");
  double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  double quad = v.dot(llt.solve(v));
  return -0.5 * (static_cast<double>(v.size()) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

// Kalman update with the Joseph-form covariance.
inline UpdateResult update(const GaussianState& s, const Eigen::MatrixXd& H, const Eigen::MatrixXd& Z,
                           const Eigen::VectorXd& y) {
  if (H.cols() != s.dim() || H.rows() != y.size() || Z.rows() != y.size() || Z.cols() != y.size())
    throw InvalidParameter("update: dimension mismatch");
  UpdateResult r;
  r.innovation = y - H * s.mean;
  Eigen::MatrixXd pht = s.cov * H.transpose();
  r.S = symmetrize(H * pht + Z);
  Eigen::LLT<Eigen::MatrixXd> llt(r.S);
  if (llt.info() != Eigen::Success) throw NumericError("update: singular innovation covariance");
  Eigen::MatrixXd K = llt.solve(pht.transpose()).transpose();
  Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(s.dim(), s.dim()) - K * H;
  r.state.mean = s.mean + K * r.innovation;
  r.state.cov = symmetrize(ikh * s.cov * ikh.transpose() + K * Z * K.transpose());
  r.state.t = s.t;
  double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  double quad = r.innovation.dot(llt.solve(r.innovation));
  r.log_likelihood =
      -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + logdet + quad);
  return r;
}

// Predict to t1, splitting at changepoints. Uses the structured transition
// whenever the model has constant weights.
inline GaussianState propagate(const AugmentedModel& model, GaussianState s, double t1,
                               const Eigen::VectorXd& u = {}, const Eigen::MatrixXd* target_drift = nullptr) {
  if (t1 < s.t) throw InvalidParameter("propagate: cannot go backwards in time");
  std::vector<double> cps = model.changepoints_between(s.t, t1);
  auto advance = [&](double to) {
    if (!(to > s.t + 1e-12 * std::max(1.0, std::abs(to)))) return;
    if (model.has_varying_weights())
      s = predict(s, model.discretize(s.t, to, u, target_drift));
    else
      s = predict(s, model.constant_weight_transition(s.t, to, u, target_drift));
  };
  for (double tau : cps) {
    advance(tau);
    s.t = tau;
    s = model.apply_changepoint(s, tau);
  }
  advance(t1);
  s.t = t1;
  return s;
}

// Sequential predict/update with an accumulated innovation log-likelihood.
class KalmanRun {
 public:
  KalmanRun(const AugmentedModel& model, GaussianState init) : model_(model), state_(std::move(init)) {}

  void predict_to(double t1, const Eigen::VectorXd& u = {}, const Eigen::MatrixXd* target_drift = nullptr) {
    state_ = propagate(model_, std::move(state_), t1, u, target_drift);
  }

  UpdateResult update(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
    UpdateResult r = plfm::update(state_, H, Z, y);
    state_ = r.state;
    log_likelihood_ += r.log_likelihood;
    ++updates_;
    return r;
  }

  UpdateResult update(const Eigen::VectorXd& y) { return update(model_.H(), model_.Z(), y); }

  const GaussianState& state() const { return state_; }
  void set_state(GaussianState s) { state_ = std::move(s); }
  double log_likelihood() const {
    if (updates_ == 0) throw InvalidParameter("log_likelihood: no measurements processed");
    return log_likelihood_;
  }
  int updates() const { return updates_; }

 private:
  const AugmentedModel& model_;
  GaussianState state_;
  double log_likelihood_ = 0.0;
  int updates_ = 0;
};

struct RbpfOptions {
  int particles = 64;
  double step = 10.0;
  double horizon = 1440.0;
  std::uint64_t seed = 0;
  double hysteresis = 0.0;
  int tint_index = 0;  // state index of the controlled temperature
  std::function<double(double)> setpoint;
  // Known-input vector for a step starting at t with the given heater state.
  std::function<Eigen::VectorXd(double t, int heater)> inputs;
  // false: no sampling or conditioning, heater decided from the particle mean.
  bool sample_and_condition = true;
};

struct RbpfStep {
  double t = 0.0;
  double mean = 0.0;
  double var = 0.0;
  double heater_fraction = 0.0;  // share of particles heating during the step ending at t
};

// Rao-Blackwellised particle prediction with a thermostat in the loop. The
// covariance is identical across particles (conditioning on a scalar sample
// changes only the mean), so it is propagated once per step.
inline std::vector<RbpfStep> rbpf_predict_day(const AugmentedModel& model, const GaussianState& init,
                                              const RbpfOptions& opt) {
  if (opt.particles < 1) throw InvalidParameter("rbpf: need at least one particle");
  if (!(opt.step > 0) || !(opt.horizon > 0)) throw InvalidParameter("rbpf: step and horizon must be positive");
  if (!opt.setpoint || !opt.inputs) throw InvalidParameter("rbpf: setpoint and inputs are required");
  const int P = opt.particles, C = model.dim(), ti = opt.tint_index;
  if (ti < 0 || ti >= C) throw IndexError("rbpf: tint_index out of range");

  Eigen::MatrixXd means = init.mean.replicate(1, P);
  Eigen::MatrixXd cov = init.cov;
  std::vector<CounterRng> rngs;
  rngs.reserve(P);
  for (int p = 0; p < P; ++p) rngs.emplace_back(opt.seed, static_cast<std::uint64_t>(p));
  Eigen::VectorXd sampled(P);
  std::vector<int> heater(P, 0);

  auto condition = [&]() {
    double v = cov(ti, ti);
    if (!opt.sample_and_condition) {
      sampled = means.row(ti).transpose();
      return;
    }
    double sd = std::sqrt(std::max(v, 0.0));
    for (int p = 0; p < P; ++p) sampled[p] = means(ti, p) + sd * rngs[p].normal();
    if (v <= 1e-14) return;
    Eigen::VectorXd gain = cov.col(ti) / v;
    for (int p = 0; p < P; ++p) means.col(p) += gain * (sampled[p] - means(ti, p));
    cov = symmetrize(cov - gain * cov.row(ti));
  };
  condition();

  std::vector<RbpfStep> out;
  const int steps = static_cast<int>(std::llround(opt.horizon / opt.step));
  double t = init.t;
  for (int k = 0; k < steps; ++k) {
    double t1 = init.t + (k + 1) * opt.step;
    double sp = opt.setpoint(t);
    if (!std::isfinite(sp) && sp != -std::numeric_limits<double>::infinity())
      throw InvalidParameter("rbpf: non-finite setpoint");
    for (int p = 0; p < P; ++p) {
      if (sampled[p] < sp - 0.5 * opt.hysteresis)
        heater[p] = 1;
      else if (sampled[p] > sp + 0.5 * opt.hysteresis || opt.hysteresis == 0.0)
        heater[p] = 0;
    }
    Eigen::VectorXd u_off = opt.inputs(t, 0), u_on = opt.inputs(t, 1);

    // Segment the step at changepoints; the transition is shared and b depends on the heater.
    std::vector<double> bounds = model.changepoints_between(t, t1);
    double from = t;
    auto advance = [&](double to) {
      if (!(to > from + 1e-12 * std::max(1.0, std::abs(to)))) return;
      Eigen::MatrixXd G, Q;
      Eigen::VectorXd b_off, b_on;
      if (model.has_varying_weights()) {
        Transition a = model.discretize(from, to, u_off);
        G = std::move(a.G);
        Q = std::move(a.Q);
        b_off = std::move(a.b);
        b_on = model.input_response(from, to, u_on);
      } else {
        ConstantWeightTransition a = model.constant_weight_transition(from, to, u_off);
        G = a.dense_G();
        Q = a.dense_Q();
        b_off = a.dense_b();
        b_on = model.input_response(from, to, u_on);
      }
      Eigen::MatrixXd next = G * means;
      for (int p = 0; p < P; ++p) next.col(p) += heater[p] ? b_on : b_off;
      means = std::move(next);
      cov = symmetrize(G * cov * G.transpose() + Q);
      from = to;
    };
    for (double tau : bounds) {
      advance(tau);
      AugmentedModel::JumpMap jm = model.jump_map(tau);
      means = jm.scale.asDiagonal() * means;
      cov = jm.scale.asDiagonal() * cov * jm.scale.asDiagonal();
      cov.diagonal() += jm.added;
      from = tau;
    }
    advance(t1);

    RbpfStep st;
    st.t = t1;
    double m = means.row(ti).mean();
    st.mean = m;
    st.var = cov(ti, ti) + (means.row(ti).array() - m).square().mean();
    int on = 0;
    for (int h : heater) on += h;
    st.heater_fraction = static_cast<double>(on) / P;
    out.push_back(st);
    condition();
    t = t1;
  }
  return out;
}

}  // namespace plfm
