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
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plfm/eigenbasis.hpp"
#include "plfm/errors.hpp"
#include "plfm/linalg.hpp"
#include "plfm/lti.hpp"
#include "plfm/state.hpp"

namespace plfm {

enum class Quasi { None, Cqm, Sqm, Wqm };

// Weight-process description for a periodic force. sigma/l serve CQM and SQM,
// xi0/xi serve WQM; changepoints sit at epoch + n * period of the basis.
struct QuasiSpec {
  Quasi type = Quasi::None;
  double sigma = 1.0;
  double l = 1.0;
  double xi0 = 1.0;
  double xi = 1.0;
  double epoch = 0.0;
};

struct ForceSpec {
  std::string name;
  Eigen::VectorXd coupling;  // column of L_p over the target states
  // Non-periodic forces.
  std::optional<LtiSde> sde;
  Eigen::MatrixXd known_input;  // p x k, empty means none
  Eigen::MatrixXd init_cov;     // p x p, empty means the stationary covariance
  // Periodic forces.
  std::shared_ptr<const EigenBasis> basis;
  QuasiSpec quasi;

  bool periodic() const { return basis != nullptr; }
};

inline ForceSpec nonperiodic_force(std::string name, LtiSde sde, Eigen::VectorXd coupling) {
  ForceSpec f;
  f.name = std::move(name);
  f.sde = std::move(sde);
  f.coupling = std::move(coupling);
  return f;
}

inline ForceSpec periodic_force(std::string name, std::shared_ptr<const EigenBasis> basis, QuasiSpec quasi,
                                Eigen::VectorXd coupling) {
  ForceSpec f;
  f.name = std::move(name);
  f.basis = std::move(basis);
  f.quasi = quasi;
  f.coupling = std::move(coupling);
  return f;
}

struct TargetSpec {
  Eigen::MatrixXd F;            // E x E
  Eigen::MatrixXd noise;        // E x E diffusion, empty means none
  Eigen::MatrixXd known_input;  // E x k, empty means none
  Eigen::VectorXd init_mean;    // empty means zero
  Eigen::MatrixXd init_cov;     // empty means zero
};

// Measurement of a force's process value (non-periodic forces only).
struct ForceObservation {
  int row = 0;
  int force = 0;
  double coef = 1.0;
};

struct MeasurementSpec {
  Eigen::MatrixXd H_target;  // m x E
  std::vector<ForceObservation> force_rows;
  Eigen::MatrixXd Z;  // m x m
};

struct Span {
  int start = 0;
  int size = 0;
};

struct StateLayout {
  int E = 0;
  int C = 0;
  int a = 0;  // target plus non-periodic blocks
  std::vector<Span> force_spans;  // per force, in declaration order
  std::vector<bool> force_periodic;
  int weight_start() const { return a; }
  int weight_count() const { return C - a; }
};

// Structured transition [[Phi, M], [0, I]] for constant weights.
struct ConstantWeightTransition {
  Eigen::MatrixXd Phi;  // a x a
  Eigen::MatrixXd M;    // a x w
  Eigen::MatrixXd Qa;   // a x a
  Eigen::VectorXd b;    // a
  double t1 = 0.0;

  Eigen::MatrixXd dense_G() const {
    const Eigen::Index a = Phi.rows(), w = M.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(a + w, a + w);
    g.topLeftCorner(a, a) = Phi;
    g.topRightCorner(a, w) = M;
    return g;
  }
  Eigen::MatrixXd dense_Q() const {
    const Eigen::Index a = Phi.rows(), w = M.cols();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(a + w, a + w);
    q.topLeftCorner(a, a) = Qa;
    return q;
  }
  Eigen::VectorXd dense_b() const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Phi.rows() + M.cols());
    out.head(b.size()) = b;
    return out;
  }
};

struct Transition {
  Eigen::MatrixXd G;
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  double t1 = 0.0;
};

class AugmentedModel {
 public:
  static AugmentedModel assemble(const TargetSpec& target, std::vector<ForceSpec> forces,
                                 const MeasurementSpec& measurement) {
    AugmentedModel m;
    const int E = static_cast<int>(target.F.rows());
    if (E < 1 || target.F.cols() != E) throw InvalidParameter("assemble: target F must be square and non-empty");
    int k = 0;
    if (target.known_input.size() > 0) {
      if (target.known_input.rows() != E) throw InvalidParameter("assemble: target known_input rows != E");
      k = static_cast<int>(target.known_input.cols());
    }
    for (const auto& f : forces)
      if (f.known_input.size() > 0) {
        if (k != 0 && f.known_input.cols() != k) throw InvalidParameter("assemble: inconsistent input count");
        k = static_cast<int>(f.known_input.cols());
      }
    m.inputs_ = k;

    StateLayout& lay = m.layout_;
    lay.E = E;
    int pos = E;
    lay.force_spans.resize(forces.size());
    lay.force_periodic.resize(forces.size());
    for (size_t r = 0; r < forces.size(); ++r) {
      const ForceSpec& f = forces[r];
      if (f.coupling.size() != E) throw InvalidParameter("assemble: coupling for force '" + f.name + "' must have E entries");
      lay.force_periodic[r] = f.periodic();
      if (f.periodic()) continue;
      if (!f.sde) throw InvalidParameter("assemble: force '" + f.name + "' needs an SDE block or a basis");
      lay.force_spans[r] = {pos, f.sde->dim()};
      pos += f.sde->dim();
    }
    lay.a = pos;
    for (size_t r = 0; r < forces.size(); ++r) {
      if (!forces[r].periodic()) continue;
      if (forces[r].basis->size() < 1) throw InvalidParameter("assemble: empty basis for '" + forces[r].name + "'");
      lay.force_spans[r] = {pos, forces[r].basis->size()};
      pos += forces[r].basis->size();
    }
    lay.C = pos;
    const int a = lay.a, C = lay.C;

    m.Fa_ = Eigen::MatrixXd::Zero(a, a);
    m.Wa_ = Eigen::MatrixXd::Zero(a, a);
    m.Ba_ = Eigen::MatrixXd::Zero(a, k);
    m.Fa_.topLeftCorner(E, E) = target.F;
    if (target.noise.size() > 0) m.Wa_.topLeftCorner(E, E) = target.noise;
    if (target.known_input.size() > 0) m.Ba_.topRows(E) = target.known_input;

    m.init_mean_ = Eigen::VectorXd::Zero(C);
    m.init_cov_ = Eigen::MatrixXd::Zero(C, C);
    if (target.init_mean.size() > 0) m.init_mean_.head(E) = target.init_mean;
    if (target.init_cov.size() > 0) m.init_cov_.topLeftCorner(E, E) = target.init_cov;

    m.weight_drift_ = Eigen::VectorXd::Zero(C - a);
    m.weight_noise_ = Eigen::VectorXd::Zero(C - a);
    m.weight_init_var_ = Eigen::VectorXd::Zero(C - a);

    for (size_t r = 0; r < forces.size(); ++r) {
      const ForceSpec& f = forces[r];
      Span s = lay.force_spans[r];
      if (!f.periodic()) {
        const LtiSde& sde = *f.sde;
        m.Fa_.block(s.start, s.start, s.size, s.size) = sde.F;
        m.Fa_.block(0, s.start, E, s.size) = f.coupling * sde.extract;
        m.Wa_.block(s.start, s.start, s.size, s.size) = sde.noise();
        if (f.known_input.size() > 0) m.Ba_.middleRows(s.start, s.size) = f.known_input;
        m.init_cov_.block(s.start, s.start, s.size, s.size) =
            f.init_cov.size() > 0 ? f.init_cov : stationary_covariance(sde);
        continue;
      }
      PeriodicPart p;
      p.force = static_cast<int>(r);
      p.basis = f.basis;
      p.quasi = f.quasi;
      p.coupling = Eigen::VectorXd::Zero(a);
      p.coupling.head(E) = f.coupling;
      p.span = s;
      const QuasiSpec& qs = f.quasi;
      if (qs.type == Quasi::Cqm || qs.type == Quasi::Sqm) {
        if (!(qs.sigma > 0 && qs.l > 0)) throw InvalidParameter("assemble: quasi sigma and l must be positive");
      }
      if (qs.type == Quasi::Wqm && !(qs.xi0 >= 0 && qs.xi > 0))
        throw InvalidParameter("assemble: WQM needs xi0 >= 0 and xi > 0");
      for (int j = 0; j < s.size; ++j) {
        double mu = f.basis->mu_scaled(j);
        int w = s.start - a + j;
        switch (qs.type) {
          case Quasi::None:
            m.weight_init_var_[w] = mu;
            break;
          case Quasi::Cqm:
            m.weight_drift_[w] = -1.0 / qs.l;
            m.weight_noise_[w] = 2.0 * mu * qs.sigma * qs.sigma / qs.l;
            m.weight_init_var_[w] = mu * qs.sigma * qs.sigma;
            break;
          case Quasi::Sqm:
            m.weight_init_var_[w] = mu * qs.sigma * qs.sigma;
            p.jumps.push_back(sqm_jump(qs.sigma * std::sqrt(mu), qs.l));
            break;
          case Quasi::Wqm:
            // Variance at t0 depends on the starting cycle; set in initial_state.
            m.weight_init_var_[w] = mu;
            p.jumps.push_back(wqm_jump(mu * qs.xi));
            break;
        }
      }
      m.periodic_.push_back(std::move(p));
    }

    const Eigen::Index rows = measurement.H_target.rows();
    if (measurement.H_target.cols() != E) throw InvalidParameter("assemble: H_target must have E columns");
    if (measurement.Z.rows() != rows || measurement.Z.cols() != rows)
      throw InvalidParameter("assemble: Z must be square with one row per measurement");
    m.H_ = Eigen::MatrixXd::Zero(rows, C);
    m.H_.leftCols(E) = measurement.H_target;
    for (const auto& fo : measurement.force_rows) {
      if (fo.row < 0 || fo.row >= rows || fo.force < 0 || fo.force >= static_cast<int>(forces.size()) ||
          forces[fo.force].periodic())
        throw InvalidParameter("assemble: bad force observation");
      Span s = lay.force_spans[fo.force];
      m.H_.block(fo.row, s.start, 1, s.size) += fo.coef * forces[fo.force].sde->extract;
    }
    m.Z_ = measurement.Z;
    m.forces_ = std::move(forces);
    return m;
  }

  const StateLayout& layout() const { return layout_; }
  int dim() const { return layout_.C; }
  int input_count() const { return inputs_; }
  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::MatrixXd& Z() const { return Z_; }
  const Eigen::MatrixXd& Fa() const { return Fa_; }
  const std::vector<ForceSpec>& forces() const { return forces_; }
  bool has_varying_weights() const { return (weight_drift_.array() != 0.0).any() || (weight_noise_.array() != 0.0).any(); }

  // m(t): a x w coupling of weight states into the target rows.
  Eigen::MatrixXd coupling_matrix(double t) const {
    const int a = layout_.a;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a, layout_.C - a);
    for (size_t i = 0; i < periodic_.size(); ++i) {
      const auto& p = periodic_[i];
      const Eigen::MatrixXd* nodes = cached_nodes(i, t, t + (cache_ ? cache_->step : 0.0));
      if (nodes)
        out.middleCols(p.span.start - a, p.span.size) = p.coupling * nodes->col(kStartColumn).transpose();
      else
        out.middleCols(p.span.start - a, p.span.size) = p.coupling * p.basis->eigenfunctions(t).transpose();
    }
    return out;
  }

  // Tabulates eigenfunction values at the quadrature nodes of the uniform grid
  // origin + k * step. One period of steps is stored per periodic force, so the
  // step must divide every basis period. Off-grid steps fall back to direct
  // evaluation.
  void enable_step_cache(double origin, double step) {
    if (!(step > 0) || !std::isfinite(origin)) throw InvalidParameter("enable_step_cache: need step > 0");
    auto c = std::make_shared<StepCache>();
    c->origin = origin;
    c->step = step;
    using Rule = boost::math::quadrature::gauss<double, 8>;
    const auto& xs = Rule::abscissa();
    // Transition pieces that depend only on the step length while Fa is fixed.
    const int a = layout_.a;
    Discretized d = van_loan(Fa_, Wa_, step);
    c->Phi = std::move(d.G);
    c->Qa = std::move(d.Q);
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * a, 2 * a);
    aug.topLeftCorner(a, a) = Fa_;
    aug.topRightCorner(a, a) = Eigen::MatrixXd::Identity(a, a);
    c->input_gain = expm(aug * step).topRightCorner(a, a);
    for (size_t q = 0; q < xs.size(); ++q) {
      c->node_phi.push_back(expm(Fa_ * (0.5 * step + 0.5 * step * xs[q])));
      c->node_phi.push_back(expm(Fa_ * (0.5 * step - 0.5 * step * xs[q])));
    }
    for (const auto& p : periodic_) {
      double ratio = p.basis->period() / step;
      long k = std::lround(ratio);
      if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio)
        throw InvalidParameter("enable_step_cache: step must divide the basis period");
      std::vector<Eigen::MatrixXd> tables(static_cast<size_t>(k));
      for (long i = 0; i < k; ++i) {
        double t0 = origin + static_cast<double>(i) * step, mid = t0 + 0.5 * step, half = 0.5 * step;
        Eigen::MatrixXd m(p.span.size, kStartColumn + 1);
        for (size_t q = 0; q < xs.size(); ++q) {
          m.col(2 * q) = p.basis->eigenfunctions(mid - half * xs[q]);
          m.col(2 * q + 1) = p.basis->eigenfunctions(mid + half * xs[q]);
        }
        m.col(kStartColumn) = p.basis->eigenfunctions(t0);
        tables[static_cast<size_t>(i)] = std::move(m);
      }
      c->tables.push_back(std::move(tables));
    }
    cache_ = std::move(c);
  }

  void disable_step_cache() { cache_.reset(); }

  Eigen::MatrixXd drift(double t, const Eigen::MatrixXd* target_drift = nullptr) const {
    const int a = layout_.a, C = layout_.C;
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(C, C);
    f.topLeftCorner(a, a) = Fa_;
    if (target_drift) f.topLeftCorner(layout_.E, layout_.E) = *target_drift;
    f.topRightCorner(a, C - a) = coupling_matrix(t);
    f.bottomRightCorner(C - a, C - a).diagonal() = weight_drift_;
    return f;
  }

  Eigen::MatrixXd noise() const {
    const int a = layout_.a, C = layout_.C;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(C, C);
    w.topLeftCorner(a, a) = Wa_;
    w.bottomRightCorner(C - a, C - a).diagonal() = weight_noise_;
    return w;
  }

  // Changepoint times of any quasi force in the half-open interval (t0, t1].
  std::vector<double> changepoints_between(double t0, double t1) const {
    std::vector<double> out;
    for (const auto& p : periodic_) {
      if (p.quasi.type != Quasi::Sqm && p.quasi.type != Quasi::Wqm) continue;
      double d = p.basis->period();
      double n0 = std::floor((t0 - p.quasi.epoch) / d + tol_) + 1.0;
      for (double n = n0;; n += 1.0) {
        double tau = p.quasi.epoch + n * d;
        if (tau > t1 + tol_ * d) break;
        out.push_back(tau);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [&](double x, double y) { return std::abs(x - y) < 1e-9 * std::max(1.0, std::abs(x)); }),
              out.end());
    return out;
  }

  bool is_changepoint(double tau) const {
    for (const auto& p : periodic_)
      if (is_changepoint_of(p, tau)) return true;
    return false;
  }

  // General transition with m frozen at t0; u is held constant over the step.
  Transition discretize(double t0, double t1, const Eigen::VectorXd& u = {},
                        const Eigen::MatrixXd* target_drift = nullptr) const {
    check_step(t0, t1);
    double dt = t1 - t0;
    Eigen::MatrixXd f = drift(t0, target_drift);
    Discretized d = van_loan(f, noise(), dt);
    Transition tr;
    tr.G = std::move(d.G);
    tr.Q = std::move(d.Q);
    tr.b = Eigen::VectorXd::Zero(layout_.C);
    if (inputs_ > 0 && u.size() > 0) {
      check_input(u);
      Eigen::VectorXd c = Eigen::VectorXd::Zero(layout_.C);
      c.head(layout_.a) = Ba_ * u;
      if (c.squaredNorm() > 0) tr.b = integrate_constant_input(f, c, dt);
    }
    tr.t1 = t1;
    return tr;
  }

  // Known-input contribution b over [t0, t1] alone, consistent with the transition
  // that the model would use for this step.
  Eigen::VectorXd input_response(double t0, double t1, const Eigen::VectorXd& u,
                                 const Eigen::MatrixXd* target_drift = nullptr) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(layout_.C);
    if (inputs_ == 0 || u.size() == 0) return out;
    check_input(u);
    double dt = t1 - t0;
    if (has_varying_weights()) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(layout_.C);
      c.head(layout_.a) = Ba_ * u;
      if (c.squaredNorm() > 0) out = integrate_constant_input(drift(t0, target_drift), c, dt);
      return out;
    }
    Eigen::MatrixXd fa = Fa_;
    if (target_drift) fa.topLeftCorner(layout_.E, layout_.E) = *target_drift;
    Eigen::VectorXd c = Ba_ * u;
    if (c.squaredNorm() > 0) out.head(layout_.a) = integrate_constant_input(fa, c, dt);
    return out;
  }

  // Exact transition when all weights are constant between changepoints; the
  // M-block integral uses 8-point Gauss-Legendre quadrature.
  ConstantWeightTransition constant_weight_transition(double t0, double t1, const Eigen::VectorXd& u = {},
                                                      const Eigen::MatrixXd* target_drift = nullptr) const {
    if (has_varying_weights())
      throw ContractViolation("constant_weight_transition: model has time-varying weights");
    check_step(t0, t1);
    const int a = layout_.a, E = layout_.E;
    double dt = t1 - t0;
    Eigen::MatrixXd fa = Fa_;
    if (target_drift) fa.topLeftCorner(E, E) = *target_drift;
    ConstantWeightTransition tr;
    tr.t1 = t1;
    const bool fixed = cache_ && !target_drift && std::abs(dt - cache_->step) <= 1e-9 * cache_->step;
    if (fixed) {
      tr.Phi = cache_->Phi;
      tr.Qa = cache_->Qa;
    } else {
      Discretized d = van_loan(fa, Wa_, dt);
      tr.Phi = std::move(d.G);
      tr.Qa = std::move(d.Q);
    }
    tr.b = Eigen::VectorXd::Zero(a);
    if (inputs_ > 0 && u.size() > 0) {
      check_input(u);
      Eigen::VectorXd c = Ba_ * u;
      if (c.squaredNorm() > 0) tr.b = fixed ? Eigen::VectorXd(cache_->input_gain * c) : integrate_constant_input(fa, c, dt);
    }
    tr.M = Eigen::MatrixXd::Zero(a, layout_.C - a);
    if (periodic_.empty()) return tr;
    using Rule = boost::math::quadrature::gauss<double, 8>;
    const auto& xs = Rule::abscissa();
    const auto& ws = Rule::weights();
    double mid = 0.5 * (t0 + t1), half = 0.5 * dt;
    std::vector<const Eigen::MatrixXd*> nodes(periodic_.size());
    for (size_t i = 0; i < periodic_.size(); ++i) nodes[i] = cached_nodes(i, t0, t1);
    for (size_t i = 0; i < xs.size(); ++i) {
      for (int sgn : {-1, 1}) {
        double s = mid + sgn * half * xs[i];
        double w = half * ws[i];
        const Eigen::Index node = 2 * static_cast<Eigen::Index>(i) + (sgn > 0 ? 1 : 0);
        Eigen::MatrixXd phi = fixed    ? cache_->node_phi[static_cast<size_t>(node)]
                              : a == 1 ? Eigen::MatrixXd::Constant(1, 1, std::exp(fa(0, 0) * (t1 - s)))
                                       : expm(fa * (t1 - s));
        for (size_t k = 0; k < periodic_.size(); ++k) {
          const auto& p = periodic_[k];
          Eigen::VectorXd col = w * (phi * p.coupling);
          auto block = tr.M.middleCols(p.span.start - a, p.span.size);
          if (nodes[k])
            block.noalias() += col * nodes[k]->col(node).transpose();
          else
            block.noalias() += col * p.basis->eigenfunctions(s).transpose();
        }
      }
    }
    return tr;
  }

  // Diagonal jump map at tau: per-state scale and added variance.
  struct JumpMap {
    Eigen::VectorXd scale;
    Eigen::VectorXd added;
  };

  JumpMap jump_map(double tau) const {
    if (!is_changepoint(tau)) throw ContractViolation("apply_changepoint: time is not a registered changepoint");
    JumpMap jm{Eigen::VectorXd::Ones(layout_.C), Eigen::VectorXd::Zero(layout_.C)};
    for (const auto& p : periodic_) {
      if (!is_changepoint_of(p, tau)) continue;
      for (int j = 0; j < p.span.size; ++j) {
        jm.scale[p.span.start + j] = p.jumps[j].G_star;
        jm.added[p.span.start + j] = p.jumps[j].Q_star;
      }
    }
    return jm;
  }

  GaussianState apply_changepoint(const GaussianState& state, double tau) const {
    JumpMap jm = jump_map(tau);
    GaussianState out = state;
    out.mean = jm.scale.cwiseProduct(state.mean);
    out.cov = jm.scale.asDiagonal() * state.cov * jm.scale.asDiagonal();
    out.cov.diagonal() += jm.added;
    out.cov = symmetrize(out.cov);
    out.t = tau;
    return out;
  }

  // Block-diagonal prior at t0.
  GaussianState initial_state(double t0) const {
    GaussianState s;
    s.mean = init_mean_;
    s.cov = init_cov_;
    s.t = t0;
    const int a = layout_.a;
    for (const auto& p : periodic_) {
      double scale = 1.0;
      if (p.quasi.type == Quasi::Wqm) {
        long c = cycle_index(t0, p.basis->period(), p.quasi.epoch);
        if (c < 0) throw InvalidParameter("initial_state: time before WQM epoch");
        scale = p.quasi.xi0 + static_cast<double>(c) * p.quasi.xi;
      }
      for (int j = 0; j < p.span.size; ++j) {
        int i = p.span.start + j;
        s.cov(i, i) = scale * weight_init_var_[i - a];
      }
    }
    return s;
  }

  // Row vector h with h * X = u_r(t).
  Eigen::RowVectorXd force_row(int r, double t) const {
    if (r < 0 || r >= static_cast<int>(forces_.size())) throw IndexError("force index out of range");
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(layout_.C);
    Span s = layout_.force_spans[r];
    if (forces_[r].periodic())
      h.segment(s.start, s.size) = forces_[r].basis->eigenfunctions(t).transpose();
    else
      h.segment(s.start, s.size) = forces_[r].sde->extract;
    return h;
  }

  Eigen::VectorXd force_value(const Eigen::VectorXd& mean, double t) const {
    if (mean.size() != layout_.C) throw InvalidParameter("force_value: state dimension mismatch");
    Eigen::VectorXd out(forces_.size());
    for (size_t r = 0; r < forces_.size(); ++r) out[r] = force_row(static_cast<int>(r), t).dot(mean);
    return out;
  }

 private:
  struct PeriodicPart {
    int force = 0;
    std::shared_ptr<const EigenBasis> basis;
    QuasiSpec quasi;
    Eigen::VectorXd coupling;  // padded to a
    Span span;
    std::vector<JumpModel> jumps;
  };

  static constexpr double tol_ = 1e-9;
  static constexpr Eigen::Index kStartColumn = 8;

  struct StepCache {
    double origin = 0.0;
    double step = 0.0;
    std::vector<std::vector<Eigen::MatrixXd>> tables;  // per periodic part, per step in a period
    Eigen::MatrixXd Phi, Qa, input_gain;
    std::vector<Eigen::MatrixXd> node_phi;  // exp(Fa (t1 - s)) at each node, same order as the tables
  };

  const Eigen::MatrixXd* cached_nodes(size_t part, double t0, double t1) const {
    if (!cache_) return nullptr;
    const double h = cache_->step;
    if (std::abs((t1 - t0) - h) > 1e-9 * h) return nullptr;
    double x = (t0 - cache_->origin) / h;
    double k = std::round(x);
    if (std::abs(x - k) > 1e-9 * std::max(1.0, std::abs(x))) return nullptr;
    const auto& tables = cache_->tables[part];
    long n = static_cast<long>(tables.size());
    long idx = static_cast<long>(k) % n;
    if (idx < 0) idx += n;
    return &tables[static_cast<size_t>(idx)];
  }

  bool is_changepoint_of(const PeriodicPart& p, double tau) const {
    if (p.quasi.type != Quasi::Sqm && p.quasi.type != Quasi::Wqm) return false;
    double x = (tau - p.quasi.epoch) / p.basis->period();
    return std::abs(x - std::round(x)) < tol_;
  }

  void check_step(double t0, double t1) const {
    if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1))
      throw InvalidParameter("discretize: need finite t1 > t0");
    for (const auto& p : periodic_) {
      if (p.quasi.type != Quasi::Sqm && p.quasi.type != Quasi::Wqm) continue;
      double d = p.basis->period();
      double x0 = (t0 - p.quasi.epoch) / d, x1 = (t1 - p.quasi.epoch) / d;
      double next = std::floor(x0 + tol_) + 1.0;
      if (next < x1 - tol_) throw ContractViolation("discretize: changepoint inside the step; split the step");
    }
  }

  void check_input(const Eigen::VectorXd& u) const {
    if (u.size() != inputs_) throw InvalidParameter("known input has the wrong length");
  }

  StateLayout layout_;
  int inputs_ = 0;
  Eigen::MatrixXd Fa_, Wa_, Ba_;
  Eigen::VectorXd weight_drift_, weight_noise_, weight_init_var_;
  Eigen::VectorXd init_mean_;
  Eigen::MatrixXd init_cov_;
  Eigen::MatrixXd H_, Z_;
  std::vector<PeriodicPart> periodic_;
  std::vector<ForceSpec> forces_;
  std::shared_ptr<const StepCache> cache_;
};

}  // namespace plfm
