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
#include <complex>

#include "plfm/errors.hpp"
#include "plfm/kernels.hpp"
#include "plfm/linalg.hpp"

namespace plfm {

// dU = F U dt + L dW, E[dW dW'] = q dt. extract picks the process value out of U.
struct LtiSde {
  Eigen::MatrixXd F;
  Eigen::MatrixXd L;
  Eigen::MatrixXd q;
  Eigen::RowVectorXd extract;

  int dim() const { return static_cast<int>(F.rows()); }
  Eigen::MatrixXd noise() const { return L * q * L.transpose(); }
};

// Scalar jump a(tau) = G a(tau-) + chi, chi ~ N(0, Q).
struct JumpModel {
  double G_star = 1.0;
  double Q_star = 0.0;
};

namespace detail {
inline LtiSde scalar_block(double f, double q) {
  LtiSde s;
  s.F = Eigen::MatrixXd::Constant(1, 1, f);
  s.L = Eigen::MatrixXd::Ones(1, 1);
  s.q = Eigen::MatrixXd::Constant(1, 1, q);
  s.extract = Eigen::RowVectorXd::Ones(1);
  return s;
}
}  // namespace detail

inline LtiSde matern12_block(double sigma, double l) {
  if (!(sigma > 0 && l > 0)) throw InvalidParameter("matern12_block: scales must be positive");
  return detail::scalar_block(-1.0 / l, 2.0 * sigma * sigma / l);
}

// rho = sqrt(3)/l by default; two_over_l_rate switches to rho = 2/l.
inline LtiSde matern32_block(double sigma, double l, bool two_over_l_rate = false) {
  if (!(sigma > 0 && l > 0)) throw InvalidParameter("matern32_block: scales must be positive");
  double rho = two_over_l_rate ? 2.0 / l : std::sqrt(3.0) / l;
  LtiSde s;
  s.F.resize(2, 2);
  s.F << 0.0, 1.0, -rho * rho, -2.0 * rho;
  s.L = Eigen::MatrixXd::Zero(2, 1);
  s.L(1, 0) = 1.0;
  s.q = Eigen::MatrixXd::Constant(1, 1, 4.0 * rho * rho * rho * sigma * sigma);
  s.extract = Eigen::RowVectorXd::Zero(2);
  s.extract[0] = 1.0;
  return s;
}

inline LtiSde constant_weight_block() { return detail::scalar_block(0.0, 0.0); }

inline LtiSde cqm_weight_block(double sigma, double l) { return matern12_block(sigma, l); }

// Second-order oscillator d2psi = A psi + B dpsi + w, state (psi, dpsi).
inline LtiSde resonator_block(double a, double b, double q) {
  if (q < 0) throw InvalidParameter("resonator_block: q must be non-negative");
  LtiSde s;
  s.F.resize(2, 2);
  s.F << 0.0, 1.0, a, b;
  s.L = Eigen::MatrixXd::Zero(2, 1);
  s.L(1, 0) = 1.0;
  s.q = Eigen::MatrixXd::Constant(1, 1, q);
  s.extract = Eigen::RowVectorXd::Zero(2);
  s.extract[0] = 1.0;
  return s;
}

// State-space block for a stationary Matern kernel.
inline LtiSde block_for_kernel(const KernelSpec& k, bool two_over_l_rate = false) {
  if (auto m = std::get_if<Matern>(&k.v)) {
    if (m->nu == 0.5) return matern12_block(m->sigma, m->l);
    if (m->nu == 1.5) return matern32_block(m->sigma, m->l, two_over_l_rate);
  }
  if (auto c = std::get_if<Cqm>(&k.v)) return cqm_weight_block(c->sigma, c->l);
  throw InvalidParameter("no exact state-space block for this kernel");
}

inline JumpModel sqm_jump(double sigma, double l) {
  if (!(sigma > 0 && l > 0)) throw InvalidParameter("sqm_jump: scales must be positive");
  return {std::exp(-1.0 / l), sigma * sigma * (-std::expm1(-2.0 / l))};
}

inline JumpModel wqm_jump(double xi) {
  if (!(xi > 0)) throw InvalidParameter("wqm_jump: xi must be positive");
  return {1.0, xi};
}

inline Eigen::MatrixXd stationary_covariance(const LtiSde& block) {
  const Eigen::Index p = block.F.rows();
  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(block.F);
  double tol = 1e-12 * std::max(1.0, block.F.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < p; ++i)
    if (es.eigenvalues()[i].real() >= -tol)
      throw NoStationaryDistribution("stationary_covariance: F is not strictly stable");
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd kron(p * p, p * p);
  // vec(F P + P F') = (I (x) F + F (x) I) vec(P), column-major vec.
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      kron.block(i * p, j * p, p, p) = id(i, j) * block.F + block.F(i, j) * id;
  Eigen::MatrixXd rhs = -block.noise();
  Eigen::VectorXd x = kron.fullPivLu().solve(Eigen::Map<Eigen::VectorXd>(rhs.data(), p * p));
  Eigen::MatrixXd out = Eigen::Map<Eigen::MatrixXd>(x.data(), p, p);
  return symmetrize(out);
}

}  // namespace plfm
