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
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "plfm/errors.hpp"

namespace plfm {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (!a.allFinite()) throw NumericError("expm: non-finite input");
  Eigen::MatrixXd e = a.exp();
  if (!e.allFinite()) throw NumericError("expm: overflow");
  return e;
}

// Smallest eigenvalue of the symmetric part.
inline double min_eigenvalue(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_symmetric_psd(const Eigen::MatrixXd& a, double sym_tol = 1e-10, double psd_rel = 1e-8) {
  if (a.rows() != a.cols()) return false;
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) return false;
  double tr = std::max(a.trace(), 0.0);
  return min_eigenvalue(a) >= -psd_rel * std::max(tr, 1e-300);
}

struct Discretized {
  Eigen::MatrixXd G;
  Eigen::MatrixXd Q;
};

// Transition and process noise of dx = F x dt + dW with E[dW dW'] = W dt, over dt.
inline Discretized van_loan(const Eigen::MatrixXd& f, const Eigen::MatrixXd& w, double dt) {
  const Eigen::Index n = f.rows();
  // Evaluated on a short step and doubled, which stays accurate for stiff F.
  const double norm = n > 0 ? (f * dt).cwiseAbs().colwise().sum().maxCoeff() : 0.0;
  const int k = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  const double h = std::ldexp(dt, -k);
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = -f * h;
  big.topRightCorner(n, n) = w * h;
  big.bottomRightCorner(n, n) = f.transpose() * h;
  Eigen::MatrixXd e = expm(big);
  Discretized d;
  d.G = e.bottomRightCorner(n, n).transpose();
  d.Q = symmetrize(d.G * e.topRightCorner(n, n));
  for (int i = 0; i < k; ++i) {
    d.Q = symmetrize(d.G * d.Q * d.G.transpose() + d.Q);
    d.G = d.G * d.G;
  }
  return d;
}

// Integral over [0, dt] of exp(F (dt - s)) c ds, for a constant vector c.
inline Eigen::VectorXd integrate_constant_input(const Eigen::MatrixXd& f, const Eigen::VectorXd& c, double dt) {
  const Eigen::Index n = f.rows();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n + 1, n + 1);
  big.topLeftCorner(n, n) = f * dt;
  big.topRightCorner(n, 1) = c * dt;
  return expm(big).topRightCorner(n, 1);
}

}  // namespace plfm
