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
#include <functional>
#include <numbers>

#include "plfm/errors.hpp"
#include "plfm/kernels.hpp"

namespace plfm {

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // latent variance, measurement noise excluded
};

using KernelFn = std::function<double(double, double)>;

// Exact GP regression with a Cholesky solve.
class DenseGp {
 public:
  DenseGp(KernelFn k, double noise_var, Eigen::VectorXd x, Eigen::VectorXd y)
      : k_(std::move(k)), noise_(noise_var), x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size()) throw InvalidParameter("DenseGp: X and Y differ in length");
    if (!(noise_ >= 0)) throw InvalidParameter("DenseGp: noise variance must be non-negative");
    factor();
  }
  DenseGp(const KernelSpec& k, double noise_var, Eigen::VectorXd x, Eigen::VectorXd y)
      : DenseGp([k](double a, double b) { return eval(k, a, b); }, noise_var, std::move(x), std::move(y)) {}

  GpPrediction predict(const Eigen::VectorXd& xs) const {
    GpPrediction out;
    out.mean.resize(xs.size());
    out.var.resize(xs.size());
    const Eigen::Index n = x_.size();
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      double prior = k_(xs[i], xs[i]);
      if (n == 0) {
        out.mean[i] = 0.0;
        out.var[i] = prior;
        continue;
      }
      Eigen::VectorXd ks(n);
      for (Eigen::Index j = 0; j < n; ++j) ks[j] = k_(xs[i], x_[j]);
      out.mean[i] = ks.dot(alpha_);
      Eigen::VectorXd v = llt_.matrixL().solve(ks);
      out.var[i] = prior - v.squaredNorm();
    }
    return out;
  }

  double log_marginal_likelihood() const {
    const Eigen::Index n = x_.size();
    if (n == 0) return 0.0;
    double logdet = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (y_.dot(alpha_) + logdet + static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
  }

  double jitter() const { return jitter_; }

 private:
  void factor() {
    const Eigen::Index n = x_.size();
    if (n == 0) return;
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) k(i, j) = k_(x_[i], x_[j]);
    k = 0.5 * (k + k.transpose()).eval();
    k.diagonal().array() += noise_;
    double max_jitter = 1e-6 * std::max(k.trace(), 1e-300);
    double jitter = 0.0;
    while (true) {
      Eigen::MatrixXd kj = k;
      kj.diagonal().array() += jitter;
      llt_.compute(kj);
      if (llt_.info() == Eigen::Success) break;
      if (jitter >= max_jitter) throw NumericError("DenseGp: Gram matrix not positive definite after jitter");
      jitter = jitter == 0.0 ? 1e-12 * std::max(k.trace(), 1e-300) : std::min(10.0 * jitter, max_jitter);
    }
    jitter_ = jitter;
    alpha_ = llt_.solve(y_);
  }

  KernelFn k_;
  double noise_;
  Eigen::VectorXd x_, y_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

inline GpPrediction gp_regress(const DenseGp& gp, const Eigen::VectorXd& xs) { return gp.predict(xs); }

// Gaussian linear model y = Phi w + e, w ~ N(0, diag(prior)), e ~ N(0, noise I).
inline GpPrediction bayes_linear_regress(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& prior, double noise_var,
                                         const Eigen::MatrixXd& phi_star) {
  if (phi.rows() != y.size() || phi.cols() != prior.size() || phi_star.cols() != prior.size())
    throw InvalidParameter("bayes_linear_regress: dimension mismatch");
  if (!(noise_var > 0)) throw InvalidParameter("bayes_linear_regress: noise variance must be positive");
  if (!phi.allFinite() || !phi_star.allFinite()) throw NumericError("bayes_linear_regress: non-finite features");
  Eigen::MatrixXd a = phi.transpose() * phi / noise_var;
  a.diagonal() += prior.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericError("bayes_linear_regress: singular posterior precision");
  Eigen::VectorXd w = llt.solve(phi.transpose() * y / noise_var);
  GpPrediction out;
  out.mean = phi_star * w;
  Eigen::MatrixXd v = llt.matrixL().solve(phi_star.transpose());
  out.var = v.colwise().squaredNorm().transpose();
  return out;
}

}  // namespace plfm
