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
#include <string>
#include <vector>

#include "plfm/errors.hpp"
#include "plfm/kernels.hpp"

namespace plfm {

// Nystrom eigenfunctions of a kernel on N equally spaced points over one period.
class EigenBasis {
 public:
  // max_functions > 0 caps the selection at the top max_functions eigenpairs.
  static EigenBasis build(const KernelSpec& kernel, int n, double period, double gamma = 0.01,
                          int max_functions = 0) {
    if (n < 2) throw InvalidParameter("eigenbasis: N must be at least 2");
    if (!(period > 0) || !std::isfinite(period)) throw InvalidParameter("eigenbasis: period must be positive");
    if (!(gamma > 0 && gamma <= 1)) throw InvalidParameter("eigenbasis: gamma must lie in (0, 1]");
    validate(kernel);
    EigenBasis b(kernel, n, period, gamma);
    b.decompose();
    int count = 0;
    while (count < n && b.mu_[count] >= gamma * b.mu_[0] && b.mu_[count] > 0) ++count;
    if (max_functions > 0 && count > max_functions) count = max_functions;
    b.finish(count);
    return b;
  }

  // Keeps every eigenpair with a positive eigenvalue.
  static EigenBasis build_all(const KernelSpec& kernel, int n, double period) {
    if (n < 2) throw InvalidParameter("eigenbasis: N must be at least 2");
    if (!(period > 0) || !std::isfinite(period)) throw InvalidParameter("eigenbasis: period must be positive");
    validate(kernel);
    EigenBasis b(kernel, n, period, 0.0);
    b.decompose();
    int count = 0;
    while (count < n && b.mu_[count] > 0) ++count;
    b.finish(count);
    return b;
  }

  const KernelSpec& kernel() const { return kernel_; }
  int n() const { return n_; }
  double period() const { return period_; }
  double gamma() const { return gamma_; }
  int size() const { return count_; }
  const Eigen::VectorXd& samples() const { return samples_; }
  const Eigen::VectorXd& eigenvalues() const { return mu_; }
  const Eigen::MatrixXd& eigenvectors() const { return v_; }

  // Scaled eigenvalue mu_j / N of the j-th selected pair.
  double mu_scaled(int j) const {
    check(j);
    return mu_[j] / n_;
  }
  Eigen::VectorXd mu_scaled_all() const { return mu_.head(count_) / n_; }

  double eigenfunction(int j, double t) const {
    check(j);
    return eval_row(kernel_, t, samples_).dot(weights_.col(j));
  }

  // All selected eigenfunctions at t.
  Eigen::VectorXd eigenfunctions(double t) const {
    return (eval_row(kernel_, t, samples_) * weights_).transpose();
  }

  Eigen::VectorXd eigenfunction_derivatives(double t, int order) const {
    if (order < 0 || order > 2) throw InvalidParameter("eigenfunction derivative order must be 0, 1 or 2");
    Eigen::RowVectorXd row(n_);
    for (int i = 0; i < n_; ++i) row[i] = time_jet(kernel_, t, samples_[i])[order];
    return (row * weights_).transpose();
  }

  double eigenfunction_second_derivative(int j, double t) const {
    check(j);
    return eigenfunction_derivatives(t, 2)[j];
  }

  double eigenfunction_first_derivative(int j, double t) const {
    check(j);
    return eigenfunction_derivatives(t, 1)[j];
  }

  double reconstruct(double t, double tp) const {
    Eigen::VectorXd a = eigenfunctions(t), b = eigenfunctions(tp);
    return (a.array() * b.array() * mu_scaled_all().array()).sum();
  }

 private:
  EigenBasis(KernelSpec k, int n, double period, double gamma)
      : kernel_(std::move(k)), n_(n), period_(period), gamma_(gamma) {}

  void decompose() {
    samples_.resize(n_);
    for (int i = 0; i < n_; ++i) samples_[i] = i * period_ / n_;
    Eigen::MatrixXd g = eval_matrix(kernel_, samples_, samples_);
    if (!g.allFinite()) throw NumericError("eigenbasis: non-finite Gram matrix");
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success) throw NumericError("eigenbasis: eigendecomposition failed");
    mu_ = es.eigenvalues().reverse();
    v_ = es.eigenvectors().rowwise().reverse();
    for (int j = 0; j < n_; ++j) {
      Eigen::Index imax = 0;
      v_.col(j).cwiseAbs().maxCoeff(&imax);
      if (v_(imax, j) < 0) v_.col(j) = -v_.col(j);
    }
  }

  void finish(int count) {
    count_ = count;
    weights_.resize(n_, count_);
    for (int j = 0; j < count_; ++j) weights_.col(j) = std::sqrt(double(n_)) / mu_[j] * v_.col(j);
  }

  void check(int j) const {
    if (j < 0 || j >= count_)
      throw IndexError("eigenfunction index " + std::to_string(j) + " not in the selected set");
  }

  KernelSpec kernel_;
  int n_ = 0;
  double period_ = 0;
  double gamma_ = 0;
  int count_ = 0;
  Eigen::VectorXd samples_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd v_;
  Eigen::MatrixXd weights_;  // sqrt(N) v_j / mu_j for selected j
};

}  // namespace plfm
