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
#include <numbers>

#include "plfm/baselines/dense_gp.hpp"
#include "plfm/errors.hpp"
#include "plfm/kernels.hpp"
#include "plfm/rng.hpp"

namespace plfm {

// Sparse-spectrum model: cos and sin features at frequencies drawn from the
// normalized spectral density, each with prior variance sigma^2 / S.
struct SsgprModel {
  Eigen::VectorXd freqs;  // cycles per unit time
  double sigma2 = 1.0;
  double noise_var = 1e-8;

  int spectral_points() const { return static_cast<int>(freqs.size()); }

  Eigen::MatrixXd features(const Eigen::VectorXd& x) const {
    const Eigen::Index s = freqs.size();
    Eigen::MatrixXd f(x.size(), 2 * s);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      for (Eigen::Index r = 0; r < s; ++r) {
        double a = 2.0 * std::numbers::pi * freqs[r] * x[i];
        f(i, r) = std::cos(a);
        f(i, s + r) = std::sin(a);
      }
    return f;
  }

  Eigen::VectorXd prior_variances() const {
    return Eigen::VectorXd::Constant(2 * freqs.size(), sigma2 / static_cast<double>(freqs.size()));
  }

  double implied_kernel(double tau) const {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < freqs.size(); ++r) acc += std::cos(2.0 * std::numbers::pi * freqs[r] * tau);
    return sigma2 / static_cast<double>(freqs.size()) * acc;
  }
};

inline SsgprModel ssgpr_build(const KernelSpec& k, int s, std::uint64_t seed, double noise_var = 1e-8) {
  if (s < 1) throw InvalidParameter("ssgpr_build: need at least one spectral point");
  CounterRng rng(seed, 0x55);
  SsgprModel m;
  m.noise_var = noise_var;
  m.freqs.resize(s);
  if (auto se = std::get_if<SquaredExponential>(&k.v)) {
    m.sigma2 = se->sigma * se->sigma;
    double sd = 1.0 / (2.0 * std::numbers::pi * se->l);
    for (int r = 0; r < s; ++r) m.freqs[r] = sd * rng.normal();
    return m;
  }
  if (auto ma = std::get_if<Matern>(&k.v)) {
    detail::check_nu(ma->nu);
    m.sigma2 = ma->sigma * ma->sigma;
    // Angular frequency is Student-t with 2 nu degrees of freedom, scaled by 1 / l.
    int dof = static_cast<int>(std::lround(2.0 * ma->nu));
    for (int r = 0; r < s; ++r) {
      double z = rng.normal(), chi2 = 0.0;
      for (int d = 0; d < dof; ++d) {
        double g = rng.normal();
        chi2 += g * g;
      }
      double t = z / std::sqrt(chi2 / dof);
      m.freqs[r] = t / ma->l / (2.0 * std::numbers::pi);
    }
    return m;
  }
  throw NotStationary("ssgpr_build: kernel has no supported closed-form spectral density");
}

inline GpPrediction ssgpr_regress(const SsgprModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& xs) {
  return bayes_linear_regress(m.features(x), y, m.prior_variances(), m.noise_var, m.features(xs));
}

}  // namespace plfm
