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

// Independent reference computations used by the unit and acceptance tests.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>

namespace plfm::testing {

// First-order target dz/dt = -a z + c u(t) with u a stationary Matern-1/2
// process (sigma, l) and z(0) ~ N(0, p0) independent of u. The covariance of z
// is evaluated directly from the double convolution integral with piecewise
// Gauss-Legendre quadrature, split where the integrand has a kink.
struct FirstOrderLfmOracle {
  double a = 0.5;
  double c = 1.0;
  double sigma = 1.0;
  double l = 1.0;
  double p0 = 0.0;
  // Replaces the Matern-1/2 force covariance when set; must be smooth.
  std::function<double(double, double)> force;

  double cov(double t, double tp) const {
    using Q = boost::math::quadrature::gauss<double, 30>;
    auto k = [&](double s, double sp) {
      return force ? force(s, sp) : sigma * sigma * std::exp(-std::abs(s - sp) / l);
    };
    auto inner = [&](double s) {
      auto f = [&](double sp) { return std::exp(-a * (tp - sp)) * k(s, sp); };
      if (s <= 0 || s >= tp) return Q::integrate(f, 0.0, tp);
      return Q::integrate(f, 0.0, s) + Q::integrate(f, s, tp);
    };
    auto outer = [&](double s) { return std::exp(-a * (t - s)) * inner(s); };
    double conv = 0.0;
    if (t > 0 && tp > 0) {
      if (tp < t)
        conv = Q::integrate(outer, 0.0, tp) + Q::integrate(outer, tp, t);
      else
        conv = Q::integrate(outer, 0.0, t);
    }
    return std::exp(-a * t) * std::exp(-a * tp) * p0 + c * c * conv;
  }
};

}  // namespace plfm::testing
