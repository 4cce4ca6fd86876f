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
#include <vector>

#include "plfm/kernels.hpp"
#include "plfm/rng.hpp"

namespace plfm::testing {

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

inline Eigen::VectorXd random_times(CounterRng& rng, int n, double lo, double hi) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * rng.uniform();
  return x;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
  return g;
}

inline std::vector<KernelSpec> all_variants() {
  return {
      Matern{0.5, 1.3, 0.7},
      Matern{1.5, 0.8, 2.0},
      PeriodicMatern{0.5, 2.0, 0.5, 7.0},
      PeriodicMatern{1.5, 1.0, 1.2, 3.0},
      PeriodicSE{3.0, 0.7},
      SquaredExponential{1.0, 10.0},
      Constant{2.5},
      Cqm{1.1, 3.0},
      Sqm{1.5, 2.0, 1.0, 0.0},
      Wqm{1.0, 2.0, 1.0, 0.0},
      NonStatPeriodic{1.0, 20.0, 10.0, 0.8},
      product(PeriodicMatern{0.5, 1.0, 1.0, 1.0}, Sqm{1.0, 3.0, 1.0, 0.0}),
  };
}

}  // namespace plfm::testing
