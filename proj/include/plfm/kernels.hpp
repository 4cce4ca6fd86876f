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

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <variant>

#include "plfm/errors.hpp"

namespace plfm {

struct KernelSpec;

// Stationary Matern with nu in {1/2, 3/2}.
struct Matern {
  double nu = 0.5;
  double sigma = 1.0;
  double l = 1.0;
};

// Matern evaluated at the phase distance |sin(pi tau / D)|.
struct PeriodicMatern {
  double nu = 0.5;
  double sigma = 1.0;
  double l = 1.0;
  double period = 1.0;
};

// exp(-sin^2(pi tau / D) / l^2), unit output scale.
struct PeriodicSE {
  double l = 1.0;
  double period = 1.0;
};

// sigma^2 exp(-tau^2 / (2 l^2)).
struct SquaredExponential {
  double sigma = 1.0;
  double l = 1.0;
};

struct Constant {
  double c = 1.0;
};

// Continuous quasi-periodic modulation, a Matern-1/2 in absolute time.
struct Cqm {
  double sigma = 1.0;
  double l = 1.0;
};

// Stepped quasi-periodic modulation over cycle indices floor((t - epoch) / D).
struct Sqm {
  double sigma = 1.0;
  double l = 1.0;
  double period = 1.0;
  double epoch = 0.0;
};

// Wiener quasi-periodic modulation xi0 + min(C(t), C(t')) xi.
struct Wqm {
  double xi0 = 1.0;
  double xi = 1.0;
  double period = 1.0;
  double epoch = 0.0;
};

// Periodic Matern times exp(-alpha (kappa(t)^2 + kappa(t')^2)).
struct NonStatPeriodic {
  double sigma = 1.0;
  double l = 1.0;
  double period = 1.0;
  double alpha = 0.0;
  double nu = 1.5;
};

struct Product {
  std::shared_ptr<const KernelSpec> left;
  std::shared_ptr<const KernelSpec> right;
};

// Escape hatch for kernels without a named variant; never differentiable.
struct Callable {
  std::function<double(double, double)> fn;
  std::string name = "callable";
};

struct KernelSpec {
  using Variant = std::variant<Matern, PeriodicMatern, PeriodicSE, SquaredExponential, Constant,
                               Cqm, Sqm, Wqm, NonStatPeriodic, Product, Callable>;
  Variant v;

  KernelSpec() : v(Constant{}) {}
  template <class T>
    requires std::is_constructible_v<Variant, T>
  KernelSpec(T x) : v(std::move(x)) {}
};

inline KernelSpec product(KernelSpec a, KernelSpec b) {
  return Product{std::make_shared<const KernelSpec>(std::move(a)),
                 std::make_shared<const KernelSpec>(std::move(b))};
}

inline double phase(double tau, double period) {
  if (!(period > 0)) throw InvalidParameter("phase: period must be positive");
  double k = std::abs(std::sin(std::numbers::pi * tau / period));
  return k > 1.0 ? 1.0 : k;
}

inline long cycle_index(double t, double period, double epoch) {
  return static_cast<long>(std::floor((t - epoch) / period));
}

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameter(what);
}

inline void check_nu(double nu) {
  require(nu == 0.5 || nu == 1.5, "Matern smoothness must be 1/2 or 3/2");
}

inline double matern_at(double r, double nu, double sigma, double l) {
  double s2 = sigma * sigma;
  if (nu == 0.5) return s2 * std::exp(-r / l);
  double a = std::sqrt(3.0) * r / l;
  return s2 * (1.0 + a) * std::exp(-a);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

inline void validate(const KernelSpec& k) {
  using detail::require;
  std::visit(
      detail::overloaded{
          [](const Matern& m) {
            detail::check_nu(m.nu);
            require(m.sigma > 0 && m.l > 0, "Matern: sigma and l must be positive");
          },
          [](const PeriodicMatern& m) {
            detail::check_nu(m.nu);
            require(m.sigma > 0 && m.l > 0 && m.period > 0,
                    "PeriodicMatern: sigma, l, period must be positive");
          },
          [](const PeriodicSE& m) {
            require(m.l > 0 && m.period > 0, "PeriodicSE: l and period must be positive");
          },
          [](const SquaredExponential& m) {
            require(m.sigma > 0 && m.l > 0, "SE: sigma and l must be positive");
          },
          [](const Constant& m) { require(m.c >= 0, "Constant: c must be non-negative"); },
          [](const Cqm& m) { require(m.sigma > 0 && m.l > 0, "CQM: sigma and l must be positive"); },
          [](const Sqm& m) {
            require(m.sigma > 0 && m.l > 0 && m.period > 0, "SQM: sigma, l, period must be positive");
          },
          [](const Wqm& m) {
            require(m.xi0 >= 0 && m.xi >= 0 && m.period > 0,
                    "WQM: xi0, xi non-negative and period positive");
          },
          [](const NonStatPeriodic& m) {
            detail::check_nu(m.nu);
            require(m.sigma > 0 && m.l > 0 && m.period > 0 && m.alpha >= 0,
                    "NonStatPeriodic: sigma, l, period positive and alpha non-negative");
          },
          [](const Product& p) {
            require(p.left && p.right, "Product: missing factor");
            validate(*p.left);
            validate(*p.right);
          },
          [](const Callable& c) { require(static_cast<bool>(c.fn), "Callable: empty function"); },
      },
      k.v);
}

inline double eval(const KernelSpec& k, double t, double tp) {
  return std::visit(
      detail::overloaded{
          [&](const Matern& m) { return detail::matern_at(std::abs(t - tp), m.nu, m.sigma, m.l); },
          [&](const PeriodicMatern& m) {
            return detail::matern_at(phase(t - tp, m.period), m.nu, m.sigma, m.l);
          },
          [&](const PeriodicSE& m) {
            double s = std::sin(std::numbers::pi * (t - tp) / m.period);
            return std::exp(-s * s / (m.l * m.l));
          },
          [&](const SquaredExponential& m) {
            double d = t - tp;
            return m.sigma * m.sigma * std::exp(-d * d / (2.0 * m.l * m.l));
          },
          [&](const Constant& m) { return m.c; },
          [&](const Cqm& m) { return m.sigma * m.sigma * std::exp(-std::abs(t - tp) / m.l); },
          [&](const Sqm& m) {
            long dc = cycle_index(t, m.period, m.epoch) - cycle_index(tp, m.period, m.epoch);
            return m.sigma * m.sigma * std::exp(-std::abs(static_cast<double>(dc)) / m.l);
          },
          [&](const Wqm& m) {
            long c = std::min(cycle_index(t, m.period, m.epoch), cycle_index(tp, m.period, m.epoch));
            if (c < 0) throw InvalidParameter("WQM: time before epoch");
            return m.xi0 + static_cast<double>(c) * m.xi;
          },
          [&](const NonStatPeriodic& m) {
            double a = phase(t, m.period), b = phase(tp, m.period);
            return detail::matern_at(phase(t - tp, m.period), m.nu, m.sigma, m.l) *
                   std::exp(-m.alpha * (a * a + b * b));
          },
          [&](const Product& p) { return eval(*p.left, t, tp) * eval(*p.right, t, tp); },
          [&](const Callable& c) { return c.fn(t, tp); },
      },
      k.v);
}

inline Eigen::MatrixXd eval_matrix(const KernelSpec& k, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& xp) {
  Eigen::MatrixXd out(x.size(), xp.size());
  for (Eigen::Index j = 0; j < xp.size(); ++j)
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i, j) = eval(k, x[i], xp[j]);
  return out;
}

inline Eigen::RowVectorXd eval_row(const KernelSpec& k, double t, const Eigen::VectorXd& s) {
  Eigen::RowVectorXd out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = eval(k, t, s[i]);
  return out;
}

// Value, d/dt and d^2/dt^2 of K(t, t') with t' held fixed.
using Jet = std::array<double, 3>;

namespace detail {

// Matern-3/2 of the phase distance, as a function of tau.
inline Jet periodic_matern32_jet(double tau, double sigma, double l, double period) {
  const double pi = std::numbers::pi;
  double k = phase(tau, period);
  double s2 = sigma * sigma;
  double e = std::exp(-std::sqrt(3.0) * k / l);
  double m = s2 * (1.0 + std::sqrt(3.0) * k / l) * e;
  double m1 = -(3.0 * pi * s2 / (2.0 * period * l * l)) * std::sin(2.0 * pi * tau / period) * e;
  double m2 = (3.0 * pi * pi * s2 / (period * period * l * l * l)) * e *
              (std::sqrt(3.0) * k * (1.0 - k * k) - l * (1.0 - 2.0 * k * k));
  return {m, m1, m2};
}

// exp(-alpha kappa(t)^2) and its first two derivatives.
inline Jet phase_envelope_jet(double t, double alpha, double period) {
  const double pi = std::numbers::pi;
  double k = phase(t, period);
  double e = std::exp(-alpha * k * k);
  double e1 = -(pi * alpha / period) * std::sin(2.0 * pi * t / period) * e;
  double c = 1.0 - 2.0 * k * k;
  double e2 = -(2.0 * pi * pi * alpha / (period * period)) * ((alpha / 2.0) * (c * c - 1.0) + c) * e;
  return {e, e1, e2};
}

}  // namespace detail

inline Jet time_jet(const KernelSpec& k, double t, double tp) {
  auto nd = [](const char* name) -> Jet {
    throw NotDifferentiable(std::string(name) + " is not twice differentiable in time");
  };
  return std::visit(
      detail::overloaded{
          [&](const Matern& m) -> Jet {
            if (m.nu != 1.5) return nd("Matern-1/2");
            double tau = t - tp, a = std::sqrt(3.0) / m.l, s2 = m.sigma * m.sigma;
            double e = std::exp(-a * std::abs(tau));
            return {s2 * (1.0 + a * std::abs(tau)) * e, -s2 * a * a * tau * e,
                    s2 * a * a * (a * std::abs(tau) - 1.0) * e};
          },
          [&](const PeriodicMatern& m) -> Jet {
            if (m.nu != 1.5) return nd("PeriodicMatern-1/2");
            return detail::periodic_matern32_jet(t - tp, m.sigma, m.l, m.period);
          },
          [&](const PeriodicSE& m) -> Jet {
            const double pi = std::numbers::pi;
            double tau = t - tp, l2 = m.l * m.l;
            double s = std::sin(pi * tau / m.period);
            double g = std::exp(-s * s / l2);
            double w = pi / (m.period * l2);
            double s2t = std::sin(2.0 * pi * tau / m.period);
            double g1 = -w * s2t * g;
            double g2 = g * (-(2.0 * pi * pi / (m.period * m.period * l2)) *
                                 std::cos(2.0 * pi * tau / m.period) +
                             w * w * s2t * s2t);
            return {g, g1, g2};
          },
          [&](const SquaredExponential& m) -> Jet {
            double tau = t - tp, l2 = m.l * m.l;
            double g = m.sigma * m.sigma * std::exp(-tau * tau / (2.0 * l2));
            return {g, -tau / l2 * g, (tau * tau / (l2 * l2) - 1.0 / l2) * g};
          },
          [&](const Constant& m) -> Jet { return {m.c, 0.0, 0.0}; },
          [&](const Cqm&) -> Jet { return nd("CQM"); },
          [&](const Sqm&) -> Jet { return nd("SQM"); },
          [&](const Wqm&) -> Jet { return nd("WQM"); },
          [&](const NonStatPeriodic& m) -> Jet {
            if (m.nu != 1.5) return nd("NonStatPeriodic with nu != 3/2");
            Jet mm = detail::periodic_matern32_jet(t - tp, m.sigma, m.l, m.period);
            Jet e = detail::phase_envelope_jet(t, m.alpha, m.period);
            double ep = detail::phase_envelope_jet(tp, m.alpha, m.period)[0];
            return {mm[0] * e[0] * ep, (mm[1] * e[0] + mm[0] * e[1]) * ep,
                    (mm[2] * e[0] + 2.0 * mm[1] * e[1] + mm[0] * e[2]) * ep};
          },
          [&](const Product& p) -> Jet {
            Jet a = time_jet(*p.left, t, tp), b = time_jet(*p.right, t, tp);
            return {a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2]};
          },
          [&](const Callable&) -> Jet { return nd("callable kernel"); },
      },
      k.v);
}

inline double first_time_derivative(const KernelSpec& k, double t, double tp) {
  return time_jet(k, t, tp)[1];
}

inline double second_time_derivative(const KernelSpec& k, double t, double tp) {
  return time_jet(k, t, tp)[2];
}

inline bool is_stationary(const KernelSpec& k) {
  return std::visit(detail::overloaded{
                        [](const Matern&) { return true; },
                        [](const PeriodicMatern&) { return true; },
                        [](const PeriodicSE&) { return true; },
                        [](const SquaredExponential&) { return true; },
                        [](const Constant&) { return true; },
                        [](const Cqm&) { return true; },
                        [](const Product& p) { return is_stationary(*p.left) && is_stationary(*p.right); },
                        [](const auto&) { return false; },
                    },
                    k.v);
}

// Period of the first periodic factor found, or 0 when the kernel has none.
inline double kernel_period(const KernelSpec& k) {
  return std::visit(detail::overloaded{
                        [](const PeriodicMatern& m) { return m.period; },
                        [](const PeriodicSE& m) { return m.period; },
                        [](const NonStatPeriodic& m) { return m.period; },
                        [](const Product& p) {
                          double a = kernel_period(*p.left);
                          return a > 0 ? a : kernel_period(*p.right);
                        },
                        [](const auto&) { return 0.0; },
                    },
                    k.v);
}

}  // namespace plfm
