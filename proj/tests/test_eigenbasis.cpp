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
#include <gtest/gtest.h>

#include <cmath>

#include "plfm/eigenbasis.hpp"
#include "support.hpp"

using namespace plfm;
using plfm::testing::random_times;

TEST(EigenBasis, ConstantKernelRankOne) {
  EigenBasis b = EigenBasis::build(Constant{2.0}, 4, 1.0);
  EXPECT_NEAR(b.eigenvalues()[0], 8.0, 1e-12);
  EXPECT_EQ(b.size(), 1);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(b.eigenvectors()(i, 0), 0.5, 1e-12);
  CounterRng rng(1);
  for (int i = 0; i < 20; ++i) {
    double t = 10 * rng.uniform() - 5, tp = 10 * rng.uniform();
    EXPECT_NEAR(b.eigenfunction(0, t), 1.0, 1e-12);
    EXPECT_NEAR(b.reconstruct(t, tp), 2.0, 1e-12);
    EXPECT_EQ(b.eigenfunction_second_derivative(0, t), 0.0);
  }
  EXPECT_NEAR(b.mu_scaled(0), 2.0, 1e-12);
}

TEST(EigenBasis, SampleGridAndOrdering) {
  EigenBasis b = EigenBasis::build(PeriodicMatern{0.5, 1.0, 0.7, 2.0}, 50, 2.0);
  for (int i = 0; i < 50; ++i) EXPECT_DOUBLE_EQ(b.samples()[i], i * 2.0 / 50);
  const auto& mu = b.eigenvalues();
  for (int j = 1; j < 50; ++j) EXPECT_GE(mu[j - 1], mu[j]);
  EXPECT_GE(mu.minCoeff(), -1e-10 * mu[0]);
  Eigen::MatrixXd vtv = b.eigenvectors().transpose() * b.eigenvectors();
  EXPECT_LT((vtv - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff(), 1e-10);
  for (int j = 0; j < 50; ++j) {
    bool selected = j < b.size();
    EXPECT_EQ(selected, mu[j] >= b.gamma() * mu[0]) << j;
  }
}

TEST(EigenBasis, SignConvention) {
  EigenBasis b = EigenBasis::build(PeriodicSE{1.0, 1.0}, 40, 1.0, 1e-6);
  for (int j = 0; j < 40; ++j) {
    Eigen::Index imax;
    b.eigenvectors().col(j).cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(b.eigenvectors()(imax, j), 0.0);
  }
}

TEST(EigenBasis, PeriodicSeNeedsFewFunctions) {
  EigenBasis b = EigenBasis::build(PeriodicSE{3.0, 0.7}, 100, 0.7, 0.01);
  EXPECT_LE(b.size(), 30);
  EXPECT_GE(b.size(), 1);
}

TEST(EigenBasis, GammaOneKeepsLeadingPair) {
  EigenBasis b = EigenBasis::build(NonStatPeriodic{1, 20, 10, 0.8}, 100, 10, 1.0);
  ASSERT_GT(b.eigenvalues()[0], b.eigenvalues()[1]);
  EXPECT_EQ(b.size(), 1);
}

TEST(EigenBasis, NystromIdentityAtSamples) {
  for (const KernelSpec& k : {KernelSpec(PeriodicMatern{0.5, 1, 0.4, 3}), KernelSpec(NonStatPeriodic{1, 20, 10, 0.8}),
                              KernelSpec(PeriodicSE{3, 0.7})}) {
    double d = kernel_period(k);
    EigenBasis b = EigenBasis::build(k, 64, d);
    double worst = 0;
    for (int j = 0; j < b.size(); ++j)
      for (int i = 0; i < 64; ++i)
        worst = std::max(worst, std::abs(b.eigenfunction(j, b.samples()[i]) - 8.0 * b.eigenvectors()(i, j)));
    EXPECT_LT(worst, 1e-8);
    EXPECT_NEAR(b.eigenfunction(0, b.samples()[0]), 8.0 * b.eigenvectors()(0, 0), 1e-8);
  }
}

TEST(EigenBasis, EigenfunctionsArePeriodic) {
  EigenBasis b = EigenBasis::build(PeriodicMatern{0.5, 1.0, 0.5, 7.0}, 100, 7.0);
  CounterRng rng(3);
  for (int i = 0; i < 50; ++i) {
    double t = 7 * rng.uniform();
    for (int j = 0; j < b.size(); ++j) EXPECT_NEAR(b.eigenfunction(j, t + 7), b.eigenfunction(j, t), 1e-10);
  }
}

TEST(EigenBasis, FullReconstructionAtSamplesIsGram) {
  KernelSpec k = PeriodicMatern{1.5, 1.0, 0.8, 2.0};
  EigenBasis b = EigenBasis::build_all(k, 30, 2.0);
  const auto& s = b.samples();
  EXPECT_NEAR(b.reconstruct(s[2], s[5]), eval(k, s[2], s[5]), 1e-8);
  for (int i = 0; i < 30; i += 3)
    for (int j = 0; j < 30; j += 4) EXPECT_NEAR(b.reconstruct(s[i], s[j]), eval(k, s[i], s[j]), 1e-8);
}

TEST(EigenBasis, SquaredExponentialTwentyTwoFunctions) {
  // Window of 100 units sampled at N = 200, top 22 eigenpairs.
  KernelSpec k = SquaredExponential{1.0, 10.0};
  EigenBasis b = EigenBasis::build(k, 200, 100.0, 1e-300, 22);
  ASSERT_EQ(b.size(), 22);
  double worst = 0;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) {
      double t = i * 0.5, tp = j * 0.5;
      worst = std::max(worst, std::abs(b.reconstruct(t, tp) - eval(k, t, tp)));
    }
  EXPECT_LE(worst, 1e-4);
}

TEST(EigenBasis, SecondDerivativeMatchesFiniteDifference) {
  EigenBasis b = EigenBasis::build(NonStatPeriodic{1, 20, 10, 0.8}, 100, 10, 1e-6);
  ASSERT_GE(b.size(), 4);
  CounterRng rng(4);
  auto phi = [&](int j, double t) { return b.eigenfunction(j, t); };
  for (int j = 0; j < 4; ++j) {
    double scale = 0;
    for (int i = 0; i < 200; ++i) scale = std::max(scale, std::abs(b.eigenfunction_second_derivative(j, 0.05 * i)));
    for (int i = 0; i < 50; ++i) {
      double t = 10 * rng.uniform();
      double an = b.eigenfunction_second_derivative(j, t);
      // Three-point stencil at h = 1e-4 for the two leading functions; the
      // higher ones have small eigenvalues that amplify round-off, so they use a
      // five-point stencil at h = 1e-3.
      double fd;
      if (j < 2) {
        double h = 1e-4;
        fd = (phi(j, t + h) - 2 * phi(j, t) + phi(j, t - h)) / (h * h);
      } else {
        double h = 1e-3;
        fd = (-phi(j, t + 2 * h) + 16 * phi(j, t + h) - 30 * phi(j, t) + 16 * phi(j, t - h) - phi(j, t - 2 * h)) /
             (12 * h * h);
      }
      EXPECT_LT(std::abs(an - fd), 1e-3 * std::max(std::abs(an), 1e-2 * scale)) << j << " " << t;
    }
  }
}

TEST(EigenBasis, SecondDerivativePeriodicAndErrors) {
  EigenBasis b = EigenBasis::build(NonStatPeriodic{1, 20, 10, 0.8}, 64, 10, 1e-6);
  EXPECT_NEAR(b.eigenfunction_second_derivative(1, 3.3), b.eigenfunction_second_derivative(1, 13.3), 1e-9);
  EigenBasis m = EigenBasis::build(PeriodicMatern{0.5, 1, 1, 1}, 32, 1);
  EXPECT_THROW(m.eigenfunction_second_derivative(0, 0.1), NotDifferentiable);
}

TEST(EigenBasis, IndexAndParameterErrors) {
  EigenBasis b = EigenBasis::build(PeriodicSE{1, 1}, 16, 1);
  EXPECT_THROW(b.eigenfunction(b.size(), 0.0), IndexError);
  EXPECT_THROW(b.eigenfunction(-1, 0.0), IndexError);
  EXPECT_THROW(EigenBasis::build(PeriodicSE{1, 1}, 1, 1), InvalidParameter);
  EXPECT_THROW(EigenBasis::build(PeriodicSE{1, 1}, 16, 0), InvalidParameter);
  EXPECT_THROW(EigenBasis::build(PeriodicSE{1, 1}, 16, 1, 0.0), InvalidParameter);
  EXPECT_THROW(EigenBasis::build(PeriodicSE{1, 1}, 16, 1, 1.5), InvalidParameter);
  EXPECT_THROW(EigenBasis::build(Callable{[](double, double) { return std::nan(""); }}, 4, 1), NumericError);
}

TEST(EigenBasisProperties, ConvergenceAsNDoubles) {
  KernelSpec k = PeriodicSE{3.0, 0.7};
  double prev = 1e300;
  for (int n : {16, 32, 64, 128}) {
    EigenBasis b = EigenBasis::build_all(k, n, 0.7);
    double worst = 0;
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; j += 7) {
        double t = 0.7 * i / 200, tp = 0.7 * j / 200;
        worst = std::max(worst, std::abs(b.reconstruct(t, tp) - eval(k, t, tp)));
      }
    EXPECT_LE(worst, prev + 1e-10) << n;
    prev = worst;
  }
}

TEST(EigenBasisProperties, FewerFunctionsForSmootherKernels) {
  for (double nu : {0.5, 1.5}) {
    int prev = 1 << 30;
    for (double l : {0.5, 1.0, 2.0, 4.0}) {
      EigenBasis b = EigenBasis::build(PeriodicMatern{nu, 1.0, l, 1.0}, 100, 1.0, 0.01);
      EXPECT_LE(b.size(), prev) << nu << " " << l;
      prev = b.size();
    }
  }
}

TEST(EigenBasisProperties, DefaultNKeepsShippedKernelsAccurate) {
  for (const KernelSpec& k : {KernelSpec(PeriodicSE{3, 0.7}), KernelSpec(NonStatPeriodic{1, 20, 10, 0.8})}) {
    double d = kernel_period(k);
    EigenBasis b = EigenBasis::build_all(k, 100, d);
    double worst = 0;
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; j += 3) {
        double t = d * (i + 0.37) / 100, tp = d * j / 100;
        worst = std::max(worst, std::abs(b.reconstruct(t, tp) - eval(k, t, tp)));
      }
    EXPECT_LT(worst, 1e-6);
  }
}
