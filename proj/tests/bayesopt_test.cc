// Copyright 2026 The NNER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "nner/bayesopt.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "json.hpp"

namespace nner {
namespace {

TEST(HyperSpaceTest, NormalizationRoundTrip) {
  const HyperSpace space;
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    Hyperparams h;
    h.learning_rate = std::pow(10.0, rng.Uniform(-6, -4));
    h.batch_size = 2 + static_cast<int>(rng.UniformInt(31));
    h.weight_decay = rng.Uniform(0, 0.3);
    const UnitPoint u = space.Normalize(h);
    for (double x : u) {
      EXPECT_GE(x, -1e-12);
      EXPECT_LE(x, 1 + 1e-12);
    }
    const Hyperparams back = space.Denormalize(u);
    EXPECT_NEAR(back.learning_rate, h.learning_rate, 1e-12 * h.learning_rate);
    EXPECT_EQ(back.batch_size, h.batch_size);
    EXPECT_NEAR(back.weight_decay, h.weight_decay, 1e-15);
  }
}

TEST(HyperSpaceTest, ScalesAndClamping) {
  const HyperSpace space;
  const Hyperparams mid = space.Denormalize({0.5, 0.5, 0.5});
  EXPECT_NEAR(mid.learning_rate, 1e-5, 1e-18);
  EXPECT_EQ(mid.batch_size, 8);
  EXPECT_DOUBLE_EQ(mid.weight_decay, 0.15);
  const Hyperparams low = space.Denormalize({-1, -1, -1});
  EXPECT_DOUBLE_EQ(low.learning_rate, 1e-6);
  EXPECT_EQ(low.batch_size, 2);
  EXPECT_EQ(low.weight_decay, 0.0);
  const Hyperparams high = space.Denormalize({2, 2, 2});
  EXPECT_NEAR(high.learning_rate, 1e-4, 1e-18);
  EXPECT_EQ(high.batch_size, 32);
  EXPECT_DOUBLE_EQ(high.weight_decay, 0.3);
}

TEST(HyperSpaceTest, Validation) {
  HyperSpace space;
  space.max_learning_rate = space.min_learning_rate;
  EXPECT_THROW(space.Validate(), ConfigError);
  space = {};
  space.min_batch_size = 0;
  EXPECT_THROW(space.Validate(), ConfigError);
  space = {};
  space.min_weight_decay = -0.1;
  EXPECT_THROW(space.Validate(), ConfigError);
}

TEST(Matern52Test, ZeroDistanceAndClosedForm) {
  KernelParams p;
  p.signal_variance = 2.5;
  p.lengthscales = {0.5, 1.0, 2.0};
  EXPECT_EQ(Matern52({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}, p), 2.5);
  // Scaled distance r = 1 along the first axis.
  const double r5 = std::sqrt(5.0);
  EXPECT_NEAR(Matern52({0, 0, 0}, {0.5, 0, 0}, p),
              2.5 * (1 + r5 + 5.0 / 3.0) * std::exp(-r5), 1e-15);
}

TEST(Matern52Test, SymmetricPositiveDefinite) {
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    KernelParams p;
    for (double &l : p.lengthscales) l = rng.Uniform(0.05, 2.0);
    p.signal_variance = rng.Uniform(0.1, 3.0);
    const int n = 12;
    std::vector<UnitPoint> pts(n);
    for (auto &u : pts) {
      for (double &x : u) x = rng.Uniform();
    }
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) K(i, j) = Matern52(pts[i], pts[j], p);
    }
    EXPECT_TRUE(K.isApprox(K.transpose(), 0.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(LogMarginalLikelihoodTest, TwoPointsByHand) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    KernelParams p;
    for (double &l : p.lengthscales) l = rng.Uniform(0.1, 2.0);
    p.signal_variance = rng.Uniform(0.1, 2.0);
    const double noise = rng.Uniform(1e-4, 1e-1);
    const std::vector<UnitPoint> x = {{rng.Uniform(), rng.Uniform(), rng.Uniform()},
                                      {rng.Uniform(), rng.Uniform(), rng.Uniform()}};
    Eigen::VectorXd y(2);
    y << rng.Uniform(-1, 1), rng.Uniform(-1, 1);
    const double a = p.signal_variance + noise + kInitialJitter;
    const double b = Matern52(x[0], x[1], p);
    const double det = a * a - b * b;
    const double quad = (a * y(0) * y(0) - 2 * b * y(0) * y(1) + a * y(1) * y(1)) / det;
    const double expected = -0.5 * quad - 0.5 * std::log(det) - std::log(2 * std::numbers::pi);
    EXPECT_NEAR(LogMarginalLikelihood(x, y, p, noise), expected, 1e-8);
  }
}

std::vector<Trial> RandomTrials(Rng &rng, int n) {
  std::vector<Trial> trials(n);
  for (Trial &t : trials) {
    for (double &x : t.u) x = rng.Uniform();
    t.f = rng.Uniform();
  }
  return trials;
}

// Posterior from an explicit inverse of the noisy kernel matrix.
GpSurrogate::Prediction DenseInverseOracle(const GpSurrogate &gp, const UnitPoint &u) {
  const auto &x = gp.inputs();
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) K(i, j) = Matern52(x[i], x[j], gp.kernel());
    K(i, i) += gp.noise() + gp.jitter();
    k(i) = Matern52(u, x[i], gp.kernel());
  }
  const Eigen::MatrixXd inverse = K.inverse();
  const double mu0 = gp.targets().mean();
  const Eigen::VectorXd centered = gp.targets().array() - mu0;
  return {mu0 + k.dot(inverse * centered),
          gp.kernel().signal_variance - k.dot(inverse * k)};
}

TEST(GpSurrogateTest, CholeskyMatchesDenseInverse) {
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const auto trials = RandomTrials(rng, 5);
    const GpSurrogate gp = GpSurrogate::Fit(trials, 1e-4, 100 + k);
    for (int q = 0; q < 10; ++q) {
      UnitPoint u;
      for (double &x : u) x = rng.Uniform();
      const auto got = gp.Predict(u);
      const auto want = DenseInverseOracle(gp, u);
      EXPECT_NEAR(got.mean, want.mean, 1e-8);
      EXPECT_NEAR(got.variance, std::max(0.0, want.variance), 1e-8);
    }
  }
}

TEST(GpSurrogateTest, InterpolatesWithTinyNoise) {
  Rng rng(5);
  const auto trials = RandomTrials(rng, 6);
  KernelParams p;
  p.lengthscales = {0.3, 0.3, 0.3};
  const GpSurrogate gp = GpSurrogate::FitWithKernel(trials, p, 1e-12);
  for (const Trial &t : trials) {
    const auto pred = gp.Predict(t.u);
    EXPECT_NEAR(pred.mean, t.f, 1e-6);
    EXPECT_LE(pred.variance, 1e-6);
  }
}

TEST(GpSurrogateTest, VarianceAtTrainingInputsBoundedByNoise) {
  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    const auto trials = RandomTrials(rng, 3 + rng.UniformInt(10));
    const GpSurrogate gp = GpSurrogate::Fit(trials, 1e-4, k);
    for (const Trial &t : trials) EXPECT_LE(gp.Predict(t.u).variance, 1e-4 + 1e-6);
  }
}

TEST(GpSurrogateTest, RevertsToPriorFarFromData) {
  Rng rng(7);
  std::vector<Trial> trials = RandomTrials(rng, 5);
  for (Trial &t : trials) t.u = {0.1 * rng.Uniform(), 0.1 * rng.Uniform(), 0.1 * rng.Uniform()};
  KernelParams p;
  p.lengthscales = {0.01, 0.01, 0.01};
  p.signal_variance = 0.7;
  const GpSurrogate gp = GpSurrogate::FitWithKernel(trials, p, 1e-4);
  const auto pred = gp.Predict({0.9, 0.9, 0.9});
  EXPECT_NEAR(pred.mean, gp.prior_mean(), 1e-3);
  EXPECT_NEAR(pred.variance, 0.7, 1e-3);
}

TEST(GpSurrogateTest, ConstantTargets) {
  Rng rng(8);
  auto trials = RandomTrials(rng, 6);
  for (Trial &t : trials) t.f = 0.42;
  const GpSurrogate gp = GpSurrogate::Fit(trials, 1e-4, 0);
  EXPECT_DOUBLE_EQ(gp.prior_mean(), 0.42);
  for (int q = 0; q < 20; ++q) {
    EXPECT_NEAR(gp.Predict({rng.Uniform(), rng.Uniform(), rng.Uniform()}).mean, 0.42, 1e-6);
  }
}

TEST(GpSurrogateTest, RefitIsDeterministic) {
  Rng rng(9);
  const auto trials = RandomTrials(rng, 8);
  const GpSurrogate a = GpSurrogate::Fit(trials, 1e-4, 77);
  const GpSurrogate b = GpSurrogate::Fit(trials, 1e-4, 77);
  EXPECT_EQ(a.kernel().lengthscales, b.kernel().lengthscales);
  EXPECT_EQ(a.kernel().signal_variance, b.kernel().signal_variance);
  EXPECT_EQ(a.log_marginal_likelihood(), b.log_marginal_likelihood());
  EXPECT_EQ(a.Predict({0.3, 0.3, 0.3}).mean, b.Predict({0.3, 0.3, 0.3}).mean);
}

TEST(GpSurrogateTest, FitImprovesOnDefaultKernel) {
  Rng rng(10);
  for (int k = 0; k < 10; ++k) {
    const auto trials = RandomTrials(rng, 8);
    const GpSurrogate fitted = GpSurrogate::Fit(trials, 1e-4, k);
    const GpSurrogate fixed = GpSurrogate::FitWithKernel(trials, KernelParams{}, 1e-4);
    EXPECT_GE(fitted.log_marginal_likelihood(), fixed.log_marginal_likelihood() - 1e-9);
  }
}

TEST(GpSurrogateTest, DuplicateInputsAreMerged) {
  std::vector<Trial> trials(3);
  trials[0].u = trials[1].u = {0.2, 0.2, 0.2};
  trials[0].f = 0.2;
  trials[1].f = 0.4;
  trials[2].u = {0.8, 0.8, 0.8};
  trials[2].f = 0.9;
  const GpSurrogate gp = GpSurrogate::Fit(trials, 0.0, 1);
  ASSERT_EQ(gp.inputs().size(), 2u);
  EXPECT_DOUBLE_EQ(gp.targets()(0), 0.3);
  EXPECT_DOUBLE_EQ(gp.prior_mean(), 0.6);
}

TEST(NormalCdfTest, ReferenceValues) {
  EXPECT_EQ(NormalCdf(0.0), 0.5);
  EXPECT_NEAR(NormalCdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(NormalCdf(-3.0), 0.0013498980316300946, 1e-15);
  EXPECT_NEAR(NormalCdf(-8.0), 6.22096057427178e-16, 1e-20);
}

TEST(ExpectedImprovementTest, ClosedFormCases) {
  EXPECT_EQ(ExpectedImprovement(0.3, 0.0, 0.5, 0.0), 0.0);
  EXPECT_EQ(ExpectedImprovement(0.5, 0.0, 0.5, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(ExpectedImprovement(0.7, 0.0, 0.5, 0.0), 0.2);
  EXPECT_EQ(ExpectedImprovement(0.7, 0.0, 0.5, 0.3), 0.0);
  EXPECT_NEAR(ExpectedImprovement(0.5, 1.0, 0.5, 0.0), 0.398942, 1e-6);
  EXPECT_DOUBLE_EQ(ExpectedImprovement(0.5, 1.0, 0.5, 0.0),
                   1.0 / std::sqrt(2 * std::numbers::pi));
  EXPECT_THROW(ExpectedImprovement(0.5, -1.0, 0.5, 0.0), ConfigError);
}

TEST(ExpectedImprovementTest, NonNegativeAndMonotoneInMean) {
  Rng rng(11);
  for (int k = 0; k < 10000; ++k) {
    const double mu = rng.Uniform(-5, 5), sigma = rng.Uniform(0, 3);
    const double best = rng.Uniform(-5, 5), xi = rng.Uniform(0, 0.5);
    const double ei = ExpectedImprovement(mu, sigma, best, xi);
    ASSERT_GE(ei, 0.0);
    ASSERT_GE(ExpectedImprovement(mu + 0.1, sigma, best, xi), ei);
    ASSERT_GE(ei, std::max(mu - best - xi, 0.0) - 1e-12);
  }
}

TEST(ExpectedImprovementTest, MatchesMonteCarlo) {
  Rng rng(12);
  for (int k = 0; k < 10; ++k) {
    const double mu = rng.Uniform(-1, 1), sigma = rng.Uniform(0.05, 1.5);
    const double best = rng.Uniform(-1, 1);
    const int samples = 200000;
    double sum = 0, sum_sq = 0;
    for (int s = 0; s < samples; ++s) {
      const double gain = std::max(mu + sigma * rng.Normal() - best, 0.0);
      sum += gain;
      sum_sq += gain * gain;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sum_sq / samples - mean * mean) / samples);
    EXPECT_NEAR(ExpectedImprovement(mu, sigma, best, 0.0), mean, 3 * se + 1e-12);
  }
}

TEST(LatinHypercubeTest, OnePointPerStratum) {
  for (int n : {2, 5, 17}) {
    Rng rng(n);
    const auto pts = LatinHypercube(n, rng);
    ASSERT_EQ(static_cast<int>(pts.size()), n);
    for (int d = 0; d < kNumHyperparams; ++d) {
      std::vector<int> hits(n, 0);
      for (const auto &u : pts) {
        ASSERT_GE(u[d], 0.0);
        ASSERT_LT(u[d], 1.0);
        ++hits[static_cast<int>(u[d] * n)];
      }
      for (int h : hits) EXPECT_EQ(h, 1);
    }
  }
}

TEST(ProposeNextTest, DeterministicAndInBounds) {
  Rng rng(13);
  const auto trials = RandomTrials(rng, 6);
  const GpSurrogate gp = GpSurrogate::Fit(trials, 1e-4, 3);
  const HyperSpace space;
  AcquisitionConfig config;
  config.seed = 5;
  const Proposal a = ProposeNext(gp, space, config);
  const Proposal b = ProposeNext(gp, space, config);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.search_point, b.search_point);
  EXPECT_GE(a.expected_improvement, 0.0);
  EXPECT_GE(a.params.batch_size, 2);
  EXPECT_LE(a.params.batch_size, 32);
  EXPECT_GE(a.params.learning_rate, 1e-6);
  EXPECT_LE(a.params.learning_rate, 1e-4 * (1 + 1e-12));
  EXPECT_EQ(a.u, space.Normalize(a.params));
  // The refined point is at least as good as any sampled candidate.
  Rng check(config.seed);
  for (int c = 0; c < config.candidates; ++c) {
    UnitPoint u;
    for (double &x : u) x = check.Uniform();
    const auto p = gp.Predict(u);
    ASSERT_LE(ExpectedImprovement(p.mean, std::sqrt(p.variance), gp.best_observed(), 0.0),
              a.expected_improvement);
  }
}

double Bump(const HyperSpace &space, const Hyperparams &h) {
  const UnitPoint u = space.Normalize(h);
  const UnitPoint target = {0.3, 0.6, 0.2};
  double d2 = 0;
  for (int i = 0; i < kNumHyperparams; ++i) d2 += (u[i] - target[i]) * (u[i] - target[i]);
  return std::exp(-8 * d2);
}

TEST(TuneTest, BudgetEqualToInitIsPureDesign) {
  const HyperSpace space;
  TuneConfig config;
  config.budget = config.init = 5;
  int calls = 0;
  const TuneResult r = Tune(
      [&](const Hyperparams &h) {
        ++calls;
        return Bump(space, h);
      },
      space, config);
  EXPECT_EQ(calls, 5);
  EXPECT_EQ(r.history.size(), 5u);
  Rng rng(config.seed);
  const auto design = LatinHypercube(5, rng);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.history[i].params, space.Denormalize(design[i]));
}

TEST(TuneTest, HistoryCallbacksAndRunningMaximum) {
  const HyperSpace space;
  TuneConfig config;
  config.budget = 12;
  config.seed = 4;
  std::vector<int> indices;
  const TuneResult r = Tune([&](const Hyperparams &h) { return Bump(space, h); }, space,
                            config, [&](int i, const Trial &) { indices.push_back(i); });
  ASSERT_EQ(r.history.size(), 12u);
  EXPECT_EQ(indices, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}));
  double running = -1;
  double best = -1;
  for (const Trial &t : r.history) {
    const double next = std::max(running, t.f);
    EXPECT_GE(next, running);
    running = next;
    best = std::max(best, t.f);
    EXPECT_EQ(t.u, space.Normalize(t.params));
  }
  EXPECT_EQ(r.best.f, best);
}

TEST(TuneTest, DeterministicForDeterministicObjective) {
  const HyperSpace space;
  TuneConfig config;
  config.budget = 10;
  config.seed = 9;
  auto objective = [&](const Hyperparams &h) { return Bump(space, h); };
  const TuneResult a = Tune(objective, space, config);
  const TuneResult b = Tune(objective, space, config);
  for (size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].params, b.history[i].params);
    EXPECT_EQ(a.history[i].f, b.history[i].f);
  }
}

TEST(TuneTest, FailuresScoreZero) {
  const HyperSpace space;
  TuneConfig config;
  config.budget = 8;
  const TuneResult r = Tune(
      [&](const Hyperparams &h) -> double {
        if (h.learning_rate > 1e-5) throw Error("diverged");
        if (h.weight_decay > 0.2) return std::nan("");
        return 0.5;
      },
      space, config);
  int failed = 0;
  for (const Trial &t : r.history) {
    if (t.failed) {
      ++failed;
      EXPECT_EQ(t.f, 0.0);
    } else {
      EXPECT_EQ(t.f, 0.5);
    }
  }
  EXPECT_GT(failed, 0);
  EXPECT_FALSE(r.best.failed);
}

TEST(TuneTest, ConfigValidation) {
  const HyperSpace space;
  auto objective = [](const Hyperparams &) { return 0.0; };
  TuneConfig config;
  config.init = 1;
  EXPECT_THROW(Tune(objective, space, config), ConfigError);
  config = {};
  config.budget = 3;
  EXPECT_THROW(Tune(objective, space, config), ConfigError);
}

TEST(TrialLogLineTest, Fields) {
  Trial t;
  t.params = {3e-5, 8, 0.05};
  t.u = {0.1, 0.5, 0.25};
  t.f = 0.75;
  const auto j = nlohmann::json::parse(TrialLogLine(3, t));
  EXPECT_EQ(j.at("trial"), 3);
  EXPECT_EQ(j.at("learning_rate").get<double>(), 3e-5);
  EXPECT_EQ(j.at("batch_size"), 8);
  EXPECT_EQ(j.at("weight_decay").get<double>(), 0.05);
  EXPECT_EQ(j.at("u").size(), 3u);
  EXPECT_EQ(j.at("f1").get<double>(), 0.75);
  EXPECT_EQ(j.at("failed"), false);
  EXPECT_TRUE(j.contains("seconds"));
}

}  // namespace
}  // namespace nner
