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

// Bayesian optimization of (learning rate, batch size, weight decay) against
// validation F1. A Gaussian process with a constant mean and an ARD Matern
// 5/2 kernel models F1 over the unit cube; the next configuration maximizes
// expected improvement over the best F1 observed so far.

#ifndef NNER_BAYESOPT_H_
#define NNER_BAYESOPT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nner/base.h"

namespace nner {

constexpr int kNumHyperparams = 3;

using UnitPoint = std::array<double, kNumHyperparams>;

struct Hyperparams {
  double learning_rate = 2e-5;
  int batch_size = 16;
  double weight_decay = 0.01;
  bool operator==(const Hyperparams &) const = default;
};

// Search box. Learning rate is searched on a log10 scale, batch size on a
// log2 scale (rounded to an integer), weight decay linearly.
struct HyperSpace {
  double min_learning_rate = 1e-6;
  double max_learning_rate = 1e-4;
  int min_batch_size = 2;
  int max_batch_size = 32;
  double min_weight_decay = 0.0;
  double max_weight_decay = 0.3;

  void Validate() const;
  UnitPoint Normalize(const Hyperparams &params) const;
  // Coordinates are clamped to [0, 1] first.
  Hyperparams Denormalize(const UnitPoint &u) const;
};

struct Trial {
  Hyperparams params;
  UnitPoint u{};
  double f = 0.0;
  bool failed = false;
  double seconds = 0.0;
};

struct KernelParams {
  std::array<double, kNumHyperparams> lengthscales{1.0, 1.0, 1.0};
  double signal_variance = 1.0;
};

// sf2 * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r) with r the
// lengthscale-scaled Euclidean distance. Throws ConfigError on non-positive
// lengthscales or variance.
double Matern52(const UnitPoint &a, const UnitPoint &b, const KernelParams &params);

class CholeskyError : public Error {
 public:
  using Error::Error;
};

constexpr double kInitialJitter = 1e-8;
constexpr double kMaxJitter = 1e-4;

// Exact GP log marginal likelihood of |targets| (already centered) under
// K + (noise + jitter) I.
double LogMarginalLikelihood(const std::vector<UnitPoint> &inputs,
                             const Eigen::VectorXd &targets,
                             const KernelParams &params, double noise,
                             double jitter = kInitialJitter);

class GpSurrogate {
 public:
  // Number of random restarts of the kernel hyperparameter search.
  static constexpr int kRestarts = 64;

  // Chooses lengthscales in [0.05, 3] and signal variance in [0.01, 4]
  // (log-uniform starts, then coordinate refinement in log space) to
  // maximize the log marginal likelihood. Needs at least two trials; trials
  // at identical points are merged by averaging f.
  static GpSurrogate Fit(const std::vector<Trial> &trials, double noise,
                         uint64_t seed);

  // Conditions on |trials| with a fixed kernel.
  static GpSurrogate FitWithKernel(const std::vector<Trial> &trials,
                                   const KernelParams &kernel, double noise);

  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;  // latent function variance, clamped at 0
  };
  Prediction Predict(const UnitPoint &u) const;

  const KernelParams &kernel() const { return kernel_; }
  double noise() const { return noise_; }
  double jitter() const { return jitter_; }
  double prior_mean() const { return prior_mean_; }
  double best_observed() const { return best_observed_; }
  double log_marginal_likelihood() const { return log_marginal_likelihood_; }
  const std::vector<UnitPoint> &inputs() const { return inputs_; }
  const Eigen::VectorXd &targets() const { return targets_; }

 private:
  GpSurrogate() = default;
  void Condition();

  KernelParams kernel_;
  double noise_ = 0.0;
  double jitter_ = kInitialJitter;
  double prior_mean_ = 0.0;
  double best_observed_ = 0.0;
  double log_marginal_likelihood_ = 0.0;
  std::vector<UnitPoint> inputs_;
  Eigen::VectorXd targets_;  // raw observations
  Eigen::MatrixXd cholesky_;  // lower factor of K + (noise + jitter) I
  Eigen::VectorXd alpha_;     // (K + ...)^-1 (targets - prior_mean)
};

double NormalPdf(double z);
double NormalCdf(double z);

// E[max(F - best - xi, 0)] for F ~ N(mean, sigma^2). Throws ConfigError on
// negative sigma.
double ExpectedImprovement(double mean, double sigma, double best, double xi);

struct AcquisitionConfig {
  int candidates = 2048;
  double xi = 0.0;
  uint64_t seed = 0;
};

struct Proposal {
  Hyperparams params;
  UnitPoint u{};             // Normalize(params), batch size snapped
  UnitPoint search_point{};  // continuous maximizer found by the search
  double expected_improvement = 0.0;  // at search_point
};

// Best of |candidates| uniform draws, refined by coordinate steps of +-0.02
// accepted only when EI improves (10 sweeps).
Proposal ProposeNext(const GpSurrogate &surrogate, const HyperSpace &space,
                     const AcquisitionConfig &config);

// Stratified sample of |n| points in the unit cube.
std::vector<UnitPoint> LatinHypercube(int n, Rng &rng);

struct TuneConfig {
  int budget = 20;
  int init = 5;
  uint64_t seed = 0;
  double noise = 1e-4;
  AcquisitionConfig acquisition;

  void Validate() const;
};

struct TuneResult {
  Trial best;
  std::vector<Trial> history;  // evaluation order
};

// Maps a configuration to validation F1 in [0, 1]. Exceptions and values
// outside [0, 1] are recorded as failed trials with f = 0.
using Objective = std::function<double(const Hyperparams &)>;

// Called after every evaluation with the trial index.
using TrialCallback = std::function<void(int, const Trial &)>;

// Evaluates a Latin hypercube of config.init points, then alternates GP fit,
// EI proposal and evaluation until config.budget trials have run.
TuneResult Tune(const Objective &objective, const HyperSpace &space,
                const TuneConfig &config, const TrialCallback &callback = {});

// One tuning-log record (a single JSON line, no trailing newline).
std::string TrialLogLine(int index, const Trial &trial);

}  // namespace nner

#endif  // NNER_BAYESOPT_H_
