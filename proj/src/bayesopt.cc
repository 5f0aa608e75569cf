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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "json.hpp"

namespace nner {

namespace {

constexpr double kMinLengthscale = 0.05;
constexpr double kMaxLengthscale = 3.0;
constexpr double kMinSignalVariance = 0.01;
constexpr double kMaxSignalVariance = 4.0;

double Clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void HyperSpace::Validate() const {
  if (!(min_learning_rate > 0.0) || !(max_learning_rate > min_learning_rate)) {
    throw ConfigError("learning rate bounds must satisfy 0 < min < max");
  }
  if (min_batch_size < 1 || max_batch_size <= min_batch_size) {
    throw ConfigError("batch size bounds must satisfy 1 <= min < max");
  }
  if (!(min_weight_decay >= 0.0) || !(max_weight_decay > min_weight_decay)) {
    throw ConfigError("weight decay bounds must satisfy 0 <= min < max");
  }
}

UnitPoint HyperSpace::Normalize(const Hyperparams &params) const {
  const double lr_lo = std::log10(min_learning_rate);
  const double lr_hi = std::log10(max_learning_rate);
  const double bs_lo = std::log2(static_cast<double>(min_batch_size));
  const double bs_hi = std::log2(static_cast<double>(max_batch_size));
  return {(std::log10(params.learning_rate) - lr_lo) / (lr_hi - lr_lo),
          (std::log2(static_cast<double>(params.batch_size)) - bs_lo) / (bs_hi - bs_lo),
          (params.weight_decay - min_weight_decay) /
              (max_weight_decay - min_weight_decay)};
}

Hyperparams HyperSpace::Denormalize(const UnitPoint &u) const {
  const double lr_lo = std::log10(min_learning_rate);
  const double lr_hi = std::log10(max_learning_rate);
  const double bs_lo = std::log2(static_cast<double>(min_batch_size));
  const double bs_hi = std::log2(static_cast<double>(max_batch_size));
  Hyperparams params;
  params.learning_rate = std::pow(10.0, lr_lo + Clamp01(u[0]) * (lr_hi - lr_lo));
  const double batch = std::exp2(bs_lo + Clamp01(u[1]) * (bs_hi - bs_lo));
  params.batch_size = std::clamp(static_cast<int>(std::lround(batch)),
                                 min_batch_size, max_batch_size);
  params.weight_decay =
      min_weight_decay + Clamp01(u[2]) * (max_weight_decay - min_weight_decay);
  return params;
}

double Matern52(const UnitPoint &a, const UnitPoint &b, const KernelParams &params) {
  if (!(params.signal_variance > 0.0)) {
    throw ConfigError("signal variance must be positive");
  }
  double r2 = 0.0;
  for (int i = 0; i < kNumHyperparams; ++i) {
    if (!(params.lengthscales[i] > 0.0)) {
      throw ConfigError("lengthscales must be positive");
    }
    const double d = (a[i] - b[i]) / params.lengthscales[i];
    r2 += d * d;
  }
  const double sqrt5r = std::sqrt(5.0 * r2);
  return params.signal_variance * (1.0 + sqrt5r + 5.0 * r2 / 3.0) * std::exp(-sqrt5r);
}

namespace {

Eigen::MatrixXd KernelMatrix(const std::vector<UnitPoint> &inputs,
                             const KernelParams &params, double diagonal) {
  const int n = static_cast<int>(inputs.size());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = params.signal_variance + diagonal;
    for (int j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = Matern52(inputs[i], inputs[j], params);
    }
  }
  return k;
}

// Factorizes K + (noise + jitter) I, doubling jitter from kInitialJitter up
// to kMaxJitter until the factorization succeeds.
Eigen::MatrixXd FactorWithJitter(const std::vector<UnitPoint> &inputs,
                                 const KernelParams &params, double noise,
                                 double *jitter) {
  for (double j = kInitialJitter; j <= kMaxJitter * (1.0 + 1e-12); j *= 2.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(KernelMatrix(inputs, params, noise + j));
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd l = llt.matrixL();
      if (l.allFinite() && (l.diagonal().array() > 0.0).all()) {
        *jitter = j;
        return l;
      }
    }
  }
  throw CholeskyError("kernel matrix is not positive definite after jitter " +
                      std::to_string(kMaxJitter));
}

double LmlFromFactor(const Eigen::MatrixXd &l, const Eigen::VectorXd &y,
                     Eigen::VectorXd *alpha_out) {
  const auto lower = l.triangularView<Eigen::Lower>();
  Eigen::VectorXd alpha = lower.solve(y);
  lower.transpose().solveInPlace(alpha);
  const double n = static_cast<double>(y.size());
  const double lml = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() -
                     0.5 * n * std::log(2.0 * std::numbers::pi);
  if (alpha_out != nullptr) *alpha_out = std::move(alpha);
  return lml;
}

}  // namespace

double LogMarginalLikelihood(const std::vector<UnitPoint> &inputs,
                             const Eigen::VectorXd &targets,
                             const KernelParams &params, double noise,
                             double jitter) {
  Eigen::LLT<Eigen::MatrixXd> llt(KernelMatrix(inputs, params, noise + jitter));
  if (llt.info() != Eigen::Success) {
    throw CholeskyError("kernel matrix is not positive definite");
  }
  Eigen::MatrixXd l = llt.matrixL();
  return LmlFromFactor(l, targets, nullptr);
}

namespace {

// Trials at identical points become one observation with the mean f.
void MergeTrials(const std::vector<Trial> &trials, std::vector<UnitPoint> *inputs,
                 Eigen::VectorXd *targets) {
  std::map<UnitPoint, std::pair<double, int>> merged;
  std::vector<UnitPoint> order;
  for (const Trial &t : trials) {
    auto [it, inserted] = merged.try_emplace(t.u, 0.0, 0);
    if (inserted) order.push_back(t.u);
    it->second.first += t.f;
    it->second.second += 1;
  }
  inputs->assign(order.begin(), order.end());
  targets->resize(static_cast<Eigen::Index>(order.size()));
  for (size_t i = 0; i < order.size(); ++i) {
    const auto &[sum, count] = merged[order[i]];
    (*targets)(static_cast<Eigen::Index>(i)) = sum / count;
  }
}

using LogKernel = std::array<double, kNumHyperparams + 1>;

KernelParams FromLog(const LogKernel &x) {
  KernelParams p;
  for (int i = 0; i < kNumHyperparams; ++i) p.lengthscales[i] = std::exp(x[i]);
  p.signal_variance = std::exp(x[kNumHyperparams]);
  return p;
}

}  // namespace

GpSurrogate GpSurrogate::FitWithKernel(const std::vector<Trial> &trials,
                                       const KernelParams &kernel, double noise) {
  if (trials.empty()) throw ConfigError("cannot fit a GP to zero trials");
  if (!(noise >= 0.0)) throw ConfigError("noise variance must be non-negative");
  GpSurrogate gp;
  MergeTrials(trials, &gp.inputs_, &gp.targets_);
  gp.kernel_ = kernel;
  gp.noise_ = noise;
  gp.Condition();
  return gp;
}

void GpSurrogate::Condition() {
  prior_mean_ = targets_.mean();
  best_observed_ = targets_.maxCoeff();
  cholesky_ = FactorWithJitter(inputs_, kernel_, noise_, &jitter_);
  const Eigen::VectorXd centered = targets_.array() - prior_mean_;
  log_marginal_likelihood_ = LmlFromFactor(cholesky_, centered, &alpha_);
}

GpSurrogate GpSurrogate::Fit(const std::vector<Trial> &trials, double noise,
                             uint64_t seed) {
  if (trials.size() < 2) throw ConfigError("GP fit needs at least two trials");
  std::vector<UnitPoint> inputs;
  Eigen::VectorXd targets;
  MergeTrials(trials, &inputs, &targets);
  const Eigen::VectorXd centered = targets.array() - targets.mean();

  LogKernel lo, hi;
  for (int i = 0; i < kNumHyperparams; ++i) {
    lo[i] = std::log(kMinLengthscale);
    hi[i] = std::log(kMaxLengthscale);
  }
  lo[kNumHyperparams] = std::log(kMinSignalVariance);
  hi[kNumHyperparams] = std::log(kMaxSignalVariance);

  auto objective = [&](const LogKernel &x) {
    try {
      return LogMarginalLikelihood(inputs, centered, FromLog(x), noise);
    } catch (const CholeskyError &) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  Rng rng(seed);
  LogKernel best{};
  double best_value = -std::numeric_limits<double>::infinity();
  for (int start = 0; start < kRestarts; ++start) {
    LogKernel x;
    for (int i = 0; i <= kNumHyperparams; ++i) x[i] = rng.Uniform(lo[i], hi[i]);
    const double value = objective(x);
    if (value > best_value || start == 0) {
      best = x;
      best_value = value;
    }
  }

  // Coordinate refinement of the best start in log space.
  for (double step = 0.5; step > 0.01; step *= 0.5) {
    bool improved = true;
    for (int sweep = 0; improved && sweep < 20; ++sweep) {
      improved = false;
      for (int i = 0; i <= kNumHyperparams; ++i) {
        for (double dir : {1.0, -1.0}) {
          LogKernel x = best;
          x[i] = std::clamp(x[i] + dir * step, lo[i], hi[i]);
          const double value = objective(x);
          if (value > best_value) {
            best = x;
            best_value = value;
            improved = true;
          }
        }
      }
    }
  }

  GpSurrogate gp;
  gp.inputs_ = std::move(inputs);
  gp.targets_ = std::move(targets);
  gp.kernel_ = FromLog(best);
  gp.noise_ = noise;
  gp.Condition();
  return gp;
}

GpSurrogate::Prediction GpSurrogate::Predict(const UnitPoint &u) const {
  const Eigen::Index n = static_cast<Eigen::Index>(inputs_.size());
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) k_star(i) = Matern52(u, inputs_[i], kernel_);
  Prediction p;
  p.mean = prior_mean_ + k_star.dot(alpha_);
  const Eigen::VectorXd v = cholesky_.triangularView<Eigen::Lower>().solve(k_star);
  p.variance = std::max(0.0, kernel_.signal_variance - v.squaredNorm());
  return p;
}

double NormalPdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double ExpectedImprovement(double mean, double sigma, double best, double xi) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  const double gain = mean - best - xi;
  if (sigma == 0.0) return std::max(gain, 0.0);
  const double z = gain / sigma;
  return std::max(0.0, gain * NormalCdf(z) + sigma * NormalPdf(z));
}

Proposal ProposeNext(const GpSurrogate &surrogate, const HyperSpace &space,
                     const AcquisitionConfig &config) {
  if (config.candidates < 1) throw ConfigError("need at least one candidate");
  if (!(config.xi >= 0.0)) throw ConfigError("xi must be non-negative");
  const double best = surrogate.best_observed();
  auto ei = [&](const UnitPoint &u) {
    const auto p = surrogate.Predict(u);
    return ExpectedImprovement(p.mean, std::sqrt(p.variance), best, config.xi);
  };

  Rng rng(config.seed);
  UnitPoint best_point{};
  double best_ei = -1.0;
  for (int c = 0; c < config.candidates; ++c) {
    UnitPoint u;
    for (double &x : u) x = rng.Uniform();
    const double value = ei(u);
    if (value > best_ei) {
      best_ei = value;
      best_point = u;
    }
  }

  constexpr double kStep = 0.02;
  constexpr int kSweeps = 10;
  for (int sweep = 0; sweep < kSweeps; ++sweep) {
    for (int i = 0; i < kNumHyperparams; ++i) {
      for (double dir : {1.0, -1.0}) {
        UnitPoint u = best_point;
        u[i] = Clamp01(u[i] + dir * kStep);
        const double value = ei(u);
        if (value > best_ei) {
          best_ei = value;
          best_point = u;
        }
      }
    }
  }

  Proposal proposal;
  proposal.search_point = best_point;
  proposal.expected_improvement = best_ei;
  proposal.params = space.Denormalize(best_point);
  proposal.u = space.Normalize(proposal.params);
  return proposal;
}

std::vector<UnitPoint> LatinHypercube(int n, Rng &rng) {
  std::vector<UnitPoint> points(n);
  std::vector<int> strata(n);
  for (int d = 0; d < kNumHyperparams; ++d) {
    for (int i = 0; i < n; ++i) strata[i] = i;
    rng.Shuffle(strata);
    for (int i = 0; i < n; ++i) {
      points[i][d] = (strata[i] + rng.Uniform()) / n;
    }
  }
  return points;
}

void TuneConfig::Validate() const {
  if (init < 2) throw ConfigError("initial design needs at least 2 points");
  if (budget < init) throw ConfigError("budget must be at least the initial design size");
  if (!(noise >= 0.0)) throw ConfigError("noise variance must be non-negative");
}

namespace {

Trial Evaluate(const Objective &objective, const HyperSpace &space,
               const Hyperparams &params) {
  Trial trial;
  trial.params = params;
  trial.u = space.Normalize(params);
  const auto begin = std::chrono::steady_clock::now();
  try {
    trial.f = objective(params);
    if (!std::isfinite(trial.f) || trial.f < 0.0 || trial.f > 1.0) {
      LogWarning("objective returned " + std::to_string(trial.f) +
                 "; recording a failed trial");
      trial.f = 0.0;
      trial.failed = true;
    }
  } catch (const std::exception &e) {
    LogWarning(std::string("objective failed: ") + e.what());
    trial.f = 0.0;
    trial.failed = true;
  }
  trial.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - begin).count();
  return trial;
}

}  // namespace

TuneResult Tune(const Objective &objective, const HyperSpace &space,
                const TuneConfig &config, const TrialCallback &callback) {
  space.Validate();
  config.Validate();
  TuneResult result;
  auto record = [&](Trial trial) {
    const int index = static_cast<int>(result.history.size());
    if (index == 0 || trial.f > result.best.f) result.best = trial;
    if (callback) callback(index, trial);
    result.history.push_back(std::move(trial));
  };

  Rng rng(config.seed);
  for (const UnitPoint &u : LatinHypercube(config.init, rng)) {
    record(Evaluate(objective, space, space.Denormalize(u)));
  }
  for (int iteration = 0; static_cast<int>(result.history.size()) < config.budget;
       ++iteration) {
    const uint64_t round_seed = config.seed + 0x9E3779B97F4A7C15ULL * (iteration + 1);
    const GpSurrogate gp = GpSurrogate::Fit(result.history, config.noise, round_seed);
    AcquisitionConfig acquisition = config.acquisition;
    acquisition.seed = round_seed ^ config.acquisition.seed;
    const Proposal proposal = ProposeNext(gp, space, acquisition);
    record(Evaluate(objective, space, proposal.params));
  }
  return result;
}

std::string TrialLogLine(int index, const Trial &trial) {
  nlohmann::ordered_json line{
      {"trial", index},
      {"learning_rate", trial.params.learning_rate},
      {"batch_size", trial.params.batch_size},
      {"weight_decay", trial.params.weight_decay},
      {"u", std::vector<double>(trial.u.begin(), trial.u.end())},
      {"f1", trial.f},
      {"seconds", trial.seconds},
      {"failed", trial.failed}};
  return line.dump();
}

}  // namespace nner
