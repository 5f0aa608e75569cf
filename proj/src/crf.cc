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

#include "nner/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nner/base.h"
#include "nner/evaluation.h"

namespace nner {

namespace {

double LogSumExp(const double *values, int n) {
  double max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) max = std::max(max, values[i]);
  if (!std::isfinite(max)) return max;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(values[i] - max);
  return max + std::log(sum);
}

int Label(BioTag tag) { return static_cast<int>(tag); }

void CheckLengths(const FeatureMatrix &features, const TagSequence &tags) {
  if (features.rows() == 0) throw MismatchError("empty sequence");
  if (static_cast<int>(tags.size()) != features.rows()) {
    throw MismatchError("tag sequence length " + std::to_string(tags.size()) +
                        " does not match " + std::to_string(features.rows()) +
                        " feature rows");
  }
}

void CheckDim(const CrfModel &model, const FeatureMatrix &features) {
  if (features.dim() != model.dim()) {
    throw MismatchError("feature dimension " + std::to_string(features.dim()) +
                        " does not match model dimension " +
                        std::to_string(model.dim()));
  }
}

}  // namespace

CrfParameters CrfParameters::Zeros(int dim) {
  CrfParameters p;
  p.dim = dim;
  p.weights.assign(static_cast<size_t>(kNumLabels) * dim, 0.0);
  return p;
}

void CrfParameters::SetZero() {
  std::fill(weights.begin(), weights.end(), 0.0);
  bias.fill(0.0);
  for (auto &row : transitions) row.fill(0.0);
  start.fill(0.0);
  end.fill(0.0);
}

bool CrfParameters::AllFinite() const {
  bool finite = true;
  ForEachScalar([&](double x) { finite = finite && std::isfinite(x); });
  return finite;
}

TransitionMask TransitionMask::Bio() {
  TransitionMask mask;
  mask.start[Label(BioTag::kInside)] = true;
  mask.transitions[Label(BioTag::kOutside)][Label(BioTag::kInside)] = true;
  return mask;
}

TransitionMask TransitionMask::None() { return TransitionMask{}; }

CrfModel CrfModel::Zeros(int dim, TransitionMask mask) {
  CrfModel model;
  model.params = CrfParameters::Zeros(dim);
  model.mask = mask;
  return model;
}

TransitionScores CrfModel::EffectiveTransitions() const {
  TransitionScores t = params.transitions;
  for (int a = 0; a < kNumLabels; ++a) {
    for (int b = 0; b < kNumLabels; ++b) {
      if (mask.transitions[a][b]) t[a][b] += kMaskPenalty;
    }
  }
  return t;
}

LabelScores CrfModel::EffectiveStart() const {
  LabelScores s = params.start;
  for (int y = 0; y < kNumLabels; ++y) {
    if (mask.start[y]) s[y] += kMaskPenalty;
  }
  return s;
}

std::vector<LabelScores> ComputeEmissions(const CrfModel &model,
                                          const FeatureMatrix &features) {
  CheckDim(model, features);
  std::vector<LabelScores> emissions(features.rows());
  const CrfParameters &p = model.params;
  for (int t = 0; t < features.rows(); ++t) {
    LabelScores e = p.bias;
    features.ForEach(t, [&](uint32_t j, double v) {
      for (int y = 0; y < kNumLabels; ++y) e[y] += p.weight(y, j) * v;
    });
    emissions[t] = e;
  }
  return emissions;
}

double SequenceScore(const CrfModel &model, const FeatureMatrix &features,
                     const TagSequence &tags) {
  CheckLengths(features, tags);
  const auto emissions = ComputeEmissions(model, features);
  const auto trans = model.EffectiveTransitions();
  const auto start = model.EffectiveStart();
  const int n = features.rows();
  double score = start[Label(tags[0])];
  for (int t = 0; t < n; ++t) {
    score += emissions[t][Label(tags[t])];
    if (t > 0) score += trans[Label(tags[t - 1])][Label(tags[t])];
  }
  return score + model.params.end[Label(tags[n - 1])];
}

namespace {

// alpha[t][y]: log-sum of scores of prefixes ending in y at t, excluding the
// end score.
std::vector<LabelScores> Forward(const std::vector<LabelScores> &emissions,
                                 const TransitionScores &trans,
                                 const LabelScores &start) {
  const int n = static_cast<int>(emissions.size());
  std::vector<LabelScores> alpha(n);
  for (int y = 0; y < kNumLabels; ++y) alpha[0][y] = start[y] + emissions[0][y];
  for (int t = 1; t < n; ++t) {
    for (int y = 0; y < kNumLabels; ++y) {
      double terms[kNumLabels];
      for (int prev = 0; prev < kNumLabels; ++prev) {
        terms[prev] = alpha[t - 1][prev] + trans[prev][y];
      }
      alpha[t][y] = emissions[t][y] + LogSumExp(terms, kNumLabels);
    }
  }
  return alpha;
}

// beta[t][y]: log-sum of scores of suffixes after t given y at t, including
// the end score.
std::vector<LabelScores> Backward(const std::vector<LabelScores> &emissions,
                                  const TransitionScores &trans,
                                  const LabelScores &end) {
  const int n = static_cast<int>(emissions.size());
  std::vector<LabelScores> beta(n);
  beta[n - 1] = end;
  for (int t = n - 2; t >= 0; --t) {
    for (int y = 0; y < kNumLabels; ++y) {
      double terms[kNumLabels];
      for (int next = 0; next < kNumLabels; ++next) {
        terms[next] = trans[y][next] + emissions[t + 1][next] + beta[t + 1][next];
      }
      beta[t][y] = LogSumExp(terms, kNumLabels);
    }
  }
  return beta;
}

double Terminate(const LabelScores &alpha_last, const LabelScores &end) {
  double terms[kNumLabels];
  for (int y = 0; y < kNumLabels; ++y) terms[y] = alpha_last[y] + end[y];
  return LogSumExp(terms, kNumLabels);
}

}  // namespace

double LogPartition(const CrfModel &model, const FeatureMatrix &features) {
  if (features.rows() == 0) throw MismatchError("empty sequence");
  const auto emissions = ComputeEmissions(model, features);
  const auto alpha = Forward(emissions, model.EffectiveTransitions(),
                             model.EffectiveStart());
  return Terminate(alpha.back(), model.params.end);
}

TagSequence ViterbiDecode(const CrfModel &model, const FeatureMatrix &features) {
  if (features.rows() == 0) throw MismatchError("empty sequence");
  const auto emissions = ComputeEmissions(model, features);
  const auto trans = model.EffectiveTransitions();
  const auto start = model.EffectiveStart();
  const int n = features.rows();

  std::vector<LabelScores> delta(n);
  std::vector<std::array<int, kNumLabels>> backpointer(n);
  for (int y = 0; y < kNumLabels; ++y) delta[0][y] = start[y] + emissions[0][y];
  for (int t = 1; t < n; ++t) {
    for (int y = 0; y < kNumLabels; ++y) {
      int best = 0;
      double best_score = delta[t - 1][0] + trans[0][y];
      for (int prev = 1; prev < kNumLabels; ++prev) {
        const double s = delta[t - 1][prev] + trans[prev][y];
        if (s > best_score) {
          best = prev;
          best_score = s;
        }
      }
      delta[t][y] = best_score + emissions[t][y];
      backpointer[t][y] = best;
    }
  }

  int label = 0;
  double best_score = delta[n - 1][0] + model.params.end[0];
  for (int y = 1; y < kNumLabels; ++y) {
    const double s = delta[n - 1][y] + model.params.end[y];
    if (s > best_score) {
      label = y;
      best_score = s;
    }
  }
  TagSequence tags(n);
  for (int t = n - 1; t >= 0; --t) {
    tags[t] = static_cast<BioTag>(label);
    if (t > 0) label = backpointer[t][label];
  }
  return tags;
}

Marginals ComputeMarginals(const CrfModel &model, const FeatureMatrix &features) {
  if (features.rows() == 0) throw MismatchError("empty sequence");
  const auto emissions = ComputeEmissions(model, features);
  const auto trans = model.EffectiveTransitions();
  const auto alpha = Forward(emissions, trans, model.EffectiveStart());
  const auto beta = Backward(emissions, trans, model.params.end);
  const int n = features.rows();

  Marginals m;
  m.log_partition = Terminate(alpha.back(), model.params.end);
  m.unary.resize(n);
  for (int t = 0; t < n; ++t) {
    for (int y = 0; y < kNumLabels; ++y) {
      m.unary[t][y] = std::exp(alpha[t][y] + beta[t][y] - m.log_partition);
    }
  }
  m.pairwise.resize(n > 0 ? n - 1 : 0);
  for (int t = 1; t < n; ++t) {
    for (int a = 0; a < kNumLabels; ++a) {
      for (int b = 0; b < kNumLabels; ++b) {
        m.pairwise[t - 1][a][b] =
            std::exp(alpha[t - 1][a] + trans[a][b] + emissions[t][b] +
                     beta[t][b] - m.log_partition);
      }
    }
  }
  return m;
}

double AccumulateNllGradient(const CrfModel &model, const LabeledSequence &example,
                             double scale, CrfParameters *gradient) {
  const FeatureMatrix &x = *example.features;
  const TagSequence &tags = example.tags;
  CheckLengths(x, tags);
  CheckDim(model, x);
  const int n = x.rows();
  const Marginals m = ComputeMarginals(model, x);
  const double loss = m.log_partition - SequenceScore(model, x, tags);

  // Expected minus observed sufficient statistics.
  for (int t = 0; t < n; ++t) {
    LabelScores diff = m.unary[t];
    diff[Label(tags[t])] -= 1.0;
    for (int y = 0; y < kNumLabels; ++y) {
      gradient->bias[y] += scale * diff[y];
    }
    x.ForEach(t, [&](uint32_t j, double v) {
      for (int y = 0; y < kNumLabels; ++y) {
        gradient->weight(y, j) += scale * diff[y] * v;
      }
    });
  }
  for (int t = 1; t < n; ++t) {
    for (int a = 0; a < kNumLabels; ++a) {
      for (int b = 0; b < kNumLabels; ++b) {
        gradient->transitions[a][b] += scale * m.pairwise[t - 1][a][b];
      }
    }
    gradient->transitions[Label(tags[t - 1])][Label(tags[t])] -= scale;
  }
  for (int y = 0; y < kNumLabels; ++y) {
    gradient->start[y] += scale * m.unary[0][y];
    gradient->end[y] += scale * m.unary[n - 1][y];
  }
  gradient->start[Label(tags[0])] -= scale;
  gradient->end[Label(tags[n - 1])] -= scale;
  return loss;
}

LossAndGradient NllAndGradient(const CrfModel &model,
                               std::span<const LabeledSequence> batch) {
  if (batch.empty()) throw ConfigError("empty batch");
  if (!model.params.AllFinite()) throw ValidationError("non-finite parameters");
  LossAndGradient out;
  out.gradient = CrfParameters::Zeros(model.dim());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const LabeledSequence &example : batch) {
    out.loss += scale * AccumulateNllGradient(model, example, scale, &out.gradient);
  }
  return out;
}

AdamW::AdamW(int dim, double learning_rate, double weight_decay, double beta1,
             double beta2, double epsilon)
    : learning_rate_(learning_rate),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(CrfParameters::Zeros(dim)),
      v_(CrfParameters::Zeros(dim)) {}

void AdamW::Step(const CrfParameters &gradient, CrfParameters *params) {
  ++step_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  const double shrink = 1.0 - learning_rate_ * weight_decay_;

  auto update = [&](double *p, const double *g, double *m, double *v, size_t n,
                    bool decay) {
    for (size_t i = 0; i < n; ++i) {
      if (decay) p[i] *= shrink;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  };

  update(params->weights.data(), gradient.weights.data(), m_.weights.data(),
         v_.weights.data(), params->weights.size(), true);
  update(params->bias.data(), gradient.bias.data(), m_.bias.data(),
         v_.bias.data(), kNumLabels, false);
  for (int a = 0; a < kNumLabels; ++a) {
    update(params->transitions[a].data(), gradient.transitions[a].data(),
           m_.transitions[a].data(), v_.transitions[a].data(), kNumLabels, true);
  }
  update(params->start.data(), gradient.start.data(), m_.start.data(),
         v_.start.data(), kNumLabels, false);
  update(params->end.data(), gradient.end.data(), m_.end.data(), v_.end.data(),
         kNumLabels, false);
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight decay must be non-negative");
  }
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
}

double ValidationSpanF1(const CrfModel &model,
                        std::span<const LabeledSequence> data) {
  Counts counts;
  for (const LabeledSequence &example : data) {
    const auto gold = DecodeBio(example.tags, "");
    const auto pred = DecodeBio(ViterbiDecode(model, *example.features), "");
    counts += SpanCounts(gold, pred, "");
  }
  return counts.F1();
}

TrainResult TrainModel(std::span<const LabeledSequence> train,
                       std::span<const LabeledSequence> val,
                       const TrainConfig &config) {
  config.Validate();
  if (train.empty()) throw ConfigError("training set is empty");
  const int dim = train.front().features->dim();

  CrfModel model = CrfModel::Zeros(dim);
  CrfParameters gradient = CrfParameters::Zeros(dim);
  AdamW optimizer(dim, config.learning_rate, config.weight_decay);
  Rng rng(config.seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.model = model;
  double best_f1 = -1.0;
  const size_t batch_size = static_cast<size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.Shuffle(order);
    double total_loss = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += batch_size) {
      const size_t end = std::min(order.size(), begin + batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      gradient.SetZero();
      double batch_loss = 0.0;
      for (size_t i = begin; i < end; ++i) {
        batch_loss += AccumulateNllGradient(model, train[order[i]], scale, &gradient);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingDivergedError(epoch + 1, "non-finite loss");
      }
      total_loss += batch_loss;
      optimizer.Step(gradient, &model.params);
    }
    if (!model.params.AllFinite()) {
      throw TrainingDivergedError(epoch + 1, "non-finite parameters");
    }

    EpochRecord record;
    record.mean_nll = total_loss / static_cast<double>(train.size());
    record.val_f1 = ValidationSpanF1(model, val);
    result.report.epochs.push_back(record);
    if (record.val_f1 > best_f1 || val.empty()) {
      best_f1 = record.val_f1;
      result.report.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

}  // namespace nner
