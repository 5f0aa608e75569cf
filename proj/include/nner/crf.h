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

// Linear-chain CRF over the labels {O, B, I} with a linear emission layer.
//
// The score of a tag sequence y for features x is
//
//   start[y_0] + sum_t e_t[y_t] + sum_{t>0} trans[y_{t-1}][y_t] + end[y_{n-1}]
//
// where e_t = W x_t + bias. Forbidden transitions (start -> I and O -> I by
// default) add kMaskPenalty to every path that uses them. All dynamic
// programs run in log space.

#ifndef NNER_CRF_H_
#define NNER_CRF_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nner/corpus.h"
#include "nner/features.h"

namespace nner {

constexpr int kNumLabels = kNumBioTags;
constexpr double kMaskPenalty = -1e9;

using LabelScores = std::array<double, kNumLabels>;
using TransitionScores = std::array<LabelScores, kNumLabels>;

// Trainable parameters; also used for gradients and optimizer moments.
struct CrfParameters {
  int dim = 0;
  std::vector<double> weights;  // kNumLabels x dim, row-major
  LabelScores bias{};
  TransitionScores transitions{};  // [from][to]
  LabelScores start{};
  LabelScores end{};

  static CrfParameters Zeros(int dim);

  double &weight(int label, uint32_t j) {
    return weights[static_cast<size_t>(label) * dim + j];
  }
  double weight(int label, uint32_t j) const {
    return weights[static_cast<size_t>(label) * dim + j];
  }

  void SetZero();
  bool AllFinite() const;

  // Visits every scalar in a fixed order (weights, bias, transitions, start,
  // end).
  template <typename Fn>
  void ForEachScalar(Fn &&fn) {
    VisitScalars(*this, fn);
  }
  template <typename Fn>
  void ForEachScalar(Fn &&fn) const {
    VisitScalars(*this, fn);
  }

  bool operator==(const CrfParameters &) const = default;

 private:
  template <typename Self, typename Fn>
  static void VisitScalars(Self &self, Fn &fn) {
    for (auto &w : self.weights) fn(w);
    for (auto &b : self.bias) fn(b);
    for (auto &row : self.transitions) {
      for (auto &t : row) fn(t);
    }
    for (auto &s : self.start) fn(s);
    for (auto &e : self.end) fn(e);
  }
};

// Forbidden entries; true means the move is penalized.
struct TransitionMask {
  std::array<std::array<bool, kNumLabels>, kNumLabels> transitions{};
  std::array<bool, kNumLabels> start{};

  // Forbids start -> I and O -> I.
  static TransitionMask Bio();
  static TransitionMask None();

  bool operator==(const TransitionMask &) const = default;
};

struct CrfModel {
  CrfParameters params;
  TransitionMask mask = TransitionMask::Bio();

  static CrfModel Zeros(int dim, TransitionMask mask = TransitionMask::Bio());

  int dim() const { return params.dim; }

  // Transition and start scores with mask penalties folded in.
  TransitionScores EffectiveTransitions() const;
  LabelScores EffectiveStart() const;

  bool operator==(const CrfModel &) const = default;
};

using TagSequence = std::vector<BioTag>;

// Per-token emission scores W x_t + bias.
std::vector<LabelScores> ComputeEmissions(const CrfModel &model,
                                          const FeatureMatrix &features);

// Throws MismatchError if lengths differ or the sequence is empty.
double SequenceScore(const CrfModel &model, const FeatureMatrix &features,
                     const TagSequence &tags);

// log of the sum of exp(score) over all kNumLabels^n sequences.
double LogPartition(const CrfModel &model, const FeatureMatrix &features);

// Highest-scoring tag sequence. Ties resolve to the lowest label index
// (O < B < I) both for the final label and at each backtrack step.
TagSequence ViterbiDecode(const CrfModel &model, const FeatureMatrix &features);

// A training example; |features| must outlive the example.
struct LabeledSequence {
  const FeatureMatrix *features = nullptr;
  TagSequence tags;
};

// Per-position label marginals and per-edge pair marginals.
struct Marginals {
  double log_partition = 0.0;
  std::vector<LabelScores> unary;             // n x L
  std::vector<TransitionScores> pairwise;     // (n-1) x L x L, edge t-1 -> t
};

Marginals ComputeMarginals(const CrfModel &model, const FeatureMatrix &features);

struct LossAndGradient {
  double loss = 0.0;
  CrfParameters gradient;
};

// Mean negative log-likelihood over |batch| and its gradient with respect to
// every parameter. Weight decay is not part of the loss.
LossAndGradient NllAndGradient(const CrfModel &model,
                               std::span<const LabeledSequence> batch);

// Adds scale * d(-log p(tags | x)) to |gradient| and returns -log p.
double AccumulateNllGradient(const CrfModel &model, const LabeledSequence &example,
                             double scale, CrfParameters *gradient);

// Adam with decoupled weight decay. Decay shrinks emission weights and
// transitions only; bias, start and end scores are exempt.
class AdamW {
 public:
  AdamW(int dim, double learning_rate, double weight_decay,
        double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void Step(const CrfParameters &gradient, CrfParameters *params);
  int64_t steps() const { return step_; }

 private:
  double learning_rate_;
  double weight_decay_;
  double beta1_;
  double beta2_;
  double epsilon_;
  int64_t step_ = 0;
  CrfParameters m_;
  CrfParameters v_;
};

struct TrainConfig {
  double learning_rate = 2e-5;
  int batch_size = 16;
  double weight_decay = 0.01;
  int epochs = 15;
  uint64_t seed = 0;

  // Throws ConfigError on non-positive rate, batch size or epochs, or
  // negative decay.
  void Validate() const;
  bool operator==(const TrainConfig &) const = default;
};

struct EpochRecord {
  double mean_nll = 0.0;
  double val_f1 = 0.0;
  bool operator==(const EpochRecord &) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 0-based; earliest epoch with the highest val F1
  bool operator==(const TrainReport &) const = default;
};

struct TrainResult {
  CrfModel model;
  TrainReport report;
};

// Strict span F1 of Viterbi output against gold tags over |data|.
double ValidationSpanF1(const CrfModel &model,
                        std::span<const LabeledSequence> data);

// Mini-batch AdamW training from a zero model. The training set is shuffled
// each epoch with a generator seeded by config.seed; validation span F1 is
// recorded after every epoch and the best epoch's model is returned. With an
// empty validation set every epoch scores 0 and the last epoch is kept.
// Throws TrainingDivergedError if a batch loss is not finite.
TrainResult TrainModel(std::span<const LabeledSequence> train,
                       std::span<const LabeledSequence> val,
                       const TrainConfig &config);

}  // namespace nner

#endif  // NNER_CRF_H_
