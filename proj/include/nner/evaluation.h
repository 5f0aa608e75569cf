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

// Precision, recall and F1 for typed spans under two schemes:
//
//   strict span  a prediction is correct only if start, end and type all
//                match a gold span.
//   token        per-token membership in spans of a type, with B and I
//                collapsed and O tokens ignored.
//
// Micro averages pool true/false positives and false negatives over types
// before computing the scores.

#ifndef NNER_EVALUATION_H_
#define NNER_EVALUATION_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nner/corpus.h"
#include "nner/features.h"

namespace nner {

struct ModelBundle;

struct Counts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  // Each score is 0 when its denominator is 0.
  double Precision() const;
  double Recall() const;
  double F1() const;

  Counts &operator+=(const Counts &other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
  }
  bool operator==(const Counts &) const = default;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Scores ScoresOf(const Counts &counts);

// Exact (start, end, type) matching restricted to spans of |type|.
Counts SpanCounts(const std::vector<Span> &gold, const std::vector<Span> &pred,
                  std::string_view type);

// Token membership comparison restricted to spans of |type| in a sentence of
// |length| tokens. Throws ValidationError if a span leaves [0, length).
Counts TokenCounts(const std::vector<Span> &gold, const std::vector<Span> &pred,
                   std::string_view type, int length);

// Pools counts over types, then scores once.
Scores MicroAverage(const std::map<EntityType, Counts> &per_type);

struct TypeCounts {
  Counts span;
  Counts token;
};

struct EvalReport {
  std::map<EntityType, TypeCounts> types;
  TypeCounts micro;  // coordinate-wise sum over types
};

// Scores predicted sentences against gold sentences of the same ids and
// tokens, for the given types. Throws MismatchError when the two lists do
// not pair up.
EvalReport EvaluatePredictions(const std::vector<Sentence> &gold,
                               const std::vector<Sentence> &pred,
                               const std::vector<EntityType> &types);

// Runs nested prediction over |test| and scores it for the bundle's types.
EvalReport EvaluateBundle(const ModelBundle &bundle,
                          const std::vector<Sentence> &test,
                          const FeatureTable &features);

// Aligned text table: one row per type and a micro row, both schemes, scores
// to two decimals.
std::string RenderReport(const EvalReport &report);

// Structured form of the report with full-precision scores.
std::string ReportToJson(const EvalReport &report);

}  // namespace nner

#endif  // NNER_EVALUATION_H_
