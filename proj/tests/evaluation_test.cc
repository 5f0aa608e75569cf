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


#include "nner/evaluation.h"

#include <algorithm>

#include <gtest/gtest.h>

#include "nner/config.h"
#include "nner/nesting.h"
#include "synthetic_corpus.h"

namespace nner {
namespace {

TEST(CountsTest, ZeroDenominatorsScoreZero) {
  const Counts none;
  EXPECT_EQ(none.Precision(), 0.0);
  EXPECT_EQ(none.Recall(), 0.0);
  EXPECT_EQ(none.F1(), 0.0);
  const Counts misses{0, 0, 3};
  EXPECT_EQ(misses.Precision(), 0.0);
  EXPECT_EQ(misses.F1(), 0.0);
}

TEST(SpanCountsTest, IdentityIsPerfect) {
  const std::vector<Span> spans = {{0, 2, "A"}, {1, 3, "A"}, {0, 1, "B"}};
  const Counts c = SpanCounts(spans, spans, "A");
  EXPECT_EQ(c, (Counts{2, 0, 0}));
  EXPECT_EQ(c.F1(), 1.0);
}

TEST(SpanCountsTest, BoundaryErrorIsFalsePositiveAndFalseNegative) {
  const Counts c = SpanCounts({{0, 2, "A"}, {3, 4, "A"}}, {{0, 2, "A"}, {3, 5, "A"}}, "A");
  EXPECT_EQ(c, (Counts{1, 1, 1}));
  EXPECT_DOUBLE_EQ(c.Precision(), 0.5);
  EXPECT_DOUBLE_EQ(c.Recall(), 0.5);
  EXPECT_DOUBLE_EQ(c.F1(), 0.5);
}

TEST(SpanCountsTest, TypeIsPartOfIdentity) {
  EXPECT_EQ(SpanCounts({{0, 2, "A"}}, {{0, 2, "B"}}, "A"), (Counts{0, 0, 1}));
  EXPECT_EQ(SpanCounts({{0, 2, "A"}}, {{0, 2, "B"}}, "B"), (Counts{0, 1, 0}));
}

TEST(TokenCountsTest, PartialOverlap) {
  const Counts c = TokenCounts({{0, 3, "t"}}, {{1, 3, "t"}}, "t", 3);
  EXPECT_EQ(c, (Counts{2, 0, 1}));
  EXPECT_DOUBLE_EQ(c.Precision(), 1.0);
  EXPECT_DOUBLE_EQ(c.Recall(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.F1(), 0.8);
}

TEST(TokenCountsTest, DisjointSpans) {
  const Counts c = TokenCounts({{0, 1, "t"}}, {{2, 3, "t"}}, "t", 3);
  EXPECT_EQ(c.tp, 0);
  EXPECT_EQ(c.F1(), 0.0);
}

TEST(TokenCountsTest, OutOfRangeSpan) {
  EXPECT_THROW(TokenCounts({{0, 4, "t"}}, {}, "t", 3), ValidationError);
}

TEST(MicroAverageTest, PoolsCounts) {
  const Scores s = MicroAverage({{"A", {1, 1, 0}}, {"B", {0, 0, 1}}});
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 0.5);
  const Counts one{3, 1, 2};
  const Scores single = MicroAverage({{"A", one}});
  EXPECT_EQ(single.precision, one.Precision());
  EXPECT_EQ(single.recall, one.Recall());
  EXPECT_EQ(single.f1, one.F1());
}

std::vector<Span> RandomSpans(Rng &rng, int n) {
  std::vector<Span> spans;
  const int count = static_cast<int>(rng.UniformInt(6));
  for (int k = 0; k < count; ++k) {
    const int start = static_cast<int>(rng.UniformInt(n));
    const int end = start + 1 + static_cast<int>(rng.UniformInt(n - start));
    Span s{start, end, rng.Uniform() < 0.5 ? "A" : "B"};
    if (std::find(spans.begin(), spans.end(), s) == spans.end()) spans.push_back(s);
  }
  return spans;
}

// Pairwise comparison of every gold against every predicted span.
Counts OracleSpanCounts(const std::vector<Span> &gold, const std::vector<Span> &pred,
                        const std::string &type) {
  Counts c;
  for (const Span &p : pred) {
    if (p.type != type) continue;
    bool hit = false;
    for (const Span &g : gold) {
      hit |= g.start == p.start && g.end == p.end && g.type == p.type;
    }
    hit ? ++c.tp : ++c.fp;
  }
  for (const Span &g : gold) {
    if (g.type != type) continue;
    bool hit = false;
    for (const Span &p : pred) {
      hit |= g.start == p.start && g.end == p.end && g.type == p.type;
    }
    if (!hit) ++c.fn;
  }
  return c;
}

TEST(SpanCountsPropertyTest, MatchesOracleAndSymmetry) {
  Rng rng(31);
  for (int k = 0; k < 3000; ++k) {
    const int n = 1 + static_cast<int>(rng.UniformInt(8));
    const auto gold = RandomSpans(rng, n);
    const auto pred = RandomSpans(rng, n);
    for (const std::string type : {"A", "B"}) {
      const Counts c = SpanCounts(gold, pred, type);
      ASSERT_EQ(c, OracleSpanCounts(gold, pred, type));
      const Counts swapped = SpanCounts(pred, gold, type);
      ASSERT_EQ(swapped, (Counts{c.tp, c.fn, c.fp}));
      ASSERT_EQ(swapped.Precision(), c.Recall());
      ASSERT_EQ(swapped.F1(), c.F1());
      const Counts t = TokenCounts(gold, pred, type, n);
      const Counts ts = TokenCounts(pred, gold, type, n);
      ASSERT_EQ(ts, (Counts{t.tp, t.fn, t.fp}));
    }
  }
}

TEST(MicroAverageTest, OrderInvariantAndDependsOnlyOnPooledCounts) {
  Rng rng(32);
  for (int k = 0; k < 500; ++k) {
    std::vector<Counts> parts(1 + rng.UniformInt(5));
    for (Counts &c : parts) {
      c = {static_cast<int64_t>(rng.UniformInt(9)), static_cast<int64_t>(rng.UniformInt(9)),
           static_cast<int64_t>(rng.UniformInt(9))};
    }
    std::map<EntityType, Counts> a, b, moved;
    for (size_t i = 0; i < parts.size(); ++i) {
      a["t" + std::to_string(i)] = parts[i];
      b["t" + std::to_string(parts.size() - 1 - i)] = parts[i];
    }
    Counts pooled;
    for (const Counts &c : parts) pooled += c;
    moved["x"] = {pooled.tp, 0, 0};
    moved["y"] = {0, pooled.fp, pooled.fn};
    const Scores sa = MicroAverage(a), sb = MicroAverage(b), sm = MicroAverage(moved);
    ASSERT_EQ(sa.f1, sb.f1);
    ASSERT_EQ(sa.precision, sm.precision);
    ASSERT_EQ(sa.recall, sm.recall);
    ASSERT_EQ(sa.f1, sm.f1);
  }
}

TEST(EvaluatePredictionsTest, PerfectAndEmptyPredictions) {
  const auto gold = testing::MakeSyntheticCorpus(50, 12).sentences;
  const auto types = CollectTypes(gold);
  const EvalReport perfect = EvaluatePredictions(gold, gold, types);
  EXPECT_EQ(perfect.micro.span.F1(), 1.0);
  EXPECT_EQ(perfect.micro.token.F1(), 1.0);
  for (const auto &[type, counts] : perfect.types) {
    EXPECT_EQ(ScoresOf(counts.span).f1, ScoresOf(counts.token).f1);
  }

  auto empty = gold;
  for (Sentence &s : empty) s.spans.clear();
  const EvalReport none = EvaluatePredictions(gold, empty, types);
  EXPECT_EQ(none.micro.span.Precision(), 0.0);
  EXPECT_EQ(none.micro.span.Recall(), 0.0);
  EXPECT_EQ(none.micro.span.F1(), 0.0);
  EXPECT_EQ(none.micro.token.F1(), 0.0);
}

TEST(EvaluatePredictionsTest, MicroIsSumOfTypes) {
  const auto gold = testing::MakeSyntheticCorpus(80, 13).sentences;
  auto pred = testing::MakeSyntheticCorpus(80, 14).sentences;
  for (size_t i = 0; i < pred.size(); ++i) {
    pred[i].tokens = gold[i].tokens;
    std::vector<Span> kept;
    for (const Span &s : pred[i].spans) {
      if (s.end <= gold[i].size()) kept.push_back(s);
    }
    for (const Span &s : gold[i].spans) {
      if (s.start % 2 == 0) kept.push_back(s);
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    pred[i].spans = kept;
  }
  const EvalReport report = EvaluatePredictions(gold, pred, CollectTypes(gold));
  Counts span, token;
  for (const auto &[_, c] : report.types) {
    span += c.span;
    token += c.token;
  }
  EXPECT_EQ(report.micro.span, span);
  EXPECT_EQ(report.micro.token, token);
  EXPECT_GT(span.tp, 0);
  EXPECT_GT(span.fp + span.fn, 0);
}

TEST(EvaluatePredictionsTest, MismatchedInputs) {
  const auto gold = testing::MakeSyntheticCorpus(5, 15).sentences;
  auto fewer = gold;
  fewer.pop_back();
  EXPECT_THROW(EvaluatePredictions(gold, fewer, {"A"}), MismatchError);
  auto renamed = gold;
  renamed[2].id = "other";
  EXPECT_THROW(EvaluatePredictions(gold, renamed, {"A"}), MismatchError);
  auto retokenized = gold;
  retokenized[1].tokens[0] = "zzz";
  EXPECT_THROW(EvaluatePredictions(gold, retokenized, {"A"}), MismatchError);
}

TEST(EvaluateBundleTest, FeaturizerMismatch) {
  const auto test = testing::MakeSyntheticCorpus(5, 16).sentences;
  ModelBundle bundle;
  bundle.featurizer = EmbeddingFeatures{8};
  bundle.models["A"].model = CrfModel::Zeros(8);
  HashedFeatureConfig config;
  config.dim = 1024;
  EXPECT_THROW(EvaluateBundle(bundle, test, HashCorpus(test, config)), MismatchError);
}

TEST(RenderReportTest, TableAndJson) {
  EvalReport report;
  report.types["A"] = {{1, 1, 0}, {2, 0, 1}};
  report.types["Long Type"] = {{0, 0, 1}, {0, 0, 2}};
  report.micro = {{1, 1, 1}, {2, 0, 3}};
  const std::string table = RenderReport(report);
  EXPECT_NE(table.find("Long Type"), std::string::npos);
  EXPECT_NE(table.find("micro"), std::string::npos);
  EXPECT_NE(table.find("0.50"), std::string::npos);
  EXPECT_NE(table.find("0.67"), std::string::npos);

  const Json json = Json::parse(ReportToJson(report));
  EXPECT_EQ(json.at("types").size(), 2u);
  EXPECT_EQ(json.at("micro").at("span").at("tp"), 1);
  EXPECT_DOUBLE_EQ(json.at("micro").at("span").at("f1").get<double>(), 0.5);
}

}  // namespace
}  // namespace nner
