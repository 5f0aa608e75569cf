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
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nner/base.h"
#include "nner/nesting.h"

namespace nner {

namespace {

double Ratio(int64_t num, int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double Counts::Precision() const { return Ratio(tp, tp + fp); }
double Counts::Recall() const { return Ratio(tp, tp + fn); }

double Counts::F1() const {
  const double p = Precision();
  const double r = Recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Scores ScoresOf(const Counts &counts) {
  return {counts.Precision(), counts.Recall(), counts.F1()};
}

Counts SpanCounts(const std::vector<Span> &gold, const std::vector<Span> &pred,
                  std::string_view type) {
  std::set<std::pair<int, int>> gold_set;
  std::set<std::pair<int, int>> pred_set;
  for (const Span &s : gold) {
    if (s.type == type) gold_set.emplace(s.start, s.end);
  }
  for (const Span &s : pred) {
    if (s.type == type) pred_set.emplace(s.start, s.end);
  }
  Counts counts;
  for (const auto &key : pred_set) {
    if (gold_set.count(key) > 0) {
      ++counts.tp;
    } else {
      ++counts.fp;
    }
  }
  counts.fn = static_cast<int64_t>(gold_set.size()) - counts.tp;
  return counts;
}

Counts TokenCounts(const std::vector<Span> &gold, const std::vector<Span> &pred,
                   std::string_view type, int length) {
  auto project = [&](const std::vector<Span> &spans) {
    std::vector<bool> member(length, false);
    for (const Span &s : spans) {
      if (s.type != type) continue;
      if (s.start < 0 || s.end > length || s.start >= s.end) {
        throw ValidationError("span [" + std::to_string(s.start) + ", " +
                              std::to_string(s.end) + ") out of range for " +
                              std::to_string(length) + " tokens");
      }
      for (int i = s.start; i < s.end; ++i) member[i] = true;
    }
    return member;
  };
  const auto g = project(gold);
  const auto p = project(pred);
  Counts counts;
  for (int i = 0; i < length; ++i) {
    if (g[i] && p[i]) ++counts.tp;
    if (!g[i] && p[i]) ++counts.fp;
    if (g[i] && !p[i]) ++counts.fn;
  }
  return counts;
}

Scores MicroAverage(const std::map<EntityType, Counts> &per_type) {
  Counts pooled;
  for (const auto &[_, c] : per_type) pooled += c;
  return ScoresOf(pooled);
}

EvalReport EvaluatePredictions(const std::vector<Sentence> &gold,
                               const std::vector<Sentence> &pred,
                               const std::vector<EntityType> &types) {
  if (gold.size() != pred.size()) {
    throw MismatchError("gold has " + std::to_string(gold.size()) +
                        " sentences but predictions have " +
                        std::to_string(pred.size()));
  }
  EvalReport report;
  for (const EntityType &type : types) report.types[type];
  for (size_t i = 0; i < gold.size(); ++i) {
    const Sentence &g = gold[i];
    const Sentence &p = pred[i];
    if (g.id != p.id || g.tokens != p.tokens) {
      throw MismatchError("prediction " + std::to_string(i) + " ('" + p.id +
                          "') does not match gold sentence '" + g.id + "'");
    }
    for (auto &[type, counts] : report.types) {
      counts.span += SpanCounts(g.spans, p.spans, type);
      counts.token += TokenCounts(g.spans, p.spans, type, g.size());
    }
  }
  for (const auto &[_, counts] : report.types) {
    report.micro.span += counts.span;
    report.micro.token += counts.token;
  }
  return report;
}

EvalReport EvaluateBundle(const ModelBundle &bundle,
                          const std::vector<Sentence> &test,
                          const FeatureTable &features) {
  if (test.empty()) throw ConfigError("test split is empty");
  std::vector<Sentence> predicted;
  predicted.reserve(test.size());
  for (const Sentence &sentence : test) {
    auto it = features.find(sentence.id);
    if (it == features.end()) {
      throw MismatchError("no features for sentence '" + sentence.id + "'");
    }
    Sentence p = sentence;
    p.spans = PredictNested(bundle, sentence, it->second);
    predicted.push_back(std::move(p));
  }
  return EvaluatePredictions(test, predicted, bundle.Types());
}

std::string RenderReport(const EvalReport &report) {
  size_t width = std::string("micro").size();
  for (const auto &[name, _] : report.types) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  auto header = [&]() {
    out << std::left << std::setw(static_cast<int>(width)) << "Entity Type"
        << std::right;
    for (const char *scheme : {"span", "token"}) {
      for (const char *metric : {"P", "R", "F1"}) {
        out << std::setw(9) << (std::string(scheme) + "-" + metric);
      }
    }
    out << "\n";
  };
  auto row = [&](const std::string &name, const TypeCounts &c) {
    out << std::left << std::setw(static_cast<int>(width)) << name << std::right;
    for (const Counts *counts : {&c.span, &c.token}) {
      out << std::setw(9) << counts->Precision() << std::setw(9)
          << counts->Recall() << std::setw(9) << counts->F1();
    }
    out << "\n";
  };
  width = std::max(width, std::string("Entity Type").size());
  header();
  for (const auto &[name, counts] : report.types) row(name, counts);
  row("micro", report.micro);
  return out.str();
}

namespace {

nlohmann::json CountsJson(const Counts &c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"precision", c.Precision()},
          {"recall", c.Recall()},
          {"f1", c.F1()}};
}

nlohmann::json TypeCountsJson(const TypeCounts &c) {
  return {{"span", CountsJson(c.span)}, {"token", CountsJson(c.token)}};
}

}  // namespace

std::string ReportToJson(const EvalReport &report) {
  nlohmann::json doc;
  doc["types"] = nlohmann::json::object();
  for (const auto &[name, counts] : report.types) {
    doc["types"][name] = TypeCountsJson(counts);
  }
  doc["micro"] = TypeCountsJson(report.micro);
  return doc.dump(2) + "\n";
}

}  // namespace nner
