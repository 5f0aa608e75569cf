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

#include "nner/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nner/base.h"

namespace nner {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<EntityType> &BuiltinEntityTypes() {
  static const std::vector<EntityType> kTypes = {
      "Physical Quantity",  "Physical Effect",         "Species",
      "Diagnostic Device",  "Plasma Source",           "Power Supply",
      "Plasma Medium",      "Experiment",              "Electrode Material",
      "Plasma Application", "Unit",                    "Modelling",
      "Discharge Regime",   "Electrode Configuration", "Plasma Properties",
      "Plasma Target",
  };
  return kTypes;
}

void Sentence::Validate() const {
  if (tokens.empty()) {
    throw ValidationError("sentence '" + id + "' has no tokens");
  }
  std::set<std::tuple<int, int, std::string_view>> seen;
  for (const Span &span : spans) {
    if (span.start < 0 || span.start >= span.end || span.end > size()) {
      std::ostringstream msg;
      msg << "sentence '" << id << "': span [" << span.start << ", "
          << span.end << ") is out of range for " << size() << " tokens";
      throw ValidationError(msg.str());
    }
    if (span.type.empty()) {
      throw ValidationError("sentence '" + id + "': span with empty type");
    }
    if (!seen.emplace(span.start, span.end, span.type).second) {
      std::ostringstream msg;
      msg << "sentence '" << id << "': duplicate span [" << span.start << ", "
          << span.end << ") of type '" << span.type << "'";
      throw ValidationError(msg.str());
    }
  }
}

char BioTagChar(BioTag tag) {
  switch (tag) {
    case BioTag::kOutside: return 'O';
    case BioTag::kBegin: return 'B';
    case BioTag::kInside: return 'I';
  }
  return '?';
}

namespace {

Sentence SentenceFromJson(const json &record, int line) {
  if (!record.is_object()) throw ParseError(line, "record is not an object");
  Sentence sentence;
  auto id = record.find("id");
  if (id == record.end() || !id->is_string()) {
    throw ParseError(line, "missing string field 'id'");
  }
  sentence.id = id->get<std::string>();

  auto tokens = record.find("tokens");
  if (tokens == record.end() || !tokens->is_array()) {
    throw ParseError(line, "missing array field 'tokens'");
  }
  for (const json &token : *tokens) {
    if (!token.is_string()) throw ParseError(line, "token is not a string");
    sentence.tokens.push_back(token.get<std::string>());
  }

  auto spans = record.find("spans");
  if (spans != record.end()) {
    if (!spans->is_array()) throw ParseError(line, "'spans' is not an array");
    for (const json &item : *spans) {
      if (!item.is_object()) throw ParseError(line, "span is not an object");
      auto start = item.find("start");
      auto end = item.find("end");
      auto type = item.find("type");
      if (start == item.end() || !start->is_number_integer() ||
          end == item.end() || !end->is_number_integer() ||
          type == item.end() || !type->is_string()) {
        throw ParseError(line,
                         "span needs integer 'start', 'end' and string 'type'");
      }
      Span span;
      span.start = start->get<int>();
      span.end = end->get<int>();
      span.type = type->get<std::string>();
      sentence.spans.push_back(std::move(span));
    }
  }
  return sentence;
}

bool IsBlank(const std::string &line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  });
}

}  // namespace

std::vector<Sentence> ParseCorpus(std::istream &input) {
  std::vector<Sentence> sentences;
  std::string line;
  int line_number = 0;
  while (std::getline(input, line)) {
    ++line_number;
    if (IsBlank(line)) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception &e) {
      throw ParseError(line_number, e.what());
    }
    Sentence sentence = SentenceFromJson(record, line_number);
    sentence.Validate();
    sentences.push_back(std::move(sentence));
  }
  return sentences;
}

std::vector<Sentence> ReadCorpusFile(const std::string &path) {
  std::ifstream input(path);
  if (!input) throw ConfigError("cannot open corpus file '" + path + "'");
  try {
    return ParseCorpus(input);
  } catch (const ParseError &e) {
    throw ParseError(path, e.line(), e.message());
  }
}

void WriteCorpus(std::ostream &output, const std::vector<Sentence> &sentences) {
  for (const Sentence &sentence : sentences) {
    ordered_json record;
    record["id"] = sentence.id;
    record["tokens"] = sentence.tokens;
    ordered_json spans = ordered_json::array();
    for (const Span &span : sentence.spans) {
      spans.push_back(
          {{"start", span.start}, {"end", span.end}, {"type", span.type}});
    }
    record["spans"] = std::move(spans);
    output << record.dump() << "\n";
  }
}

void WriteCorpusFile(const std::string &path,
                     const std::vector<Sentence> &sentences) {
  std::ofstream output(path);
  if (!output) throw ConfigError("cannot write '" + path + "'");
  WriteCorpus(output, sentences);
}

std::vector<BioTag> EncodeBio(const Sentence &sentence, std::string_view type,
                              std::vector<Span> *dropped) {
  std::vector<const Span *> candidates;
  for (const Span &span : sentence.spans) {
    if (span.type == type) candidates.push_back(&span);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Span *a, const Span *b) {
              if (a->length() != b->length()) return a->length() > b->length();
              return a->start < b->start;
            });

  std::vector<const Span *> kept;
  for (const Span *span : candidates) {
    bool clash = std::any_of(kept.begin(), kept.end(), [&](const Span *k) {
      return k->Overlaps(*span);
    });
    if (clash) {
      if (dropped != nullptr) dropped->push_back(*span);
    } else {
      kept.push_back(span);
    }
  }

  std::vector<BioTag> tags(sentence.tokens.size(), BioTag::kOutside);
  for (const Span *span : kept) {
    tags[span->start] = BioTag::kBegin;
    for (int i = span->start + 1; i < span->end; ++i) tags[i] = BioTag::kInside;
  }
  return tags;
}

std::vector<Span> DecodeBio(const std::vector<BioTag> &tags,
                            std::string_view type) {
  std::vector<Span> spans;
  const int n = static_cast<int>(tags.size());
  int start = -1;
  for (int i = 0; i <= n; ++i) {
    const BioTag tag = i < n ? tags[i] : BioTag::kOutside;
    const bool continues = tag == BioTag::kInside && start >= 0;
    if (continues) continue;
    if (start >= 0) spans.push_back(Span{start, i, std::string(type)});
    start = tag == BioTag::kOutside ? -1 : i;
  }
  return spans;
}

std::array<size_t, 3> SplitSizes(size_t count, const SplitRatios &ratios) {
  const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
  for (double x : r) {
    if (!(x > 0.0)) throw ConfigError("split ratios must be positive");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  std::array<size_t, 3> sizes;
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<size_t>(std::floor(static_cast<double>(count) * r[i]));
    assigned += sizes[i];
  }
  for (int i = 0; assigned < count; i = (i + 1) % 3, ++assigned) ++sizes[i];
  return sizes;
}

CorpusSplit SplitCorpus(const std::vector<Sentence> &sentences,
                        const SplitRatios &ratios, uint64_t seed) {
  if (sentences.empty()) throw ConfigError("cannot split an empty corpus");
  const auto sizes = SplitSizes(sentences.size(), ratios);
  std::vector<size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(order);

  CorpusSplit split;
  size_t pos = 0;
  for (int part = 0; part < 3; ++part) {
    std::vector<Sentence> &dest =
        part == 0 ? split.train : part == 1 ? split.val : split.test;
    dest.reserve(sizes[part]);
    for (size_t i = 0; i < sizes[part]; ++i) {
      dest.push_back(sentences[order[pos++]]);
    }
  }
  return split;
}

std::vector<EntityType> CorpusStats::TypesByFrequency() const {
  std::vector<EntityType> names;
  for (const auto &[name, _] : types) names.push_back(name);
  std::stable_sort(names.begin(), names.end(),
                   [&](const EntityType &a, const EntityType &b) {
                     return types.at(a).total > types.at(b).total;
                   });
  return names;
}

namespace {

// Adds counts for |sentences|; |bucket| selects the split counter, or -1.
void Accumulate(const std::vector<Sentence> &sentences, int bucket,
                CorpusStats *stats) {
  stats->sentences += static_cast<int64_t>(sentences.size());
  for (const Sentence &sentence : sentences) {
    for (size_t i = 0; i < sentence.spans.size(); ++i) {
      const Span &span = sentence.spans[i];
      TypeStats &ts = stats->types[span.type];
      ++ts.total;
      for (size_t j = 0; j < sentence.spans.size(); ++j) {
        if (i != j && span.Overlaps(sentence.spans[j])) {
          ++ts.nested;
          break;
        }
      }
      if (bucket == 0) ++ts.train;
      if (bucket == 1) ++ts.val;
      if (bucket == 2) ++ts.test;
    }
  }
}

void FinishPercentages(CorpusStats *stats) {
  for (auto &[_, ts] : stats->types) {
    ts.nested_percent =
        ts.total == 0
            ? 0.0
            : std::round(10000.0 * static_cast<double>(ts.nested) /
                         static_cast<double>(ts.total)) / 100.0;
  }
}

std::string WithThousands(int64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0 && digits[i - 1] != '-') out += ',';
    out += digits[i];
  }
  return out;
}

}  // namespace

CorpusStats ComputeCorpusStats(const std::vector<Sentence> &sentences) {
  CorpusStats stats;
  Accumulate(sentences, -1, &stats);
  FinishPercentages(&stats);
  return stats;
}

CorpusStats ComputeCorpusStats(const CorpusSplit &split) {
  CorpusStats stats;
  Accumulate(split.train, 0, &stats);
  Accumulate(split.val, 1, &stats);
  Accumulate(split.test, 2, &stats);
  stats.split_sentences = {static_cast<int64_t>(split.train.size()),
                           static_cast<int64_t>(split.val.size()),
                           static_cast<int64_t>(split.test.size())};
  FinishPercentages(&stats);
  return stats;
}

std::string RenderCorpusStats(const CorpusStats &stats) {
  size_t width = std::string("Sentences").size();
  for (const auto &[name, _] : stats.types) width = std::max(width, name.size());
  std::ostringstream out;
  const bool splits = stats.split_sentences.has_value();
  auto row = [&](const std::string &item, const std::string &total,
                 const std::string &nested, const std::string &percent,
                 const std::array<std::string, 3> &parts) {
    out << std::left << std::setw(static_cast<int>(width)) << item
        << std::right << std::setw(9) << total << std::setw(9) << nested
        << std::setw(9) << percent;
    if (splits) {
      for (const std::string &p : parts) out << std::setw(9) << p;
    }
    out << "\n";
  };
  row("Item", "Total", "Nested", "Nested%", {"Train", "Test", "Val"});
  if (splits) {
    const auto &s = *stats.split_sentences;
    row("Sentences", WithThousands(stats.sentences), "--", "--",
        {WithThousands(s[0]), WithThousands(s[2]), WithThousands(s[1])});
  } else {
    row("Sentences", WithThousands(stats.sentences), "--", "--", {});
  }
  for (const EntityType &name : stats.TypesByFrequency()) {
    const TypeStats &ts = stats.types.at(name);
    std::ostringstream pct;
    pct << std::fixed << std::setprecision(2) << ts.nested_percent << "%";
    row(name, std::to_string(ts.total), std::to_string(ts.nested), pct.str(),
        {std::to_string(ts.train), std::to_string(ts.test),
         std::to_string(ts.val)});
  }
  return out.str();
}

std::vector<EntityType> CollectTypes(const std::vector<Sentence> &sentences) {
  std::set<EntityType> types;
  for (const Sentence &s : sentences) {
    for (const Span &span : s.spans) types.insert(span.type);
  }
  return {types.begin(), types.end()};
}

}  // namespace nner
