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

// Sentences with overlapping typed span annotations, their per-type BIO
// projections, seeded splitting and nesting statistics.

#ifndef NNER_CORPUS_H_
#define NNER_CORPUS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nner {

// Entity types are identified by name. Names are free-form; the plasma
// physics schema is available from BuiltinEntityTypes().
using EntityType = std::string;

// The 16 entity classes of the plasma physics annotation schema.
const std::vector<EntityType> &BuiltinEntityTypes();

// Token range [start, end) labeled with an entity type.
struct Span {
  int start = 0;
  int end = 0;
  EntityType type;

  int length() const { return end - start; }
  bool Overlaps(const Span &other) const {
    return start < other.end && other.start < end;
  }

  auto operator<=>(const Span &) const = default;
  bool operator==(const Span &) const = default;
};

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Span> spans;

  int size() const { return static_cast<int>(tokens.size()); }

  // Throws ValidationError naming the sentence when the token list is empty,
  // a span is out of range or has an empty type, or a span is duplicated.
  void Validate() const;
};

enum class BioTag : uint8_t { kOutside = 0, kBegin = 1, kInside = 2 };

constexpr int kNumBioTags = 3;

char BioTagChar(BioTag tag);

// Reads the line-oriented corpus format: one JSON object per non-blank line
// with fields "id", "tokens" and "spans" ({"start", "end", "type"}).
std::vector<Sentence> ParseCorpus(std::istream &input);
std::vector<Sentence> ReadCorpusFile(const std::string &path);

// Writes sentences in the same format, one record per line.
void WriteCorpus(std::ostream &output, const std::vector<Sentence> &sentences);
void WriteCorpusFile(const std::string &path,
                     const std::vector<Sentence> &sentences);

// Projects the spans of one type onto a B/I/O sequence. Overlapping spans of
// that type cannot share one layer: the longest span is kept (earliest start
// on ties) and the others are appended to |dropped| if non-null.
std::vector<BioTag> EncodeBio(const Sentence &sentence, std::string_view type,
                              std::vector<Span> *dropped = nullptr);

// Inverse of EncodeBio. An I that does not continue a B or I run starts a new
// span, so every sequence decodes. Spans come back ordered and disjoint.
std::vector<Span> DecodeBio(const std::vector<BioTag> &tags,
                            std::string_view type);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct CorpusSplit {
  std::vector<Sentence> train;
  std::vector<Sentence> val;
  std::vector<Sentence> test;
};

// Split sizes for |count| items: floor(count * ratio) each, with the
// remainder handed out one at a time in train, val, test order.
std::array<size_t, 3> SplitSizes(size_t count, const SplitRatios &ratios);

// Shuffles sentence order with |seed| and cuts it into train/val/test.
CorpusSplit SplitCorpus(const std::vector<Sentence> &sentences,
                        const SplitRatios &ratios, uint64_t seed);

struct TypeStats {
  int64_t total = 0;
  int64_t nested = 0;
  // 100 * nested / total, rounded to two decimals; 0 when total is 0.
  double nested_percent = 0.0;
  int64_t train = 0;
  int64_t val = 0;
  int64_t test = 0;
};

struct CorpusStats {
  int64_t sentences = 0;
  std::optional<std::array<int64_t, 3>> split_sentences;  // train, val, test
  std::map<EntityType, TypeStats> types;

  // Types ordered by descending total, then name.
  std::vector<EntityType> TypesByFrequency() const;
};

// A span is nested when it overlaps at least one other gold span of any type
// in the same sentence.
CorpusStats ComputeCorpusStats(const std::vector<Sentence> &sentences);
CorpusStats ComputeCorpusStats(const CorpusSplit &split);

// Per-type rows with totals, nested counts and split counts.
std::string RenderCorpusStats(const CorpusStats &stats);

// All entity types that occur in the given sentences, sorted by name.
std::vector<EntityType> CollectTypes(const std::vector<Sentence> &sentences);

}  // namespace nner

#endif  // NNER_CORPUS_H_
