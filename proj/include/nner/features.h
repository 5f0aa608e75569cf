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

// Per-token feature vectors consumed by the CRF emission layer. Two sources:
// precomputed contextual embeddings stored in NNEV files, and signed hashed
// sparse lexical features.

#ifndef NNER_FEATURES_H_
#define NNER_FEATURES_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "nner/base.h"
#include "nner/corpus.h"

namespace nner {

// Token-by-feature matrix for one sentence, stored either densely (row-major)
// or as per-row (index, value) lists.
class FeatureMatrix {
 public:
  using SparseRow = std::vector<std::pair<uint32_t, double>>;

  FeatureMatrix() = default;

  // |values| holds rows * dim entries; throws ValidationError if any value is
  // non-finite or the size is wrong.
  static FeatureMatrix Dense(int rows, int dim, std::vector<double> values);
  static FeatureMatrix Sparse(int dim, std::vector<SparseRow> rows);

  int rows() const { return rows_; }
  int dim() const { return dim_; }
  bool is_sparse() const { return sparse_; }

  // Calls fn(index, value) for each stored entry of |row|. Dense rows visit
  // every column; sparse rows may repeat an index.
  template <typename Fn>
  void ForEach(int row, Fn &&fn) const {
    if (sparse_) {
      for (const auto &[index, value] : sparse_rows_[row]) fn(index, value);
    } else {
      const double *base = dense_.data() + static_cast<size_t>(row) * dim_;
      for (int j = 0; j < dim_; ++j) fn(static_cast<uint32_t>(j), base[j]);
    }
  }

  const SparseRow &sparse_row(int row) const { return sparse_rows_[row]; }
  const std::vector<double> &dense_values() const { return dense_; }

  // Dense copy; duplicate sparse indices are summed.
  FeatureMatrix Densify() const;

 private:
  int rows_ = 0;
  int dim_ = 0;
  bool sparse_ = false;
  std::vector<double> dense_;
  std::vector<SparseRow> sparse_rows_;
};

struct HashedFeatureConfig {
  uint32_t dim = 1u << 18;
  int window = 2;
  std::vector<int> affix_lengths = {1, 2, 3};

  // Throws ConfigError unless dim is a power of two >= 2^10 and window >= 0.
  void Validate() const;
  bool operator==(const HashedFeatureConfig &) const = default;
};

struct EmbeddingFeatures {
  int dim = 0;
  bool operator==(const EmbeddingFeatures &) const = default;
};

// Identifies how feature matrices were produced; models remember it so that
// prediction uses the same featurizer as training.
using FeaturizerDescriptor = std::variant<HashedFeatureConfig, EmbeddingFeatures>;

int FeatureDim(const FeaturizerDescriptor &descriptor);

// Word shape: ASCII letters become x/X, digits 9, everything else is kept.
std::string WordShape(std::string_view token);

// Maps a feature string to its (index, sign) pair: index = h mod dim and the
// sign is taken from the lowest bit of h / dim (set bit means -1).
std::pair<uint32_t, double> HashFeature(std::string_view feature, uint32_t dim);

// Feature strings emitted for token |i|, in emission order. Each has the form
// "<template>=<value>@<offset>".
std::vector<std::string> TokenFeatureStrings(const Sentence &sentence, int i,
                                             const HashedFeatureConfig &config);

FeatureMatrix HashFeatures(const Sentence &sentence,
                           const HashedFeatureConfig &config);

// Feature matrices keyed by sentence id.
using FeatureTable = std::unordered_map<std::string, FeatureMatrix>;

// Hashes every sentence. Throws ValidationError on duplicate sentence ids.
FeatureTable HashCorpus(const std::vector<Sentence> &sentences,
                        const HashedFeatureConfig &config);

// NNEV embedding files: "NNEV", u32 version (1), u32 dim, u32 sentence
// count, then per sentence u16 id length, id bytes, u32 token count and
// token_count * dim float32 values, all little-endian.
class NnevFormatError : public Error {
 public:
  using Error::Error;
};

class MissingSentenceError : public Error {
 public:
  explicit MissingSentenceError(const std::string &id)
      : Error("embedding file has no entry for sentence '" + id + "'"),
        id_(id) {}
  const std::string &id() const { return id_; }

 private:
  std::string id_;
};

class AlignmentError : public Error {
 public:
  AlignmentError(const std::string &id, int file_rows, int corpus_tokens)
      : Error("sentence '" + id + "': embedding file has " +
              std::to_string(file_rows) + " rows but the corpus has " +
              std::to_string(corpus_tokens) + " tokens"),
        id_(id) {}
  const std::string &id() const { return id_; }

 private:
  std::string id_;
};

struct EmbeddingRecord {
  std::string id;
  int rows = 0;
  std::vector<float> values;  // rows * dim, row-major
};

struct EmbeddingFile {
  int dim = 0;
  std::vector<EmbeddingRecord> records;
};

void WriteNnev(std::ostream &output, const EmbeddingFile &file);
EmbeddingFile ReadNnev(std::istream &input);

// Reads an NNEV file and aligns it with |corpus|: every corpus sentence must
// be present with exactly as many rows as it has tokens.
FeatureTable LoadEmbeddings(const std::string &path,
                            const std::vector<Sentence> &corpus);
FeatureTable AlignEmbeddings(const EmbeddingFile &file,
                             const std::vector<Sentence> &corpus);

}  // namespace nner

#endif  // NNER_FEATURES_H_
