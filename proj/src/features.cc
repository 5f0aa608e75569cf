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

#include "nner/features.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace nner {

FeatureMatrix FeatureMatrix::Dense(int rows, int dim,
                                   std::vector<double> values) {
  if (rows < 0 || dim <= 0 ||
      values.size() != static_cast<size_t>(rows) * static_cast<size_t>(dim)) {
    throw ValidationError("dense feature matrix has inconsistent shape");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
  }
  FeatureMatrix m;
  m.rows_ = rows;
  m.dim_ = dim;
  m.sparse_ = false;
  m.dense_ = std::move(values);
  return m;
}

FeatureMatrix FeatureMatrix::Sparse(int dim, std::vector<SparseRow> rows) {
  if (dim <= 0) throw ValidationError("feature dimension must be positive");
  for (const SparseRow &row : rows) {
    for (const auto &[index, value] : row) {
      if (index >= static_cast<uint32_t>(dim)) {
        throw ValidationError("sparse feature index out of range");
      }
      if (!std::isfinite(value)) {
        throw ValidationError("non-finite feature value");
      }
    }
  }
  FeatureMatrix m;
  m.rows_ = static_cast<int>(rows.size());
  m.dim_ = dim;
  m.sparse_ = true;
  m.sparse_rows_ = std::move(rows);
  return m;
}

FeatureMatrix FeatureMatrix::Densify() const {
  std::vector<double> values(static_cast<size_t>(rows_) * dim_, 0.0);
  for (int t = 0; t < rows_; ++t) {
    double *base = values.data() + static_cast<size_t>(t) * dim_;
    ForEach(t, [&](uint32_t j, double v) { base[j] += v; });
  }
  return Dense(rows_, dim_, std::move(values));
}

void HashedFeatureConfig::Validate() const {
  if (dim < (1u << 10) || !std::has_single_bit(dim)) {
    throw ConfigError("hashed feature dimension must be a power of two >= 1024");
  }
  if (window < 0) throw ConfigError("feature window must be non-negative");
  for (int len : affix_lengths) {
    if (len <= 0) throw ConfigError("affix lengths must be positive");
  }
}

int FeatureDim(const FeaturizerDescriptor &descriptor) {
  if (const auto *hashed = std::get_if<HashedFeatureConfig>(&descriptor)) {
    return static_cast<int>(hashed->dim);
  }
  return std::get<EmbeddingFeatures>(descriptor).dim;
}

std::string WordShape(std::string_view token) {
  std::string shape;
  shape.reserve(token.size());
  for (char c : token) {
    if (c >= 'a' && c <= 'z') {
      shape += 'x';
    } else if (c >= 'A' && c <= 'Z') {
      shape += 'X';
    } else if (c >= '0' && c <= '9') {
      shape += '9';
    } else {
      shape += c;
    }
  }
  return shape;
}

std::pair<uint32_t, double> HashFeature(std::string_view feature,
                                        uint32_t dim) {
  const uint64_t h = Fnv1a64(feature);
  const uint32_t index = static_cast<uint32_t>(h % dim);
  const double sign = ((h / dim) & 1u) ? -1.0 : 1.0;
  return {index, sign};
}

namespace {

std::string Lower(std::string_view token) {
  std::string out(token);
  for (char &c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Byte offsets of UTF-8 code point starts, plus the end offset.
std::vector<size_t> CodePointOffsets(std::string_view s) {
  std::vector<size_t> offsets;
  for (size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<uint8_t>(s[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(s.size());
  return offsets;
}

bool AllDigits(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool AllUpper(std::string_view token) {
  bool letter = false;
  for (char c : token) {
    if (c >= 'a' && c <= 'z') return false;
    if (c >= 'A' && c <= 'Z') letter = true;
  }
  return letter;
}

}  // namespace

std::vector<std::string> TokenFeatureStrings(const Sentence &sentence, int i,
                                             const HashedFeatureConfig &config) {
  const std::string &token = sentence.tokens[i];
  const std::string lower = Lower(token);
  std::vector<std::string> features;
  features.push_back("w=" + lower + "@0");
  features.push_back("shape=" + WordShape(token) + "@0");

  const std::vector<size_t> cps = CodePointOffsets(lower);
  const int length = static_cast<int>(cps.size()) - 1;
  for (int k : config.affix_lengths) {
    if (k > length) continue;
    features.push_back("p" + std::to_string(k) + "=" +
                       lower.substr(0, cps[k]) + "@0");
    features.push_back("s" + std::to_string(k) + "=" +
                       lower.substr(cps[length - k]) + "@0");
  }
  if (AllDigits(token)) features.push_back("digit=1@0");
  if (AllUpper(token)) features.push_back("upper=1@0");

  for (int offset = -config.window; offset <= config.window; ++offset) {
    if (offset == 0) continue;
    const int j = i + offset;
    const std::string value =
        j < 0 ? "<s>" : j >= sentence.size() ? "</s>" : Lower(sentence.tokens[j]);
    features.push_back("w=" + value + "@" + std::to_string(offset));
  }
  return features;
}

FeatureMatrix HashFeatures(const Sentence &sentence,
                           const HashedFeatureConfig &config) {
  std::vector<FeatureMatrix::SparseRow> rows(sentence.tokens.size());
  for (int i = 0; i < sentence.size(); ++i) {
    for (const std::string &feature : TokenFeatureStrings(sentence, i, config)) {
      rows[i].push_back(HashFeature(feature, config.dim));
    }
  }
  return FeatureMatrix::Sparse(static_cast<int>(config.dim), std::move(rows));
}

FeatureTable HashCorpus(const std::vector<Sentence> &sentences,
                        const HashedFeatureConfig &config) {
  config.Validate();
  FeatureTable table;
  table.reserve(sentences.size());
  for (const Sentence &sentence : sentences) {
    if (!table.emplace(sentence.id, HashFeatures(sentence, config)).second) {
      throw ValidationError("duplicate sentence id '" + sentence.id + "'");
    }
  }
  return table;
}

namespace {

constexpr char kNnevMagic[4] = {'N', 'N', 'E', 'V'};
constexpr uint32_t kNnevVersion = 1;

template <typename T>
void PutLe(std::ostream &out, T value) {
  unsigned char bytes[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
T GetLe(std::istream &in, const char *what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T))) {
    throw NnevFormatError(std::string("truncated NNEV file reading ") + what);
  }
  T value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(bytes[i]) << (8 * i));
  }
  return value;
}

}  // namespace

void WriteNnev(std::ostream &output, const EmbeddingFile &file) {
  output.write(kNnevMagic, 4);
  PutLe<uint32_t>(output, kNnevVersion);
  PutLe<uint32_t>(output, static_cast<uint32_t>(file.dim));
  PutLe<uint32_t>(output, static_cast<uint32_t>(file.records.size()));
  for (const EmbeddingRecord &record : file.records) {
    if (record.id.size() > UINT16_MAX) {
      throw ValidationError("sentence id too long for NNEV: " + record.id);
    }
    if (record.values.size() != static_cast<size_t>(record.rows) * file.dim) {
      throw ValidationError("embedding record '" + record.id +
                            "' has the wrong number of values");
    }
    PutLe<uint16_t>(output, static_cast<uint16_t>(record.id.size()));
    output.write(record.id.data(), static_cast<std::streamsize>(record.id.size()));
    PutLe<uint32_t>(output, static_cast<uint32_t>(record.rows));
    for (float v : record.values) PutLe<uint32_t>(output, std::bit_cast<uint32_t>(v));
  }
}

EmbeddingFile ReadNnev(std::istream &input) {
  char magic[4];
  if (!input.read(magic, 4) || std::memcmp(magic, kNnevMagic, 4) != 0) {
    throw NnevFormatError("bad NNEV magic");
  }
  const uint32_t version = GetLe<uint32_t>(input, "version");
  if (version != kNnevVersion) {
    throw NnevFormatError("unsupported NNEV version " + std::to_string(version));
  }
  EmbeddingFile file;
  file.dim = static_cast<int>(GetLe<uint32_t>(input, "dimension"));
  if (file.dim <= 0) throw NnevFormatError("NNEV dimension must be positive");
  const uint32_t count = GetLe<uint32_t>(input, "sentence count");
  file.records.reserve(count);
  for (uint32_t s = 0; s < count; ++s) {
    EmbeddingRecord record;
    const uint16_t id_length = GetLe<uint16_t>(input, "id length");
    record.id.resize(id_length);
    if (id_length > 0 && !input.read(record.id.data(), id_length)) {
      throw NnevFormatError("truncated NNEV file reading sentence id");
    }
    record.rows = static_cast<int>(GetLe<uint32_t>(input, "token count"));
    const size_t n = static_cast<size_t>(record.rows) * file.dim;
    record.values.resize(n);
    for (size_t i = 0; i < n; ++i) {
      record.values[i] = std::bit_cast<float>(GetLe<uint32_t>(input, "values"));
    }
    file.records.push_back(std::move(record));
  }
  return file;
}

FeatureTable AlignEmbeddings(const EmbeddingFile &file,
                             const std::vector<Sentence> &corpus) {
  std::unordered_map<std::string_view, const EmbeddingRecord *> by_id;
  for (const EmbeddingRecord &record : file.records) by_id[record.id] = &record;

  FeatureTable table;
  for (const Sentence &sentence : corpus) {
    auto it = by_id.find(sentence.id);
    if (it == by_id.end()) throw MissingSentenceError(sentence.id);
    const EmbeddingRecord &record = *it->second;
    if (record.rows != sentence.size()) {
      throw AlignmentError(sentence.id, record.rows, sentence.size());
    }
    std::vector<double> values(record.values.begin(), record.values.end());
    table.insert_or_assign(sentence.id,
                           FeatureMatrix::Dense(record.rows, file.dim,
                                                std::move(values)));
  }
  return table;
}

FeatureTable LoadEmbeddings(const std::string &path,
                            const std::vector<Sentence> &corpus) {
  std::ifstream input(path, std::ios::binary);
  if (!input) throw ConfigError("cannot open embedding file '" + path + "'");
  return AlignEmbeddings(ReadNnev(input), corpus);
}

}  // namespace nner
