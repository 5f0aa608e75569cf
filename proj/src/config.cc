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

#include "nner/config.h"

#include <fstream>
#include <sstream>

#include "nner/base.h"

namespace nner {

namespace {

template <typename T>
T Field(const Json &json, const char *key) {
  auto it = json.find(key);
  if (it == json.end()) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("bad field '") + key + "': " + e.what());
  }
}

template <typename T>
void MaybeSet(const Json &json, const char *key, T *out) {
  if (json.contains(key)) *out = Field<T>(json, key);
}

Json LabelArray(const LabelScores &scores) {
  return Json(std::vector<double>(scores.begin(), scores.end()));
}

LabelScores LabelArrayFrom(const Json &json, const char *what) {
  if (!json.is_array() || json.size() != kNumLabels) {
    throw ConfigError(std::string("'") + what + "' must have 3 entries");
  }
  LabelScores out;
  for (int i = 0; i < kNumLabels; ++i) out[i] = json[i].get<double>();
  return out;
}

template <typename Array>
Json BoolArray(const Array &values) {
  Json out = Json::array();
  for (bool b : values) out.push_back(b);
  return out;
}

}  // namespace

Json ToJson(const TrainConfig &config) {
  return Json{{"learning_rate", config.learning_rate},
              {"batch_size", config.batch_size},
              {"weight_decay", config.weight_decay},
              {"epochs", config.epochs},
              {"seed", config.seed}};
}

void MergeJson(const Json &json, TrainConfig *config) {
  if (!json.is_object()) throw ConfigError("train config must be an object");
  MaybeSet(json, "learning_rate", &config->learning_rate);
  MaybeSet(json, "batch_size", &config->batch_size);
  MaybeSet(json, "weight_decay", &config->weight_decay);
  MaybeSet(json, "epochs", &config->epochs);
  MaybeSet(json, "seed", &config->seed);
}

Json ToJson(const FeaturizerDescriptor &descriptor) {
  if (const auto *hashed = std::get_if<HashedFeatureConfig>(&descriptor)) {
    return Json{{"kind", "hashed"},
                {"dim", hashed->dim},
                {"window", hashed->window},
                {"affix_lengths", hashed->affix_lengths}};
  }
  return Json{{"kind", "embeddings"},
              {"dim", std::get<EmbeddingFeatures>(descriptor).dim}};
}

FeaturizerDescriptor FeaturizerFromJson(const Json &json) {
  const std::string kind = Field<std::string>(json, "kind");
  if (kind == "hashed") {
    HashedFeatureConfig config;
    config.dim = Field<uint32_t>(json, "dim");
    config.window = Field<int>(json, "window");
    config.affix_lengths = Field<std::vector<int>>(json, "affix_lengths");
    config.Validate();
    return config;
  }
  if (kind == "embeddings") {
    EmbeddingFeatures config{Field<int>(json, "dim")};
    if (config.dim <= 0) throw ConfigError("embedding dim must be positive");
    return config;
  }
  throw ConfigError("unknown featurizer kind '" + kind + "'");
}

Json ToJson(const TrainReport &report) {
  Json epochs = Json::array();
  for (const EpochRecord &e : report.epochs) {
    epochs.push_back({{"mean_nll", e.mean_nll}, {"val_f1", e.val_f1}});
  }
  return Json{{"best_epoch", report.best_epoch}, {"epochs", std::move(epochs)}};
}

TrainReport TrainReportFromJson(const Json &json) {
  TrainReport report;
  report.best_epoch = Field<int>(json, "best_epoch");
  for (const Json &e : Field<Json>(json, "epochs")) {
    report.epochs.push_back(
        {Field<double>(e, "mean_nll"), Field<double>(e, "val_f1")});
  }
  return report;
}

Json ToJson(const CrfModel &model) {
  const CrfParameters &p = model.params;
  Json weights = Json::array();
  for (int y = 0; y < kNumLabels; ++y) {
    auto begin = p.weights.begin() + static_cast<ptrdiff_t>(y) * p.dim;
    weights.push_back(Json(std::vector<double>(begin, begin + p.dim)));
  }
  Json transitions = Json::array();
  Json transition_mask = Json::array();
  for (int a = 0; a < kNumLabels; ++a) {
    transitions.push_back(LabelArray(p.transitions[a]));
    transition_mask.push_back(BoolArray(model.mask.transitions[a]));
  }
  return Json{{"labels", {"O", "B", "I"}},
              {"dim", p.dim},
              {"weights", std::move(weights)},
              {"bias", LabelArray(p.bias)},
              {"transitions", std::move(transitions)},
              {"start", LabelArray(p.start)},
              {"end", LabelArray(p.end)},
              {"transition_mask", std::move(transition_mask)},
              {"start_mask", BoolArray(model.mask.start)}};
}

CrfModel CrfModelFromJson(const Json &json) {
  if (Field<std::vector<std::string>>(json, "labels") !=
      std::vector<std::string>{"O", "B", "I"}) {
    throw ConfigError("model labels must be [O, B, I]");
  }
  const int dim = Field<int>(json, "dim");
  if (dim <= 0) throw ConfigError("model dim must be positive");
  CrfModel model = CrfModel::Zeros(dim, TransitionMask::None());
  const Json &weights = json.at("weights");
  if (!weights.is_array() || weights.size() != kNumLabels) {
    throw ConfigError("'weights' must have one row per label");
  }
  for (int y = 0; y < kNumLabels; ++y) {
    const Json &row = weights[y];
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      throw ConfigError("weight row has the wrong length");
    }
    for (int j = 0; j < dim; ++j) {
      model.params.weights[static_cast<size_t>(y) * dim + j] = row[j].get<double>();
    }
  }
  model.params.bias = LabelArrayFrom(json.at("bias"), "bias");
  model.params.start = LabelArrayFrom(json.at("start"), "start");
  model.params.end = LabelArrayFrom(json.at("end"), "end");
  const Json &transitions = json.at("transitions");
  const Json &transition_mask = json.at("transition_mask");
  const Json &start_mask = json.at("start_mask");
  if (transitions.size() != kNumLabels || transition_mask.size() != kNumLabels ||
      start_mask.size() != kNumLabels) {
    throw ConfigError("transition arrays must be 3x3");
  }
  for (int a = 0; a < kNumLabels; ++a) {
    model.params.transitions[a] = LabelArrayFrom(transitions[a], "transitions");
    if (transition_mask[a].size() != kNumLabels) {
      throw ConfigError("transition mask must be 3x3");
    }
    for (int b = 0; b < kNumLabels; ++b) {
      model.mask.transitions[a][b] = transition_mask[a][b].get<bool>();
    }
    model.mask.start[a] = start_mask[a].get<bool>();
  }
  if (!model.params.AllFinite()) throw ConfigError("model has non-finite values");
  return model;
}

Json ReadJsonFile(const std::string &path) {
  std::ifstream input(path);
  if (!input) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(input);
  } catch (const Json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void WriteTextFile(const std::string &path, const std::string &contents) {
  std::ofstream output(path, std::ios::binary);
  if (!output) throw ConfigError("cannot write '" + path + "'");
  output << contents;
  if (!output) throw ConfigError("error writing '" + path + "'");
}

}  // namespace nner
