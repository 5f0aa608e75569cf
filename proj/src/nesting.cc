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

#include "nner/nesting.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <set>
#include <thread>

#include "nner/base.h"
#include "nner/config.h"

namespace nner {

namespace fs = std::filesystem;

std::vector<EntityType> ModelBundle::Types() const {
  std::vector<EntityType> types;
  for (const auto &[type, _] : models) types.push_back(type);
  return types;
}

void ModelBundle::Validate() const {
  if (models.empty()) throw ValidationError("model bundle has no entity types");
  const int dim = FeatureDim(featurizer);
  for (const auto &[type, m] : models) {
    if (m.model.dim() != dim) {
      throw ValidationError("model for '" + type + "' has dimension " +
                            std::to_string(m.model.dim()) +
                            " but the featurizer produces " + std::to_string(dim));
    }
  }
}

std::vector<LabeledSequence> ProjectExamples(const std::vector<Sentence> &sentences,
                                             const EntityType &type,
                                             const FeatureTable &features) {
  std::vector<LabeledSequence> examples;
  examples.reserve(sentences.size());
  for (const Sentence &sentence : sentences) {
    auto it = features.find(sentence.id);
    if (it == features.end()) {
      throw MismatchError("no features for sentence '" + sentence.id + "'");
    }
    if (it->second.rows() != sentence.size()) {
      throw MismatchError("features for sentence '" + sentence.id +
                          "' have the wrong number of rows");
    }
    std::vector<Span> dropped;
    LabeledSequence example;
    example.features = &it->second;
    example.tags = EncodeBio(sentence, type, &dropped);
    for (const Span &span : dropped) {
      LogWarning("sentence '" + sentence.id + "': dropped span [" +
                 std::to_string(span.start) + ", " + std::to_string(span.end) +
                 ") of type '" + type + "' overlapping a longer span of the same type");
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

TrainResult TrainPerType(const CorpusSplit &split, const EntityType &type,
                         const FeatureTable &features, const TrainConfig &config) {
  if (split.train.empty()) throw ConfigError("training split is empty");
  const auto train = ProjectExamples(split.train, type, features);
  const auto val = ProjectExamples(split.val, type, features);
  return TrainModel(train, val, config);
}

ModelBundle TrainBundle(const CorpusSplit &split,
                        const std::vector<EntityType> &types,
                        const FeatureTable &features,
                        const FeaturizerDescriptor &featurizer,
                        const std::map<EntityType, TrainConfig> &configs,
                        int workers) {
  if (types.empty()) throw ConfigError("no entity types to train");
  std::vector<EntityType> order(types);
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw ConfigError("entity type list has duplicates");
  }
  for (const EntityType &type : order) {
    if (configs.find(type) == configs.end()) {
      throw ConfigError("no training config for type '" + type + "'");
    }
  }

  std::vector<TrainResult> results(order.size());
  std::vector<std::exception_ptr> errors(order.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next++; i < order.size(); i = next++) {
      try {
        results[i] = TrainPerType(split, order[i], features, configs.at(order[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads =
      std::clamp(workers, 1, static_cast<int>(order.size()));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (std::thread &thread : pool) thread.join();
  }
  for (const std::exception_ptr &error : errors) {
    if (error) std::rethrow_exception(error);
  }

  ModelBundle bundle;
  bundle.featurizer = featurizer;
  for (size_t i = 0; i < order.size(); ++i) {
    bundle.models[order[i]] = TypeModel{std::move(results[i].model),
                                        std::move(results[i].report),
                                        configs.at(order[i])};
  }
  bundle.Validate();
  return bundle;
}

std::vector<Span> PredictType(const CrfModel &model, const EntityType &type,
                              const FeatureMatrix &features) {
  return DecodeBio(ViterbiDecode(model, features), type);
}

std::vector<Span> PredictNested(const ModelBundle &bundle,
                                const Sentence &sentence,
                                const FeatureMatrix &features) {
  if (features.dim() != FeatureDim(bundle.featurizer)) {
    throw MismatchError("feature dimension " + std::to_string(features.dim()) +
                        " does not match the bundle featurizer (" +
                        std::to_string(FeatureDim(bundle.featurizer)) + ")");
  }
  if (features.rows() != sentence.size()) {
    throw MismatchError("features for sentence '" + sentence.id +
                        "' have the wrong number of rows");
  }
  std::vector<Span> spans;
  for (const auto &[type, m] : bundle.models) {
    auto typed = PredictType(m.model, type, features);
    spans.insert(spans.end(), typed.begin(), typed.end());
  }
  std::sort(spans.begin(), spans.end(), [](const Span &a, const Span &b) {
    return std::tie(a.start, a.end, a.type) < std::tie(b.start, b.end, b.type);
  });
  return spans;
}

std::string TypeSlug(const EntityType &type) {
  std::string slug;
  for (char c : type) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (keep) {
      slug += c;
    } else if (!slug.empty() && slug.back() != '-') {
      slug += '-';
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  if (slug.empty()) slug = "type";
  return slug;
}

void WriteModelFile(const std::string &path, const EntityType &type,
                    const TypeModel &model, const FeaturizerDescriptor &featurizer) {
  Json doc{{"format", "nner-crf"},
           {"version", 1},
           {"entity_type", type},
           {"featurizer", ToJson(featurizer)},
           {"train_config", ToJson(model.config)},
           {"train_report", ToJson(model.report)},
           {"crf", ToJson(model.model)}};
  WriteTextFile(path, doc.dump() + "\n");
}

ModelFile ReadModelFile(const std::string &path) {
  const Json doc = ReadJsonFile(path);
  try {
    if (doc.at("format") != "nner-crf" || doc.at("version") != 1) {
      throw ConfigError(path + ": not an nner-crf version 1 model file");
    }
    ModelFile file;
    file.type = doc.at("entity_type").get<std::string>();
    file.featurizer = FeaturizerFromJson(doc.at("featurizer"));
    MergeJson(doc.at("train_config"), &file.model.config);
    file.model.report = TrainReportFromJson(doc.at("train_report"));
    file.model.model = CrfModelFromJson(doc.at("crf"));
    return file;
  } catch (const Json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void SaveBundle(const ModelBundle &bundle, const std::string &directory) {
  bundle.Validate();
  fs::create_directories(directory);
  Json types = Json::array();
  std::set<std::string> slugs;
  for (const auto &[type, model] : bundle.models) {
    std::string slug = TypeSlug(type);
    if (!slugs.insert(slug).second) {
      throw ValidationError("entity types map to the same file name '" + slug + "'");
    }
    const std::string file = slug + ".model";
    WriteModelFile((fs::path(directory) / file).string(), type, model,
                   bundle.featurizer);
    types.push_back({{"type", type},
                     {"file", file},
                     {"train_config", ToJson(model.config)}});
  }
  Json manifest{{"format", "nner-bundle"},
                {"version", 1},
                {"featurizer", ToJson(bundle.featurizer)},
                {"types", std::move(types)}};
  WriteTextFile((fs::path(directory) / "manifest.json").string(),
                manifest.dump(2) + "\n");
}

ModelBundle LoadBundle(const std::string &directory) {
  const Json manifest = ReadJsonFile((fs::path(directory) / "manifest.json").string());
  ModelBundle bundle;
  try {
    if (manifest.at("format") != "nner-bundle") {
      throw ConfigError(directory + ": not a model bundle");
    }
    bundle.featurizer = FeaturizerFromJson(manifest.at("featurizer"));
    for (const Json &entry : manifest.at("types")) {
      const std::string file = entry.at("file").get<std::string>();
      ModelFile model = ReadModelFile((fs::path(directory) / file).string());
      if (model.type != entry.at("type").get<std::string>()) {
        throw ConfigError(file + ": entity type does not match the manifest");
      }
      if (!(model.featurizer == bundle.featurizer)) {
        throw ConfigError(file + ": featurizer does not match the manifest");
      }
      bundle.models[model.type] = std::move(model.model);
    }
  } catch (const Json::exception &e) {
    throw ConfigError(directory + "/manifest.json: " + e.what());
  }
  bundle.Validate();
  return bundle;
}

}  // namespace nner
