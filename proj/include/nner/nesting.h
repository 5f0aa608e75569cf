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

// Entity-specific specialization. Each entity type gets its own CRF trained
// on the per-type BIO projection of the corpus; at prediction time every
// model decodes the sentence independently and the typed spans are unioned,
// so spans of different types may overlap or coincide.

#ifndef NNER_NESTING_H_
#define NNER_NESTING_H_

#include <map>
#include <string>
#include <vector>

#include "nner/corpus.h"
#include "nner/crf.h"
#include "nner/features.h"

namespace nner {

struct TypeModel {
  CrfModel model;
  TrainReport report;
  TrainConfig config;
};

struct ModelBundle {
  FeaturizerDescriptor featurizer;
  std::map<EntityType, TypeModel> models;

  std::vector<EntityType> Types() const;

  // Throws ValidationError unless at least one model is present and every
  // model's dimension matches the featurizer.
  void Validate() const;
};

// Per-type training examples for |sentences|; spans of other types become O.
// Throws MismatchError if a sentence has no features or the row count is off.
std::vector<LabeledSequence> ProjectExamples(const std::vector<Sentence> &sentences,
                                             const EntityType &type,
                                             const FeatureTable &features);

// Trains one type on the train/val projections of |split|.
TrainResult TrainPerType(const CorpusSplit &split, const EntityType &type,
                         const FeatureTable &features, const TrainConfig &config);

// Trains every type independently, using up to |workers| threads. |configs|
// must hold an entry for each type.
ModelBundle TrainBundle(const CorpusSplit &split,
                        const std::vector<EntityType> &types,
                        const FeatureTable &features,
                        const FeaturizerDescriptor &featurizer,
                        const std::map<EntityType, TrainConfig> &configs,
                        int workers = 1);

// Spans of one type predicted by its model.
std::vector<Span> PredictType(const CrfModel &model, const EntityType &type,
                              const FeatureMatrix &features);

// Union over types of each model's decoded spans, sorted. Throws
// MismatchError if |features| does not fit the bundle or the sentence.
std::vector<Span> PredictNested(const ModelBundle &bundle,
                                const Sentence &sentence,
                                const FeatureMatrix &features);

// Lowercase ASCII letters and digits, other runs collapsed to '-'.
std::string TypeSlug(const EntityType &type);

// One "<slug>.model" JSON file per type plus manifest.json in |directory|.
void SaveBundle(const ModelBundle &bundle, const std::string &directory);
ModelBundle LoadBundle(const std::string &directory);

// Single-model files as written by SaveBundle.
void WriteModelFile(const std::string &path, const EntityType &type,
                    const TypeModel &model, const FeaturizerDescriptor &featurizer);
struct ModelFile {
  EntityType type;
  TypeModel model;
  FeaturizerDescriptor featurizer;
};
ModelFile ReadModelFile(const std::string &path);

}  // namespace nner

#endif  // NNER_NESTING_H_
