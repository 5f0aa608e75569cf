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

// JSON forms of configuration and model values. Doubles are written in
// shortest round-trip form, so reading back reproduces them bit for bit.

#ifndef NNER_CONFIG_H_
#define NNER_CONFIG_H_

#include <string>

#include "json.hpp"
#include "nner/crf.h"
#include "nner/features.h"

namespace nner {

using Json = nlohmann::ordered_json;

Json ToJson(const TrainConfig &config);
// Missing fields keep the values already in |config|.
void MergeJson(const Json &json, TrainConfig *config);

Json ToJson(const FeaturizerDescriptor &descriptor);
FeaturizerDescriptor FeaturizerFromJson(const Json &json);

Json ToJson(const TrainReport &report);
TrainReport TrainReportFromJson(const Json &json);

// Dense parameter arrays; weights are written one row per label.
Json ToJson(const CrfModel &model);
CrfModel CrfModelFromJson(const Json &json);

Json ReadJsonFile(const std::string &path);
void WriteTextFile(const std::string &path, const std::string &contents);

}  // namespace nner

#endif  // NNER_CONFIG_H_
