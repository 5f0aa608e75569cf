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

#ifndef NNER_CLI_H_
#define NNER_CLI_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nner/bayesopt.h"
#include "nner/config.h"
#include "nner/corpus.h"
#include "nner/crf.h"

namespace nner {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDiverged = 3,
  kExitMismatch = 4,
};

enum class TuneMode { kPerType, kGlobal };

// Fully resolved settings of one run. The JSON form is both the --config
// file format and the manifest written next to every run's outputs.
struct RunConfig {
  std::string command;
  std::string corpus;  // split with |split| and |seed|
  std::string train;   // explicit splits, used when |corpus| is empty
  std::string val;
  std::string test;
  SplitRatios split;

  // Exactly one featurizer: embeddings when |embeddings| is set, hashed
  // otherwise.
  std::string embeddings;
  HashedFeatureConfig hashed;

  std::vector<EntityType> types;  // empty: every type in the corpus
  TrainConfig train_config;
  std::string tuned;  // tuned configuration written by `tune`

  HyperSpace space;
  int budget = 20;
  int init = 5;
  TuneMode tune_mode = TuneMode::kPerType;
  double noise = 1e-4;
  int candidates = 2048;
  double xi = 0.0;

  std::string bundle;  // model bundle directory for predict / eval
  std::string input;   // predict input; defaults to the test split
  std::string pred;    // eval: score this prediction file instead of a bundle
  std::string gold;    // eval: gold file for --pred; defaults to the test split

  uint64_t seed = 0;
  std::string out = "nner_out";
  int workers = 1;
};

Json ToJson(const RunConfig &config);
// Fields absent from |json| keep their current values.
void MergeJson(const Json &json, RunConfig *config);

// Entry point for the `nner` tool; returns the process exit code.
int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err);

}  // namespace nner

#endif  // NNER_CLI_H_
