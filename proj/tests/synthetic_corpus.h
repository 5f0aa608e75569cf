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

#ifndef NNER_TESTS_SYNTHETIC_CORPUS_H_
#define NNER_TESTS_SYNTHETIC_CORPUS_H_

#include <cstdio>
#include <string>
#include <vector>

#include "nner/base.h"
#include "nner/corpus.h"

namespace nner::testing {

inline const EntityType kSpecies = "Plasma Species";
inline const EntityType kMedium = "Plasma Medium";
inline const EntityType kQuantity = "Physical Quantity";

struct SyntheticCorpus {
  std::vector<Sentence> sentences;
  std::vector<bool> overlap_planted;  // parallel to |sentences|
};

// Generates sentences over three types with lexical triggers:
//   Species   "<gas>"
//   Medium    "pure <gas>" (contains a Species) or "<kind> discharge"
//   Quantity  "<gas> density" (contains a Species) or "<particle> temperature"
// A fraction |overlap_rate| of sentences carries one cross-type overlap.
inline SyntheticCorpus MakeSyntheticCorpus(int count, uint64_t seed,
                                           double overlap_rate = 0.3) {
  static const std::vector<std::string> kGases = {"helium", "argon", "neon",
                                                  "xenon", "hydrogen", "krypton"};
  static const std::vector<std::string> kKinds = {"glow", "arc", "corona", "spark"};
  static const std::vector<std::string> kParticles = {"electron", "ion"};
  static const std::vector<std::string> kFiller = {
      "the", "a", "we", "measured", "in", "of", "and", "was", "at", "with",
      "observed", "chamber", "reactor", "using", "probe", "signal", "near",
      "low", "high", "results", "show", "that", "for", "this", "setup",
      "cathode", "anode", "field", "value", "increased", "during", "run",
      "shot", "mode", "power", "wall", "surface", "is", "from", "to"};

  Rng rng(seed);
  auto pick = [&](const std::vector<std::string> &v) -> const std::string & {
    return v[rng.UniformInt(v.size())];
  };

  SyntheticCorpus corpus;
  for (int s = 0; s < count; ++s) {
    Sentence sentence;
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%05d", s);
    sentence.id = id;
    const bool overlap = rng.Uniform() < overlap_rate;
    const int mentions = 1 + static_cast<int>(rng.UniformInt(3));
    const int planted = overlap ? static_cast<int>(rng.UniformInt(mentions)) : -1;

    auto filler = [&](int n) {
      for (int i = 0; i < n; ++i) sentence.tokens.push_back(pick(kFiller));
    };
    filler(1 + static_cast<int>(rng.UniformInt(3)));
    for (int m = 0; m < mentions; ++m) {
      const int k = sentence.size();
      if (m == planted) {
        if (rng.Uniform() < 0.5) {
          sentence.tokens.push_back("pure");
          sentence.tokens.push_back(pick(kGases));
          sentence.spans.push_back({k, k + 2, kMedium});
          sentence.spans.push_back({k + 1, k + 2, kSpecies});
        } else {
          sentence.tokens.push_back(pick(kGases));
          sentence.tokens.push_back("density");
          sentence.spans.push_back({k, k + 2, kQuantity});
          sentence.spans.push_back({k, k + 1, kSpecies});
        }
      } else {
        switch (rng.UniformInt(3)) {
          case 0:
            sentence.tokens.push_back(pick(kGases));
            sentence.spans.push_back({k, k + 1, kSpecies});
            break;
          case 1:
            sentence.tokens.push_back(pick(kKinds));
            sentence.tokens.push_back("discharge");
            sentence.spans.push_back({k, k + 2, kMedium});
            break;
          default:
            sentence.tokens.push_back(pick(kParticles));
            sentence.tokens.push_back("temperature");
            sentence.spans.push_back({k, k + 2, kQuantity});
            break;
        }
      }
      filler(1 + static_cast<int>(rng.UniformInt(4)));
    }
    corpus.sentences.push_back(std::move(sentence));
    corpus.overlap_planted.push_back(overlap);
  }
  return corpus;
}

}  // namespace nner::testing

#endif  // NNER_TESTS_SYNTHETIC_CORPUS_H_
