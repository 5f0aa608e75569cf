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

#include "nner/cli.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "nner/base.h"
#include "nner/evaluation.h"
#include "nner/features.h"
#include "nner/nesting.h"

namespace nner {

namespace fs = std::filesystem;

namespace {

const char *ModeName(TuneMode mode) {
  return mode == TuneMode::kGlobal ? "global" : "per-type";
}

TuneMode ParseMode(const std::string &name) {
  if (name == "global") return TuneMode::kGlobal;
  if (name == "per-type") return TuneMode::kPerType;
  throw ConfigError("tuning mode must be 'per-type' or 'global', got '" + name + "'");
}

template <typename T>
void MaybeSet(const Json &json, const char *key, T *out) {
  auto it = json.find(key);
  if (it == json.end() || it->is_null()) return;
  try {
    *out = it->get<T>();
  } catch (const Json::exception &e) {
    throw ConfigError(std::string("bad config field '") + key + "': " + e.what());
  }
}

}  // namespace

Json ToJson(const RunConfig &c) {
  Json featurizer;
  if (c.embeddings.empty()) {
    featurizer = ToJson(FeaturizerDescriptor(c.hashed));
  } else {
    featurizer = Json{{"kind", "embeddings"}, {"path", c.embeddings}};
  }
  return Json{
      {"command", c.command},
      {"corpus", c.corpus},
      {"train", c.train},
      {"val", c.val},
      {"test", c.test},
      {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
      {"featurizer", std::move(featurizer)},
      {"types", c.types},
      {"train_config", ToJson(c.train_config)},
      {"tuned", c.tuned},
      {"tuning",
       {{"mode", ModeName(c.tune_mode)},
        {"budget", c.budget},
        {"init", c.init},
        {"noise", c.noise},
        {"candidates", c.candidates},
        {"xi", c.xi},
        {"space",
         {{"learning_rate", {c.space.min_learning_rate, c.space.max_learning_rate}},
          {"batch_size", {c.space.min_batch_size, c.space.max_batch_size}},
          {"weight_decay", {c.space.min_weight_decay, c.space.max_weight_decay}}}}}},
      {"bundle", c.bundle},
      {"input", c.input},
      {"pred", c.pred},
      {"gold", c.gold},
      {"seed", c.seed},
      {"out", c.out},
      {"workers", c.workers}};
}

void MergeJson(const Json &json, RunConfig *c) {
  if (!json.is_object()) throw ConfigError("run config must be a JSON object");
  MaybeSet(json, "corpus", &c->corpus);
  MaybeSet(json, "train", &c->train);
  MaybeSet(json, "val", &c->val);
  MaybeSet(json, "test", &c->test);
  if (json.contains("split")) {
    const Json &s = json.at("split");
    MaybeSet(s, "train", &c->split.train);
    MaybeSet(s, "val", &c->split.val);
    MaybeSet(s, "test", &c->split.test);
  }
  if (json.contains("featurizer")) {
    const Json &f = json.at("featurizer");
    std::string kind = "hashed";
    MaybeSet(f, "kind", &kind);
    if (kind == "embeddings") {
      MaybeSet(f, "path", &c->embeddings);
      if (c->embeddings.empty()) throw ConfigError("embeddings featurizer needs a path");
    } else if (kind == "hashed") {
      c->embeddings.clear();
      MaybeSet(f, "dim", &c->hashed.dim);
      MaybeSet(f, "window", &c->hashed.window);
      MaybeSet(f, "affix_lengths", &c->hashed.affix_lengths);
    } else {
      throw ConfigError("unknown featurizer kind '" + kind + "'");
    }
  }
  MaybeSet(json, "types", &c->types);
  if (json.contains("train_config")) MergeJson(json.at("train_config"), &c->train_config);
  MaybeSet(json, "tuned", &c->tuned);
  if (json.contains("tuning")) {
    const Json &t = json.at("tuning");
    if (t.contains("mode")) c->tune_mode = ParseMode(t.at("mode").get<std::string>());
    MaybeSet(t, "budget", &c->budget);
    MaybeSet(t, "init", &c->init);
    MaybeSet(t, "noise", &c->noise);
    MaybeSet(t, "candidates", &c->candidates);
    MaybeSet(t, "xi", &c->xi);
    if (t.contains("space")) {
      const Json &s = t.at("space");
      std::pair<double, double> lr{c->space.min_learning_rate, c->space.max_learning_rate};
      std::pair<int, int> bs{c->space.min_batch_size, c->space.max_batch_size};
      std::pair<double, double> wd{c->space.min_weight_decay, c->space.max_weight_decay};
      MaybeSet(s, "learning_rate", &lr);
      MaybeSet(s, "batch_size", &bs);
      MaybeSet(s, "weight_decay", &wd);
      c->space = {lr.first, lr.second, bs.first, bs.second, wd.first, wd.second};
    }
  }
  MaybeSet(json, "bundle", &c->bundle);
  MaybeSet(json, "input", &c->input);
  MaybeSet(json, "pred", &c->pred);
  MaybeSet(json, "gold", &c->gold);
  MaybeSet(json, "seed", &c->seed);
  MaybeSet(json, "out", &c->out);
  MaybeSet(json, "workers", &c->workers);
}

namespace {

// Command-line overrides; unset flags leave the config untouched.
struct Flags {
  std::string config;
  std::optional<std::string> corpus, train, val, test, embeddings, types, tuned,
      bundle, input, pred, gold, out, mode;
  std::optional<uint32_t> hashed_dim;
  std::optional<uint64_t> seed;
  std::optional<int> budget, init, epochs, batch_size, workers;
  std::optional<double> learning_rate, weight_decay;
};

void AddFlags(CLI::App *sub, Flags *f) {
  sub->add_option("--config", f->config, "JSON run configuration");
  sub->add_option("--corpus", f->corpus, "Corpus file, split by --seed");
  sub->add_option("--train", f->train, "Training split file");
  sub->add_option("--val", f->val, "Validation split file");
  sub->add_option("--test", f->test, "Test split file");
  sub->add_option("--seed", f->seed, "Run seed");
  sub->add_option("--out", f->out, "Output directory");
  sub->add_option("--types", f->types, "Comma-separated entity types");
  sub->add_option("--embeddings", f->embeddings, "NNEV embedding file");
  sub->add_option("--hashed-dim", f->hashed_dim, "Hashed feature dimension");
  sub->add_option("--tuned", f->tuned, "Tuned configuration from `tune`");
  sub->add_option("--bundle", f->bundle, "Model bundle directory");
  sub->add_option("--input", f->input, "Sentences to label (predict)");
  sub->add_option("--pred", f->pred, "Prediction file to score (eval)");
  sub->add_option("--gold", f->gold, "Gold file for --pred (eval)");
  sub->add_option("--budget", f->budget, "Total tuning evaluations");
  sub->add_option("--init", f->init, "Initial space-filling evaluations");
  sub->add_option("--mode", f->mode, "Tuning mode: per-type or global");
  sub->add_option("--epochs", f->epochs, "Training epochs");
  sub->add_option("--learning-rate", f->learning_rate, "Learning rate");
  sub->add_option("--batch-size", f->batch_size, "Batch size");
  sub->add_option("--weight-decay", f->weight_decay, "Weight decay");
  sub->add_option("--workers", f->workers, "Concurrent per-type training jobs");
}

std::vector<std::string> SplitList(const std::string &list) {
  std::vector<std::string> items;
  std::stringstream stream(list);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) items.push_back(item.substr(b, e - b + 1));
  }
  return items;
}

RunConfig Resolve(const std::string &command, const Flags &f) {
  RunConfig c;
  if (!f.config.empty()) MergeJson(ReadJsonFile(f.config), &c);
  c.command = command;
  if (f.corpus) c.corpus = *f.corpus;
  if (f.train) c.train = *f.train;
  if (f.val) c.val = *f.val;
  if (f.test) c.test = *f.test;
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.types) c.types = SplitList(*f.types);
  if (f.embeddings && f.hashed_dim) {
    throw ConfigError("--embeddings and --hashed-dim are mutually exclusive");
  }
  if (f.embeddings) c.embeddings = *f.embeddings;
  if (f.hashed_dim) {
    c.embeddings.clear();
    c.hashed.dim = *f.hashed_dim;
  }
  if (f.tuned) c.tuned = *f.tuned;
  if (f.bundle) c.bundle = *f.bundle;
  if (f.input) c.input = *f.input;
  if (f.pred) c.pred = *f.pred;
  if (f.gold) c.gold = *f.gold;
  if (f.budget) c.budget = *f.budget;
  if (f.init) c.init = *f.init;
  if (f.mode) c.tune_mode = ParseMode(*f.mode);
  if (f.epochs) c.train_config.epochs = *f.epochs;
  if (f.learning_rate) c.train_config.learning_rate = *f.learning_rate;
  if (f.batch_size) c.train_config.batch_size = *f.batch_size;
  if (f.weight_decay) c.train_config.weight_decay = *f.weight_decay;
  if (f.workers) c.workers = *f.workers;

  if (c.embeddings.empty()) c.hashed.Validate();
  c.train_config.Validate();
  if (c.workers < 1) throw ConfigError("--workers must be at least 1");
  return c;
}

void WriteManifest(const RunConfig &config) {
  fs::create_directories(config.out);
  WriteTextFile((fs::path(config.out) / "run_manifest.json").string(),
                ToJson(config).dump(2) + "\n");
}

// Loads the train/val/test splits named by the config.
CorpusSplit LoadSplit(const RunConfig &c) {
  if (!c.corpus.empty()) {
    return SplitCorpus(ReadCorpusFile(c.corpus), c.split, c.seed);
  }
  if (c.train.empty() && c.val.empty() && c.test.empty()) {
    throw ConfigError("no corpus given: use --corpus or --train/--val/--test");
  }
  CorpusSplit split;
  if (!c.train.empty()) split.train = ReadCorpusFile(c.train);
  if (!c.val.empty()) split.val = ReadCorpusFile(c.val);
  if (!c.test.empty()) split.test = ReadCorpusFile(c.test);
  return split;
}

std::vector<Sentence> AllSentences(const CorpusSplit &split) {
  std::vector<Sentence> all(split.train);
  all.insert(all.end(), split.val.begin(), split.val.end());
  all.insert(all.end(), split.test.begin(), split.test.end());
  return all;
}

FeaturizerDescriptor Descriptor(const RunConfig &c, const FeatureTable &table) {
  if (c.embeddings.empty()) return c.hashed;
  const int dim = table.empty() ? 0 : table.begin()->second.dim();
  return EmbeddingFeatures{dim};
}

FeatureTable BuildFeatures(const RunConfig &c, const std::vector<Sentence> &sentences) {
  if (c.embeddings.empty()) return HashCorpus(sentences, c.hashed);
  return LoadEmbeddings(c.embeddings, sentences);
}

// Features for sentences scored by an existing bundle.
FeatureTable BundleFeatures(const RunConfig &c, const ModelBundle &bundle,
                            const std::vector<Sentence> &sentences) {
  if (const auto *hashed = std::get_if<HashedFeatureConfig>(&bundle.featurizer)) {
    return HashCorpus(sentences, *hashed);
  }
  if (c.embeddings.empty()) {
    throw MismatchError("bundle was trained on embeddings; pass --embeddings");
  }
  FeatureTable table = LoadEmbeddings(c.embeddings, sentences);
  for (const auto &[id, matrix] : table) {
    if (matrix.dim() != FeatureDim(bundle.featurizer)) {
      throw MismatchError("embedding dimension " + std::to_string(matrix.dim()) +
                          " does not match the bundle (" +
                          std::to_string(FeatureDim(bundle.featurizer)) + ")");
    }
  }
  return table;
}

std::vector<EntityType> ResolveTypes(const RunConfig &c, const CorpusSplit &split) {
  if (!c.types.empty()) return c.types;
  auto types = CollectTypes(AllSentences(split));
  if (types.empty()) throw ConfigError("corpus has no annotated entity types");
  return types;
}

// Per-type configs: the base config with a type-derived seed, overlaid with
// tuned values when a tuned configuration is supplied.
std::map<EntityType, TrainConfig> TypeConfigs(const RunConfig &c,
                                              const std::vector<EntityType> &types) {
  Json tuned;
  if (!c.tuned.empty()) tuned = ReadJsonFile(c.tuned);
  std::map<EntityType, TrainConfig> configs;
  for (const EntityType &type : types) {
    TrainConfig config = c.train_config;
    if (!tuned.is_null()) {
      if (tuned.contains("config")) MergeJson(tuned.at("config"), &config);
      if (tuned.contains("configs") && tuned.at("configs").contains(type)) {
        MergeJson(tuned.at("configs").at(type), &config);
      }
    }
    config.seed = DeriveSeed(c.seed, type);
    config.Validate();
    configs[type] = config;
  }
  return configs;
}

TrainConfig WithHyperparams(TrainConfig config, const Hyperparams &h) {
  config.learning_rate = h.learning_rate;
  config.batch_size = h.batch_size;
  config.weight_decay = h.weight_decay;
  return config;
}

int CmdStats(const RunConfig &c, std::ostream &out) {
  CorpusStats stats;
  if (!c.corpus.empty()) {
    stats = ComputeCorpusStats(SplitCorpus(ReadCorpusFile(c.corpus), c.split, c.seed));
  } else {
    stats = ComputeCorpusStats(LoadSplit(c));
  }
  out << RenderCorpusStats(stats);
  return kExitOk;
}

int CmdSplit(const RunConfig &c, std::ostream &out) {
  if (c.corpus.empty()) throw ConfigError("split needs --corpus");
  const CorpusSplit split = LoadSplit(c);
  fs::create_directories(c.out);
  WriteCorpusFile((fs::path(c.out) / "train.jsonl").string(), split.train);
  WriteCorpusFile((fs::path(c.out) / "val.jsonl").string(), split.val);
  WriteCorpusFile((fs::path(c.out) / "test.jsonl").string(), split.test);
  WriteManifest(c);
  out << "train " << split.train.size() << ", val " << split.val.size()
      << ", test " << split.test.size() << " sentences written to " << c.out << "\n";
  return kExitOk;
}

int CmdTrain(const RunConfig &c, std::ostream &out) {
  const CorpusSplit split = LoadSplit(c);
  if (split.train.empty()) throw ConfigError("training split is empty");
  const FeatureTable features = BuildFeatures(c, AllSentences(split));
  const auto types = ResolveTypes(c, split);
  const ModelBundle bundle = TrainBundle(split, types, features, Descriptor(c, features),
                                         TypeConfigs(c, types), c.workers);
  const std::string dir = (fs::path(c.out) / "bundle").string();
  SaveBundle(bundle, dir);
  WriteManifest(c);
  for (const auto &[type, m] : bundle.models) {
    out << type << ": best epoch " << m.report.best_epoch + 1 << ", val span F1 "
        << m.report.epochs[m.report.best_epoch].val_f1 << "\n";
  }
  out << "bundle written to " << dir << "\n";
  return kExitOk;
}

int CmdTune(const RunConfig &c, std::ostream &out) {
  const CorpusSplit split = LoadSplit(c);
  if (split.train.empty()) throw ConfigError("training split is empty");
  if (split.val.empty()) throw ConfigError("tuning needs a non-empty validation split");
  const FeatureTable features = BuildFeatures(c, AllSentences(split));
  const FeaturizerDescriptor featurizer = Descriptor(c, features);
  const auto types = ResolveTypes(c, split);
  const auto base = TypeConfigs(c, types);
  fs::create_directories(c.out);

  TuneConfig tune;
  tune.budget = c.budget;
  tune.init = c.init;
  tune.noise = c.noise;
  tune.acquisition.candidates = c.candidates;
  tune.acquisition.xi = c.xi;

  auto run = [&](const std::string &log_name, uint64_t seed, const Objective &objective) {
    std::ofstream log((fs::path(c.out) / log_name).string());
    if (!log) throw ConfigError("cannot write tuning log in " + c.out);
    tune.seed = seed;
    return Tune(objective, c.space, tune, [&](int index, const Trial &trial) {
      log << TrialLogLine(index, trial) << "\n";
      log.flush();
    });
  };

  Json tuned;
  if (c.tune_mode == TuneMode::kGlobal) {
    const TuneResult result =
        run("tuning_log.jsonl", c.seed, [&](const Hyperparams &h) {
          std::map<EntityType, TrainConfig> configs;
          for (const auto &[type, config] : base) configs[type] = WithHyperparams(config, h);
          const ModelBundle bundle =
              TrainBundle(split, types, features, featurizer, configs, c.workers);
          return EvaluateBundle(bundle, split.val, features).micro.span.F1();
        });
    TrainConfig best = WithHyperparams(c.train_config, result.best.params);
    tuned = Json{{"mode", "global"}, {"best_f1", result.best.f}, {"config", ToJson(best)}};
    out << "global: best val micro span F1 " << result.best.f << "\n";
  } else {
    Json configs = Json::object();
    Json scores = Json::object();
    for (const EntityType &type : types) {
      const TuneResult result = run(
          "tuning_log_" + TypeSlug(type) + ".jsonl", DeriveSeed(c.seed, type),
          [&](const Hyperparams &h) {
            const TrainResult trained =
                TrainPerType(split, type, features, WithHyperparams(base.at(type), h));
            return trained.report.epochs[trained.report.best_epoch].val_f1;
          });
      configs[type] = ToJson(WithHyperparams(c.train_config, result.best.params));
      scores[type] = result.best.f;
      out << type << ": best val span F1 " << result.best.f << "\n";
    }
    tuned = Json{{"mode", "per-type"}, {"best_f1", scores}, {"configs", configs}};
  }
  WriteTextFile((fs::path(c.out) / "tuned_config.json").string(), tuned.dump(2) + "\n");
  WriteManifest(c);
  return kExitOk;
}

int CmdPredict(const RunConfig &c, std::ostream &out) {
  if (c.bundle.empty()) throw ConfigError("predict needs --bundle");
  const ModelBundle bundle = LoadBundle(c.bundle);
  const std::vector<Sentence> input =
      !c.input.empty() ? ReadCorpusFile(c.input) : LoadSplit(c).test;
  const FeatureTable features = BundleFeatures(c, bundle, input);
  std::vector<Sentence> predicted;
  predicted.reserve(input.size());
  for (const Sentence &sentence : input) {
    Sentence p = sentence;
    p.spans = PredictNested(bundle, sentence, features.at(sentence.id));
    predicted.push_back(std::move(p));
  }
  fs::create_directories(c.out);
  const std::string path = (fs::path(c.out) / "predictions.jsonl").string();
  WriteCorpusFile(path, predicted);
  WriteManifest(c);
  out << predicted.size() << " sentences labeled, written to " << path << "\n";
  return kExitOk;
}

int CmdEval(const RunConfig &c, std::ostream &out) {
  EvalReport report;
  if (!c.pred.empty()) {
    const std::vector<Sentence> gold =
        !c.gold.empty() ? ReadCorpusFile(c.gold) : LoadSplit(c).test;
    const std::vector<Sentence> pred = ReadCorpusFile(c.pred);
    std::vector<EntityType> types = c.types;
    if (types.empty()) {
      std::vector<Sentence> both(gold);
      both.insert(both.end(), pred.begin(), pred.end());
      types = CollectTypes(both);
    }
    report = EvaluatePredictions(gold, pred, types);
  } else {
    if (c.bundle.empty()) throw ConfigError("eval needs --bundle or --pred");
    const ModelBundle bundle = LoadBundle(c.bundle);
    const std::vector<Sentence> test =
        !c.gold.empty() ? ReadCorpusFile(c.gold) : LoadSplit(c).test;
    report = EvaluateBundle(bundle, test, BundleFeatures(c, bundle, test));
  }
  fs::create_directories(c.out);
  const std::string table = RenderReport(report);
  WriteTextFile((fs::path(c.out) / "eval_report.txt").string(), table);
  WriteTextFile((fs::path(c.out) / "eval_report.json").string(), ReportToJson(report));
  WriteManifest(c);
  out << table;
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err) {
  CLI::App app{"Nested named entity recognition with per-type CRF models"};
  app.name("nner");
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"stats", "Print entity and nesting statistics of a corpus"},
      {"split", "Write seeded train/val/test splits of a corpus"},
      {"train", "Train one CRF per entity type"},
      {"tune", "Tune training hyperparameters with Bayesian optimization"},
      {"predict", "Label sentences with a model bundle"},
      {"eval", "Score predictions with strict span and token metrics"},
  };
  for (const auto &[name, description] : commands) {
    AddFlags(app.add_subcommand(name, description), &flags);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    std::ostringstream help, error;
    const int code = app.exit(e, help, error);
    out << help.str();
    err << error.str();
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const RunConfig config = Resolve(command, flags);
    if (command == "stats") return CmdStats(config, out);
    if (command == "split") return CmdSplit(config, out);
    if (command == "train") return CmdTrain(config, out);
    if (command == "tune") return CmdTune(config, out);
    if (command == "predict") return CmdPredict(config, out);
    return CmdEval(config, out);
  } catch (const TrainingDivergedError &e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const MismatchError &e) {
    err << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const MissingSentenceError &e) {
    err << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const AlignmentError &e) {
    err << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace nner
