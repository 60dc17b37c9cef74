// Copyright 2026 The TCN Authors.
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

// Command-line driver: gen, index, pretrain, train, eval, predict, sweep.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tcn/context_index.h"
#include "tcn/corpus.h"
#include "tcn/embedding.h"
#include "tcn/errors.h"
#include "tcn/experiment.h"
#include "tcn/hashing.h"
#include "tcn/logging.h"
#include "tcn/metrics.h"
#include "tcn/model.h"
#include "tcn/synthgen.h"
#include "tcn/training.h"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

struct Options {
  std::string corpus;
  std::string ontology;
  std::string index;
  std::string model;
  std::string init_from;
  std::string embeddings;
  std::string out;
  std::string variant = "full";
  std::string split = "test";
  std::vector<int> tables;
  int budget = 20;
  int views = 2;
  int dim = 300;
  int epochs = 30;
  int batch_size = 8;
  int patience = 5;
  int runs = 5;
  int threads = 1;
  double gamma = 0.5;
  double lr = 1e-3;
  double mask_rate = 0.10;
  int vocab_min_count = 2;
  uint64_t seed = 0;
  bool share_inter = false;
  bool freeze_embeddings = false;
  std::vector<int> budgets = tcn::kSweepBudgets;
  std::vector<double> gammas = tcn::kSweepGammas;
  tcn::GenConfig gen;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream OpenOut(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tcn::DataError("cannot write " + path.string());
  return out;
}

fs::path OutDir(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

tcn::LabeledDataset LoadData(const Options& o) {
  if (o.corpus.empty()) throw UsageError("--corpus is required");
  fs::path onto_path = o.ontology;
  if (onto_path.empty()) {
    fs::path guess = fs::path(o.corpus).parent_path() / "ontology.txt";
    if (fs::exists(guess)) onto_path = guess;
  }
  if (onto_path.empty()) return tcn::LoadCorpus(o.corpus, nullptr);
  tcn::Ontology onto = tcn::Ontology::Load(onto_path);
  return tcn::LoadCorpus(o.corpus, &onto);
}

tcn::ContextIndex MakeIndex(const Options& o, const tcn::LabeledDataset& ds, int budget) {
  if (o.index.empty()) {
    tcn::IndexOptions opts;
    opts.budget = budget;
    return tcn::ContextIndex::Build(ds, opts);
  }
  tcn::ContextIndex index = tcn::ContextIndex::Load(o.index);
  if (!index.Matches(ds)) throw tcn::DataError(o.index + " was built for a different corpus");
  if (index.budget() != budget) {
    spdlog::warn("index {} uses budget {}, not {}", o.index, index.budget(), budget);
  }
  return index;
}

tcn::EmbeddingTable MakeEmbeddings(const Options& o, const tcn::LabeledDataset& ds) {
  if (!o.embeddings.empty()) {
    auto tokens = tcn::CorpusTokens(ds);
    std::unordered_set<std::string> keep(tokens.begin(), tokens.end());
    return tcn::EmbeddingTable::LoadText(o.embeddings, &keep);
  }
  return tcn::EmbeddingTable::Random(ds, o.dim, tcn::DeriveSeed(o.seed, {0xe3b}));
}

tcn::ModelConfig MakeModelConfig(const Options& o, const tcn::EmbeddingTable& emb) {
  tcn::ModelConfig c;
  c.dims = tcn::ModelDims::Uniform(o.dim);
  c.dims.cell = emb.dim();
  c.views = o.views;
  auto variant = tcn::ParseVariant(o.variant);
  if (!variant) throw UsageError("unknown variant '" + o.variant + "'");
  c.variant = *variant;
  c.share_inter_weights = o.share_inter;
  c.train_embeddings = !o.freeze_embeddings;
  return c;
}

tcn::TrainConfig MakeTrainConfig(const Options& o) {
  tcn::TrainConfig t;
  t.gamma = o.gamma;
  t.batch_size = o.batch_size;
  t.epochs = o.epochs;
  t.seed = o.seed;
  t.mask_rate = o.mask_rate;
  t.vocab_min_count = o.vocab_min_count;
  t.budget = o.budget;
  t.patience = o.patience;
  t.adam.lr = o.lr;
  t.Validate();
  return t;
}

// Writes the global options and those of the active subcommand in the
// format --config reads back. Unset paths are left out.
void EchoConfig(const CLI::App& app, const CLI::App& sub, const fs::path& path) {
  auto keep = [](const std::string& text) {
    std::istringstream in(text);
    std::string line, kept;
    while (std::getline(in, line)) {
      if (line.size() >= 3 && line.compare(line.size() - 3, 3, "=\"\"") == 0) continue;
      if (line.rfind("config=", 0) == 0) continue;
      kept += line + '\n';
    }
    return kept;
  };
  std::string globals;
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_configurable() && !opt->get_lnames().empty() &&
        opt->get_lnames()[0] != "help" && opt->get_lnames()[0] != "config") {
      globals += opt->get_lnames()[0] + "=" + opt->as<std::string>() + '\n';
    }
  }
  std::ofstream out = OpenOut(path);
  out << globals << '[' << sub.get_name() << "]\n" << keep(sub.config_to_str(true, false));
}

void CheckOntology(const tcn::Ontology& model, const tcn::Ontology& corpus) {
  if (!(model == corpus)) {
    throw tcn::DataError("the model's ontology differs from the corpus ontology");
  }
}

int RunGen(const Options& o) {
  fs::path dir = OutDir(o);
  tcn::GenConfig g = o.gen;
  g.seed = o.seed;
  tcn::SynthOntology onto = tcn::MusicOntology();
  tcn::GenResult r = tcn::Generate(onto, g);
  tcn::SaveCorpus(r.dataset, dir / "corpus.jsonl");
  r.dataset.ontology.Save(dir / "ontology.txt");
  std::ofstream manifest = OpenOut(dir / "manifest.json");
  tcn::WriteManifest(manifest, g, r.stats);
  tcn::WriteManifest(std::cout, g, r.stats);
  return kOk;
}

void PrintStats(std::ostream& out, const tcn::StatsReport& s) {
  out << "tables " << s.num_tables << "\nschemas " << s.num_schemas << "\navg_rows "
      << s.avg_rows << "\navg_cols " << s.avg_cols << "\navg_value_cells "
      << s.avg_value_cells << "\navg_position_cells " << s.avg_position_cells
      << "\navg_topic_cells " << s.avg_topic_cells << '\n';
}

int RunIndex(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  tcn::LabeledDataset ds = LoadData(o);
  tcn::IndexOptions opts;
  opts.budget = o.budget;
  tcn::ContextIndex index = tcn::ContextIndex::Build(ds, opts);
  if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
  index.Save(o.out);
  PrintStats(std::cout, tcn::CorpusStats(ds, index));
  return kOk;
}

int RunPretrain(const Options& o) {
  fs::path dir = OutDir(o);
  tcn::LabeledDataset ds = LoadData(o);
  tcn::EmbeddingTable emb = MakeEmbeddings(o, ds);
  tcn::IndexOptions opts;
  opts.budget = o.budget;
  tcn::PretrainResult r =
      tcn::Pretrain(ds, opts, MakeModelConfig(o, emb), emb, MakeTrainConfig(o));
  tcn::ModelMeta meta;
  meta.budget = o.budget;
  meta.gamma = o.gamma;
  meta.seed = o.seed;
  meta.ontology = ds.ontology;
  meta.cell_vocab = r.vocab.values();
  tcn::SaveModel(dir / "model.ckpt", r.model, meta);
  std::ofstream log = OpenOut(dir / "pretrain_log.csv");
  tcn::WritePretrainLog(log, r.losses);
  if (r.skipped > 0) std::cout << "skipped targets " << r.skipped << '\n';
  std::cout << "final loss " << (r.losses.empty() ? 0.0 : r.losses.back()) << '\n';
  return kOk;
}

int RunTrain(const Options& o) {
  fs::path dir = OutDir(o);
  tcn::LabeledDataset ds = LoadData(o);
  tcn::ContextIndex index = MakeIndex(o, ds, o.budget);
  tcn::TrainConfig tc = MakeTrainConfig(o);
  tcn::Split split =
      tcn::SplitDataset(ds.size(), {0.8, 0.1, 0.1}, tcn::SplitSeed(tc.seed));
  tcn::TrainResult r;
  if (!o.init_from.empty()) {
    tcn::LoadedModel init = tcn::LoadModel(o.init_from);
    tcn::ModelConfig mc = init.model.config();
    mc.variant = MakeModelConfig(o, init.model.vocabulary()).variant;
    r = tcn::Train(ds, &index, split, mc, init.model.vocabulary(), tc, &init.model);
  } else {
    tcn::EmbeddingTable emb = MakeEmbeddings(o, ds);
    r = tcn::Train(ds, &index, split, MakeModelConfig(o, emb), emb, tc);
  }
  tcn::ModelMeta meta;
  meta.budget = o.budget;
  meta.gamma = o.gamma;
  meta.seed = o.seed;
  meta.ontology = ds.ontology;
  tcn::SaveModel(dir / "model.ckpt", r.model, meta);
  std::ofstream log = OpenOut(dir / "train_log.csv");
  tcn::WriteEpochLog(log, r.log);
  std::cout << "best epoch " << r.best_epoch << '\n';
  return kOk;
}

std::vector<int> PickTables(const Options& o, const tcn::LabeledDataset& ds, uint64_t seed) {
  if (o.split == "all") {
    std::vector<int> all(ds.size());
    for (int i = 0; i < ds.size(); ++i) all[i] = i;
    return all;
  }
  tcn::Split split = tcn::SplitDataset(ds.size(), {0.8, 0.1, 0.1}, tcn::SplitSeed(seed));
  if (o.split == "train") return split.train;
  if (o.split == "valid") return split.valid;
  if (o.split == "test") return split.test;
  throw UsageError("unknown split '" + o.split + "'");
}

int RunEval(const Options& o, bool budget_given) {
  tcn::LabeledDataset ds = LoadData(o);
  if (!o.model.empty()) {
    tcn::LoadedModel m = tcn::LoadModel(o.model);
    CheckOntology(m.meta.ontology, ds.ontology);
    tcn::ContextIndex index = MakeIndex(o, ds, budget_given ? o.budget : m.meta.budget);
    std::vector<int> tables = PickTables(o, ds, m.meta.seed);
    tcn::ExperimentResult r;
    r.runs.resize(1);
    r.runs[0].test = tcn::Evaluate(m.model, ds, &index, tables, o.batch_size, m.meta.seed);
    r.mean_test = r.runs[0].test;
    tcn::PrintReport(std::cout, r);
    return kOk;
  }
  std::vector<std::string> variants;
  if (o.variant == "all") {
    variants = {"full", "intra", "nv", "ns", "np"};
  } else {
    variants = {o.variant};
  }
  tcn::EmbeddingTable emb = MakeEmbeddings(o, ds);
  tcn::ContextIndex index = MakeIndex(o, ds, o.budget);
  std::optional<tcn::LoadedModel> init;
  if (!o.init_from.empty()) init = tcn::LoadModel(o.init_from);
  for (const std::string& v : variants) {
    Options ov = o;
    ov.variant = v;
    tcn::ExperimentConfig ec;
    ec.model = MakeModelConfig(ov, init ? init->model.vocabulary() : emb);
    if (init) {
      tcn::Variant variant = ec.model.variant;
      ec.model = init->model.config();
      ec.model.variant = variant;
    }
    ec.train = MakeTrainConfig(o);
    ec.runs = o.runs;
    ec.threads = o.threads;
    tcn::ExperimentResult r =
        tcn::RunExperiment(ds, &index, init ? init->model.vocabulary() : emb, ec,
                           init ? &init->model : nullptr);
    std::cout << "variant " << v << '\n';
    tcn::PrintReport(std::cout, r);
    tcn::WriteExperimentCsv(std::cout, r);
    if (!o.out.empty()) {
      std::ofstream csv = OpenOut(OutDir(o) / ("eval_" + v + ".csv"));
      tcn::WriteExperimentCsv(csv, r);
    }
  }
  return kOk;
}

int RunPredict(const Options& o, bool budget_given) {
  if (o.model.empty()) throw UsageError("--model is required");
  tcn::LabeledDataset ds = LoadData(o);
  tcn::LoadedModel m = tcn::LoadModel(o.model);
  CheckOntology(m.meta.ontology, ds.ontology);
  tcn::ContextIndex index = MakeIndex(o, ds, budget_given ? o.budget : m.meta.budget);
  std::vector<int> tables = o.tables;
  if (tables.empty()) {
    for (int i = 0; i < ds.size(); ++i) tables.push_back(i);
  }
  for (int k : tables) {
    if (k < 0 || k >= ds.size()) throw tcn::DataError("table " + std::to_string(k) + " out of range");
  }
  auto preds = tcn::PredictTables(m.model, ds, &index, tables, o.batch_size, m.meta.seed);
  std::ofstream file;
  if (!o.out.empty()) file = OpenOut(o.out);
  std::ostream& out = o.out.empty() ? std::cout : file;
  const tcn::Ontology& onto = m.meta.ontology;
  for (const tcn::ColumnPrediction& p : preds) {
    nlohmann::ordered_json j;
    j["table"] = p.table;
    j["column"] = p.column;
    j["header"] = ds.tables[p.table].header()[p.column].raw;
    j["type"] = onto.types.at(p.type);
    j["type_prob"] = p.type_probs[p.type];
    if (p.relation >= 0) {
      j["relation"] = onto.relations.at(p.relation);
      j["relation_prob"] = p.relation_probs[p.relation];
    }
    out << j.dump() << '\n';
  }
  return kOk;
}

int RunSweep(const Options& o) {
  tcn::LabeledDataset ds = LoadData(o);
  tcn::EmbeddingTable emb = MakeEmbeddings(o, ds);
  tcn::ExperimentConfig ec;
  ec.model = MakeModelConfig(o, emb);
  ec.train = MakeTrainConfig(o);
  ec.runs = o.runs;
  ec.threads = o.threads;
  tcn::IndexOptions opts;
  opts.budget = o.budget;
  auto points = tcn::Sweep(ds, opts, emb, ec, o.budgets, o.gammas);
  tcn::WriteSweepCsv(std::cout, points);
  if (!o.out.empty()) {
    std::ofstream csv = OpenOut(OutDir(o) / "sweep.csv");
    tcn::WriteSweepCsv(csv, points);
  }
  return kOk;
}

void AddData(CLI::App* cmd, Options& o) {
  cmd->add_option("--corpus", o.corpus, "Corpus file (JSON lines)")->check(CLI::ExistingFile);
  cmd->add_option("--ontology", o.ontology,
                  "Ontology file; defaults to ontology.txt next to the corpus")
      ->check(CLI::ExistingFile);
}

void AddModel(CLI::App* cmd, Options& o) {
  cmd->add_option("--dim", o.dim, "Width of every embedding and hidden layer")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--views", o.views, "Attention views in the inter-table aggregators")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--variant", o.variant, "Aggregators: full, intra, nv, ns or np")
      ->capture_default_str();
  cmd->add_flag("--share-inter-weights", o.share_inter,
                "One attention/projection pair for all neighbor kinds");
  cmd->add_flag("--freeze-embeddings", o.freeze_embeddings, "Keep token vectors fixed");
  cmd->add_option("--embeddings", o.embeddings,
                  "Text token vectors (GloVe format); random vectors otherwise")
      ->check(CLI::ExistingFile);
}

void AddTraining(CLI::App* cmd, Options& o) {
  cmd->add_option("--gamma", o.gamma, "Weight of the type loss against the relation loss")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch-size", o.batch_size, "Tables per mini-batch")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--patience", o.patience,
                  "Epochs without validation gain before stopping (0 = never)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--mask-rate", o.mask_rate, "Fraction of data cells masked for pre-training")
      ->capture_default_str();
  cmd->add_option("--vocab-min-count", o.vocab_min_count,
                  "Cells a value needs to become a pre-training target")
      ->capture_default_str()->check(CLI::PositiveNumber);
}

void AddBudget(CLI::App* cmd, Options& o) {
  cmd->add_option("--budget", o.budget, "Neighbors sampled per cell and kind")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--index", o.index, "Prebuilt context index")->check(CLI::ExistingFile);
}

void AddRuns(CLI::App* cmd, Options& o) {
  cmd->add_option("--runs", o.runs, "Independent runs to average")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--init-from", o.init_from, "Pre-trained model for the network body")
      ->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  tcn::InitLogging();
  Options o;
  CLI::App app{"Table convolution network: column type and relation prediction"};
  app.set_config("--config", "", "INI/TOML file with option values; flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "Root seed for all randomness")->capture_default_str();
  app.add_option("--threads", o.threads, "Concurrent training runs in eval and sweep")->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled corpus");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--schemas", o.gen.num_schemas, "Number of schemas")->capture_default_str();
  gen->add_option("--tables-per-schema", o.gen.tables_per_schema, "Tables per schema")
      ->capture_default_str();
  gen->add_option("--min-rows", o.gen.min_rows, "Fewest data rows")->capture_default_str();
  gen->add_option("--max-rows", o.gen.max_rows, "Most data rows")->capture_default_str();
  gen->add_option("--overlap", o.gen.overlap_rate, "Entity reuse probability")
      ->capture_default_str();
  gen->add_option("--topic-rate", o.gen.topic_reference_rate,
                  "Probability a topic is planted in another table")->capture_default_str();
  gen->add_option("--noise", o.gen.noise_rate, "Cell corruption probability")
      ->capture_default_str();
  gen->add_option("--ambiguity", o.gen.ambiguity_rate,
                  "Probability an entity token is shared across types")->capture_default_str();
  gen->add_option("--topic-ambiguity", o.gen.topic_ambiguity_rate,
                  "Probability a topic token is shared across types")->capture_default_str();
  gen->add_option("--entities-per-type", o.gen.entities_per_type, "Entity pool size per type")
      ->capture_default_str();

  auto* index = app.add_subcommand("index", "Build and save the context index");
  AddData(index, o);
  index->add_option("--budget", o.budget, "Neighbors sampled per cell and kind")
      ->capture_default_str()->check(CLI::PositiveNumber);
  index->add_option("--out", o.out, "Index file")->required();

  auto* pretrain = app.add_subcommand("pretrain", "Masked cell recovery pre-training");
  AddData(pretrain, o);
  AddModel(pretrain, o);
  AddTraining(pretrain, o);
  pretrain->add_option("--budget", o.budget, "Neighbors sampled per cell and kind")
      ->capture_default_str()->check(CLI::PositiveNumber);
  pretrain->add_option("--out", o.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train column type and relation prediction");
  AddData(train, o);
  AddModel(train, o);
  AddTraining(train, o);
  AddBudget(train, o);
  train->add_option("--init-from", o.init_from, "Pre-trained model for the network body")
      ->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Output directory")->required();

  auto* eval = app.add_subcommand(
      "eval", "Evaluate a model, or average fresh runs of one or all variants");
  AddData(eval, o);
  AddModel(eval, o);
  AddTraining(eval, o);
  AddBudget(eval, o);
  AddRuns(eval, o);
  eval->add_option("--model", o.model, "Trained model; omit to train --runs models")
      ->check(CLI::ExistingFile);
  eval->add_option("--split", o.split, "Tables to score with --model: train, valid, test, all")
      ->capture_default_str();
  eval->add_option("--out", o.out, "Directory for CSV reports");

  auto* predict = app.add_subcommand("predict", "Per-column type and relation predictions");
  AddData(predict, o);
  AddBudget(predict, o);
  predict->add_option("--model", o.model, "Trained model")->required()->check(CLI::ExistingFile);
  predict->add_option("--tables", o.tables, "Table ids; all tables when omitted");
  predict->add_option("--batch-size", o.batch_size, "Tables per forward pass")
      ->capture_default_str()->check(CLI::PositiveNumber);
  predict->add_option("--out", o.out, "Output file (JSON lines); stdout when omitted");

  auto* sweep = app.add_subcommand("sweep", "Budget and gamma sensitivity sweep");
  AddData(sweep, o);
  AddModel(sweep, o);
  AddTraining(sweep, o);
  sweep->add_option("--budget", o.budget, "Budget held fixed while gamma varies")
      ->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--runs", o.runs, "Independent runs per point")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sweep->add_option("--budgets", o.budgets, "Budget grid")->delimiter(',')->capture_default_str();
  sweep->add_option("--gammas", o.gammas, "Gamma grid")->delimiter(',')->capture_default_str();
  sweep->add_option("--out", o.out, "Directory for sweep.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (!o.out.empty()) {
      const bool out_is_dir = *gen || *pretrain || *train || *eval || *sweep;
      fs::path path = out_is_dir ? fs::path(o.out) / "config.ini" : fs::path(o.out + ".config.ini");
      EchoConfig(app, *app.get_subcommands().front(), path);
    }
    if (*gen) return RunGen(o);
    if (*index) return RunIndex(o);
    if (*pretrain) return RunPretrain(o);
    if (*train) return RunTrain(o);
    if (*eval) return RunEval(o, eval->count("--budget") > 0);
    if (*predict) return RunPredict(o, predict->count("--budget") > 0);
    if (*sweep) return RunSweep(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const tcn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const tcn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
