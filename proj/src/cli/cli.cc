// src/cli/cli.cc

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "cefa/cli/cli.h"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "cefa/datagen/dataset.h"
#include "cefa/nn/checkpoint.h"
#include "cefa/trainer/trainer.h"
#include "json.hpp"

namespace cefa::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Graph;
using nn::Matrix;

std::string NowIso() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string HexFingerprint(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// Default output root: $CEFA_OUT when set, else ./out.
std::string OutputRoot() {
  const char* env = std::getenv("CEFA_OUT");
  return (env != nullptr && *env != '\0') ? env : "out";
}

void EnsureParentDir(const fs::path& file) {
  fs::path parent = file.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// Every command leaves one run_record.json in its output directory: the
// config it ran with, the seed/fingerprint pair, the reconstructed command
// line, timestamps, and the artifacts it produced.
struct RunRecord {
  std::string command;
  std::string subcommand;
  std::uint64_t seed = 0;
  Config config;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> artifacts;
  std::string status = "ok";
  json failures = json::array();
  json extra;  // subcommand-specific results worth keeping with the record

  void write(const fs::path& dir_in) const {
    fs::path dir = dir_in.empty() ? fs::path(".") : dir_in;
    fs::create_directories(dir);
    json j;
    j["command"] = command;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["config"] = config.values();
    j["config_fingerprint"] = HexFingerprint(config.architecture_fingerprint());
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["artifacts"] = artifacts;
    j["status"] = status;
    if (!failures.empty()) j["failures"] = failures;
    if (!extra.empty()) j.update(extra);
    std::ofstream out(dir / "run_record.json");
    if (!out)
      throw datagen::IoError("cannot write run record in " + dir.string());
    out << j.dump(2) << "\n";
  }
};

std::string JoinArgv(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

// Splits a category count into a (verbs, objects) grid: the largest divisor
// pair closest to square. The renderer caps objects at 5 glyphs but verbs at
// 6 layout slots, so the larger factor goes to verbs. Primes give N x 1.
std::pair<int, int> FactorCategories(int classes) {
  if (classes < 1) throw ConfigError("--classes must be at least 1");
  int small = 1;
  for (int d = 1; d * d <= classes; ++d)
    if (classes % d == 0) small = d;
  return {classes / small, small};
}

// Shared by train and ablate: the dataset a run trains on, either loaded
// from a gen-data directory or synthesized from the config. The synthesis
// seed depends only on the run seed so that every preset in a matrix sees
// the identical dataset for a given seed (paired comparisons).
datagen::BuiltDataset BuildOrLoadDataset(const Config& cfg,
                                         const std::string& data_dir,
                                         std::uint64_t seed) {
  if (!data_dir.empty())
    return datagen::IngestExternal(data_dir, datagen::IngestFormat::internal,
                                   cfg.get_int("data.rare_threshold"));
  datagen::BuiltDataset ds =
      datagen::BuildLongtailDataset(cfg, HashCombine(seed, 0xda7a5e7ull));
  int per_rare = cfg.get_int("data.per_rare");
  if (per_rare > 0)
    datagen::GenerateSupplement(cfg, ds, per_rare,
                                HashCombine(seed, 0x5a9917ull));
  return ds;
}

// Reconstructs the training-time module composition so the checkpoint's
// parameter list matches exactly, then loads the weights.
std::unique_ptr<trainer::Trainer> LoadTrainedModel(
    const Config& cfg, const std::string& checkpoint) {
  auto tr = std::make_unique<trainer::Trainer>(cfg, cfg.get_int("train.seed"));
  nn::LoadCheckpoint(checkpoint, tr->all_params(),
                     cfg.architecture_fingerprint());
  return tr;
}

// Config for eval/diagnose: an explicit --config wins; otherwise the
// snapshot written next to the checkpoint by train.
Config ConfigForCheckpoint(const std::string& config_file,
                           const std::string& checkpoint) {
  Config cfg;
  if (!config_file.empty()) {
    cfg.load_file(config_file);
    return cfg;
  }
  fs::path snapshot = fs::path(checkpoint).parent_path() / "config.snapshot";
  if (!fs::exists(snapshot))
    throw ConfigError("no config.snapshot next to " + checkpoint +
                      "; pass --config");
  cfg.load_file(snapshot.string());
  return cfg;
}

void WriteConfigSnapshot(const Config& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.snapshot");
  if (!out)
    throw datagen::IoError("cannot write config snapshot in " + dir.string());
  out << cfg.to_string();
}

json ReportJson(const eval::EvalReport& r) {
  json j;
  j["map_full"] = r.map_full;
  j["map_rare"] = r.map_rare;
  j["map_nonrare"] = r.map_nonrare;
  j["domain_probe_acc"] = r.domain_probe_acc;
  json per_cat = json::object(), counts = json::object();
  for (const auto& [cat, ap] : r.per_category_ap)
    per_cat[std::to_string(cat)] = ap;
  for (const auto& [cat, n] : r.gt_counts) counts[std::to_string(cat)] = n;
  j["per_category_ap"] = per_cat;
  j["gt_counts"] = counts;
  j["categories_without_gt"] = r.categories_without_gt;
  return j;
}

// ---------------------------------------------------------------------------
// Subcommand handlers. Each returns the process exit code.

struct CommonArgs {
  std::string config_file;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

Config MakeConfig(const CommonArgs& a) {
  Config cfg;
  if (!a.config_file.empty()) cfg.load_file(a.config_file);
  if (!a.preset.empty()) cfg.apply_preset(a.preset);
  if (a.seed_given) cfg.set("train.seed", std::to_string(a.seed));
  return cfg;
}

int RunGenData(const CommonArgs& common, int classes, int rare_threshold,
               int per_rare, const std::string& command) {
  RunRecord rec;
  rec.command = command;
  rec.subcommand = "gen-data";
  rec.started_at = NowIso();

  Config cfg = MakeConfig(common);
  if (classes > 0) {
    auto [verbs, objects] = FactorCategories(classes);
    cfg.set("data.num_verbs", std::to_string(verbs));
    cfg.set("data.num_objects", std::to_string(objects));
  }
  if (rare_threshold >= 0)
    cfg.set("data.rare_threshold", std::to_string(rare_threshold));
  if (per_rare >= 0) cfg.set("data.per_rare", std::to_string(per_rare));
  std::uint64_t seed =
      common.seed_given ? common.seed : cfg.get_int("train.seed");
  rec.seed = seed;
  rec.config = cfg;

  fs::path out = common.out.empty() ? fs::path(OutputRoot()) / "gen-data"
                                    : fs::path(common.out);
  datagen::BuiltDataset ds = BuildOrLoadDataset(cfg, "", seed);
  datagen::SaveDataset(ds, out.string());

  rec.artifacts = {"images", "annotations.json", "manifest.json"};
  rec.finished_at = NowIso();
  rec.write(out);

  int rare = 0;
  for (const auto& [cat, n] : ds.manifest.category_counts)
    if (n < ds.manifest.rare_threshold) ++rare;
  std::cout << "wrote " << ds.samples.size() << " samples ("
            << ds.manifest.category_counts.size() << " categories, " << rare
            << " rare) to " << out.string() << "\n";
  return 0;
}

int RunTrain(const CommonArgs& common, const std::string& data_dir,
             const std::string& command) {
  RunRecord rec;
  rec.command = command;
  rec.subcommand = "train";
  rec.started_at = NowIso();

  Config cfg = MakeConfig(common);
  std::uint64_t seed = cfg.get_int("train.seed");
  rec.seed = seed;
  rec.config = cfg;

  fs::path out = common.out.empty() ? fs::path(OutputRoot()) / "train"
                                    : fs::path(common.out);
  datagen::BuiltDataset ds = BuildOrLoadDataset(cfg, data_dir, seed);
  WriteConfigSnapshot(cfg, out);
  trainer::ExperimentArtifacts a =
      trainer::RunExperiment(cfg, ds, out.string());

  rec.artifacts = {"config.snapshot",
                   fs::path(a.metrics_path).filename().string(),
                   fs::path(a.checkpoint_path).filename().string()};
  rec.finished_at = NowIso();
  rec.write(out);

  std::cout << "map_full=" << a.final_report.map_full
            << " map_rare=" << a.final_report.map_rare
            << " map_nonrare=" << a.final_report.map_nonrare
            << " domain_probe_acc=" << a.final_report.domain_probe_acc << "\n"
            << "artifacts in " << out.string() << "\n";
  return 0;
}

int RunEval(const CommonArgs& common, const std::string& checkpoint,
            const std::string& data_dir, const std::string& command) {
  RunRecord rec;
  rec.command = command;
  rec.subcommand = "eval";
  rec.started_at = NowIso();

  Config cfg = ConfigForCheckpoint(common.config_file, checkpoint);
  rec.seed = cfg.get_int("train.seed");
  rec.config = cfg;

  fs::path out = common.out.empty()
                     ? fs::path(OutputRoot()) / "eval" / "report.json"
                     : fs::path(common.out);
  EnsureParentDir(out);

  datagen::BuiltDataset ds = datagen::IngestExternal(
      data_dir, datagen::IngestFormat::internal,
      cfg.get_int("data.rare_threshold"));
  std::unique_ptr<trainer::Trainer> tr = LoadTrainedModel(cfg, checkpoint);
  eval::EvalReport r = trainer::EvaluateDetector(tr->detector(), ds, cfg);

  std::ofstream report(out);
  if (!report) throw datagen::IoError("cannot write report: " + out.string());
  report << ReportJson(r).dump(2) << "\n";

  rec.artifacts = {out.filename().string()};
  rec.finished_at = NowIso();
  rec.write(out.parent_path());

  std::cout << "map_full=" << r.map_full << " map_rare=" << r.map_rare
            << " map_nonrare=" << r.map_nonrare << "\n"
            << "report: " << out.string() << "\n";
  return 0;
}

int RunDiagnose(const CommonArgs& common, const std::string& checkpoint,
                const std::string& data_dir, const std::string& command) {
  RunRecord rec;
  rec.command = command;
  rec.subcommand = "diagnose";
  rec.started_at = NowIso();

  Config cfg = ConfigForCheckpoint(common.config_file, checkpoint);
  std::uint64_t seed =
      common.seed_given ? common.seed : cfg.get_int("train.seed");
  rec.seed = seed;
  rec.config = cfg;

  fs::path out = common.out.empty()
                     ? fs::path(OutputRoot()) / "diagnose" / "embeddings.tsv"
                     : fs::path(common.out);
  EnsureParentDir(out);

  datagen::BuiltDataset ds = datagen::IngestExternal(
      data_dir, datagen::IngestFormat::internal,
      cfg.get_int("data.rare_threshold"));
  std::unique_ptr<trainer::Trainer> tr = LoadTrainedModel(cfg, checkpoint);

  // Pooled encoder feature per training image, labeled by domain, capped
  // per domain so the export stays plot-sized. Order follows the manifest,
  // so the bytes are reproducible.
  const int kMaxPerDomain = 100;
  std::vector<Matrix> rows;
  std::vector<std::string> labels;
  int n_src = 0, n_gen = 0;
  for (const std::string& id : ds.manifest.train_ids) {
    const datagen::Sample& s = ds.by_id(id);
    bool gen = s.domain == datagen::Domain::generated;
    int& count = gen ? n_gen : n_src;
    if (count >= kMaxPerDomain) continue;
    ++count;
    Graph g(false);
    detector::FeatureBundle fb = tr->detector().forward(g, s.image);
    rows.push_back(g.value(fb.x_e).colwise().mean());
    labels.push_back(gen ? "generated" : "original");
  }
  if (rows.empty()) throw datagen::ValidationError("dataset has no train split");
  Matrix features(static_cast<int>(rows.size()), rows[0].cols());
  for (int i = 0; i < features.rows(); ++i) features.row(i) = rows[i];
  eval::ExportEmbeddings(features, labels, out.string());

  double probe = trainer::MeasureDomainProbe(tr->detector(), ds, cfg,
                                             HashCombine(seed, 0xd1a9ull));

  rec.artifacts = {out.filename().string()};
  rec.finished_at = NowIso();
  rec.extra["domain_probe_acc"] = probe;
  rec.extra["num_original"] = n_src;
  rec.extra["num_generated"] = n_gen;
  rec.write(out.parent_path());

  std::cout << "embeddings: " << out.string() << " (" << n_src
            << " original, " << n_gen << " generated)\n"
            << "domain_probe_acc=" << probe
            << (probe < 0 ? " (needs >= 10 train images per domain)" : "")
            << "\n";
  return 0;
}

int RunAblate(const CommonArgs& common, const std::string& matrix_name,
              const std::string& seeds_spec, const std::string& data_dir,
              const std::string& command) {
  RunRecord rec;
  rec.command = command;
  rec.subcommand = "ablate";
  rec.started_at = NowIso();

  std::vector<MatrixCell> cells = AblationMatrix(matrix_name);
  std::vector<std::uint64_t> seeds = ParseSeeds(seeds_spec);
  fs::path out = common.out.empty()
                     ? fs::path(OutputRoot()) / ("ablate_" + matrix_name)
                     : fs::path(common.out);
  fs::create_directories(out);

  Config base = MakeConfig(common);
  rec.config = base;
  rec.seed = seeds.front();

  std::ostringstream csv;
  csv << "cell,preset,seeds_ok,seeds_failed,map_rare_mean,map_rare_std,"
         "map_full_mean,map_full_std,domain_probe_acc_mean,status\n";
  int cells_ok = 0;
  for (const MatrixCell& cell : cells) {
    std::vector<double> rare, full, probe;
    int failed = 0;
    for (std::uint64_t seed : seeds) {
      Config cfg = base;
      if (!cell.preset.empty()) cfg.apply_preset(cell.preset);
      for (const auto& [k, v] : cell.overrides) cfg.set(k, v);
      cfg.set("train.seed", std::to_string(seed));
      fs::path run_dir = out / cell.name / ("seed_" + std::to_string(seed));
      try {
        datagen::BuiltDataset ds = BuildOrLoadDataset(cfg, data_dir, seed);
        WriteConfigSnapshot(cfg, run_dir);
        trainer::ExperimentArtifacts a =
            trainer::RunExperiment(cfg, ds, run_dir.string());
        rare.push_back(a.final_report.map_rare);
        full.push_back(a.final_report.map_full);
        probe.push_back(a.final_report.domain_probe_acc);
        std::cout << cell.name << " seed " << seed
                  << ": map_rare=" << a.final_report.map_rare
                  << " map_full=" << a.final_report.map_full << "\n";
      } catch (const std::exception& e) {
        ++failed;
        json f;
        f["cell"] = cell.name;
        f["seed"] = seed;
        f["error"] = e.what();
        rec.failures.push_back(f);
        std::cerr << cell.name << " seed " << seed << " failed: " << e.what()
                  << "\n";
      }
    }
    CellStats st = Aggregate(rare, full, probe);
    std::string status =
        st.n == 0 ? "missing" : (failed > 0 ? "partial" : "ok");
    csv << cell.name << ',' << cell.preset << ',' << st.n << ',' << failed
        << ',';
    if (st.n > 0)
      csv << st.mean_rare << ',' << st.std_rare << ',' << st.mean_full << ','
          << st.std_full << ',' << st.mean_probe << ',';
    else
      csv << ",,,,,";
    csv << status << "\n";
    if (st.n > 0) ++cells_ok;
  }

  std::ofstream summary(out / "summary.csv");
  if (!summary)
    throw datagen::IoError("cannot write summary in " + out.string());
  summary << csv.str();

  rec.artifacts = {"summary.csv"};
  rec.status = rec.failures.empty() ? "ok"
               : cells_ok > 0       ? "partial"
                                    : "failed";
  rec.finished_at = NowIso();
  rec.write(out);

  std::cout << "summary: " << (out / "summary.csv").string() << "\n"
            << csv.str();
  // Every cell failing is a runtime failure; partial results still count
  // as a usable summary.
  return cells_ok > 0 ? 0 : 2;
}

}  // namespace

std::vector<std::uint64_t> ParseSeeds(const std::string& spec) {
  if (spec.empty()) throw ConfigError("empty seed list");
  auto parse_one = [&](const std::string& tok) -> std::uint64_t {
    size_t pos = 0;
    unsigned long long v;
    try {
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad seed value '" + tok + "'");
    }
    if (pos != tok.size()) throw ConfigError("bad seed value '" + tok + "'");
    return v;
  };
  std::vector<std::uint64_t> seeds;
  if (spec.find(',') == std::string::npos) {
    std::uint64_t count = parse_one(spec);
    if (count == 0) throw ConfigError("empty seed list");
    for (std::uint64_t s = 0; s < count; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) seeds.push_back(parse_one(tok));
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

std::vector<MatrixCell> AblationMatrix(const std::string& name) {
  if (name == "table3")
    return {{"baseline", "baseline", {}},
            {"instance_only", "instance_only", {}},
            {"context_only", "context_only", {}},
            {"full_cefa", "full_cefa", {}}};
  if (name == "table4")
    return {{"full_cefa", "full_cefa", {}},
            {"context_non_condition", "context_non_condition", {}},
            {"controller_self_attention", "controller_self_attention", {}},
            {"controller_mlp", "controller_mlp", {}},
            {"aggregator_transformer", "aggregator_transformer", {}},
            {"graph_fully_connected", "graph_fully_connected", {}},
            {"graph_directed", "graph_directed", {}}};
  if (name == "fig4") {
    std::vector<MatrixCell> cells;
    for (int n : {10, 25, 50, 100, 200})
      cells.push_back({"per_rare_" + std::to_string(n),
                       "full_cefa",
                       {{"data.per_rare", std::to_string(n)}}});
    return cells;
  }
  throw ConfigError("unknown ablation matrix '" + name +
                    "'; available: table3, table4, fig4");
}

CellStats Aggregate(const std::vector<double>& map_rare,
                    const std::vector<double>& map_full,
                    const std::vector<double>& probe_acc) {
  CellStats st;
  st.n = static_cast<int>(map_rare.size());
  if (st.n == 0) return st;
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto sample_std = [&](const std::vector<double>& v, double m) {
    if (v.size() < 2) return 0.0;
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  st.mean_rare = mean(map_rare);
  st.std_rare = sample_std(map_rare, st.mean_rare);
  st.mean_full = mean(map_full);
  st.std_full = sample_std(map_full, st.mean_full);
  st.mean_probe = mean(probe_acc);
  return st;
}

int RunCli(int argc, const char* const* argv) {
  CLI::App app{"Domain-adaptive long-tail HOI detection toolkit"};
  app.require_subcommand(0, 1);

  CommonArgs common;
  std::string data_dir, checkpoint, matrix, seeds_spec = "1";
  int classes = 0, rare_threshold = -1, per_rare = -1;

  auto add_common = [&](CLI::App* cmd, bool with_out = true) {
    cmd->add_option("--config", common.config_file,
                    "Flat key = value config file");
    if (with_out) cmd->add_option("--out", common.out, "Output directory");
    cmd->add_option("--seed", common.seed, "Random seed")
        ->each([&](const std::string&) { common.seed_given = true; });
  };

  CLI::App* gen = app.add_subcommand(
      "gen-data", "Render the synthetic long-tail two-domain dataset");
  add_common(gen);
  gen->add_option("--classes", classes,
                  "Total triplet categories (factored into a verb/object grid)");
  gen->add_option("--rare-threshold", rare_threshold,
                  "Categories with fewer training instances are rare");
  gen->add_option("--per-rare", per_rare,
                  "Generated images per rare category (0 disables)");

  CLI::App* train = app.add_subcommand(
      "train", "Pretrain, adapt, and evaluate one model");
  add_common(train);
  train->add_option("--preset", common.preset,
                    "Component preset (see config presets)");
  train->add_option("--data", data_dir,
                    "Dataset directory from gen-data (default: synthesize)");

  CLI::App* ev = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  ev->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  ev->add_option("--data", data_dir, "Dataset directory")->required();
  add_common(ev, false);
  ev->add_option("--out", common.out, "Report JSON path");

  CLI::App* diag = app.add_subcommand(
      "diagnose", "Export embeddings and measure the domain probe");
  diag->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  diag->add_option("--data", data_dir, "Dataset directory")->required();
  add_common(diag, false);
  diag->add_option("--out", common.out, "Embeddings TSV path");

  CLI::App* abl = app.add_subcommand(
      "ablate", "Run a preset matrix across seeds and summarize");
  abl->add_option("--preset", matrix, "Matrix name: table3, table4, fig4")
      ->required();
  abl->add_option("--seeds", seeds_spec,
                  "Seed count (\"5\" = seeds 0..4) or explicit list \"3,7\"");
  abl->add_option("--data", data_dir,
                  "Dataset directory from gen-data (default: synthesize)");
  add_common(abl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (dynamic_cast<const CLI::ExtrasError*>(&e) != nullptr)
      std::cerr << "available subcommands: gen-data, train, eval, diagnose, "
                   "ablate\n";
    return 1;
  }

  std::string command = JoinArgv(argc, argv);
  try {
    if (app.got_subcommand(gen))
      return RunGenData(common, classes, rare_threshold, per_rare, command);
    if (app.got_subcommand(train)) return RunTrain(common, data_dir, command);
    if (app.got_subcommand(ev))
      return RunEval(common, checkpoint, data_dir, command);
    if (app.got_subcommand(diag))
      return RunDiagnose(common, checkpoint, data_dir, command);
    if (app.got_subcommand(abl))
      return RunAblate(common, matrix, seeds_spec, data_dir, command);
    std::cerr << app.help()
              << "\nexpected a subcommand: gen-data, train, eval, diagnose, "
                 "ablate\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const datagen::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const nn::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cefa::cli
