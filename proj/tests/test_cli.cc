// tests/test_cli.cc

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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cefa/cli/cli.h"
#include "doctest.h"
#include "json.hpp"

namespace cefa::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Runs the CLI in-process with captured stdout/stderr.
struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult CallCli(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"cefa"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  int code = RunCli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

fs::path TestRoot() {
  fs::path root = fs::temp_directory_path() / "cefa_cli_test";
  return root;
}

std::string TinyConfigFile() {
  fs::path path = TestRoot() / "tiny.conf";
  fs::create_directories(TestRoot());
  std::ofstream out(path);
  out << "preset = full_cefa\n"
         "data.image_size = 32\n"
         "data.num_verbs = 3\n"
         "data.num_objects = 2\n"
         "data.head_max = 4\n"
         "data.tail_classes = 2\n"
         "data.tail_count = 1\n"
         "data.rare_threshold = 3\n"
         "data.test_per_category = 1\n"
         "data.per_rare = 4\n"
         "model.dim = 16\n"
         "model.stem_channels = 8\n"
         "model.encoder_layers = 1\n"
         "model.decoder_layers = 1\n"
         "model.heads = 2\n"
         "model.ffn_dim = 32\n"
         "model.num_queries = 4\n"
         "align.k = 2\n"
         "align.disc_hidden = 8\n"
         "ctx.decoder_layers = 1\n"
         "train.pretrain_epochs = 1\n"
         "train.epochs = 1\n"
         "train.max_steps = 2\n"
         "train.batch_src = 3\n"
         "train.batch_gen = 3\n"
         "train.pseudo_threshold = 0.0\n";
  return path.string();
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST_CASE("seed specifications") {
  CHECK(ParseSeeds("5") == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(ParseSeeds("1") == std::vector<std::uint64_t>{0});
  CHECK(ParseSeeds("3,7,11") == std::vector<std::uint64_t>{3, 7, 11});
  CHECK(ParseSeeds("4,") == std::vector<std::uint64_t>{4});
  CHECK_THROWS_AS(ParseSeeds(""), ConfigError);
  CHECK_THROWS_AS(ParseSeeds("0"), ConfigError);
  CHECK_THROWS_AS(ParseSeeds("five"), ConfigError);
  CHECK_THROWS_AS(ParseSeeds("3,x"), ConfigError);
}

TEST_CASE("ablation matrices") {
  SUBCASE("component grid rows in table order") {
    std::vector<MatrixCell> cells = AblationMatrix("table3");
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].preset == "baseline");
    CHECK(cells[1].preset == "instance_only");
    CHECK(cells[2].preset == "context_only");
    CHECK(cells[3].preset == "full_cefa");
  }
  SUBCASE("variant grid covers every variant preset once") {
    std::vector<MatrixCell> cells = AblationMatrix("table4");
    CHECK(cells.size() >= 5);
    for (const auto& cell : cells) {
      Config c;
      c.apply_preset(cell.preset);  // must not throw
    }
  }
  SUBCASE("generated-count sweep brackets the saturation point") {
    std::vector<MatrixCell> cells = AblationMatrix("fig4");
    REQUIRE(cells.size() == 5);
    std::vector<std::string> want = {"10", "25", "50", "100", "200"};
    for (size_t i = 0; i < cells.size(); ++i) {
      CHECK(cells[i].preset == "full_cefa");
      CHECK(cells[i].overrides.at("data.per_rare") == want[i]);
    }
  }
  SUBCASE("unknown matrix lists the options") {
    CHECK_THROWS_WITH_AS(AblationMatrix("table9"),
                         doctest::Contains("table3"), ConfigError);
  }
}

TEST_CASE("seed aggregation") {
  CellStats st = Aggregate({1.0, 2.0, 3.0}, {4.0, 4.0, 4.0}, {0.5, 0.7, 0.9});
  CHECK(st.n == 3);
  CHECK(st.mean_rare == doctest::Approx(2.0));
  CHECK(st.std_rare == doctest::Approx(1.0));  // sample std of {1,2,3}
  CHECK(st.mean_full == doctest::Approx(4.0));
  CHECK(st.std_full == doctest::Approx(0.0));
  CHECK(st.mean_probe == doctest::Approx(0.7));
  CHECK(Aggregate({}, {}, {}).n == 0);
  CHECK(Aggregate({2.5}, {2.5}, {1.0}).std_rare == 0.0);
}

TEST_CASE("argument handling exit codes") {
  CHECK(CallCli({"--help"}).code == 0);
  CliResult unknown = CallCli({"frobnicate"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("gen-data") != std::string::npos);
  CHECK(unknown.err.find("ablate") != std::string::npos);
  CHECK(CallCli({}).code == 1);
  // Required flags missing.
  CHECK(CallCli({"eval", "--data", "somewhere"}).code == 1);
  CHECK(CallCli({"diagnose", "--checkpoint", "x"}).code == 1);
  CHECK(CallCli({"ablate"}).code == 1);
  // Unknown flag.
  CHECK(CallCli({"train", "--frobnicate", "1"}).code == 1);
  // Unknown preset and bad config values are validation errors.
  CHECK(CallCli({"train", "--preset", "not_a_preset"}).code == 1);
  CHECK(CallCli({"ablate", "--preset", "table9"}).code == 1);
  CHECK(CallCli({"ablate", "--preset", "table3", "--seeds", ""}).code == 1);
  // Missing files are reported, not crashed on.
  CHECK(CallCli({"train", "--config", "/nonexistent/x.conf"}).code == 1);
  CHECK(CallCli({"eval", "--checkpoint", "/nonexistent/m.ckpt", "--data",
                 "/nonexistent/d"})
            .code == 1);
}

TEST_CASE("end-to-end command pipeline") {
  fs::path root = TestRoot();
  fs::remove_all(root);
  std::string conf = TinyConfigFile();
  fs::path data = root / "data";
  fs::path run = root / "run";

  CliResult gen = CallCli({"gen-data", "--config", conf, "--seed", "3",
                           "--out", data.string()});
  REQUIRE(gen.code == 0);
  CHECK(fs::exists(data / "manifest.json"));
  CHECK(fs::exists(data / "annotations.json"));
  CHECK(fs::exists(data / "images"));
  CHECK(fs::exists(data / "run_record.json"));

  CliResult train = CallCli({"train", "--config", conf, "--seed", "3",
                             "--data", data.string(), "--out", run.string()});
  REQUIRE(train.code == 0);
  CHECK(fs::exists(run / "model.ckpt"));
  CHECK(fs::exists(run / "metrics.jsonl"));
  CHECK(fs::exists(run / "config.snapshot"));

  SUBCASE("run records carry the reproducibility bookkeeping") {
    json rec = json::parse(Slurp(run / "run_record.json"));
    for (const char* key : {"command", "subcommand", "seed", "config",
                            "config_fingerprint", "started_at", "finished_at",
                            "artifacts", "status"})
      CHECK(rec.contains(key));
    CHECK(rec["subcommand"] == "train");
    CHECK(rec["seed"] == 3);
    CHECK(rec["status"] == "ok");
    CHECK(rec["config"]["preset"] == "full_cefa");
    // The artifacts it names exist.
    for (const auto& a : rec["artifacts"])
      CHECK(fs::exists(run / a.get<std::string>()));
  }
  SUBCASE("snapshot round-trips through the config loader") {
    Config reloaded;
    reloaded.load_file((run / "config.snapshot").string());
    CHECK(reloaded.get("preset") == "full_cefa");
    CHECK(reloaded.get_bool("align.enabled") == true);
    CHECK(reloaded.get_int("train.max_steps") == 2);
    CHECK(reloaded.get_int("train.seed") == 3);
  }
  SUBCASE("identical command lines reproduce the metrics byte for byte") {
    fs::path run2 = root / "run2";
    CliResult again =
        CallCli({"train", "--config", conf, "--seed", "3", "--data",
                 data.string(), "--out", run2.string()});
    REQUIRE(again.code == 0);
    CHECK(Slurp(run2 / "metrics.jsonl") == Slurp(run / "metrics.jsonl"));
  }
  SUBCASE("eval consumes the checkpoint via its snapshot") {
    fs::path report = root / "report.json";
    CliResult ev =
        CallCli({"eval", "--checkpoint", (run / "model.ckpt").string(),
                 "--data", data.string(), "--out", report.string()});
    REQUIRE(ev.code == 0);
    json r = json::parse(Slurp(report));
    for (const char* key :
         {"map_full", "map_rare", "map_nonrare", "per_category_ap",
          "gt_counts", "categories_without_gt", "domain_probe_acc"})
      CHECK(r.contains(key));
    CHECK(r["map_full"].get<double>() >= 0.0);
    CHECK(r["map_full"].get<double>() <= 1.0);
    CHECK(fs::exists(root / "run_record.json"));  // next to the report
  }
  SUBCASE("a wrong-architecture config refuses the checkpoint") {
    fs::path other_conf = root / "other.conf";
    {
      std::ofstream o(other_conf);
      o << Slurp(run / "config.snapshot") << "model.dim = 24\n";
    }
    CliResult ev =
        CallCli({"eval", "--checkpoint", (run / "model.ckpt").string(),
                 "--data", data.string(), "--config", other_conf.string(),
                 "--out", (root / "r2.json").string()});
    CHECK(ev.code == 1);
    CHECK(ev.err.find("checkpoint") != std::string::npos);
  }
  SUBCASE("diagnose exports embeddings and the probe") {
    fs::path tsv = root / "emb.tsv";
    CliResult diag =
        CallCli({"diagnose", "--checkpoint", (run / "model.ckpt").string(),
                 "--data", data.string(), "--out", tsv.string()});
    REQUIRE(diag.code == 0);
    std::string content = Slurp(tsv);
    CHECK(content.rfind("pca_x\tpca_y\tlabel", 0) == 0);
    CHECK(content.find("original") != std::string::npos);
    CHECK(content.find("generated") != std::string::npos);
    json rec = json::parse(Slurp(root / "run_record.json"));
    CHECK(rec["subcommand"] == "diagnose");
    CHECK(rec.contains("domain_probe_acc"));
  }
}

TEST_CASE("category grid factorization through gen-data") {
  fs::path root = TestRoot() / "classes";
  fs::remove_all(root);
  std::string conf = TinyConfigFile();
  CliResult gen = CallCli({"gen-data", "--config", conf, "--classes", "8",
                           "--per-rare", "0", "--seed", "1", "--out",
                           root.string()});
  REQUIRE(gen.code == 0);
  json manifest = json::parse(Slurp(root / "manifest.json"));
  CHECK(manifest["num_verbs"].get<int>() * manifest["num_objects"].get<int>() ==
        8);
  CHECK(manifest["num_verbs"] == 4);
  CHECK(manifest["num_objects"] == 2);
}

TEST_CASE("ablation matrix runs and summary") {
  fs::path root = TestRoot() / "ablate";
  fs::remove_all(root);
  std::string conf = TinyConfigFile();
  CliResult abl = CallCli({"ablate", "--preset", "table3", "--seeds", "2",
                           "--config", conf, "--out", root.string()});
  REQUIRE(abl.code == 0);

  SUBCASE("each cell-seed pair leaves a self-describing run directory") {
    int runs = 0;
    for (const char* cell :
         {"baseline", "instance_only", "context_only", "full_cefa"})
      for (int seed = 0; seed < 2; ++seed) {
        fs::path dir = root / cell / ("seed_" + std::to_string(seed));
        CHECK(fs::exists(dir / "metrics.jsonl"));
        CHECK(fs::exists(dir / "config.snapshot"));
        ++runs;
      }
    CHECK(runs == 8);
  }
  SUBCASE("summary aggregates every cell over the seeds") {
    std::string csv = Slurp(root / "summary.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line ==
          "cell,preset,seeds_ok,seeds_failed,map_rare_mean,map_rare_std,"
          "map_full_mean,map_full_std,domain_probe_acc_mean,status");
    int rows = 0;
    while (std::getline(lines, line)) {
      ++rows;
      CHECK(line.find(",2,0,") != std::string::npos);  // 2 ok, 0 failed
      CHECK(line.rfind(",ok") == line.size() - 3);
    }
    CHECK(rows == 4);
    json rec = json::parse(Slurp(root / "run_record.json"));
    CHECK(rec["status"] == "ok");
  }
}

TEST_CASE("output root honors the environment variable") {
  fs::path root = TestRoot() / "envroot";
  fs::remove_all(root);
  setenv("CEFA_OUT", root.string().c_str(), 1);
  std::string conf = TinyConfigFile();
  CliResult gen =
      CallCli({"gen-data", "--config", conf, "--per-rare", "0", "--seed", "1"});
  unsetenv("CEFA_OUT");
  REQUIRE(gen.code == 0);
  CHECK(fs::exists(root / "gen-data" / "manifest.json"));
  CHECK(fs::exists(root / "gen-data" / "run_record.json"));
}

}  // namespace
}  // namespace cefa::cli
