#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bimodal/experiment.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bimodal;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "bimodal_cli_test";

int run_cli(const std::string& args, const std::string& capture = "") {
  std::string cmd = std::string(BIMODAL_CLI_PATH) + " " + args;
  if (!capture.empty()) cmd += " > " + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::trunc);
  out << contents;
}

json experiment_config(const std::string& modality) {
  json cfg;
  cfg["corpus"]["manifest"] = (kWork / "corpus.csv").string();
  cfg["k_folds"] = 3;
  cfg["monitors"] = {"UA"};
  cfg["modality"] = modality;
  cfg["trainer"] = {{"initial_lr", 2e-3}, {"batch_size", 16}, {"max_epochs", 3},
                    {"early_stop_patience", 5}, {"scheduler", {{"patience", 2}}}};
  cfg["acoustic_spec"] = {
      {"blocks", {{{"filters", 4}, {"kernel", {3, 3}}, {"pool", {0, 2}}, {"dropout_rate", 0.2}}}},
      {"dense_sizes", {16}},
      {"num_classes", 3},
      {"collapse_pool", "max"}};
  cfg["max_tokens"] = 16;
  cfg["forest"] = {{"num_trees", 20}};
  cfg["out_dir"] = (kWork / "out").string();
  cfg["seed"] = 11;
  return cfg;
}

}  // namespace

TEST_CASE("cli pipeline: generate, train both modalities, fuse, report") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);

  // generate
  write_file(kWork / "gen.json", R"({
    "seed": 5, "num_dialogs": 30, "utterances_per_dialog": [2, 4],
    "sample_rate": 8000, "duration_range": [0.3, 0.6],
    "vocab_size_per_class": 20, "shared_filler_fraction": 0.2
  })");
  const auto gen_log = (kWork / "gen.log").string();
  CHECK(run_cli("generate --config " + (kWork / "gen.json").string() + " --out " +
                    (kWork / "corpus.csv").string(),
                gen_log) == 0);
  CHECK(fs::exists(kWork / "corpus.csv"));
  CHECK(slurp(kWork / "gen.log").find("negative=") != std::string::npos);

  // identical seed regenerates a byte-identical manifest
  fs::create_directories(kWork / "again");
  CHECK(run_cli("generate --config " + (kWork / "gen.json").string() + " --out " +
                    (kWork / "again" / "corpus.csv").string(),
                gen_log) == 0);
  CHECK(slurp(kWork / "corpus.csv") == slurp(kWork / "again" / "corpus.csv"));
  CHECK(slurp(kWork / "corpus_audio" / "d0000_u000.wav") ==
        slurp(kWork / "again" / "corpus_audio" / "d0000_u000.wav"));

  // bimodal training before the single modalities exist is a config error
  write_file(kWork / "exp_bimodal.json", experiment_config("bimodal").dump(2));
  CHECK(run_cli("train --config " + (kWork / "exp_bimodal.json").string(),
                (kWork / "pre.log").string()) == 2);

  // train text under two monitors: 2 x 3 folds = 6 run directories
  json text_cfg = experiment_config("text");
  text_cfg["monitors"] = {"UA", "WA"};
  write_file(kWork / "exp_text.json", text_cfg.dump(2));
  CHECK(run_cli("train --config " + (kWork / "exp_text.json").string(),
                (kWork / "text.log").string()) == 0);
  int run_dirs = 0;
  for (const std::string monitor : {"UA", "WA"})
    for (int fold = 0; fold < 3; ++fold) {
      const fs::path dir =
          kWork / "out" / "runs" / monitor / "text" / ("fold" + std::to_string(fold));
      CHECK(fs::exists(dir / "config.json"));
      CHECK(fs::exists(dir / "history.csv"));
      CHECK(fs::exists(dir / "best.ckpt"));
      if (fs::exists(dir / "test_metrics.json")) ++run_dirs;
    }
  CHECK(run_dirs == 6);
  CHECK(fs::exists(kWork / "out" / "splits.json"));

  // resumability: a second invocation skips completed runs
  CHECK(run_cli("train --config " + (kWork / "exp_text.json").string(),
                (kWork / "text2.log").string()) == 0);
  CHECK(slurp(kWork / "text2.log").find("skip completed") != std::string::npos);

  // train acoustic with two workers
  write_file(kWork / "exp_acoustic.json", experiment_config("acoustic").dump(2));
  CHECK(run_cli("train --config " + (kWork / "exp_acoustic.json").string() + " --jobs 2",
                (kWork / "acoustic.log").string()) == 0);

  // fuse
  CHECK(run_cli("fuse --config " + (kWork / "exp_bimodal.json").string(),
                (kWork / "fuse.log").string()) == 0);
  const fs::path fold0 = kWork / "out" / "runs" / "UA" / "bimodal" / "fold0";
  CHECK(fs::exists(fold0 / "forest.json"));
  CHECK(fs::exists(fold0 / "test_metrics.json"));
  CHECK(fs::exists(fold0 / "fused_test.bin"));
  CHECK(fs::exists(fold0 / "fused_test_index.csv"));

  // report
  CHECK(run_cli("report --dir " + (kWork / "out").string(),
                (kWork / "report.log").string()) == 0);
  const std::string table = slurp(kWork / "report.log");
  CHECK(table.find("== text ==") != std::string::npos);
  CHECK(table.find("== acoustic ==") != std::string::npos);
  CHECK(table.find("== bimodal ==") != std::string::npos);
  CHECK(table.find("UA") != std::string::npos);
  // Only text trained the WA monitor, so acoustic and bimodal render "--"
  // cells for that row.
  CHECK(table.find("--") != std::string::npos);

  const json report = json::parse(slurp(kWork / "out" / "report.json"));
  for (const auto& modality : {"acoustic", "text", "bimodal"}) {
    REQUIRE(report.at("modalities").contains(modality));
    const auto& cell = report.at("modalities").at(modality).at("UA");
    CHECK(cell.at("folds").get<int>() == 3);
    const double ua = cell.at("ua").get<double>();
    CHECK(ua >= 0.0);
    CHECK(ua <= 1.0);
  }

  // the rendered UA column equals the mean of the recall columns (within
  // the printed rounding)
  const auto& cell = report.at("modalities").at("text").at("UA");
  const double recall_mean = (cell.at("neg_recall").get<double>() +
                              cell.at("pos_recall").get<double>() +
                              cell.at("neu_recall").get<double>()) /
                             3.0;
  CHECK(std::abs(cell.at("ua").get<double>() - recall_mean) <= 5e-4);
}

TEST_CASE("cli: invalid generator ratios exit with code 2") {
  fs::create_directories(kWork);
  write_file(kWork / "bad_gen.json", R"({"class_ratios": [0.9, 0.9, 0.9]})");
  const int code = run_cli("generate --config " + (kWork / "bad_gen.json").string() + " --out " +
                               (kWork / "never.csv").string(),
                           (kWork / "bad.log").string());
  CHECK(code == 2);
  CHECK(!fs::exists(kWork / "never.csv"));
}

TEST_CASE("cli: report without --config or --dir is a config error") {
  CHECK(run_cli("report", (kWork / "noargs.log").string()) == 2);
}

TEST_CASE("experiment config validation") {
  using experiment::ConfigError;
  CHECK_THROWS_AS(experiment::experiment_config_from_json_text("{}"), ConfigError);
  CHECK_THROWS_AS(experiment::experiment_config_from_json_text(R"({"corpus": {}})"), ConfigError);
  CHECK_THROWS_AS(experiment::experiment_config_from_json_text(
                      R"({"corpus": {"manifest": "x.csv"}, "monitors": []})"),
                  ConfigError);
  CHECK_THROWS_AS(experiment::experiment_config_from_json_text(
                      R"({"corpus": {"manifest": "x.csv"}, "k_folds": 2})"),
                  ConfigError);
  CHECK_THROWS_AS(experiment::experiment_config_from_json_text(
                      R"({"corpus": {"manifest": "x.csv"}, "modality": "video"})"),
                  ConfigError);
  CHECK_NOTHROW(experiment::experiment_config_from_json_text(
      R"({"corpus": {"manifest": "x.csv"}})"));

  // Round trip through the canonical form.
  const auto cfg = experiment::experiment_config_from_json_text(
      R"({"corpus": {"manifest": "x.csv"}, "monitors": ["WA", "NegRecall"], "seed": 9})");
  const auto round =
      experiment::experiment_config_from_json_text(experiment::experiment_config_to_json_text(cfg));
  CHECK(round.monitors == cfg.monitors);
  CHECK(round.seed == cfg.seed);
  CHECK(round.manifest_path == cfg.manifest_path);
}
