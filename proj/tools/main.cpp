// bimodal: dialog-utterance sentiment classification pipeline.
//
// Subcommands: generate, train, fuse, report. Exit codes: 0 success,
// 2 configuration error, 1 runtime failure.

#include "bimodal/corpus.hpp"
#include "bimodal/experiment.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace bimodal;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw experiment::ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int cmd_generate(const std::string& config_path, const std::string& out_path) {
  const auto cfg = corpus::generator_config_from_json_text(read_file(config_path));
  const auto generated = corpus::generate_synthetic_corpus(cfg);
  corpus::save_manifest(generated, out_path);
  std::cout << "wrote " << out_path << " (" << generated.utterances.size() << " utterances, "
            << "negative=" << generated.class_counts.at(SentimentLabel::negative)
            << " positive=" << generated.class_counts.at(SentimentLabel::positive)
            << " neutral=" << generated.class_counts.at(SentimentLabel::neutral) << ")\n";
  return 0;
}

experiment::ExperimentConfig load_config(const std::string& path, uint64_t* seed_override) {
  auto cfg = experiment::experiment_config_from_json_text(read_file(path));
  if (seed_override) cfg.seed = *seed_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-modal dialog sentiment classification pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string report_dir;
  bool force = false;
  int jobs = 1;
  std::optional<uint64_t> seed;

  auto* generate = app.add_subcommand("generate", "Generate a synthetic corpus manifest");
  generate->add_option("--config", config_path, "Generator config JSON")->required();
  generate->add_option("--out", out_path, "Manifest path to write")->required();

  auto* train = app.add_subcommand("train", "Train the configured modality across folds");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--seed", seed, "Override the config seed");
  train->add_flag("--force", force, "Re-run completed run directories");
  train->add_option("--jobs", jobs, "Parallel fold workers")->check(CLI::PositiveNumber);

  auto* fuse = app.add_subcommand("fuse", "Late-fuse trained modalities with a random forest");
  fuse->add_option("--config", config_path, "Experiment config JSON")->required();
  fuse->add_option("--seed", seed, "Override the config seed");
  fuse->add_flag("--force", force, "Re-run completed run directories");

  auto* report = app.add_subcommand("report", "Render fold-averaged metric tables");
  report->add_option("--config", config_path, "Experiment config JSON (for out_dir)");
  report->add_option("--dir", report_dir, "Run directory (overrides config out_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(config_path, out_path);

    if (train->parsed()) {
      const auto cfg = load_config(config_path, seed ? &*seed : nullptr);
      experiment::run_training(cfg, force, jobs, std::cout);
      return 0;
    }

    if (fuse->parsed()) {
      const auto cfg = load_config(config_path, seed ? &*seed : nullptr);
      experiment::run_fusion(cfg, force, std::cout);
      return 0;
    }

    if (report->parsed()) {
      std::string dir = report_dir;
      if (dir.empty()) {
        if (config_path.empty())
          throw experiment::ConfigError("report needs --config or --dir");
        dir = load_config(config_path, nullptr).out_dir;
      }
      const std::string table = experiment::render_report_table(dir);
      const std::string json_text = experiment::report_json_text(dir);
      std::ofstream out(fs::path(dir) / "report.json", std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write report.json under " + dir);
      out << json_text << "\n";
      std::cout << table;
      return 0;
    }
  } catch (const experiment::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
