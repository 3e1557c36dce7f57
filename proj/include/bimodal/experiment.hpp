#pragma once

#include "bimodal/audio_features.hpp"
#include "bimodal/corpus.hpp"
#include "bimodal/fusion.hpp"
#include "bimodal/metrics.hpp"
#include "bimodal/splits.hpp"
#include "bimodal/text_features.hpp"
#include "bimodal/trainer.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bimodal::experiment {

// Raised for malformed or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Modality { acoustic, text, bimodal };

std::string modality_name(Modality m);
Modality parse_modality(const std::string& name);

struct ExperimentConfig {
  // Exactly one corpus source.
  std::optional<corpus::GeneratorConfig> generator;
  std::optional<std::string> manifest_path;

  int k_folds = 10;
  std::vector<trainer::MonitorCriterion> monitors = {trainer::MonitorCriterion::UA};
  Modality modality = Modality::bimodal;
  trainer::TrainConfig train;          // monitor/seed filled per run
  bool text_scheduler_enabled = false; // scheduler is off for text by default
  nets::AcousticModelSpec acoustic_spec = nets::AcousticModelSpec::compact();
  nets::TextModelSpec text_spec;
  int max_tokens = 32;
  std::optional<std::string> embedding_table;
  audio_features::MfccConfig mfcc;
  fusion::ForestConfig forest;
  std::optional<std::string> cache_dir;  // on-disk feature cache
  std::string out_dir = "runs_out";
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

ExperimentConfig experiment_config_from_json_text(const std::string& json_text);
std::string experiment_config_to_json_text(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::string& path);

// Labeled corpus with per-modality feature datasets, order-stable by
// utterance id.
struct PreparedData {
  corpus::Corpus corpus;
  splits::FoldAssignment folds;
  trainer::Dataset<float> acoustic;
  trainer::Dataset<float> text;
};

PreparedData prepare(const ExperimentConfig& config, bool need_acoustic, bool need_text);

std::string run_dir(const ExperimentConfig& config, trainer::MonitorCriterion monitor,
                    Modality modality, int fold);

// Trains the configured modality for every (monitor, fold) pair, writing a
// run directory each (config.json, history.csv, best.ckpt, test_metrics.json).
// Completed directories are skipped unless force. jobs > 1 runs folds in
// parallel threads.
void run_training(const ExperimentConfig& config, bool force, int jobs, std::ostream& log);

// Late fusion per (monitor, fold): loads both single-modality checkpoints,
// fits the random forest on fused train-split vectors, scores the test fold.
void run_fusion(const ExperimentConfig& config, bool force, std::ostream& log);

// Fold-averaged monitor x metric tables per modality, as rendered text and
// as machine-readable JSON (written to <out_dir>/report.json by the CLI).
std::string render_report_table(const std::string& out_dir);
std::string report_json_text(const std::string& out_dir);

}  // namespace bimodal::experiment
