#include "bimodal/experiment.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace bimodal::experiment {

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::acoustic: return "acoustic";
    case Modality::text: return "text";
    case Modality::bimodal: return "bimodal";
  }
  throw ConfigError("modality_name: invalid modality");
}

Modality parse_modality(const std::string& name) {
  if (name == "acoustic") return Modality::acoustic;
  if (name == "text") return Modality::text;
  if (name == "bimodal") return Modality::bimodal;
  throw ConfigError("unknown modality '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (generator.has_value() == manifest_path.has_value())
    throw ConfigError("config must name exactly one corpus source (generator or manifest)");
  if (monitors.empty()) throw ConfigError("monitors must be non-empty");
  if (k_folds < 3) throw ConfigError("k_folds must be >= 3");
  if (max_tokens < 8) throw ConfigError("max_tokens must be >= 8");
  if (out_dir.empty()) throw ConfigError("out_dir must be set");
  try {
    train.validate();
    if (generator) generator->validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

uint64_t hash_string(const std::string& text) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

trainer::TrainConfig train_config_from_json(const json& j, trainer::TrainConfig base) {
  if (j.contains("initial_lr")) base.initial_lr = j.at("initial_lr").get<double>();
  if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<int>();
  if (j.contains("max_epochs")) base.max_epochs = j.at("max_epochs").get<int>();
  if (j.contains("early_stop_patience"))
    base.early_stop_patience = j.at("early_stop_patience").get<int>();
  if (j.contains("early_stop_min_delta"))
    base.early_stop_min_delta = j.at("early_stop_min_delta").get<double>();
  if (j.contains("scheduler")) {
    const auto& s = j.at("scheduler");
    if (s.contains("factor")) base.scheduler.factor = s.at("factor").get<double>();
    if (s.contains("patience")) base.scheduler.patience = s.at("patience").get<int>();
    if (s.contains("min_delta")) base.scheduler.min_delta = s.at("min_delta").get<double>();
    if (s.contains("min_lr")) base.scheduler.min_lr = s.at("min_lr").get<double>();
  }
  return base;
}

json train_config_to_json(const trainer::TrainConfig& cfg) {
  return {{"initial_lr", cfg.initial_lr},
          {"batch_size", cfg.batch_size},
          {"max_epochs", cfg.max_epochs},
          {"early_stop_patience", cfg.early_stop_patience},
          {"early_stop_min_delta", cfg.early_stop_min_delta},
          {"scheduler",
           {{"factor", cfg.scheduler.factor},
            {"patience", cfg.scheduler.patience},
            {"min_delta", cfg.scheduler.min_delta},
            {"min_lr", cfg.scheduler.min_lr}}}};
}

}  // namespace

ExperimentConfig experiment_config_from_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("corpus")) {
      const auto& c = j.at("corpus");
      if (c.contains("generator"))
        cfg.generator = corpus::generator_config_from_json_text(c.at("generator").dump());
      if (c.contains("manifest")) cfg.manifest_path = c.at("manifest").get<std::string>();
    }
    if (j.contains("k_folds")) cfg.k_folds = j.at("k_folds").get<int>();
    if (j.contains("monitors")) {
      cfg.monitors.clear();
      for (const auto& m : j.at("monitors"))
        cfg.monitors.push_back(trainer::parse_monitor(m.get<std::string>()));
    }
    if (j.contains("modality")) cfg.modality = parse_modality(j.at("modality").get<std::string>());
    if (j.contains("trainer")) cfg.train = train_config_from_json(j.at("trainer"), cfg.train);
    if (j.contains("text_scheduler_enabled"))
      cfg.text_scheduler_enabled = j.at("text_scheduler_enabled").get<bool>();
    if (j.contains("acoustic_spec"))
      cfg.acoustic_spec = nets::acoustic_spec_from_json(j.at("acoustic_spec"));
    if (j.contains("text_spec")) cfg.text_spec = nets::text_spec_from_json(j.at("text_spec"));
    if (j.contains("max_tokens")) cfg.max_tokens = j.at("max_tokens").get<int>();
    if (j.contains("embedding_table") && !j.at("embedding_table").is_null())
      cfg.embedding_table = j.at("embedding_table").get<std::string>();
    if (j.contains("mfcc")) {
      const auto& m = j.at("mfcc");
      if (m.contains("num_mel_filters"))
        cfg.mfcc.num_mel_filters = m.at("num_mel_filters").get<int>();
      if (m.contains("fft_size")) cfg.mfcc.fft_size = m.at("fft_size").get<int>();
      if (m.contains("log_floor")) cfg.mfcc.log_floor = m.at("log_floor").get<double>();
      if (m.contains("fmin")) cfg.mfcc.fmin = m.at("fmin").get<double>();
      if (m.contains("fmax")) cfg.mfcc.fmax = m.at("fmax").get<double>();
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      if (f.contains("num_trees")) cfg.forest.num_trees = f.at("num_trees").get<int>();
      if (f.contains("max_depth")) cfg.forest.max_depth = f.at("max_depth").get<int>();
      if (f.contains("min_samples_leaf"))
        cfg.forest.min_samples_leaf = f.at("min_samples_leaf").get<int>();
      if (f.contains("features_per_split"))
        cfg.forest.features_per_split = f.at("features_per_split").get<int>();
    }
    if (j.contains("cache_dir") && !j.at("cache_dir").is_null())
      cfg.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string experiment_config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  if (cfg.generator)
    j["corpus"]["generator"] = json::parse(corpus::generator_config_to_json_text(*cfg.generator));
  if (cfg.manifest_path) j["corpus"]["manifest"] = *cfg.manifest_path;
  j["k_folds"] = cfg.k_folds;
  json monitors = json::array();
  for (auto m : cfg.monitors) monitors.push_back(trainer::monitor_name(m));
  j["monitors"] = monitors;
  j["modality"] = modality_name(cfg.modality);
  j["trainer"] = train_config_to_json(cfg.train);
  j["text_scheduler_enabled"] = cfg.text_scheduler_enabled;
  j["acoustic_spec"] = nets::to_json(cfg.acoustic_spec);
  j["text_spec"] = nets::to_json(cfg.text_spec);
  j["max_tokens"] = cfg.max_tokens;
  if (cfg.embedding_table) j["embedding_table"] = *cfg.embedding_table;
  j["mfcc"] = {{"num_mel_filters", cfg.mfcc.num_mel_filters},
               {"fft_size", cfg.mfcc.fft_size},
               {"log_floor", cfg.mfcc.log_floor},
               {"fmin", cfg.mfcc.fmin},
               {"fmax", cfg.mfcc.fmax}};
  j["forest"] = {{"num_trees", cfg.forest.num_trees},
                 {"max_depth", cfg.forest.max_depth},
                 {"min_samples_leaf", cfg.forest.min_samples_leaf},
                 {"features_per_split", cfg.forest.features_per_split}};
  if (cfg.cache_dir) j["cache_dir"] = *cfg.cache_dir;
  j["out_dir"] = cfg.out_dir;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return experiment_config_from_json_text(buffer.str());
}

namespace {

MatrixD cached_featurize(const corpus::Utterance& utt, const ExperimentConfig& cfg) {
  if (cfg.cache_dir) {
    const fs::path cached = fs::path(*cfg.cache_dir) / (utt.id + ".mf60");
    if (fs::exists(cached)) return audio_features::load_feature_grid(cached.string());
    const auto grid = audio_features::featurize(utt, cfg.mfcc).values;
    fs::create_directories(*cfg.cache_dir);
    audio_features::save_feature_grid(cached.string(), grid);
    return grid;
  }
  return audio_features::featurize(utt, cfg.mfcc).values;
}

}  // namespace

PreparedData prepare(const ExperimentConfig& config, bool need_acoustic, bool need_text) {
  PreparedData data;
  data.corpus = config.generator ? corpus::generate_synthetic_corpus(*config.generator)
                                 : corpus::load_manifest(*config.manifest_path);
  data.folds = splits::assign_folds(data.corpus, config.k_folds, config.seed);

  std::vector<const corpus::Utterance*> labeled;
  for (const auto& u : data.corpus.utterances)
    if (u.label) labeled.push_back(&u);
  std::sort(labeled.begin(), labeled.end(),
            [](const corpus::Utterance* a, const corpus::Utterance* b) { return a->id < b->id; });

  std::optional<text_features::TableProvider> table;
  const text_features::HashedProvider hashed;
  if (need_text && config.embedding_table)
    table = text_features::load_embedding_table(*config.embedding_table);
  const text_features::EmbeddingProvider& provider =
      table ? static_cast<const text_features::EmbeddingProvider&>(*table)
            : static_cast<const text_features::EmbeddingProvider&>(hashed);

  text_features::EmbeddingConfig embed_cfg;
  embed_cfg.max_tokens = config.max_tokens;
  for (const auto* u : labeled) {
    if (need_acoustic) {
      trainer::Example<float> ex;
      ex.features = audio_features::cmvn(cached_featurize(*u, config)).cast<float>();
      ex.label = static_cast<int>(*u->label);
      ex.id = u->id;
      data.acoustic.push_back(std::move(ex));
    }
    if (need_text) {
      trainer::Example<float> ex;
      ex.features = text_features::embed(u->transcript, embed_cfg, provider).values;
      ex.label = static_cast<int>(*u->label);
      ex.id = u->id;
      data.text.push_back(std::move(ex));
    }
  }
  return data;
}

std::string run_dir(const ExperimentConfig& config, trainer::MonitorCriterion monitor,
                    Modality modality, int fold) {
  return (fs::path(config.out_dir) / "runs" / trainer::monitor_name(monitor) /
          modality_name(modality) / ("fold" + std::to_string(fold)))
      .string();
}

namespace {

bool run_complete(const std::string& dir) {
  return fs::exists(fs::path(dir) / "test_metrics.json");
}

trainer::Dataset<float> select_ids(const trainer::Dataset<float>& all,
                                   const std::vector<std::string>& ids) {
  std::map<std::string, const trainer::Example<float>*> by_id;
  for (const auto& e : all) by_id[e.id] = &e;
  trainer::Dataset<float> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw std::runtime_error("select_ids: unknown utterance '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

uint64_t run_seed(const ExperimentConfig& config, trainer::MonitorCriterion monitor,
                  Modality modality, int fold) {
  return mix64(config.seed ^ hash_string(trainer::monitor_name(monitor) + "/" +
                                         modality_name(modality) + "/fold" +
                                         std::to_string(fold)));
}

void write_test_metrics(const std::string& dir, const metrics::MetricsReport& rep,
                        const metrics::ConfusionMatrix& cm) {
  std::ofstream out(fs::path(dir) / "test_metrics.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write test_metrics.json in " + dir);
  out << metrics::report_to_json_text(rep, &cm) << "\n";
}

struct RunTask {
  trainer::MonitorCriterion monitor;
  int fold;
};

// Trains one single-modality run and writes its directory.
void train_one(const ExperimentConfig& config, const PreparedData& data, Modality modality,
               const RunTask& task, std::ostream& log, std::mutex& log_mutex) {
  const std::string dir = run_dir(config, task.monitor, modality, task.fold);
  const int validation_fold = (task.fold + 1) % config.k_folds;
  const auto view = splits::fold_view(data.corpus, data.folds, task.fold, validation_fold);
  const auto& full = modality == Modality::acoustic ? data.acoustic : data.text;
  const auto train_set = select_ids(full, view.train_ids);
  const auto validation_set = select_ids(full, view.validation_ids);
  const auto test_set = select_ids(full, view.test_ids);

  trainer::TrainConfig train_cfg = config.train;
  train_cfg.monitor = task.monitor;
  train_cfg.seed = run_seed(config, task.monitor, modality, task.fold);
  train_cfg.scheduler_enabled = modality == Modality::acoustic || config.text_scheduler_enabled;

  const uint64_t graph_seed = mix64(train_cfg.seed + 1);
  nets::ModelGraph<float> graph =
      modality == Modality::acoustic
          ? nets::build_acoustic<float>(config.acoustic_spec, audio_features::kNumFrames,
                                        3 * audio_features::kNumCoeffs, graph_seed)
          : nets::build_text<float>(config.text_spec, config.max_tokens,
                                    text_features::kEmbeddingDim, graph_seed);

  const auto run = trainer::train(graph, train_set, validation_set, train_cfg);

  json run_config;
  run_config["experiment"] = json::parse(experiment_config_to_json_text(config));
  run_config["monitor"] = trainer::monitor_name(task.monitor);
  run_config["modality"] = modality_name(modality);
  run_config["fold"] = task.fold;
  run_config["validation_fold"] = validation_fold;
  run_config["seed"] = train_cfg.seed;
  trainer::write_run_dir(run, run_config.dump(2), dir);

  const auto test_cm = trainer::evaluate(graph, test_set, train_cfg.batch_size);
  const auto test_report = metrics::report(test_cm);
  write_test_metrics(dir, test_report, test_cm);

  std::lock_guard<std::mutex> lock(log_mutex);
  log << "[" << trainer::monitor_name(task.monitor) << "/" << modality_name(modality) << "/fold"
      << task.fold << "] epochs=" << run.history.size() << " best_epoch=" << run.best_epoch
      << " test UA=" << test_report.ua << " WA=" << test_report.wa << "\n";
}

}  // namespace

void run_training(const ExperimentConfig& config, bool force, int jobs, std::ostream& log) {
  config.validate();
  if (config.modality == Modality::bimodal) {
    // Fusion consumes existing single-modality checkpoints.
    for (auto monitor : config.monitors)
      for (int fold = 0; fold < config.k_folds; ++fold)
        for (Modality m : {Modality::acoustic, Modality::text})
          if (!run_complete(run_dir(config, monitor, m, fold)))
            throw ConfigError(
                "bimodal training needs completed acoustic and text runs; train those "
                "modalities first (missing: " +
                run_dir(config, monitor, m, fold) + ")");
    run_fusion(config, force, log);
    return;
  }

  std::vector<RunTask> tasks;
  for (auto monitor : config.monitors)
    for (int fold = 0; fold < config.k_folds; ++fold) {
      const std::string dir = run_dir(config, monitor, config.modality, fold);
      if (!force && run_complete(dir)) {
        log << "skip completed " << dir << "\n";
        continue;
      }
      tasks.push_back({monitor, fold});
    }
  if (tasks.empty()) return;

  const bool need_acoustic = config.modality == Modality::acoustic;
  const PreparedData data = prepare(config, need_acoustic, !need_acoustic);
  {
    fs::create_directories(config.out_dir);
    std::ofstream out(fs::path(config.out_dir) / "splits.json", std::ios::trunc);
    out << data.folds.to_json_text() << "\n";
  }

  std::mutex log_mutex;
  if (jobs <= 1) {
    for (const auto& task : tasks)
      train_one(config, data, config.modality, task, log, log_mutex);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&, w] {
      try {
        for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          train_one(config, data, config.modality, tasks[i], log, log_mutex);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void run_fusion(const ExperimentConfig& config, bool force, std::ostream& log) {
  config.validate();
  const PreparedData data = prepare(config, true, true);
  std::mutex log_mutex;
  for (auto monitor : config.monitors) {
    for (int fold = 0; fold < config.k_folds; ++fold) {
      const std::string dir = run_dir(config, monitor, Modality::bimodal, fold);
      if (!force && run_complete(dir)) {
        log << "skip completed " << dir << "\n";
        continue;
      }
      const std::string acoustic_dir = run_dir(config, monitor, Modality::acoustic, fold);
      const std::string text_dir = run_dir(config, monitor, Modality::text, fold);
      for (const auto& d : {acoustic_dir, text_dir})
        if (!run_complete(d))
          throw ConfigError("fusion needs completed single-modality runs; missing " + d);

      auto acoustic_graph =
          nets::load_checkpoint<float>((fs::path(acoustic_dir) / "best.ckpt").string());
      auto text_graph = nets::load_checkpoint<float>((fs::path(text_dir) / "best.ckpt").string());

      const int validation_fold = (fold + 1) % config.k_folds;
      const auto view = splits::fold_view(data.corpus, data.folds, fold, validation_fold);
      const auto train_a = select_ids(data.acoustic, view.train_ids);
      const auto train_t = select_ids(data.text, view.train_ids);
      const auto test_a = select_ids(data.acoustic, view.test_ids);
      const auto test_t = select_ids(data.text, view.test_ids);

      // The forest trains on fused vectors from the train split only, using
      // this fold's modality checkpoints.
      const auto train_fused = fusion::extract_fused(acoustic_graph, text_graph, train_a,
                                                     train_t, config.train.batch_size);
      fusion::ForestConfig forest_cfg = config.forest;
      forest_cfg.seed = run_seed(config, monitor, Modality::bimodal, fold);
      const auto forest = fusion::fit_forest(train_fused.features, train_fused.labels, forest_cfg);

      const auto test_fused = fusion::extract_fused(acoustic_graph, text_graph, test_a, test_t,
                                                    config.train.batch_size);
      metrics::ConfusionMatrix cm;
      for (Eigen::Index i = 0; i < test_fused.features.rows(); ++i) {
        const VectorF x = test_fused.features.row(i).transpose();
        cm.accumulate(test_fused.labels[static_cast<size_t>(i)],
                      static_cast<int>(fusion::predict(forest, x)));
      }
      const auto rep = metrics::report(cm);

      fs::create_directories(dir);
      {
        std::ofstream out(fs::path(dir) / "forest.json", std::ios::trunc);
        out << forest.to_json_text() << "\n";
      }
      fusion::save_fused_dataset(test_fused, (fs::path(dir) / "fused_test.bin").string(),
                                 (fs::path(dir) / "fused_test_index.csv").string());
      {
        json run_config;
        run_config["experiment"] = json::parse(experiment_config_to_json_text(config));
        run_config["monitor"] = trainer::monitor_name(monitor);
        run_config["modality"] = "bimodal";
        run_config["fold"] = fold;
        run_config["seed"] = forest_cfg.seed;
        std::ofstream out(fs::path(dir) / "config.json", std::ios::trunc);
        out << run_config.dump(2) << "\n";
      }
      write_test_metrics(dir, rep, cm);

      std::lock_guard<std::mutex> lock(log_mutex);
      log << "[" << trainer::monitor_name(monitor) << "/bimodal/fold" << fold
          << "] trees=" << forest.trees.size() << " test UA=" << rep.ua << " WA=" << rep.wa
          << "\n";
    }
  }
}

namespace {

// monitor name -> modality name -> fold reports (fold-sorted)
using ReportMap = std::map<std::string, std::map<std::string, std::vector<metrics::MetricsReport>>>;

ReportMap collect_reports(const std::string& out_dir) {
  ReportMap reports;
  const fs::path runs = fs::path(out_dir) / "runs";
  if (!fs::exists(runs)) return reports;
  for (const auto& monitor_entry : fs::directory_iterator(runs)) {
    if (!monitor_entry.is_directory()) continue;
    const std::string monitor = monitor_entry.path().filename().string();
    for (const auto& modality_entry : fs::directory_iterator(monitor_entry.path())) {
      if (!modality_entry.is_directory()) continue;
      const std::string modality = modality_entry.path().filename().string();
      std::map<int, metrics::MetricsReport> by_fold;
      for (const auto& fold_entry : fs::directory_iterator(modality_entry.path())) {
        const std::string name = fold_entry.path().filename().string();
        if (name.rfind("fold", 0) != 0) continue;
        const fs::path metrics_file = fold_entry.path() / "test_metrics.json";
        if (!fs::exists(metrics_file)) continue;
        std::ifstream in(metrics_file);
        std::stringstream buffer;
        buffer << in.rdbuf();
        by_fold[std::stoi(name.substr(4))] = metrics::report_from_json_text(buffer.str());
      }
      auto& list = reports[monitor][modality];
      for (const auto& [fold, rep] : by_fold) {
        (void)fold;
        list.push_back(rep);
      }
    }
  }
  return reports;
}

const std::vector<std::pair<std::string, std::string>>& monitor_rows() {
  static const std::vector<std::pair<std::string, std::string>> rows = {
      {"WA", "WA"}, {"NegRecall", "Ng.R"}, {"PosRecall", "Ps.R"}, {"NeuRecall", "Nt.R"},
      {"UA", "UA"}};
  return rows;
}

std::string pct(double value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", value * 100.0);
  return buf;
}

}  // namespace

std::string render_report_table(const std::string& out_dir) {
  const auto reports = collect_reports(out_dir);
  std::ostringstream out;
  std::set<std::string> modalities;
  for (const auto& [monitor, by_modality] : reports) {
    (void)monitor;
    for (const auto& [modality, list] : by_modality) {
      (void)list;
      modalities.insert(modality);
    }
  }
  for (const auto& modality : modalities) {
    out << "== " << modality << " ==\n";
    out << "Monitor   WA     Ng.R   Ps.R   Nt.R   UA\n";
    for (const auto& [monitor, row_label] : monitor_rows()) {
      const auto monitor_it = reports.find(monitor);
      if (monitor_it == reports.end()) continue;  // monitor never trained
      out << row_label << std::string(10 - row_label.size(), ' ');
      const auto modality_it = monitor_it->second.find(modality);
      if (modality_it == monitor_it->second.end() || modality_it->second.empty()) {
        out << "--     --     --     --     --\n";
        continue;
      }
      const auto agg = metrics::aggregate_folds(modality_it->second);
      for (const double v : {agg.wa, agg.neg_recall, agg.pos_recall, agg.neu_recall, agg.ua}) {
        const std::string cell = pct(v);
        out << cell << std::string(cell.size() >= 7 ? 1 : 7 - cell.size(), ' ');
      }
      out << "\n";
    }
    out << "\n";
  }
  if (modalities.empty()) out << "(no completed runs under " << out_dir << ")\n";
  return out.str();
}

std::string report_json_text(const std::string& out_dir) {
  const auto reports = collect_reports(out_dir);
  json j;
  j["modalities"] = json::object();
  for (const auto& [monitor, by_modality] : reports) {
    for (const auto& [modality, list] : by_modality) {
      if (list.empty()) continue;
      const auto agg = metrics::aggregate_folds(list);
      json cell = json::parse(metrics::report_to_json_text(agg));
      cell["folds"] = list.size();
      j["modalities"][modality][monitor] = cell;
    }
  }
  return j.dump(2);
}

}  // namespace bimodal::experiment
