#pragma once

#include "bimodal/metrics.hpp"
#include "bimodal/nets.hpp"
#include "bimodal/types.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace bimodal::trainer {

// Validation metrics a run can monitor; all are maximized.
enum class MonitorCriterion { WA, UA, NegRecall, PosRecall, NeuRecall };

inline std::string monitor_name(MonitorCriterion m) {
  switch (m) {
    case MonitorCriterion::WA: return "WA";
    case MonitorCriterion::UA: return "UA";
    case MonitorCriterion::NegRecall: return "NegRecall";
    case MonitorCriterion::PosRecall: return "PosRecall";
    case MonitorCriterion::NeuRecall: return "NeuRecall";
  }
  throw std::invalid_argument("monitor_name: invalid criterion");
}

inline MonitorCriterion parse_monitor(const std::string& name) {
  if (name == "WA") return MonitorCriterion::WA;
  if (name == "UA") return MonitorCriterion::UA;
  if (name == "NegRecall") return MonitorCriterion::NegRecall;
  if (name == "PosRecall") return MonitorCriterion::PosRecall;
  if (name == "NeuRecall") return MonitorCriterion::NeuRecall;
  throw std::invalid_argument("parse_monitor: unknown criterion '" + name + "'");
}

inline double monitored_value(const metrics::MetricsReport& rep, MonitorCriterion m) {
  switch (m) {
    case MonitorCriterion::WA: return rep.wa;
    case MonitorCriterion::UA: return rep.ua;
    case MonitorCriterion::NegRecall: return rep.neg_recall;
    case MonitorCriterion::PosRecall: return rep.pos_recall;
    case MonitorCriterion::NeuRecall: return rep.neu_recall;
  }
  throw std::invalid_argument("monitored_value: invalid criterion");
}

struct SchedulerConfig {
  double factor = 0.5;
  int patience = 5;
  double min_delta = 1e-4;
  double min_lr = 1e-6;
};

struct TrainConfig {
  double initial_lr = 1e-3;
  int batch_size = 32;
  int max_epochs = 100;
  int early_stop_patience = 10;
  double early_stop_min_delta = 1e-4;
  uint64_t seed = 0;
  MonitorCriterion monitor = MonitorCriterion::UA;
  SchedulerConfig scheduler;
  bool scheduler_enabled = true;

  void validate() const {
    if (initial_lr <= 0.0) throw std::invalid_argument("TrainConfig: initial_lr must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
    if (scheduler.factor <= 0.0 || scheduler.factor >= 1.0)
      throw std::invalid_argument("TrainConfig: scheduler factor must be in (0, 1)");
    if (scheduler_enabled && early_stop_patience < scheduler.patience)
      throw std::invalid_argument(
          "TrainConfig: early_stop_patience must be >= scheduler patience");
  }
};

// Halves the learning rate (bounded by min_lr) once the monitored value has
// failed to improve by min_delta for more than `patience` epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, SchedulerConfig config)
      : lr_(initial_lr), config_(config) {}

  void step(double observed_value) {
    if (observed_value > best_ + config_.min_delta) {
      best_ = observed_value;
      wait_ = 0;
      return;
    }
    ++wait_;
    if (wait_ > config_.patience) {
      lr_ = std::max(lr_ * config_.factor, config_.min_lr);
      wait_ = 0;
    }
  }

  double lr() const { return lr_; }

 private:
  double lr_;
  SchedulerConfig config_;
  double best_ = -std::numeric_limits<double>::infinity();
  int wait_ = 0;
};

// Signals stop after `patience` consecutive epochs without improvement.
class EarlyStopper {
 public:
  EarlyStopper(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  bool step(double observed_value) {
    if (observed_value > best_ + min_delta_) {
      best_ = observed_value;
      wait_ = 0;
      return false;
    }
    ++wait_;
    return wait_ >= patience_;
  }

 private:
  int patience_;
  double min_delta_;
  double best_ = -std::numeric_limits<double>::infinity();
  int wait_ = 0;
};

// Mean negative log softmax of the true class, plus the gradient with
// respect to the logits: (softmax - onehot) / batch.
template <typename S>
std::pair<double, Matrix<S>> cross_entropy(const Matrix<S>& logits,
                                           const std::vector<int>& labels) {
  const auto batch = logits.rows();
  if (batch == 0 || static_cast<size_t>(batch) != labels.size())
    throw std::invalid_argument("cross_entropy: batch size mismatch");
  Matrix<S> grad(batch, logits.cols());
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int label = labels[static_cast<size_t>(b)];
    if (label < 0 || label >= logits.cols())
      throw std::invalid_argument("cross_entropy: label out of range: " + std::to_string(label));
    const S max_logit = logits.row(b).maxCoeff();
    const Vector<S> shifted = (logits.row(b).transpose().array() - max_logit).matrix();
    const Vector<S> exps = shifted.array().exp().matrix();
    const S sum = exps.sum();
    loss -= static_cast<double>(shifted(label)) - std::log(static_cast<double>(sum));
    grad.row(b) = (exps / sum).transpose();
    grad(b, label) -= S(1);
  }
  grad /= static_cast<S>(batch);
  return {loss / static_cast<double>(batch), grad};
}

// Adam with bias-corrected moments, (beta1, beta2, eps) = (0.9, 0.999, 1e-8).
template <typename S>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const std::vector<nets::Tensor<S>*>& params) {
    moments_.reserve(params.size());
    for (const auto* t : params)
      moments_.push_back({Matrix<S>::Zero(t->value.rows(), t->value.cols()),
                          Matrix<S>::Zero(t->value.rows(), t->value.cols())});
  }

  void step(const std::vector<nets::Tensor<S>*>& params, double lr) {
    ++t_;
    const S b1 = static_cast<S>(kBeta1), b2 = static_cast<S>(kBeta2);
    const S corr1 = static_cast<S>(1.0 - std::pow(kBeta1, static_cast<double>(t_)));
    const S corr2 = static_cast<S>(1.0 - std::pow(kBeta2, static_cast<double>(t_)));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& m = moments_[i].m;
      auto& v = moments_[i].v;
      const auto& g = params[i]->grad;
      m = b1 * m + (S(1) - b1) * g;
      v = (b2 * v.array() + (S(1) - b2) * g.array().square()).matrix();
      params[i]->value.array() -=
          static_cast<S>(lr) * (m.array() / corr1) /
          ((v.array() / corr2).sqrt() + static_cast<S>(kEps));
    }
  }

  int64_t steps_taken() const { return t_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  struct Moments {
    Matrix<S> m, v;
  };
  std::vector<Moments> moments_;
  int64_t t_ = 0;
};

// One training example: a 300x60 feature grid for the acoustic model or a
// max_tokens x 300 embedded sequence for the text model.
template <typename S>
struct Example {
  Matrix<S> features;
  int label = 0;
  std::string id;
};

template <typename S>
using Dataset = std::vector<Example<S>>;

template <typename S>
nets::MapBatch<S> make_batch(const Dataset<S>& data, const std::vector<size_t>& order,
                             size_t begin, size_t end, nets::GraphKind kind) {
  const int batch = static_cast<int>(end - begin);
  const auto& first = data[order[begin]].features;
  const int rows = static_cast<int>(first.rows());
  const int cols = static_cast<int>(first.cols());
  nets::MapBatch<S> out;
  if (kind == nets::GraphKind::acoustic) {
    // (T, F) grid becomes T*F rows of one channel.
    out.batch = batch;
    out.height = rows;
    out.width = cols;
    out.data.resize(static_cast<Eigen::Index>(batch) * rows * cols, 1);
    for (int b = 0; b < batch; ++b) {
      const auto& f = data[order[begin + static_cast<size_t>(b)]].features;
      for (int t = 0; t < rows; ++t)
        out.data.block(static_cast<Eigen::Index>(b) * rows * cols +
                           static_cast<Eigen::Index>(t) * cols,
                       0, cols, 1) = f.row(t).transpose();
    }
  } else {
    // (L, dim) sequence keeps dim as channels.
    out.batch = batch;
    out.height = rows;
    out.width = 1;
    out.data.resize(static_cast<Eigen::Index>(batch) * rows, cols);
    for (int b = 0; b < batch; ++b)
      out.data.middleRows(static_cast<Eigen::Index>(b) * rows, rows) =
          data[order[begin + static_cast<size_t>(b)]].features;
  }
  return out;
}

// Lowest index wins ties, keeping predictions deterministic.
template <typename S>
int argmax_row(const Matrix<S>& m, Eigen::Index row) {
  int best = 0;
  for (int c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return best;
}

// Eval-mode scoring of a dataset into a confusion matrix.
template <typename S>
metrics::ConfusionMatrix evaluate(nets::ModelGraph<S>& graph, const Dataset<S>& data,
                                  int batch_size) {
  metrics::ConfusionMatrix cm;
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t begin = 0; begin < data.size(); begin += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(data.size(), begin + static_cast<size_t>(batch_size));
    const auto batch = make_batch(data, order, begin, end, graph.kind);
    const auto result = nets::forward(graph, batch, nets::Mode::eval);
    for (Eigen::Index b = 0; b < result.logits.rows(); ++b)
      cm.accumulate(data[order[begin + static_cast<size_t>(b)]].label,
                    argmax_row(result.logits, b));
  }
  return cm;
}

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  metrics::MetricsReport validation;
  double lr = 0.0;
};

template <typename S>
struct TrainRun {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_value = 0.0;
  std::string best_checkpoint;  // checkpoint bytes for the best epoch
};

// Epoch loop: seeded shuffle, mini-batch Adam on cross-entropy, per-epoch
// validation metrics. The plateau scheduler and the early stopper both watch
// config.monitor, and the best-epoch checkpoint is restored into the graph
// before returning.
template <typename S>
TrainRun<S> train(nets::ModelGraph<S>& graph, const Dataset<S>& train_set,
                  const Dataset<S>& validation_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty train set");
  if (validation_set.empty()) throw std::invalid_argument("train: empty validation set");
  std::array<int64_t, kNumClasses> val_counts{};
  for (const auto& e : validation_set) {
    if (e.label < 0 || e.label >= kNumClasses)
      throw std::invalid_argument("train: label out of range in validation set");
    val_counts[static_cast<size_t>(e.label)] += 1;
  }
  for (int c = 0; c < kNumClasses; ++c)
    if (val_counts[static_cast<size_t>(c)] == 0)
      throw std::invalid_argument(
          "train: validation set has no '" +
          std::string(label_name(static_cast<SentimentLabel>(c))) +
          "' utterances; recall criteria would be undefined");

  Rng rng(config.seed);
  const auto params = graph.parameters();
  AdamOptimizer<S> adam(params);
  PlateauScheduler scheduler(config.initial_lr, config.scheduler);
  EarlyStopper stopper(config.early_stop_patience, config.early_stop_min_delta);

  TrainRun<S> run;
  run.best_value = -std::numeric_limits<double>::infinity();
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double lr = config.scheduler_enabled ? scheduler.lr() : config.initial_lr;
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    int64_t batches = 0;
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      const auto batch = make_batch(train_set, order, begin, end, graph.kind);
      std::vector<int> labels(end - begin);
      for (size_t i = begin; i < end; ++i) labels[i - begin] = train_set[order[i]].label;
      const auto result = nets::forward(graph, batch, nets::Mode::train, &rng);
      auto [loss, grad] = cross_entropy(result.logits, labels);
      nets::backward(graph, grad);
      adam.step(params, lr);
      loss_sum += loss;
      ++batches;
    }

    const auto val_cm = evaluate(graph, validation_set, config.batch_size);
    const auto val_report = metrics::report(val_cm);
    const double value = monitored_value(val_report, config.monitor);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.validation = val_report;
    record.lr = lr;
    run.history.push_back(record);

    if (value > run.best_value) {
      run.best_value = value;
      run.best_epoch = epoch;
      run.best_checkpoint = nets::save_checkpoint_bytes(graph);
    }
    if (config.scheduler_enabled) scheduler.step(value);
    if (stopper.step(value)) break;
  }

  // The run's final model is the best-epoch checkpoint, not the last epoch.
  graph = nets::load_checkpoint_bytes<S>(run.best_checkpoint);
  return run;
}

// Run directory layout: config.json, history.csv, best.ckpt.
template <typename S>
void write_run_dir(const TrainRun<S>& run, const std::string& config_json_text,
                   const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "config.json", std::ios::trunc);
    if (!out) throw std::runtime_error("write_run_dir: cannot write config.json in " + dir);
    out << config_json_text << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "history.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("write_run_dir: cannot write history.csv in " + dir);
    out << "epoch,train_loss,WA,UA,neg_recall,pos_recall,neu_recall,lr\n";
    char line[256];
    for (const auto& r : run.history) {
      std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.10g\n", r.epoch,
                    r.train_loss, r.validation.wa, r.validation.ua, r.validation.neg_recall,
                    r.validation.pos_recall, r.validation.neu_recall, r.lr);
      out << line;
    }
  }
  {
    std::ofstream out(fs::path(dir) / "best.ckpt", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_run_dir: cannot write best.ckpt in " + dir);
    out.write(run.best_checkpoint.data(),
              static_cast<std::streamsize>(run.best_checkpoint.size()));
  }
}

}  // namespace bimodal::trainer
