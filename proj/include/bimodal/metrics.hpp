#pragma once

#include "bimodal/types.hpp"

#include <array>
#include <span>
#include <string>

namespace bimodal::metrics {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  Eigen::Matrix<int64_t, kNumClasses, kNumClasses> counts =
      Eigen::Matrix<int64_t, kNumClasses, kNumClasses>::Zero();

  void accumulate(int true_label, int predicted_label);
  void merge(const ConfusionMatrix& other) { counts += other.counts; }
  int64_t total() const { return counts.sum(); }
};

struct MetricsReport {
  double wa = 0.0;
  double ua = 0.0;
  double neg_recall = 0.0;
  double pos_recall = 0.0;
  double neu_recall = 0.0;
  std::array<int64_t, kNumClasses> support{};  // per true class

  double recall(SentimentLabel label) const;
};

// wa = trace/total, recall_c = counts[c][c]/row_total_c, ua = mean of the
// three recalls. Throws when a class has zero support, naming the class.
MetricsReport report(const ConfusionMatrix& cm);

// Unweighted mean of each metric across folds; support summed.
MetricsReport aggregate_folds(std::span<const MetricsReport> reports);

// JSON with the five metrics rounded to 4 decimals plus raw confusion counts.
std::string report_to_json_text(const MetricsReport& rep, const ConfusionMatrix* cm = nullptr);
MetricsReport report_from_json_text(const std::string& text);

}  // namespace bimodal::metrics
