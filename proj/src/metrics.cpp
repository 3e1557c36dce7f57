#include "bimodal/metrics.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

using nlohmann::json;

namespace bimodal::metrics {

void ConfusionMatrix::accumulate(int true_label, int predicted_label) {
  if (true_label < 0 || true_label >= kNumClasses || predicted_label < 0 ||
      predicted_label >= kNumClasses)
    throw std::invalid_argument("ConfusionMatrix::accumulate: label out of range");
  counts(true_label, predicted_label) += 1;
}

double MetricsReport::recall(SentimentLabel label) const {
  switch (label) {
    case SentimentLabel::negative: return neg_recall;
    case SentimentLabel::positive: return pos_recall;
    case SentimentLabel::neutral: return neu_recall;
  }
  throw std::invalid_argument("MetricsReport::recall: invalid label");
}

MetricsReport report(const ConfusionMatrix& cm) {
  MetricsReport rep;
  const int64_t total = cm.total();
  if (total <= 0) throw std::invalid_argument("report: empty confusion matrix");
  std::array<double, kNumClasses> recalls{};
  for (int c = 0; c < kNumClasses; ++c) {
    const int64_t row = cm.counts.row(c).sum();
    if (row == 0)
      throw std::invalid_argument("report: class '" +
                                  std::string(label_name(static_cast<SentimentLabel>(c))) +
                                  "' has zero support");
    rep.support[static_cast<size_t>(c)] = row;
    recalls[static_cast<size_t>(c)] =
        static_cast<double>(cm.counts(c, c)) / static_cast<double>(row);
  }
  rep.wa = static_cast<double>(cm.counts.trace()) / static_cast<double>(total);
  rep.neg_recall = recalls[0];
  rep.pos_recall = recalls[1];
  rep.neu_recall = recalls[2];
  rep.ua = (recalls[0] + recalls[1] + recalls[2]) / 3.0;
  return rep;
}

MetricsReport aggregate_folds(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_folds: no reports");
  MetricsReport out;
  for (const auto& r : reports) {
    out.wa += r.wa;
    out.ua += r.ua;
    out.neg_recall += r.neg_recall;
    out.pos_recall += r.pos_recall;
    out.neu_recall += r.neu_recall;
    for (size_t c = 0; c < kNumClasses; ++c) out.support[c] += r.support[c];
  }
  const auto n = static_cast<double>(reports.size());
  out.wa /= n;
  out.ua /= n;
  out.neg_recall /= n;
  out.pos_recall /= n;
  out.neu_recall /= n;
  return out;
}

namespace {

double round4(double x) { return std::round(x * 10000.0) / 10000.0; }

}  // namespace

std::string report_to_json_text(const MetricsReport& rep, const ConfusionMatrix* cm) {
  json j;
  j["wa"] = round4(rep.wa);
  j["ua"] = round4(rep.ua);
  j["neg_recall"] = round4(rep.neg_recall);
  j["pos_recall"] = round4(rep.pos_recall);
  j["neu_recall"] = round4(rep.neu_recall);
  j["support"] = {rep.support[0], rep.support[1], rep.support[2]};
  if (cm) {
    json rows = json::array();
    for (int r = 0; r < kNumClasses; ++r) {
      json row = json::array();
      for (int c = 0; c < kNumClasses; ++c) row.push_back(cm->counts(r, c));
      rows.push_back(row);
    }
    j["confusion"] = rows;
  }
  return j.dump(2);
}

MetricsReport report_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  MetricsReport rep;
  rep.wa = j.at("wa").get<double>();
  rep.ua = j.at("ua").get<double>();
  rep.neg_recall = j.at("neg_recall").get<double>();
  rep.pos_recall = j.at("pos_recall").get<double>();
  rep.neu_recall = j.at("neu_recall").get<double>();
  const auto& s = j.at("support");
  for (size_t c = 0; c < kNumClasses; ++c) rep.support[c] = s.at(c).get<int64_t>();
  return rep;
}

}  // namespace bimodal::metrics
