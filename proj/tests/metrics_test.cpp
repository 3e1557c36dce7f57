#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bimodal/metrics.hpp"
#include "bimodal/types.hpp"

using namespace bimodal;
using namespace bimodal::metrics;

TEST_CASE("accumulate counts into the (true, predicted) cell") {
  ConfusionMatrix cm;
  cm.accumulate(0, 0);
  CHECK(cm.counts(0, 0) == 1);
  CHECK(cm.total() == 1);
  CHECK_THROWS_AS(cm.accumulate(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(cm.accumulate(0, -1), std::invalid_argument);
}

TEST_CASE("accumulation order is irrelevant") {
  const std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 2}, {1, 1}, {0, 0}, {2, 0}};
  ConfusionMatrix forward_order, reverse_order;
  for (const auto& [t, p] : pairs) forward_order.accumulate(t, p);
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it)
    reverse_order.accumulate(it->first, it->second);
  CHECK(forward_order.counts == reverse_order.counts);
}

TEST_CASE("report: worked example") {
  // true (0,0,1,2), predicted (0,1,1,2)
  ConfusionMatrix cm;
  cm.accumulate(0, 0);
  cm.accumulate(0, 1);
  cm.accumulate(1, 1);
  cm.accumulate(2, 2);
  const auto rep = report(cm);
  CHECK(rep.wa == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(rep.neg_recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.pos_recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.neu_recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.ua == doctest::Approx(2.5 / 3.0).epsilon(1e-12));
  CHECK(rep.support == std::array<int64_t, 3>{2, 1, 1});
}

TEST_CASE("report: perfect predictions") {
  ConfusionMatrix cm;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i) cm.accumulate(c, c);
  const auto rep = report(cm);
  CHECK(rep.wa == 1.0);
  CHECK(rep.ua == 1.0);
  CHECK(rep.neg_recall == 1.0);
  CHECK(rep.pos_recall == 1.0);
  CHECK(rep.neu_recall == 1.0);
}

TEST_CASE("report: majority-class predictor on the SWITCHBOARD counts") {
  // 8549 negative, 15308 positive, 25445 neutral; everything predicted
  // neutral.
  ConfusionMatrix cm;
  cm.counts(0, 2) = 8549;
  cm.counts(1, 2) = 15308;
  cm.counts(2, 2) = 25445;
  const auto rep = report(cm);
  CHECK(cm.total() == 49302);
  CHECK(std::abs(rep.wa - 0.516) <= 0.001);
  CHECK(std::abs(rep.ua - 1.0 / 3.0) <= 1e-9);
  CHECK(rep.neg_recall == 0.0);
  CHECK(rep.pos_recall == 0.0);
  CHECK(rep.neu_recall == 1.0);
}

TEST_CASE("report: zero-support class is rejected by name") {
  ConfusionMatrix cm;
  cm.accumulate(0, 0);
  cm.accumulate(2, 2);
  CHECK_THROWS_WITH_AS(report(cm), doctest::Contains("positive"), std::invalid_argument);
  ConfusionMatrix empty;
  CHECK_THROWS_AS(report(empty), std::invalid_argument);
}

TEST_CASE("report: ua identity and wa identity on random matrices") {
  Rng rng(123);
  for (int trial = 0; trial < 2000; ++trial) {
    ConfusionMatrix cm;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cm.counts(r, c) = rng.uniform_int(0, 50);
      if (cm.counts.row(r).sum() == 0) cm.counts(r, r) = 1;
    }
    const auto rep = report(cm);
    CHECK(std::abs(rep.ua - (rep.neg_recall + rep.pos_recall + rep.neu_recall) / 3.0) <= 1e-12);
    CHECK(std::abs(rep.wa - static_cast<double>(cm.counts.trace()) /
                                static_cast<double>(cm.total())) <= 1e-12);
  }
}

TEST_CASE("uniform-random predictor on balanced data approaches wa = ua = 1/3") {
  Rng rng(7);
  ConfusionMatrix cm;
  for (int i = 0; i < 10000; ++i)
    cm.accumulate(static_cast<int>(rng.uniform_int(0, 2)),
                  static_cast<int>(rng.uniform_int(0, 2)));
  const auto rep = report(cm);
  CHECK(std::abs(rep.wa - 1.0 / 3.0) <= 0.02);
  CHECK(std::abs(rep.ua - 1.0 / 3.0) <= 0.02);
}

TEST_CASE("aggregate_folds: identity on one report, mean on two") {
  ConfusionMatrix cm;
  cm.accumulate(0, 0);
  cm.accumulate(1, 1);
  cm.accumulate(2, 2);
  const auto rep = report(cm);
  const std::vector<MetricsReport> one = {rep};
  const auto same = aggregate_folds(one);
  CHECK(same.wa == rep.wa);
  CHECK(same.ua == rep.ua);

  MetricsReport a = rep, b = rep;
  a.wa = 0.6;
  b.wa = 0.8;
  const std::vector<MetricsReport> two = {a, b};
  CHECK(aggregate_folds(two).wa == doctest::Approx(0.7).epsilon(1e-12));
  CHECK_THROWS_AS(aggregate_folds(std::vector<MetricsReport>{}), std::invalid_argument);
}

TEST_CASE("aggregate_folds preserves the ua identity when it holds per fold") {
  Rng rng(9);
  std::vector<MetricsReport> reports;
  for (int f = 0; f < 5; ++f) {
    ConfusionMatrix cm;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cm.counts(r, c) = rng.uniform_int(1, 30);
    }
    reports.push_back(report(cm));
  }
  const auto agg = aggregate_folds(reports);
  CHECK(std::abs(agg.ua - (agg.neg_recall + agg.pos_recall + agg.neu_recall) / 3.0) <= 1e-12);
  int64_t support_sum = 0;
  for (const auto& r : reports) support_sum += r.support[0] + r.support[1] + r.support[2];
  CHECK(agg.support[0] + agg.support[1] + agg.support[2] == support_sum);
}

TEST_CASE("report JSON round trip keeps 4-decimal metrics and counts") {
  ConfusionMatrix cm;
  cm.accumulate(0, 0);
  cm.accumulate(0, 1);
  cm.accumulate(1, 1);
  cm.accumulate(2, 0);
  cm.accumulate(2, 2);
  const auto rep = report(cm);
  const std::string text = report_to_json_text(rep, &cm);
  CHECK(text.find("\"confusion\"") != std::string::npos);
  const auto parsed = report_from_json_text(text);
  CHECK(parsed.wa == doctest::Approx(rep.wa).epsilon(1e-4));
  CHECK(parsed.ua == doctest::Approx(rep.ua).epsilon(1e-4));
  CHECK(parsed.support == rep.support);
}
