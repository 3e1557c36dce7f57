#include "bimodal/splits.hpp"

#include "json.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

using nlohmann::json;

namespace bimodal::splits {

std::string FoldAssignment::to_json_text() const {
  json j;
  j["k"] = k;
  j["fold_of_dialog"] = json::object();
  for (const auto& [dialog, fold] : fold_of_dialog) j["fold_of_dialog"][dialog] = fold;
  return j.dump(2);
}

FoldAssignment FoldAssignment::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  FoldAssignment a;
  a.k = j.at("k").get<int>();
  for (const auto& [dialog, fold] : j.at("fold_of_dialog").items())
    a.fold_of_dialog[dialog] = fold.get<int>();
  return a;
}

namespace {

struct DialogStats {
  std::string id;
  std::array<int64_t, kNumClasses> counts{};
  int64_t labeled = 0;
};

}  // namespace

FoldAssignment assign_folds(const corpus::Corpus& corpus, int k, uint64_t seed) {
  if (k < 1) throw std::invalid_argument("assign_folds: k must be >= 1");

  std::map<std::string, DialogStats> by_dialog;
  std::array<int64_t, kNumClasses> totals{};
  for (const auto& u : corpus.utterances) {
    auto& d = by_dialog[u.dialog_id];
    d.id = u.dialog_id;
    if (u.label) {
      d.counts[static_cast<int>(*u.label)] += 1;
      d.labeled += 1;
      totals[static_cast<int>(*u.label)] += 1;
    }
  }

  std::vector<DialogStats> dialogs;
  dialogs.reserve(by_dialog.size());
  int64_t labeled_dialogs = 0;
  for (auto& [id, d] : by_dialog) {
    (void)id;
    if (d.labeled > 0) ++labeled_dialogs;
    dialogs.push_back(std::move(d));
  }
  if (labeled_dialogs < k)
    throw std::invalid_argument("assign_folds: corpus has " + std::to_string(labeled_dialogs) +
                                " dialogs with labeled utterances, need at least " +
                                std::to_string(k));

  std::sort(dialogs.begin(), dialogs.end(), [](const DialogStats& a, const DialogStats& b) {
    if (a.labeled != b.labeled) return a.labeled > b.labeled;
    return a.id < b.id;
  });

  // Seeded fold visiting order; the first minimizer in this order wins ties.
  std::vector<int> fold_order(static_cast<size_t>(k));
  std::iota(fold_order.begin(), fold_order.end(), 0);
  Rng rng(seed);
  rng.shuffle(fold_order.begin(), fold_order.end());

  std::array<double, kNumClasses> target{};
  double size_target = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    target[c] = static_cast<double>(totals[c]) / static_cast<double>(k);
    size_target += target[c];
  }

  // Each dialog goes to the fold where it least increases the global
  // squared deviation from the proportional targets (per class, plus a
  // common-mode term that keeps fold sizes even). Comparing the change
  // rather than the post-add deviation keeps lagging folds attractive.
  std::vector<std::array<int64_t, kNumClasses>> fold_counts(static_cast<size_t>(k));
  FoldAssignment assignment;
  assignment.k = k;
  for (const auto& d : dialogs) {
    int best_fold = -1;
    double best_delta = 0.0;
    for (int f : fold_order) {
      double delta = 0.0;
      double size_before = 0.0, size_after = 0.0;
      for (int c = 0; c < kNumClasses; ++c) {
        const double before =
            static_cast<double>(fold_counts[static_cast<size_t>(f)][c]) - target[c];
        const double after = before + static_cast<double>(d.counts[c]);
        delta += after * after - before * before;
        size_before += before;
        size_after += after;
      }
      delta += size_after * size_after - size_before * size_before;
      if (best_fold < 0 || delta < best_delta) {
        best_fold = f;
        best_delta = delta;
      }
    }
    for (int c = 0; c < kNumClasses; ++c)
      fold_counts[static_cast<size_t>(best_fold)][c] += d.counts[c];
    assignment.fold_of_dialog[d.id] = best_fold;
  }
  return assignment;
}

FoldView fold_view(const corpus::Corpus& corpus, const FoldAssignment& assignment,
                   int test_fold, int validation_fold) {
  if (test_fold < 0 || test_fold >= assignment.k || validation_fold < 0 ||
      validation_fold >= assignment.k)
    throw std::invalid_argument("fold_view: fold index out of range");
  if (test_fold == validation_fold)
    throw std::invalid_argument("fold_view: test and validation folds must differ");

  FoldView view;
  for (const auto& u : corpus.utterances) {
    if (!u.label) continue;
    const auto it = assignment.fold_of_dialog.find(u.dialog_id);
    if (it == assignment.fold_of_dialog.end())
      throw std::invalid_argument("fold_view: dialog '" + u.dialog_id + "' has no fold");
    if (it->second == test_fold) view.test_ids.push_back(u.id);
    else if (it->second == validation_fold) view.validation_ids.push_back(u.id);
    else view.train_ids.push_back(u.id);
  }
  std::sort(view.train_ids.begin(), view.train_ids.end());
  std::sort(view.validation_ids.begin(), view.validation_ids.end());
  std::sort(view.test_ids.begin(), view.test_ids.end());
  return view;
}

}  // namespace bimodal::splits
