#pragma once

#include "bimodal/corpus.hpp"

#include <map>
#include <string>
#include <vector>

namespace bimodal::splits {

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of_dialog;

  std::string to_json_text() const;
  static FoldAssignment from_json_text(const std::string& text);
};

struct FoldView {
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;
};

// Greedy balanced dialog-to-fold assignment. Dialogs are taken in descending
// labeled-utterance count (ties by dialog_id) and each goes to the fold that
// minimizes the squared deviation of per-class counts from the fold's
// proportional target. The seed shuffles the fold order used to break
// equal-cost ties.
FoldAssignment assign_folds(const corpus::Corpus& corpus, int k, uint64_t seed);

// Test set = dialogs of test_fold, validation set = dialogs of
// validation_fold, train = the rest. Only labeled utterances are included;
// ids come back sorted.
FoldView fold_view(const corpus::Corpus& corpus, const FoldAssignment& assignment,
                   int test_fold, int validation_fold);

}  // namespace bimodal::splits
