#pragma once

#include "bimodal/nets.hpp"
#include "bimodal/trainer.hpp"
#include "bimodal/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace bimodal::fusion {

struct ForestConfig {
  int num_trees = 100;
  int max_depth = 0;  // 0: unlimited
  int min_samples_leaf = 1;
  int features_per_split = 0;  // 0: floor(sqrt(dim))
  uint64_t seed = 0;
};

// Axis-aligned splits on Gini impurity. Leaves keep their class counts.
struct TreeNode {
  int feature = -1;  // -1: leaf
  float threshold = 0.0f;
  int left = -1, right = -1;
  std::array<int64_t, kNumClasses> counts{};
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  int predict(const VectorF& x) const;  // leaf majority, lowest index ties
};

struct Forest {
  std::vector<DecisionTree> trees;
  int dim = 0;

  std::string to_json_text() const;
  static Forest from_json_text(const std::string& text);
};

// Fits one tree on the given sample indices (no bootstrap). Candidate
// features per node are drawn from an Rng derived from tree_seed and the
// node's path, so deeper depth limits refine rather than reshuffle trees.
DecisionTree fit_tree(const MatrixF& features, const std::vector<int>& labels,
                      const std::vector<int64_t>& sample_indices, const ForestConfig& config,
                      uint64_t tree_seed);

// Bootstrap-bagged trees with per-tree derived seeds. Throws when fewer than
// two classes are present.
Forest fit_forest(const MatrixF& features, const std::vector<int>& labels,
                  const ForestConfig& config);

// Plurality vote over tree predictions; ties break to the lowest class index.
SentimentLabel predict(const Forest& forest, const VectorF& x);

// Concatenated [acoustic | text] penultimate activations for a batch of
// aligned examples (same utterance order in both datasets).
struct FusedDataset {
  MatrixF features;  // n x (acoustic_dim + text_dim)
  std::vector<int> labels;
  std::vector<std::string> ids;
};

template <typename S>
FusedDataset extract_fused(nets::ModelGraph<S>& acoustic_graph, nets::ModelGraph<S>& text_graph,
                           const trainer::Dataset<S>& acoustic_data,
                           const trainer::Dataset<S>& text_data, int batch_size) {
  if (acoustic_data.size() != text_data.size())
    throw std::invalid_argument("extract_fused: modality datasets differ in size");
  const int acoustic_dim = acoustic_graph.penultimate_dim;
  const int text_dim = text_graph.penultimate_dim;
  FusedDataset out;
  out.features.resize(static_cast<Eigen::Index>(acoustic_data.size()), acoustic_dim + text_dim);
  out.labels.resize(acoustic_data.size());
  out.ids.resize(acoustic_data.size());
  std::vector<size_t> order(acoustic_data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t begin = 0; begin < acoustic_data.size(); begin += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(acoustic_data.size(), begin + static_cast<size_t>(batch_size));
    const auto a_batch =
        trainer::make_batch(acoustic_data, order, begin, end, nets::GraphKind::acoustic);
    const auto t_batch = trainer::make_batch(text_data, order, begin, end, nets::GraphKind::text);
    const auto a_result = nets::forward(acoustic_graph, a_batch, nets::Mode::eval);
    const auto t_result = nets::forward(text_graph, t_batch, nets::Mode::eval);
    if (a_result.penultimate.cols() != acoustic_dim || t_result.penultimate.cols() != text_dim)
      throw std::logic_error("extract_fused: penultimate width does not match the preset");
    for (size_t i = begin; i < end; ++i) {
      const auto b = static_cast<Eigen::Index>(i - begin);
      if (acoustic_data[i].id != text_data[i].id)
        throw std::invalid_argument("extract_fused: modality datasets are not aligned at '" +
                                    acoustic_data[i].id + "'");
      if (acoustic_data[i].label != text_data[i].label)
        throw std::invalid_argument("extract_fused: label mismatch at '" + acoustic_data[i].id +
                                    "'");
      out.features.block(static_cast<Eigen::Index>(i), 0, 1, acoustic_dim) =
          a_result.penultimate.row(b).template cast<float>();
      out.features.block(static_cast<Eigen::Index>(i), acoustic_dim, 1, text_dim) =
          t_result.penultimate.row(b).template cast<float>();
      out.labels[i] = acoustic_data[i].label;
      out.ids[i] = acoustic_data[i].id;
    }
  }
  return out;
}

// Fused vectors in the same binary float32 grid format as the feature cache;
// labels and ids ride in a CSV alongside.
void save_fused_dataset(const FusedDataset& data, const std::string& bin_path,
                        const std::string& index_csv_path);
FusedDataset load_fused_dataset(const std::string& bin_path, const std::string& index_csv_path);

}  // namespace bimodal::fusion
