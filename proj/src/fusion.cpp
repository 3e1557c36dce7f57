#include "bimodal/fusion.hpp"

#include "bimodal/audio_features.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

using nlohmann::json;

namespace bimodal::fusion {

int DecisionTree::predict(const VectorF& x) const {
  int node = 0;
  while (nodes[static_cast<size_t>(node)].feature >= 0) {
    const auto& n = nodes[static_cast<size_t>(node)];
    node = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  const auto& counts = nodes[static_cast<size_t>(node)].counts;
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (counts[static_cast<size_t>(c)] > counts[static_cast<size_t>(best)]) best = c;
  return best;
}

namespace {

double gini(const std::array<int64_t, kNumClasses>& counts, int64_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int64_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct SplitChoice {
  int feature = -1;
  float threshold = 0.0f;
  double gain = -1.0;
};

struct TreeBuilder {
  const MatrixF& features;
  const std::vector<int>& labels;
  const ForestConfig& config;
  uint64_t tree_seed;
  std::vector<TreeNode> nodes;

  int features_per_split() const {
    if (config.features_per_split > 0) return config.features_per_split;
    return std::max(1, static_cast<int>(std::floor(std::sqrt(
                           static_cast<double>(features.cols())))));
  }

  // Node-path-seeded sampling: a deeper depth limit extends a tree instead
  // of changing splits above the new leaves.
  std::vector<int> sample_features(uint64_t node_path) const {
    const int dim = static_cast<int>(features.cols());
    const int want = std::min(features_per_split(), dim);
    Rng rng(mix64(tree_seed ^ mix64(node_path)));
    std::vector<int> all(static_cast<size_t>(dim));
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < want; ++i) {
      const auto j = static_cast<size_t>(rng.uniform_int(i, dim - 1));
      std::swap(all[static_cast<size_t>(i)], all[j]);
    }
    all.resize(static_cast<size_t>(want));
    return all;
  }

  SplitChoice best_split(const std::vector<int64_t>& samples,
                         const std::array<int64_t, kNumClasses>& node_counts,
                         uint64_t node_path) const {
    const auto total = static_cast<int64_t>(samples.size());
    const double parent_gini = gini(node_counts, total);
    SplitChoice best;
    std::vector<std::pair<float, int>> values(samples.size());
    for (const int feature : sample_features(node_path)) {
      for (size_t i = 0; i < samples.size(); ++i) {
        const int64_t s = samples[i];
        values[i] = {features(s, feature), labels[static_cast<size_t>(s)]};
      }
      std::sort(values.begin(), values.end());
      std::array<int64_t, kNumClasses> left_counts{};
      int64_t left_total = 0;
      for (size_t i = 0; i + 1 < values.size(); ++i) {
        left_counts[static_cast<size_t>(values[i].second)] += 1;
        ++left_total;
        if (values[i].first == values[i + 1].first) continue;  // not a boundary
        const int64_t right_total = total - left_total;
        if (left_total < config.min_samples_leaf || right_total < config.min_samples_leaf)
          continue;
        std::array<int64_t, kNumClasses> right_counts{};
        for (int c = 0; c < kNumClasses; ++c)
          right_counts[static_cast<size_t>(c)] =
              node_counts[static_cast<size_t>(c)] - left_counts[static_cast<size_t>(c)];
        const double child_gini =
            (static_cast<double>(left_total) * gini(left_counts, left_total) +
             static_cast<double>(right_total) * gini(right_counts, right_total)) /
            static_cast<double>(total);
        const double gain = parent_gini - child_gini;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = feature;
          best.threshold = 0.5f * (values[i].first + values[i + 1].first);
        }
      }
    }
    return best;
  }

  int build(const std::vector<int64_t>& samples, int depth, uint64_t node_path) {
    std::array<int64_t, kNumClasses> counts{};
    for (int64_t s : samples) counts[static_cast<size_t>(labels[static_cast<size_t>(s)])] += 1;

    const int node_index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[static_cast<size_t>(node_index)].counts = counts;

    int present = 0;
    for (int64_t c : counts) present += c > 0 ? 1 : 0;
    const bool depth_capped = config.max_depth > 0 && depth >= config.max_depth;
    if (present <= 1 || depth_capped ||
        static_cast<int64_t>(samples.size()) < 2 * config.min_samples_leaf) {
      return node_index;
    }

    const auto split = best_split(samples, counts, node_path);
    if (split.feature < 0 || split.gain <= 0.0) return node_index;

    std::vector<int64_t> left, right;
    left.reserve(samples.size());
    right.reserve(samples.size());
    for (int64_t s : samples) {
      if (features(s, split.feature) <= split.threshold) left.push_back(s);
      else right.push_back(s);
    }
    if (left.empty() || right.empty()) return node_index;

    const int left_index = build(left, depth + 1, node_path * 2);
    const int right_index = build(right, depth + 1, node_path * 2 + 1);
    auto& node = nodes[static_cast<size_t>(node_index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_index;
    node.right = right_index;
    return node_index;
  }
};

}  // namespace

DecisionTree fit_tree(const MatrixF& features, const std::vector<int>& labels,
                      const std::vector<int64_t>& sample_indices, const ForestConfig& config,
                      uint64_t tree_seed) {
  if (sample_indices.empty()) throw std::invalid_argument("fit_tree: no samples");
  TreeBuilder builder{features, labels, config, tree_seed, {}};
  builder.build(sample_indices, 0, 1);
  DecisionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

Forest fit_forest(const MatrixF& features, const std::vector<int>& labels,
                  const ForestConfig& config) {
  if (config.num_trees < 1) throw std::invalid_argument("fit_forest: num_trees must be >= 1");
  const auto n = static_cast<int64_t>(features.rows());
  if (n == 0 || labels.size() != static_cast<size_t>(n))
    throw std::invalid_argument("fit_forest: features/labels size mismatch");
  std::array<int64_t, kNumClasses> counts{};
  for (int label : labels) {
    if (label < 0 || label >= kNumClasses)
      throw std::invalid_argument("fit_forest: label out of range");
    counts[static_cast<size_t>(label)] += 1;
  }
  int present = 0;
  for (int64_t c : counts) present += c > 0 ? 1 : 0;
  if (present < 2)
    throw std::invalid_argument("fit_forest: need at least two classes in the training data");

  Rng rng(config.seed);
  Forest forest;
  forest.dim = static_cast<int>(features.cols());
  forest.trees.reserve(static_cast<size_t>(config.num_trees));
  for (int t = 0; t < config.num_trees; ++t) {
    Rng tree_rng = rng.fork(static_cast<uint64_t>(t));
    std::vector<int64_t> bootstrap(static_cast<size_t>(n));
    for (auto& idx : bootstrap) idx = tree_rng.uniform_int(0, n - 1);
    forest.trees.push_back(
        fit_tree(features, labels, bootstrap, config, tree_rng.origin()));
  }
  return forest;
}

SentimentLabel predict(const Forest& forest, const VectorF& x) {
  if (x.size() != forest.dim)
    throw std::invalid_argument("predict: vector dim " + std::to_string(x.size()) +
                                " does not match forest dim " + std::to_string(forest.dim));
  std::array<int64_t, kNumClasses> votes{};
  for (const auto& tree : forest.trees) votes[static_cast<size_t>(tree.predict(x))] += 1;
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)]) best = c;
  return static_cast<SentimentLabel>(best);
}

std::string Forest::to_json_text() const {
  json trees_json = json::array();
  for (const auto& tree : trees) {
    json nodes_json = json::array();
    for (const auto& n : tree.nodes) {
      if (n.feature >= 0)
        nodes_json.push_back(
            {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
             {"right", n.right}});
      else
        nodes_json.push_back({{"counts", {n.counts[0], n.counts[1], n.counts[2]}}});
    }
    trees_json.push_back(nodes_json);
  }
  return json{{"dim", dim}, {"trees", trees_json}}.dump();
}

Forest Forest::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  Forest forest;
  forest.dim = j.at("dim").get<int>();
  for (const auto& tree_json : j.at("trees")) {
    DecisionTree tree;
    for (const auto& n : tree_json) {
      TreeNode node;
      if (n.contains("feature")) {
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<float>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
      } else {
        const auto& counts = n.at("counts");
        for (int c = 0; c < kNumClasses; ++c)
          node.counts[static_cast<size_t>(c)] = counts.at(c).get<int64_t>();
      }
      tree.nodes.push_back(node);
    }
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

void save_fused_dataset(const FusedDataset& data, const std::string& bin_path,
                        const std::string& index_csv_path) {
  audio_features::save_feature_grid(bin_path, data.features.cast<double>());
  std::ofstream out(index_csv_path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_fused_dataset: cannot open '" + index_csv_path + "'");
  out << "id,label\n";
  for (size_t i = 0; i < data.ids.size(); ++i)
    out << data.ids[i] << ',' << data.labels[i] << '\n';
}

FusedDataset load_fused_dataset(const std::string& bin_path, const std::string& index_csv_path) {
  FusedDataset data;
  data.features = audio_features::load_feature_grid(bin_path).cast<float>();
  std::ifstream in(index_csv_path);
  if (!in) throw std::runtime_error("load_fused_dataset: cannot open '" + index_csv_path + "'");
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("load_fused_dataset: malformed row '" + line + "'");
    data.ids.push_back(line.substr(0, comma));
    data.labels.push_back(std::stoi(line.substr(comma + 1)));
  }
  if (static_cast<Eigen::Index>(data.ids.size()) != data.features.rows())
    throw std::runtime_error("load_fused_dataset: index/feature row count mismatch");
  return data;
}

}  // namespace bimodal::fusion
