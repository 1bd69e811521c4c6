#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsrnn/data.hpp"
#include "tsrnn/net.hpp"

namespace tsrnn {

struct ForestConfig {
  int num_trees = 400;
  int max_depth = 25;
  int min_samples_split = 2;
  int features_per_split = 0;  // 0 = ceil(sqrt(d))
  std::uint64_t seed = 1;
};

// CART node; nodes are stored in pre-order, the left child immediately
// follows its parent.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int right = -1;                     // pre-order index of the right child
  std::vector<long long> histogram;   // leaf class counts (index c-1)
};

struct Tree {
  std::vector<TreeNode> nodes;
};

struct Forest {
  ForestConfig cfg;
  int num_classes = 0;
  int num_features = 0;
  std::vector<Tree> trees;
};

// 1 - sum p_c^2 over the class counts; rejects empty counts.
double gini(const std::vector<long long>& counts);

// Bootstrap-resampled CART trees, best gini split over a seeded random
// feature subset per node, midpoint thresholds between consecutive distinct
// values.
Forest fit_forest(const Dataset& ds, std::span<const int> train_idx, const ForestConfig& cfg,
                  int num_classes, int threads = 1);

// Majority vote; probs are vote fractions, ties go to the smaller class
// index. argmax_class is 0-based like the network head.
Prediction predict_forest(const Forest& f, std::span<const double> features);

int tree_depth(const Tree& t);  // inspection helper for tests

void save_forest(const Forest& f, const std::string& path_prefix);  // .json + .bin
Forest load_forest(const std::string& path_prefix);

struct LogisticConfig {
  double rate = 1.0;
  int epochs = 300;
  std::uint64_t seed = 1;  // reserved; zero-init training is deterministic
};

struct LogisticModel {
  int num_classes = 0;
  int num_features = 0;
  double input_scale = 1.0 / 255.0;
  Matrix W;  // num_classes x num_features
  Vec b;
  std::vector<double> epoch_loss;
};

// Full-batch gradient descent on the multinomial cross-entropy; features are
// rescaled by input_scale internally.
LogisticModel fit_logistic(const Dataset& ds, std::span<const int> train_idx,
                           const LogisticConfig& cfg, int num_classes);
Prediction predict_logistic(const LogisticModel& m, std::span<const double> features);

void save_logistic(const LogisticModel& m, const std::string& path_prefix);
LogisticModel load_logistic(const std::string& path_prefix);

}  // namespace tsrnn
