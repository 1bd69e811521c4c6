#include "tsrnn/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/parallel.hpp"
#include "tsrnn/rng.hpp"

namespace tsrnn {

double gini(const std::vector<long long>& counts) {
  if (counts.empty()) throw_invalid("gini: empty counts");
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw_invalid("gini: negative count");
    total += c;
  }
  if (total == 0) throw_invalid("gini: total count must be > 0");
  double sum_sq = 0.0;
  for (long long c : counts) {
    const double p = double(c) / double(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace {

struct TreeBuilder {
  const Dataset& ds;
  const ForestConfig& cfg;
  int num_classes;
  int num_features;
  int k_features;  // candidates per node
  Rng rng;
  Tree tree;
  std::vector<int> feature_pool;               // scratch for subset sampling
  std::vector<std::pair<double, int>> sorted;  // (value, class) scratch

  TreeBuilder(const Dataset& d, const ForestConfig& c, int classes, std::uint64_t seed)
      : ds(d), cfg(c), num_classes(classes), num_features(d.feature_dim()), rng(seed) {
    k_features = cfg.features_per_split > 0
                     ? std::min(cfg.features_per_split, num_features)
                     : int(std::ceil(std::sqrt(double(num_features))));
    feature_pool.resize(std::size_t(num_features));
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
  }

  std::vector<long long> class_counts(std::span<const int> samples) const {
    std::vector<long long> counts(std::size_t(num_classes), 0);
    for (int s : samples) ++counts[std::size_t(ds.samples[std::size_t(s)].label - 1)];
    return counts;
  }

  int make_leaf(std::vector<long long> counts) {
    TreeNode node;
    node.histogram = std::move(counts);
    tree.nodes.push_back(std::move(node));
    return int(tree.nodes.size()) - 1;
  }

  // grows samples[lo, hi) into a subtree, returns its pre-order root index
  int grow(std::vector<int>& samples, int lo, int hi, int depth) {
    std::span<const int> node_samples(samples.data() + lo, std::size_t(hi - lo));
    std::vector<long long> counts = class_counts(node_samples);
    const int n = hi - lo;

    bool pure = false;
    for (long long c : counts)
      if (c == n) pure = true;
    if (pure || depth >= cfg.max_depth || n < cfg.min_samples_split)
      return make_leaf(std::move(counts));

    // seeded feature subset: first k of a partial Fisher-Yates pass
    for (int i = 0; i < k_features; ++i) {
      const int j = i + int(rng.below(std::uint64_t(num_features - i)));
      std::swap(feature_pool[std::size_t(i)], feature_pool[std::size_t(j)]);
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<long long> left_counts(static_cast<std::size_t>(num_classes));

    for (int fi = 0; fi < k_features; ++fi) {
      const int f = feature_pool[std::size_t(fi)];
      sorted.clear();
      for (int s : node_samples)
        sorted.emplace_back(ds.samples[std::size_t(s)].features[std::size_t(f)],
                            ds.samples[std::size_t(s)].label - 1);
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant feature

      std::fill(left_counts.begin(), left_counts.end(), 0);
      long long n_left = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left_counts[std::size_t(sorted[i].second)];
        ++n_left;
        if (sorted[i].first == sorted[i + 1].first) continue;
        // candidate split between distinct consecutive values
        double sq_l = 0.0, sq_r = 0.0;
        const long long n_right = n - n_left;
        for (int c = 0; c < num_classes; ++c) {
          const double cl = double(left_counts[std::size_t(c)]);
          const double cr = double(counts[std::size_t(c)] - left_counts[std::size_t(c)]);
          sq_l += cl * cl;
          sq_r += cr * cr;
        }
        const double gini_l = 1.0 - sq_l / (double(n_left) * double(n_left));
        const double gini_r = 1.0 - sq_r / (double(n_right) * double(n_right));
        const double score = (double(n_left) * gini_l + double(n_right) * gini_r) / double(n);
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0;
        }
      }
    }

    if (best_feature < 0) return make_leaf(std::move(counts));  // no splittable candidate

    auto mid = std::partition(samples.begin() + lo, samples.begin() + hi, [&](int s) {
      return ds.samples[std::size_t(s)].features[std::size_t(best_feature)] <= best_threshold;
    });
    const int split = int(mid - samples.begin());
    if (split == lo || split == hi) return make_leaf(std::move(counts));

    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    const int self = int(tree.nodes.size());
    tree.nodes.push_back(std::move(node));
    grow(samples, lo, split, depth + 1);  // left child lands at self + 1
    tree.nodes[std::size_t(self)].right = grow(samples, split, hi, depth + 1);
    return self;
  }

  Tree build(std::span<const int> train_idx) {
    tree.nodes.clear();
    const std::size_t n = train_idx.size();
    std::vector<int> samples(n);
    for (std::size_t i = 0; i < n; ++i)
      samples[i] = train_idx[std::size_t(rng.below(std::uint64_t(n)))];
    grow(samples, 0, int(n), 0);
    return std::move(tree);
  }
};

int leaf_class(const TreeNode& node) {
  int best = 0;
  for (std::size_t c = 1; c < node.histogram.size(); ++c)
    if (node.histogram[c] > node.histogram[std::size_t(best)]) best = int(c);
  return best;
}

}  // namespace

Forest fit_forest(const Dataset& ds, std::span<const int> train_idx, const ForestConfig& cfg,
                  int num_classes, int threads) {
  if (train_idx.empty()) throw_invalid("fit_forest: empty training set");
  if (cfg.num_trees < 1) throw_invalid("fit_forest: num_trees must be >= 1");
  if (cfg.max_depth < 1) throw_invalid("fit_forest: max_depth must be >= 1");
  if (cfg.min_samples_split < 2) throw_invalid("fit_forest: min_samples_split must be >= 2");
  for (int s : train_idx) {
    const TimeSeriesSample& ts = ds.samples[std::size_t(s)];
    if (ts.label < 1 || ts.label > num_classes)
      throw_invalid("fit_forest: sample label outside 1.." + std::to_string(num_classes));
  }

  Forest f;
  f.cfg = cfg;
  f.num_classes = num_classes;
  f.num_features = ds.feature_dim();
  f.trees.resize(std::size_t(cfg.num_trees));
  // one independent seed per tree, so scheduling cannot change any tree
  parallel_for(cfg.num_trees, threads, [&](int t) {
    TreeBuilder builder(ds, cfg, num_classes, derive_seed(cfg.seed, std::uint64_t(t)));
    f.trees[std::size_t(t)] = builder.build(train_idx);
  });
  return f;
}

Prediction predict_forest(const Forest& f, std::span<const double> features) {
  if (int(features.size()) != f.num_features) {
    std::ostringstream os;
    os << "predict_forest: expected " << f.num_features << " features, got " << features.size();
    throw_invalid(os.str());
  }
  std::vector<long long> votes(std::size_t(f.num_classes), 0);
  for (const Tree& tree : f.trees) {
    int i = 0;
    while (tree.nodes[std::size_t(i)].feature >= 0) {
      const TreeNode& node = tree.nodes[std::size_t(i)];
      i = (features[std::size_t(node.feature)] <= node.threshold) ? i + 1 : node.right;
    }
    ++votes[std::size_t(leaf_class(tree.nodes[std::size_t(i)]))];
  }
  Prediction pred;
  pred.probs.resize(votes.size());
  for (std::size_t c = 0; c < votes.size(); ++c)
    pred.probs[c] = double(votes[c]) / double(f.trees.size());
  pred.argmax_class = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[std::size_t(pred.argmax_class)]) pred.argmax_class = int(c);
  return pred;
}

int tree_depth(const Tree& t) {
  // pre-order walk with explicit stack of (index, depth)
  int max_depth = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    max_depth = std::max(max_depth, d);
    const TreeNode& node = t.nodes[std::size_t(i)];
    if (node.feature >= 0) {
      stack.emplace_back(i + 1, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return max_depth;
}

void save_forest(const Forest& f, const std::string& path_prefix) {
  const std::string stem = std::filesystem::path(path_prefix).filename().string();
  nlohmann::ordered_json j;
  j["format"] = "tsrnn-forest-v1";
  j["num_trees"] = f.cfg.num_trees;
  j["max_depth"] = f.cfg.max_depth;
  j["min_samples_split"] = f.cfg.min_samples_split;
  j["features_per_split"] = f.cfg.features_per_split;
  j["seed"] = f.cfg.seed;
  j["num_classes"] = f.num_classes;
  j["num_features"] = f.num_features;
  j["data"] = stem + ".bin";
  std::ofstream meta(path_prefix + ".json", std::ios::binary);
  if (!meta) throw_io("cannot write " + path_prefix + ".json");
  meta << j.dump(2) << "\n";
  meta.close();
  if (!meta) throw_io("failed writing " + path_prefix + ".json");

  std::ofstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw_io("cannot write " + path_prefix + ".bin");
  auto put_u64 = [&](std::uint64_t v) { bin.write(reinterpret_cast<const char*>(&v), 8); };
  for (const Tree& t : f.trees) {
    put_u64(t.nodes.size());
    for (const TreeNode& n : t.nodes) {
      const std::uint8_t kind = n.feature < 0 ? 1 : 0;
      bin.write(reinterpret_cast<const char*>(&kind), 1);
      if (kind == 0) {
        const std::uint32_t feature = std::uint32_t(n.feature);
        const std::uint32_t right = std::uint32_t(n.right);
        bin.write(reinterpret_cast<const char*>(&feature), 4);
        bin.write(reinterpret_cast<const char*>(&n.threshold), 8);
        bin.write(reinterpret_cast<const char*>(&right), 4);
      } else {
        for (long long c : n.histogram) put_u64(std::uint64_t(c));
      }
    }
  }
  bin.close();
  if (!bin) throw_io("failed writing " + path_prefix + ".bin");
}

Forest load_forest(const std::string& path_prefix) {
  std::ifstream meta(path_prefix + ".json");
  if (!meta) throw_io("cannot open " + path_prefix + ".json");
  nlohmann::json j;
  try {
    meta >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_io(path_prefix + ".json: " + e.what());
  }
  if (j.value("format", "") != "tsrnn-forest-v1")
    throw_io(path_prefix + ".json: unsupported forest format");

  Forest f;
  f.cfg.num_trees = j.at("num_trees").get<int>();
  f.cfg.max_depth = j.at("max_depth").get<int>();
  f.cfg.min_samples_split = j.at("min_samples_split").get<int>();
  f.cfg.features_per_split = j.at("features_per_split").get<int>();
  f.cfg.seed = j.at("seed").get<std::uint64_t>();
  f.num_classes = j.at("num_classes").get<int>();
  f.num_features = j.at("num_features").get<int>();

  std::ifstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw_io("cannot open " + path_prefix + ".bin");
  auto get_u64 = [&]() {
    std::uint64_t v = 0;
    bin.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  f.trees.resize(std::size_t(f.cfg.num_trees));
  for (Tree& t : f.trees) {
    const std::uint64_t count = get_u64();
    if (!bin) throw_io(path_prefix + ".bin: truncated");
    t.nodes.resize(count);
    for (TreeNode& n : t.nodes) {
      std::uint8_t kind = 0;
      bin.read(reinterpret_cast<char*>(&kind), 1);
      if (kind == 0) {
        std::uint32_t feature = 0, right = 0;
        bin.read(reinterpret_cast<char*>(&feature), 4);
        bin.read(reinterpret_cast<char*>(&n.threshold), 8);
        bin.read(reinterpret_cast<char*>(&right), 4);
        n.feature = int(feature);
        n.right = int(right);
      } else {
        n.feature = -1;
        n.histogram.resize(std::size_t(f.num_classes));
        for (long long& c : n.histogram) c = (long long)(get_u64());
      }
      if (!bin) throw_io(path_prefix + ".bin: truncated");
    }
  }
  char extra;
  if (bin.read(&extra, 1)) throw_io(path_prefix + ".bin: trailing bytes");
  return f;
}

LogisticModel fit_logistic(const Dataset& ds, std::span<const int> train_idx,
                           const LogisticConfig& cfg, int num_classes) {
  if (train_idx.empty()) throw_invalid("fit_logistic: empty training set");
  if (cfg.epochs < 0) throw_invalid("fit_logistic: epochs must be >= 0");

  LogisticModel m;
  m.num_classes = num_classes;
  m.num_features = ds.feature_dim();
  m.W = Matrix(num_classes, m.num_features);
  m.b.assign(std::size_t(num_classes), 0.0);

  const double inv_n = 1.0 / double(train_idx.size());
  Matrix gW(num_classes, m.num_features);
  Vec gb(static_cast<std::size_t>(num_classes));
  Vec x(static_cast<std::size_t>(m.num_features));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    gW.a.assign(gW.a.size(), 0.0);
    gb.assign(gb.size(), 0.0);
    double loss_sum = 0.0;
    for (int s : train_idx) {
      const TimeSeriesSample& ts = ds.samples[std::size_t(s)];
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = ts.features[i] * m.input_scale;
      Vec logits = matvec(m.W, x);
      add_acc(m.b, logits);
      Vec log_probs;
      Vec probs = stable_softmax(logits, &log_probs);
      loss_sum -= log_probs[std::size_t(ts.label - 1)];
      probs[std::size_t(ts.label - 1)] -= 1.0;
      for (double& g : probs) g *= inv_n;
      outer_acc(gW, probs, x);
      add_acc(probs, gb);
    }
    const double mean_loss = loss_sum * inv_n;
    if (!std::isfinite(mean_loss)) {
      std::ostringstream os;
      os << "fit_logistic: non-finite loss at epoch " << epoch;
      throw_numeric(os.str());
    }
    m.epoch_loss.push_back(mean_loss);
    axpy(-cfg.rate, gW.a, m.W.a);
    axpy(-cfg.rate, gb, m.b);
  }
  return m;
}

Prediction predict_logistic(const LogisticModel& m, std::span<const double> features) {
  if (int(features.size()) != m.num_features) {
    std::ostringstream os;
    os << "predict_logistic: expected " << m.num_features << " features, got "
       << features.size();
    throw_invalid(os.str());
  }
  Vec x(features.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = features[i] * m.input_scale;
  Vec logits = matvec(m.W, x);
  add_acc(m.b, logits);
  Prediction pred;
  pred.probs = stable_softmax(logits, &pred.log_probs);
  pred.argmax_class = 0;
  for (std::size_t c = 1; c < pred.probs.size(); ++c)
    if (pred.probs[c] > pred.probs[std::size_t(pred.argmax_class)]) pred.argmax_class = int(c);
  return pred;
}

void save_logistic(const LogisticModel& m, const std::string& path_prefix) {
  std::ofstream meta(path_prefix + ".meta");
  if (!meta) throw_io("cannot write " + path_prefix + ".meta");
  meta << "format: tsrnn-logistic-v1\n";
  meta << "num_classes: " << m.num_classes << "\n";
  meta << "num_features: " << m.num_features << "\n";
  meta << "input_scale: " << m.input_scale << "\n";
  meta << "dtype: float64-le\n";
  meta.close();
  if (!meta) throw_io("failed writing " + path_prefix + ".meta");
  std::ofstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw_io("cannot write " + path_prefix + ".bin");
  bin.write(reinterpret_cast<const char*>(m.W.a.data()),
            std::streamsize(m.W.a.size() * sizeof(double)));
  bin.write(reinterpret_cast<const char*>(m.b.data()),
            std::streamsize(m.b.size() * sizeof(double)));
  bin.close();
  if (!bin) throw_io("failed writing " + path_prefix + ".bin");
}

LogisticModel load_logistic(const std::string& path_prefix) {
  std::ifstream meta(path_prefix + ".meta");
  if (!meta) throw_io("cannot open " + path_prefix + ".meta");
  LogisticModel m;
  std::string line;
  while (std::getline(meta, line)) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    const std::string value = line.substr(colon + 2);
    if (key == "format" && value != "tsrnn-logistic-v1")
      throw_io(path_prefix + ": unsupported logistic format");
    if (key == "num_classes") m.num_classes = std::stoi(value);
    if (key == "num_features") m.num_features = std::stoi(value);
    if (key == "input_scale") m.input_scale = std::stod(value);
  }
  if (m.num_classes < 2 || m.num_features < 1) throw_io(path_prefix + ": bad logistic meta");
  m.W = Matrix(m.num_classes, m.num_features);
  m.b.assign(std::size_t(m.num_classes), 0.0);
  std::ifstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw_io("cannot open " + path_prefix + ".bin");
  bin.read(reinterpret_cast<char*>(m.W.a.data()),
           std::streamsize(m.W.a.size() * sizeof(double)));
  bin.read(reinterpret_cast<char*>(m.b.data()), std::streamsize(m.b.size() * sizeof(double)));
  if (!bin) throw_io(path_prefix + ".bin: truncated");
  return m;
}

}  // namespace tsrnn
