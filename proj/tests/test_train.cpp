#include "tsrnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "tsrnn/baseline.hpp"

#include "doctest.h"
#include "tsrnn/data.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/eval.hpp"
#include "tsrnn/rng.hpp"

using namespace tsrnn;

namespace {

std::vector<int> counted_labels(const std::vector<long long>& counts) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (long long i = 0; i < counts[c]; ++i) labels.push_back(int(c) + 1);
  return labels;
}

TrainConfig small_config(CellKind kind) {
  TrainConfig cfg;
  cfg.network.cell = kind;
  cfg.network.num_layers = 1;
  cfg.network.hidden_dim = 8;
  cfg.network.num_classes = 2;
  cfg.network.seed = 7;
  cfg.epochs = 25;
  cfg.batch_size = 16;
  cfg.folds = 5;
  cfg.shuffle_seed = 11;
  cfg.optimizer.base_rate = 0.01;
  cfg.optimizer.decay = 0.0;
  return cfg;
}

// two classes with clearly separated temporal levels
Dataset toy_separable(int per_class, std::uint64_t seed) {
  Dataset ds;
  ds.timesteps = 4;
  ds.channels = 1;
  ds.channel_names = {"vv"};
  Rng rng(seed);
  for (int i = 0; i < per_class; ++i) {
    Vec lo, hi;
    for (int t = 0; t < 4; ++t) {
      lo.push_back(rng.uniform(20.0, 80.0));
      hi.push_back(rng.uniform(170.0, 235.0));
    }
    ds.samples.push_back({"lo" + std::to_string(i), 1, lo});
    ds.samples.push_back({"hi" + std::to_string(i), 2, hi});
  }
  return ds;
}

}  // namespace

TEST_CASE("make_folds reproduces the paper-scale fold arithmetic") {
  std::vector<int> labels = counted_labels({12589, 15000, 15000, 15000, 15000});
  FoldPlan plan = make_folds(labels, 5, 42);
  REQUIRE(plan.assignment.size() == 72589);

  // per class, per fold counts
  std::map<int, std::map<int, int>> sizes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(plan.assignment[i] >= 0);
    CHECK(plan.assignment[i] < 5);
    ++sizes[labels[i]][plan.assignment[i]];
  }
  for (int f = 0; f < 5; ++f) {
    const int s1 = sizes[1][f];
    CHECK((s1 == 2517 || s1 == 2518));
    CHECK(sizes[2][f] == 3000);
    CHECK(sizes[3][f] == 3000);
    CHECK(sizes[4][f] == 3000);
    CHECK(sizes[5][f] == 3000);
  }
  int total1 = 0;
  for (int f = 0; f < 5; ++f) total1 += sizes[1][f];
  CHECK(total1 == 12589);
}

TEST_CASE("make_folds splits ten samples of one class evenly over five folds") {
  std::vector<int> labels(10, 1);
  FoldPlan plan = make_folds(labels, 5, 1);
  std::map<int, int> per_fold;
  for (int a : plan.assignment) ++per_fold[a];
  for (int f = 0; f < 5; ++f) CHECK(per_fold[f] == 2);
}

TEST_CASE("make_folds determinism and seed sensitivity") {
  std::vector<int> labels = counted_labels({40, 35, 25});
  FoldPlan a = make_folds(labels, 5, 9);
  FoldPlan b = make_folds(labels, 5, 9);
  CHECK(a.assignment == b.assignment);
  FoldPlan c = make_folds(labels, 5, 10);
  CHECK(a.assignment != c.assignment);
  // same size profile under any seed
  std::map<int, int> sa, sc;
  for (int x : a.assignment) ++sa[x];
  for (int x : c.assignment) ++sc[x];
  CHECK(sa == sc);
}

TEST_CASE("make_folds rejects a class with fewer samples than folds") {
  std::vector<int> labels = counted_labels({10, 3});
  try {
    make_folds(labels, 5, 1);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("class 2") != std::string::npos);
  }
}

TEST_CASE("training a single sample to memorization") {
  Dataset ds = toy_separable(1, 3);
  ds.samples.resize(1);  // exactly one sample
  TrainConfig cfg = small_config(CellKind::Lstm);
  cfg.network.num_layers = 2;
  cfg.network.hidden_dim = 32;
  cfg.epochs = 200;
  cfg.batch_size = 1;
  std::vector<int> idx{0};
  TrainedNetwork t = train_fold(ds, idx, cfg);
  CHECK(t.epoch_loss.back() < 0.01);
}

TEST_CASE("epoch-0 loss of an untrained 5-class network is about ln 5") {
  ProfileSet ps = default_profiles();
  std::map<int, int> counts;
  for (int c = 1; c <= 5; ++c) counts[c] = 50;
  Dataset ds = synth_generate(ps, counts, 77);

  TrainConfig cfg;
  cfg.network.num_layers = 2;
  cfg.network.hidden_dim = 32;
  cfg.network.num_classes = 5;
  cfg.network.seed = 5;
  cfg.epochs = 1;
  cfg.batch_size = 64;
  std::vector<int> idx(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) idx[i] = int(i);
  TrainedNetwork t = train_fold(ds, idx, cfg);
  CHECK(std::abs(t.epoch_loss[0] - std::log(5.0)) < 0.2);
}

TEST_CASE("training is bit-deterministic and thread-count invariant") {
  Dataset ds = toy_separable(24, 5);
  TrainConfig cfg = small_config(CellKind::Gru);
  cfg.epochs = 8;
  std::vector<int> idx(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) idx[i] = int(i);

  TrainedNetwork a = train_fold(ds, idx, cfg);
  TrainedNetwork b = train_fold(ds, idx, cfg);
  CHECK(a.epoch_loss == b.epoch_loss);

  cfg.threads = 3;
  TrainedNetwork c = train_fold(ds, idx, cfg);
  CHECK(a.epoch_loss == c.epoch_loss);

  std::vector<TensorView> va = tensor_views(a.params);
  std::vector<TensorView> vc = tensor_views(c.params);
  for (std::size_t t = 0; t < va.size(); ++t)
    for (std::size_t k = 0; k < va[t].size; ++k) CHECK(va[t].data[k] == vc[t].data[k]);
}

TEST_CASE("cross_validate solves a linearly separable toy set") {
  Dataset ds = toy_separable(30, 13);
  TrainConfig cfg = small_config(CellKind::Lstm);
  RunLog log = cross_validate(ds, cfg);

  REQUIRE(log.predicted.size() == ds.size());
  for (int p : log.predicted) CHECK(p != 0);  // exactly one prediction per sample

  std::vector<int> truth;
  for (const TimeSeriesSample& s : ds.samples) truth.push_back(s.label);
  EvalReport r = evaluate(truth, log.predicted, 2);
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("cross_validate covers every sample exactly once") {
  Dataset ds = toy_separable(20, 17);
  TrainConfig cfg = small_config(CellKind::Gru);
  cfg.epochs = 2;
  RunLog log = cross_validate(ds, cfg);
  // the fold plan partitions the dataset
  std::vector<int> seen(ds.size(), 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(log.plan.assignment[i] >= 0);
    ++seen[i];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  CHECK(log.fold_epoch_loss.size() == 5);
}

TEST_CASE("permuted labels land near chance accuracy") {
  // leakage probe on the cheap flat baseline
  ProfileSet ps = default_profiles();
  std::map<int, int> counts;
  for (int c = 1; c <= 5; ++c) counts[c] = 120;
  Dataset ds = synth_generate(ps, counts, 99);
  Rng rng(101);
  std::vector<int> labels;
  for (const TimeSeriesSample& s : ds.samples) labels.push_back(s.label);
  rng.shuffle(labels);
  for (std::size_t i = 0; i < ds.size(); ++i) ds.samples[i].label = labels[i];

  RunLog log = cross_validate_custom(
      ds, 5, 7,
      [&](std::span<const int> train_idx, int) {
        LogisticConfig lc;
        lc.epochs = 60;
        auto m = std::make_shared<LogisticModel>(fit_logistic(ds, train_idx, lc, 5));
        return [m](const TimeSeriesSample& s) {
          return predict_logistic(*m, s.features).argmax_class + 1;
        };
      });
  std::vector<int> truth;
  for (const TimeSeriesSample& s : ds.samples) truth.push_back(s.label);
  EvalReport r = evaluate(truth, log.predicted, 5);
  CHECK(r.accuracy > 0.20 - 0.05);
  CHECK(r.accuracy < 0.20 + 0.05);
}

TEST_CASE("training loss trends down on the synthetic benchmark") {
  ProfileSet ps = default_profiles();
  std::map<int, int> counts;
  for (int c = 1; c <= 5; ++c) counts[c] = 200;
  Dataset ds = synth_generate(ps, counts, 31);

  TrainConfig cfg;
  cfg.network.num_layers = 1;
  cfg.network.hidden_dim = 16;
  cfg.network.num_classes = 5;
  cfg.network.seed = 3;
  cfg.epochs = 34;
  cfg.batch_size = 64;
  cfg.optimizer.base_rate = 1.5e-3;
  cfg.optimizer.decay = 2e-3;
  std::vector<int> idx(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) idx[i] = int(i);
  TrainedNetwork t = train_fold(ds, idx, cfg);

  // after epoch 10: windows may contain at most one material uptick (>0.5%)
  for (std::size_t start = 10; start + 20 <= t.epoch_loss.size(); start += 4) {
    int upticks = 0;
    for (std::size_t e = start; e + 1 < start + 20; ++e)
      if (t.epoch_loss[e + 1] > t.epoch_loss[e] * 1.005) ++upticks;
    CHECK(upticks <= 1);
    CHECK(t.epoch_loss[start + 19] <= t.epoch_loss[start] * 1.001);
  }
}

TEST_CASE("numeric failures abort with epoch/batch context and a norm dump") {
  Dataset ds = toy_separable(8, 19);
  ds.samples[3].features[1] = std::nan("");  // poisoned observation
  TrainConfig cfg = small_config(CellKind::Lstm);
  cfg.epochs = 2;
  std::vector<int> idx(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) idx[i] = int(i);
  try {
    train_fold(ds, idx, cfg);
    FAIL("expected a numeric abort");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::Numeric);
    const std::string msg = e.what();
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
    CHECK(msg.find("parameter norms") != std::string::npos);
  }
}
