#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tsrnn/data.hpp"
#include "tsrnn/net.hpp"
#include "tsrnn/optim.hpp"

namespace tsrnn {

struct TrainConfig {
  int epochs = 350;
  int batch_size = 64;
  int folds = 5;
  std::uint64_t shuffle_seed = 1;
  NetworkConfig network;
  RmspropConfig optimizer;
  double grad_clip_norm = 0.0;  // global L2 clip; 0 disables
  int threads = 1;
};

// Stratified assignment: per class, a seeded shuffle split round-robin, so
// per-class fold sizes differ by at most one.
struct FoldPlan {
  int folds = 0;
  std::vector<int> assignment;  // per sample, in [0, folds)
};
FoldPlan make_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);

// Inputs are rescaled from [0,255] to [0,1] before entering the network.
std::vector<Vec> sample_to_sequence(const TimeSeriesSample& s, int timesteps, int channels);
int net_predict(const NetworkParams& params, const TimeSeriesSample& s);

struct TrainedNetwork {
  NetworkParams params;
  std::vector<double> epoch_loss;     // mean training loss per epoch
  std::vector<double> epoch_seconds;  // wall clock, excluded from reports
};

// Mini-batch RMSprop training: per epoch a seeded shuffle, batches of
// batch_size (short last batch kept), mean gradient per batch. Gradients are
// reduced over fixed sample chunks, so results are bit-identical for any
// thread count.
TrainedNetwork train_fold(const Dataset& ds, std::span<const int> train_idx,
                          const TrainConfig& cfg);

struct RunLog {
  FoldPlan plan;
  std::vector<std::vector<double>> fold_epoch_loss;
  std::vector<std::vector<double>> fold_epoch_seconds;
  std::vector<int> predicted;  // one held-out prediction per sample, 1-based
};

RunLog cross_validate(const Dataset& ds, const TrainConfig& cfg);

// Same fold mechanics for arbitrary classifiers: fit(train_idx, fold)
// returns a predictor mapping a sample to a 1-based label.
using FoldFit = std::function<std::function<int(const TimeSeriesSample&)>(
    std::span<const int> train_idx, int fold)>;
RunLog cross_validate_custom(const Dataset& ds, int folds, std::uint64_t fold_seed,
                             const FoldFit& fit, int predict_threads = 1);

}  // namespace tsrnn
