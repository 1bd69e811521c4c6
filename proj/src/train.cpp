#include "tsrnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "tsrnn/errors.hpp"
#include "tsrnn/parallel.hpp"
#include "tsrnn/rng.hpp"

namespace tsrnn {

namespace {

constexpr double kInputScale = 1.0 / 255.0;
// Fixed gradient-reduction granularity: chunk partials are summed in chunk
// order, making batch gradients independent of the thread count.
constexpr int kGradChunk = 16;

std::string param_norm_dump(std::vector<TensorView>& views) {
  std::ostringstream os;
  for (const TensorView& v : views) {
    double l2 = 0.0, linf = 0.0;
    for (std::size_t i = 0; i < v.size; ++i) {
      l2 += v.data[i] * v.data[i];
      linf = std::max(linf, std::abs(v.data[i]));
    }
    os << "  " << v.name << " l2=" << std::sqrt(l2) << " linf=" << linf << "\n";
  }
  return os.str();
}

}  // namespace

FoldPlan make_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw_invalid("make_folds: folds must be >= 2");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(int(i));
  for (const auto& [cls, idx] : by_class) {
    if (int(idx.size()) < folds) {
      std::ostringstream os;
      os << "make_folds: class " << cls << " has " << idx.size() << " samples, fewer than "
         << folds << " folds";
      throw_invalid(os.str());
    }
  }

  FoldPlan plan;
  plan.folds = folds;
  plan.assignment.assign(labels.size(), -1);
  for (auto& [cls, idx] : by_class) {
    Rng rng(derive_seed(seed, std::uint64_t(cls)));
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j)
      plan.assignment[std::size_t(idx[j])] = int(j % std::size_t(folds));
  }
  return plan;
}

std::vector<Vec> sample_to_sequence(const TimeSeriesSample& s, int timesteps, int channels) {
  if (int(s.features.size()) != timesteps * channels)
    throw_invalid("sample " + s.id + ": feature count does not match timesteps*channels");
  std::vector<Vec> xs(static_cast<std::size_t>(timesteps), Vec(static_cast<std::size_t>(channels)));
  for (int t = 0; t < timesteps; ++t)
    for (int c = 0; c < channels; ++c)
      xs[std::size_t(t)][std::size_t(c)] =
          s.features[std::size_t(t) * channels + std::size_t(c)] * kInputScale;
  return xs;
}

int net_predict(const NetworkParams& params, const TimeSeriesSample& s) {
  const int channels = params.cfg.input_dim;
  if (int(s.features.size()) % channels != 0)
    throw_invalid("predict: feature count not divisible by input_dim");
  const int timesteps = int(s.features.size()) / channels;
  Prediction pred = forward(params, sample_to_sequence(s, timesteps, channels));
  return pred.argmax_class + 1;
}

TrainedNetwork train_fold(const Dataset& ds, std::span<const int> train_idx,
                          const TrainConfig& cfg) {
  if (train_idx.empty()) throw_invalid("train_fold: empty training set");
  if (cfg.epochs < 1) throw_invalid("train_fold: epochs must be >= 1");
  if (cfg.batch_size < 1) throw_invalid("train_fold: batch_size must be >= 1");

  NetworkConfig net_cfg = cfg.network;
  net_cfg.input_dim = ds.channels;
  for (int s : train_idx) {
    const int label = ds.samples[std::size_t(s)].label;
    if (label < 1 || label > net_cfg.num_classes)
      throw_invalid("train_fold: sample label outside 1.." +
                    std::to_string(net_cfg.num_classes));
  }

  TrainedNetwork out;
  out.params = init_params(net_cfg);
  std::vector<TensorView> param_views = tensor_views(out.params);
  Rmsprop optimizer(cfg.optimizer, param_views);

  const int n = int(train_idx.size());
  const int max_chunks = (std::min(cfg.batch_size, n) + kGradChunk - 1) / kGradChunk;
  NetworkGrads grads = make_grads(out.params);
  std::vector<NetworkGrads> chunk_grads;
  for (int i = 0; i < max_chunks; ++i) chunk_grads.push_back(make_grads(out.params));
  std::vector<TensorView> grad_views = tensor_views(grads);
  std::vector<std::vector<TensorView>> chunk_views;
  for (NetworkGrads& g : chunk_grads) chunk_views.push_back(tensor_views(g));
  std::vector<double> chunk_loss(std::size_t(max_chunks), 0.0);

  std::vector<int> order(train_idx.begin(), train_idx.end());
  Rng shuffle_rng(derive_seed(cfg.shuffle_seed, 0x5f11ULL));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double epoch_loss_sum = 0.0;

    for (int batch_start = 0; batch_start < n; batch_start += cfg.batch_size) {
      const int batch_end = std::min(n, batch_start + cfg.batch_size);
      const int batch_n = batch_end - batch_start;
      const int chunks = (batch_n + kGradChunk - 1) / kGradChunk;
      const double scale = 1.0 / double(batch_n);

      try {
        parallel_for(chunks, cfg.threads, [&](int ci) {
          chunk_grads[std::size_t(ci)].zero();
          chunk_loss[std::size_t(ci)] = 0.0;
          const int lo = batch_start + ci * kGradChunk;
          const int hi = std::min(batch_end, lo + kGradChunk);
          NetTrace trace;
          for (int bi = lo; bi < hi; ++bi) {
            const TimeSeriesSample& sample = ds.samples[std::size_t(order[std::size_t(bi)])];
            const Prediction pred = forward(
                out.params, sample_to_sequence(sample, ds.timesteps, ds.channels), &trace);
            chunk_loss[std::size_t(ci)] += loss(pred, sample.label - 1);
            backward_acc(out.params, trace, sample.label - 1, scale,
                         chunk_grads[std::size_t(ci)]);
          }
        });
        double batch_loss = 0.0;
        for (int ci = 0; ci < chunks; ++ci) batch_loss += chunk_loss[std::size_t(ci)];
        if (!std::isfinite(batch_loss)) throw_numeric("train_fold: non-finite loss");
        epoch_loss_sum += batch_loss;
      } catch (const Error& e) {
        if (e.kind() != Error::Kind::Numeric) throw;
        std::ostringstream os;
        os << e.what() << " (epoch " << epoch << ", batch " << batch_start / cfg.batch_size
           << ")\nparameter norms:\n"
           << param_norm_dump(param_views);
        throw_numeric(os.str());
      }

      // fixed-order reduction over chunk partials
      for (std::size_t t = 0; t < grad_views.size(); ++t) {
        double* dst = grad_views[t].data;
        const std::size_t sz = grad_views[t].size;
        const double* first = chunk_views[0][t].data;
        for (std::size_t k = 0; k < sz; ++k) dst[k] = first[k];
        for (int ci = 1; ci < chunks; ++ci) {
          const double* src = chunk_views[std::size_t(ci)][t].data;
          for (std::size_t k = 0; k < sz; ++k) dst[k] += src[k];
        }
      }

      if (cfg.grad_clip_norm > 0.0) {
        double sq = 0.0;
        for (const TensorView& v : grad_views)
          for (std::size_t k = 0; k < v.size; ++k) sq += v.data[k] * v.data[k];
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip_norm) {
          const double s = cfg.grad_clip_norm / norm;
          for (const TensorView& v : grad_views)
            for (std::size_t k = 0; k < v.size; ++k) v.data[k] *= s;
        }
      }

      try {
        optimizer.apply_update(param_views, grad_views);
      } catch (const Error& e) {
        if (e.kind() != Error::Kind::Numeric) throw;
        std::ostringstream os;
        os << e.what() << " (epoch " << epoch << ", batch " << batch_start / cfg.batch_size
           << ")\nparameter norms:\n"
           << param_norm_dump(param_views);
        throw_numeric(os.str());
      }
    }

    out.epoch_loss.push_back(epoch_loss_sum / double(n));
    out.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return out;
}

RunLog cross_validate(const Dataset& ds, const TrainConfig& cfg) {
  std::vector<int> labels;
  labels.reserve(ds.size());
  for (const TimeSeriesSample& s : ds.samples) labels.push_back(s.label);

  RunLog log;
  log.plan = make_folds(labels, cfg.folds, cfg.shuffle_seed);
  log.predicted.assign(ds.size(), 0);

  for (int fold = 0; fold < cfg.folds; ++fold) {
    std::vector<int> train_idx, test_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (log.plan.assignment[i] == fold)
        test_idx.push_back(int(i));
      else
        train_idx.push_back(int(i));
    }

    TrainConfig fold_cfg = cfg;
    fold_cfg.network.seed = derive_seed(cfg.network.seed, std::uint64_t(fold));
    fold_cfg.shuffle_seed = derive_seed(cfg.shuffle_seed, 1000 + std::uint64_t(fold));
    TrainedNetwork trained = train_fold(ds, train_idx, fold_cfg);
    log.fold_epoch_loss.push_back(std::move(trained.epoch_loss));
    log.fold_epoch_seconds.push_back(std::move(trained.epoch_seconds));

    parallel_for(int(test_idx.size()), cfg.threads, [&](int i) {
      const int si = test_idx[std::size_t(i)];
      log.predicted[std::size_t(si)] = net_predict(trained.params, ds.samples[std::size_t(si)]);
    });
  }
  return log;
}

RunLog cross_validate_custom(const Dataset& ds, int folds, std::uint64_t fold_seed,
                             const FoldFit& fit, int predict_threads) {
  std::vector<int> labels;
  labels.reserve(ds.size());
  for (const TimeSeriesSample& s : ds.samples) labels.push_back(s.label);

  RunLog log;
  log.plan = make_folds(labels, folds, fold_seed);
  log.predicted.assign(ds.size(), 0);

  for (int fold = 0; fold < folds; ++fold) {
    std::vector<int> train_idx, test_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (log.plan.assignment[i] == fold)
        test_idx.push_back(int(i));
      else
        train_idx.push_back(int(i));
    }
    auto predictor = fit(train_idx, fold);
    parallel_for(int(test_idx.size()), predict_threads, [&](int i) {
      const int si = test_idx[std::size_t(i)];
      log.predicted[std::size_t(si)] = predictor(ds.samples[std::size_t(si)]);
    });
  }
  return log;
}

}  // namespace tsrnn
