#include "tsrnn.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <variant>

#include "json.hpp"
#include "tsrnn/baseline.hpp"
#include "tsrnn/config.hpp"
#include "tsrnn/data.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/runner.hpp"
#include "tsrnn/train.hpp"

using namespace tsrnn;

struct tsrnn_dataset {
  Dataset ds;
};

struct tsrnn_model {
  std::string kind;  // lstm, gru, rf, logistic
  std::variant<NetworkParams, Forest, LogisticModel> impl;
};

namespace {

thread_local std::string g_last_error;

tsrnn_status status_from(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::Invalid:
      return TSRNN_ERR_INVALID;
    case Error::Kind::Io:
      return TSRNN_ERR_IO;
    case Error::Kind::Numeric:
      return TSRNN_ERR_NUMERIC;
    default:
      return TSRNN_ERR_INTERNAL;
  }
}

template <typename Fn>
tsrnn_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TSRNN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TSRNN_ERR_INTERNAL;
  }
}

tsrnn_status require(bool cond, const char* msg) {
  if (cond) return TSRNN_OK;
  g_last_error = msg;
  return TSRNN_ERR_INVALID;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

RunConfig parse_config(const char* config_json) {
  return resolve_config(config_json ? std::string(config_json) : std::string());
}

int model_classes(const tsrnn_model& m) {
  if (const auto* net = std::get_if<NetworkParams>(&m.impl)) return net->cfg.num_classes;
  if (const auto* f = std::get_if<Forest>(&m.impl)) return f->num_classes;
  return std::get<LogisticModel>(m.impl).num_classes;
}

}  // namespace

extern "C" {

const char* tsrnn_version(void) { return "1.0.0"; }

const char* tsrnn_status_name(tsrnn_status s) {
  switch (s) {
    case TSRNN_OK:
      return "ok";
    case TSRNN_ERR_INVALID:
      return "invalid";
    case TSRNN_ERR_IO:
      return "io";
    case TSRNN_ERR_NUMERIC:
      return "numeric";
    default:
      return "internal";
  }
}

const char* tsrnn_last_error(void) { return g_last_error.c_str(); }

tsrnn_status tsrnn_dataset_load_csv(const char* path, int num_classes, tsrnn_dataset** out) {
  if (require(path && out, "tsrnn_dataset_load_csv: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    auto handle = std::make_unique<tsrnn_dataset>();
    handle->ds = load_csv(path, num_classes);
    *out = handle.release();
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_dataset_synth(const char* profiles_json, const char* counts_json,
                                 unsigned long long seed, tsrnn_dataset** out) {
  if (require(out != nullptr, "tsrnn_dataset_synth: null output") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    ProfileSet ps =
        profiles_json ? profiles_from_json(profiles_json) : default_profiles();
    std::map<int, int> counts;
    if (counts_json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(counts_json);
      } catch (const nlohmann::json::exception& e) {
        throw_invalid(std::string("counts json: ") + e.what());
      }
      for (const auto& [key, value] : j.items()) counts[std::stoi(key)] = value.get<int>();
    } else {
      for (const ClassProfile& cp : ps.classes) counts[cp.class_id] = 1000;
    }
    auto handle = std::make_unique<tsrnn_dataset>();
    handle->ds = synth_generate(ps, counts, seed);
    *out = handle.release();
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_dataset_save_csv(const tsrnn_dataset* ds, const char* path) {
  if (require(ds && path, "tsrnn_dataset_save_csv: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    save_csv(ds->ds, path);
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_dataset_summary_json(const tsrnn_dataset* ds, char** out_json) {
  if (require(ds && out_json, "tsrnn_dataset_summary_json: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    nlohmann::ordered_json j;
    j["samples"] = ds->ds.size();
    j["timesteps"] = ds->ds.timesteps;
    j["channels"] = ds->ds.channel_names;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [cls, n] : summarize(ds->ds)) counts[std::to_string(cls)] = n;
    j["class_counts"] = counts;
    *out_json = dup_string(j.dump(2) + "\n");
    return TSRNN_OK;
  });
}

int tsrnn_dataset_size(const tsrnn_dataset* ds) { return ds ? int(ds->ds.size()) : -1; }
int tsrnn_dataset_timesteps(const tsrnn_dataset* ds) { return ds ? ds->ds.timesteps : -1; }
int tsrnn_dataset_channels(const tsrnn_dataset* ds) { return ds ? ds->ds.channels : -1; }

void tsrnn_dataset_free(tsrnn_dataset* ds) { delete ds; }

tsrnn_status tsrnn_model_train(const tsrnn_dataset* ds, const char* config_json,
                               tsrnn_model** out) {
  if (require(ds && out, "tsrnn_model_train: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    const RunConfig cfg = parse_config(config_json);
    std::vector<int> all_idx(ds->ds.size());
    for (std::size_t i = 0; i < all_idx.size(); ++i) all_idx[i] = int(i);

    auto handle = std::make_unique<tsrnn_model>();
    handle->kind = cfg.model;
    if (cfg.model == "lstm" || cfg.model == "gru") {
      TrainConfig tc = cfg.train;
      tc.network.cell = cell_kind_from_name(cfg.model);
      handle->impl = train_fold(ds->ds, all_idx, tc).params;
    } else if (cfg.model == "rf") {
      handle->impl = fit_forest(ds->ds, all_idx, cfg.forest, cfg.num_classes, cfg.threads);
    } else {
      handle->impl = fit_logistic(ds->ds, all_idx, cfg.logistic, cfg.num_classes);
    }
    *out = handle.release();
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_model_save(const tsrnn_model* m, const char* path_prefix) {
  if (require(m && path_prefix, "tsrnn_model_save: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    if (const auto* net = std::get_if<NetworkParams>(&m->impl))
      save_checkpoint(*net, path_prefix);
    else if (const auto* f = std::get_if<Forest>(&m->impl))
      save_forest(*f, path_prefix);
    else
      save_logistic(std::get<LogisticModel>(m->impl), path_prefix);
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_model_load(const char* path_prefix, tsrnn_model** out) {
  if (require(path_prefix && out, "tsrnn_model_load: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    namespace fs = std::filesystem;
    auto handle = std::make_unique<tsrnn_model>();
    const std::string prefix(path_prefix);
    if (fs::exists(prefix + ".json")) {
      handle->impl = load_forest(prefix);
      handle->kind = "rf";
    } else if (fs::exists(prefix + ".meta")) {
      // the meta header names the format
      std::ifstream meta(prefix + ".meta");
      std::string first;
      std::getline(meta, first);
      if (first.find("logistic") != std::string::npos) {
        handle->impl = load_logistic(prefix);
        handle->kind = "logistic";
      } else {
        NetworkParams p = load_checkpoint(prefix);
        handle->kind = cell_kind_name(p.cfg.cell);
        handle->impl = std::move(p);
      }
    } else {
      throw_io("no checkpoint found at prefix " + prefix);
    }
    *out = handle.release();
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_model_predict(const tsrnn_model* m, const double* features,
                                 size_t feature_count, double* probs_out, int* label_out) {
  if (require(m && features && label_out, "tsrnn_model_predict: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    Prediction pred;
    if (const auto* net = std::get_if<NetworkParams>(&m->impl)) {
      TimeSeriesSample s;
      s.id = "query";
      s.label = 1;
      s.features.assign(features, features + feature_count);
      const int channels = net->cfg.input_dim;
      if (feature_count == 0 || feature_count % std::size_t(channels) != 0)
        throw_invalid("predict: feature count not divisible by input_dim");
      pred = forward(*net, sample_to_sequence(s, int(feature_count) / channels, channels));
    } else if (const auto* f = std::get_if<Forest>(&m->impl)) {
      pred = predict_forest(*f, std::span<const double>(features, feature_count));
    } else {
      pred = predict_logistic(std::get<LogisticModel>(m->impl),
                              std::span<const double>(features, feature_count));
    }
    if (probs_out)
      std::memcpy(probs_out, pred.probs.data(), pred.probs.size() * sizeof(double));
    *label_out = pred.argmax_class + 1;
    return TSRNN_OK;
  });
}

int tsrnn_model_num_classes(const tsrnn_model* m) { return m ? model_classes(*m) : -1; }

void tsrnn_model_free(tsrnn_model* m) { delete m; }

tsrnn_status tsrnn_run_prep(const char* stack_json, const char* labels_json, const char* out_dir,
                            const char* config_json) {
  if (require(stack_json && labels_json && out_dir, "tsrnn_run_prep: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    run_prep(stack_json, labels_json, out_dir, parse_config(config_json));
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_run_synth(const char* out_csv, const char* config_json, char** summary_out) {
  if (require(out_csv != nullptr, "tsrnn_run_synth: null output path") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    const std::string summary = run_synth(out_csv, parse_config(config_json));
    if (summary_out) *summary_out = dup_string(summary);
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_run_xval(const char* dataset_csv, const char* out_dir,
                            const char* config_json) {
  if (require(dataset_csv && out_dir, "tsrnn_run_xval: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    run_xval(dataset_csv, out_dir, parse_config(config_json));
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_run_train(const char* dataset_csv, const char* out_dir,
                             const char* config_json) {
  if (require(dataset_csv && out_dir, "tsrnn_run_train: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    run_train(dataset_csv, out_dir, parse_config(config_json));
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_run_report(const char* predictions_csv, const char* out_dir,
                              const char* config_json) {
  if (require(predictions_csv && out_dir, "tsrnn_run_report: null argument") != TSRNN_OK)
    return TSRNN_ERR_INVALID;
  return guarded([&] {
    run_report(predictions_csv, out_dir, parse_config(config_json));
    return TSRNN_OK;
  });
}

tsrnn_status tsrnn_run_gradcheck(const char* config_json, const char* json_report_path,
                                 char** report_out) {
  return guarded([&] {
    GradCheckReport report = run_gradcheck_cmd(
        parse_config(config_json), json_report_path ? std::string(json_report_path) : "");
    if (report_out) *report_out = dup_string(gradcheck_text(report));
    if (!report.passed) {
      g_last_error = "gradcheck: analytic and numeric gradients disagree";
      return TSRNN_ERR_NUMERIC;
    }
    return TSRNN_OK;
  });
}

void tsrnn_string_free(char* s) { delete[] s; }

}  // extern "C"
