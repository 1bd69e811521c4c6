#include "tsrnn/runner.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/rng.hpp"
#include "tsrnn/sarprep.hpp"

namespace tsrnn {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw_io("failed writing " + path.string());
}

void echo_config(const fs::path& out_dir, const RunConfig& cfg) {
  write_file(out_dir / "config_resolved.json", config_to_json(cfg));
}

std::string predictions_csv_text(const Dataset& ds, const std::vector<int>& predicted) {
  std::string out = "sample_id,true_label,predicted_label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += ds.samples[i].id;
    out += ',';
    out += std::to_string(ds.samples[i].label);
    out += ',';
    out += std::to_string(predicted[i]);
    out += '\n';
  }
  return out;
}

std::string runlog_text(const std::string& model, const RunLog& log) {
  std::ostringstream os;
  os << "model: " << model << "\n";
  os << "folds: " << log.plan.folds << "\n";
  char buf[64];
  for (std::size_t f = 0; f < log.fold_epoch_loss.size(); ++f) {
    for (std::size_t e = 0; e < log.fold_epoch_loss[f].size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%.12g", log.fold_epoch_loss[f][e]);
      os << "fold " << f << " epoch " << e << " mean_loss " << buf << "\n";
    }
  }
  return os.str();
}

std::string timings_text(const std::string& model, const RunLog& log) {
  std::ostringstream os;
  char buf[64];
  for (std::size_t f = 0; f < log.fold_epoch_seconds.size(); ++f) {
    double total = 0.0;
    for (double s : log.fold_epoch_seconds[f]) total += s;
    std::snprintf(buf, sizeof(buf), "%.3f", total);
    os << model << " fold " << f << " train_seconds " << buf << "\n";
  }
  return os.str();
}

RunLog xval_one_model(const Dataset& ds, const std::string& model, const RunConfig& cfg) {
  if (model == "lstm" || model == "gru") {
    TrainConfig tc = cfg.train;
    tc.network.cell = cell_kind_from_name(model);
    return cross_validate(ds, tc);
  }
  if (model == "rf") {
    return cross_validate_custom(
        ds, cfg.train.folds, cfg.train.shuffle_seed,
        [&](std::span<const int> train_idx, int fold) {
          ForestConfig fc = cfg.forest;
          fc.seed = derive_seed(cfg.forest.seed, std::uint64_t(fold));
          auto forest = std::make_shared<Forest>(
              fit_forest(ds, train_idx, fc, cfg.num_classes, cfg.threads));
          return [forest](const TimeSeriesSample& s) {
            return predict_forest(*forest, s.features).argmax_class + 1;
          };
        },
        cfg.threads);
  }
  if (model == "logistic") {
    return cross_validate_custom(
        ds, cfg.train.folds, cfg.train.shuffle_seed,
        [&](std::span<const int> train_idx, int) {
          auto m = std::make_shared<LogisticModel>(
              fit_logistic(ds, train_idx, cfg.logistic, cfg.num_classes));
          return [m](const TimeSeriesSample& s) {
            return predict_logistic(*m, s.features).argmax_class + 1;
          };
        },
        cfg.threads);
  }
  throw_invalid("xval: unknown model '" + model + "'");
}

}  // namespace

PrepResult run_prep(const std::string& stack_json, const std::string& labels_json,
                    const std::string& out_dir, const RunConfig& cfg) {
  // validate both inputs before creating any output
  RasterStack stack = load_stack(stack_json);
  LabelMap labels = load_labels(labels_json);
  if (labels.width != stack.width || labels.height != stack.height)
    throw_invalid("prep: label map geometry does not match the stack");

  FilterResult filtered = temporal_filter(stack, cfg.prep.window);
  RasterStack db = to_db(filtered.stack, cfg.prep.floor_db);
  QuantizeResult quant = quantize(db, cfg.prep.low_pct, cfg.prep.high_pct);
  ExtractResult extracted = extract_samples(quant.stack, labels);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  echo_config(dir, cfg);
  save_quantized(quant.stack, (dir / "quantized.json").string());
  save_csv(extracted.dataset, (dir / "dataset.csv").string());

  nlohmann::ordered_json rep;
  rep["window"] = cfg.prep.window;
  rep["floor_db"] = cfg.prep.floor_db;
  rep["low_pct"] = cfg.prep.low_pct;
  rep["high_pct"] = cfg.prep.high_pct;
  rep["channels"] = stack.channels;
  rep["passthrough_pixels"] = filtered.passthrough;
  rep["p_low"] = quant.p_low;
  rep["p_high"] = quant.p_high;
  std::vector<int> degenerate;
  for (bool d : quant.degenerate) degenerate.push_back(d ? 1 : 0);
  rep["degenerate_channels"] = degenerate;
  rep["samples"] = extracted.dataset.size();
  rep["excluded_missing"] = extracted.excluded_missing;
  write_file(dir / "filter_report.json", rep.dump(2) + "\n");

  PrepResult res;
  res.labeled_pixels = static_cast<long long>(extracted.dataset.size()) + extracted.excluded_missing;
  res.excluded_missing = extracted.excluded_missing;
  return res;
}

std::string run_synth(const std::string& out_csv, const RunConfig& cfg) {
  ProfileSet ps = cfg.synth.profiles_json.empty() ? default_profiles()
                                                  : profiles_from_json(cfg.synth.profiles_json);
  Dataset ds = synth_generate(ps, cfg.synth.counts, cfg.synth.seed);
  save_csv(ds, out_csv);

  std::ostringstream os;
  os << "class  count\n";
  long long total = 0;
  for (const auto& [cls, n] : summarize(ds)) {
    os << "  " << cls << "    " << n << "\n";
    total += n;
  }
  os << "total  " << total << "\n";
  return os.str();
}

XvalResult run_xval(const std::string& dataset_csv, const std::string& out_dir,
                    const RunConfig& cfg) {
  Dataset ds = load_csv(dataset_csv, cfg.num_classes);
  if (ds.samples.empty()) throw_invalid("xval: dataset is empty");

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  echo_config(dir, cfg);

  std::vector<int> truth;
  truth.reserve(ds.size());
  for (const TimeSeriesSample& s : ds.samples) truth.push_back(s.label);

  XvalResult result;
  std::string timings;
  for (const std::string& model : cfg.models) {
    RunLog log = xval_one_model(ds, model, cfg);
    EvalReport report = evaluate(truth, log.predicted, cfg.num_classes);
    result.by_model[model] = report;

    write_file(dir / ("predictions_" + model + ".csv"), predictions_csv_text(ds, log.predicted));
    write_file(dir / ("eval_" + model + ".json"), report_json(report));
    write_file(dir / ("eval_" + model + ".txt"), report_text(report));
    write_file(dir / ("confusion_" + model + ".csv"), confusion_csv(report.confusion));
    if (!log.fold_epoch_loss.empty())
      write_file(dir / ("runlog_" + model + ".txt"), runlog_text(model, log));
    timings += timings_text(model, log);
  }

  // Table-II-style summary plus the per-class F1 table
  char buf[160];
  std::string summary_csv = "model,f_measure,accuracy,kappa\n";
  std::string summary_txt = "model      F-measure   Accuracy    Kappa\n";
  for (const std::string& model : cfg.models) {
    const EvalReport& r = result.by_model.at(model);
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n", model.c_str(), r.f.macro, r.accuracy,
                  r.kappa);
    summary_csv += buf;
    std::snprintf(buf, sizeof(buf), "%-10s %8.2f%% %10.2f%% %8.3f\n", model.c_str(),
                  100.0 * r.f.macro, 100.0 * r.accuracy, r.kappa);
    summary_txt += buf;
  }
  write_file(dir / "summary.csv", summary_csv);
  write_file(dir / "summary.txt", summary_txt);

  std::string per_class = "class";
  for (const std::string& model : cfg.models) per_class += "," + model;
  per_class += "\n";
  for (int c = 0; c < cfg.num_classes; ++c) {
    per_class += std::to_string(c + 1);
    for (const std::string& model : cfg.models) {
      std::snprintf(buf, sizeof(buf), ",%.6f",
                    result.by_model.at(model).f.per_class[std::size_t(c)]);
      per_class += buf;
    }
    per_class += "\n";
  }
  write_file(dir / "per_class_f1.csv", per_class);

  // wall-clock lives apart so every other artifact is bit-reproducible
  write_file(dir / "timings.txt", timings);
  return result;
}

void run_train(const std::string& dataset_csv, const std::string& out_dir, const RunConfig& cfg) {
  Dataset ds = load_csv(dataset_csv, cfg.num_classes);
  if (ds.samples.empty()) throw_invalid("train: dataset is empty");

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  echo_config(dir, cfg);

  std::vector<int> all_idx(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) all_idx[i] = int(i);

  if (cfg.model == "lstm" || cfg.model == "gru") {
    TrainConfig tc = cfg.train;
    tc.network.cell = cell_kind_from_name(cfg.model);
    TrainedNetwork trained = train_fold(ds, all_idx, tc);
    save_checkpoint(trained.params, (dir / ("model_" + cfg.model)).string());
    std::string curve = "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", e, trained.epoch_loss[e]);
      curve += buf;
    }
    write_file(dir / "loss_curve.csv", curve);
    double total = 0.0;
    for (double s : trained.epoch_seconds) total += s;
    std::snprintf(buf, sizeof(buf), "%.3f", total);
    write_file(dir / "timings.txt", cfg.model + " train_seconds " + buf + "\n");
  } else if (cfg.model == "rf") {
    Forest f = fit_forest(ds, all_idx, cfg.forest, cfg.num_classes, cfg.threads);
    save_forest(f, (dir / "model_rf").string());
  } else {
    LogisticModel m = fit_logistic(ds, all_idx, cfg.logistic, cfg.num_classes);
    save_logistic(m, (dir / "model_logistic").string());
    std::string curve = "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t e = 0; e < m.epoch_loss.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", e, m.epoch_loss[e]);
      curve += buf;
    }
    write_file(dir / "loss_curve.csv", curve);
  }
}

EvalReport run_report(const std::string& predictions_csv, const std::string& out_dir,
                      const RunConfig& cfg) {
  std::ifstream in(predictions_csv);
  if (!in) throw_io("cannot open predictions csv: " + predictions_csv);
  std::string line;
  if (!std::getline(in, line)) throw_io(predictions_csv + ": missing header");
  if (line != "sample_id,true_label,predicted_label" &&
      line != "sample_id,true_label,predicted_label\r")
    throw_io(predictions_csv + ": unexpected header '" + line + "'");

  std::vector<int> truth, predicted;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      std::ostringstream os;
      os << predictions_csv << " line " << line_no << ": expected 3 cells";
      throw_io(os.str());
    }
    try {
      truth.push_back(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)));
      predicted.push_back(std::stoi(line.substr(c2 + 1)));
    } catch (...) {
      std::ostringstream os;
      os << predictions_csv << " line " << line_no << ": non-numeric label";
      throw_io(os.str());
    }
  }

  EvalReport report = evaluate(truth, predicted, cfg.num_classes);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file(dir / "eval_report.json", report_json(report));
  write_file(dir / "eval_report.txt", report_text(report));
  write_file(dir / "confusion.csv", confusion_csv(report.confusion));
  return report;
}

GradCheckReport run_gradcheck_cmd(const RunConfig& cfg, const std::string& json_out_or_empty) {
  GradCheckReport report = run_gradcheck(cfg.gradcheck);
  if (!json_out_or_empty.empty()) write_file(json_out_or_empty, gradcheck_json(report));
  return report;
}

}  // namespace tsrnn
