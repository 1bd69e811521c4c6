// Command-line front end. Parses arguments, merges the JSON run
// configuration with command-line overrides, and drives everything through
// the C API in tsrnn.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsrnn.h"

namespace {

using nlohmann::json;

// exit code contract: 0 success, 1 runtime/numeric failure, 2 usage or
// validation errors
int exit_code_for(tsrnn_status s) {
  switch (s) {
    case TSRNN_OK:
      return 0;
    case TSRNN_ERR_INVALID:
    case TSRNN_ERR_IO:
      return 2;
    default:
      return 1;
  }
}

int fail(tsrnn_status s) {
  std::cerr << "error (" << tsrnn_status_name(s) << "): " << tsrnn_last_error() << "\n";
  return exit_code_for(s);
}

struct Overrides {
  std::string config_path;
  std::string profile;
  std::string models;  // comma separated
  std::string model;
  long long seed = -1;
  int threads = 0;
  int epochs = 0;
  int folds = 0;
  int batch_size = 0;
  int num_classes = 0;
};

void add_common(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "JSON run configuration file");
  cmd->add_option("--profile", ov.profile, "configuration profile: desk or paper");
  cmd->add_option("--seed", ov.seed, "master seed (overrides config and TSRNN_SEED)");
  cmd->add_option("--threads", ov.threads, "worker thread cap (1 = canonical path)");
}

// precedence: config file < TSRNN_SEED < command-line flags
json merged_config(const Overrides& ov) {
  json j = json::object();
  if (!ov.config_path.empty()) {
    std::ifstream in(ov.config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + ov.config_path);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw CLI::ValidationError("--config", ov.config_path + ": " + e.what());
    }
  }
  if (const char* env_seed = std::getenv("TSRNN_SEED")) {
    try {
      j["seed"] = std::stoull(env_seed);
    } catch (...) {
      throw CLI::ValidationError("TSRNN_SEED", "not an integer: " + std::string(env_seed));
    }
  }
  if (ov.seed >= 0) j["seed"] = (unsigned long long)(ov.seed);
  if (!ov.profile.empty()) j["profile"] = ov.profile;
  if (ov.threads > 0) j["threads"] = ov.threads;
  if (ov.epochs > 0) j["train"]["epochs"] = ov.epochs;
  if (ov.folds > 0) j["train"]["folds"] = ov.folds;
  if (ov.batch_size > 0) j["train"]["batch_size"] = ov.batch_size;
  if (ov.num_classes > 0) j["num_classes"] = ov.num_classes;
  if (!ov.model.empty()) j["model"] = ov.model;
  if (!ov.models.empty()) {
    std::vector<std::string> models;
    std::stringstream ss(ov.models);
    std::string item;
    while (std::getline(ss, item, ',')) models.push_back(item);
    j["models"] = models;
  }
  return j;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("file", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  if (in) std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-series RNN land-cover classification pipeline"};
  app.require_subcommand(1);

  Overrides ov;
  std::string stack_path, labels_path, data_path, pred_path, out_path, profiles_path, counts_json,
      inject_fault;

  CLI::App* prep = app.add_subcommand("prep", "filter, scale and quantize an intensity stack");
  add_common(prep, ov);
  prep->add_option("--stack", stack_path, "stack sidecar json")->required();
  prep->add_option("--labels", labels_path, "label map sidecar json")->required();
  prep->add_option("--out", out_path, "output directory")->required();

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  add_common(synth, ov);
  synth->add_option("--out", out_path, "output csv path")->required();
  synth->add_option("--profiles", profiles_path, "class profile json file");
  synth->add_option("--counts", counts_json, "per-class counts, e.g. {\"1\":100,...}");

  CLI::App* xval = app.add_subcommand("xval", "stratified k-fold cross-validation");
  add_common(xval, ov);
  xval->add_option("--data", data_path, "dataset csv")->required();
  xval->add_option("--out", out_path, "output directory")->required();
  xval->add_option("--models", ov.models, "comma-separated: lstm,gru,rf,logistic");
  xval->add_option("--epochs", ov.epochs, "training epochs per fold");
  xval->add_option("--folds", ov.folds, "number of folds");
  xval->add_option("--batch-size", ov.batch_size, "mini-batch size");
  xval->add_option("--num-classes", ov.num_classes, "number of classes");

  CLI::App* train = app.add_subcommand("train", "train one model on a full dataset");
  add_common(train, ov);
  train->add_option("--data", data_path, "dataset csv")->required();
  train->add_option("--out", out_path, "output directory")->required();
  train->add_option("--model", ov.model, "lstm, gru, rf or logistic");
  train->add_option("--epochs", ov.epochs, "training epochs");
  train->add_option("--num-classes", ov.num_classes, "number of classes");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  add_common(gradcheck, ov);
  gradcheck->add_option("--out", out_path, "optional json report path");
  gradcheck->add_option("--inject-fault", inject_fault,
                        "self-test: corrupt the named gradient tensor");

  CLI::App* report = app.add_subcommand("report", "metrics from a predictions csv");
  add_common(report, ov);
  report->add_option("--pred", pred_path, "predictions csv")->required();
  report->add_option("--out", out_path, "output directory")->required();
  report->add_option("--num-classes", ov.num_classes, "number of classes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints the message or help text
    return rc == 0 ? 0 : 2;     // usage problems exit 2
  }

  json cfg;
  try {
    cfg = merged_config(ov);
    if (synth->parsed()) {
      if (!profiles_path.empty()) cfg["synth"]["profiles"] = json::parse(slurp(profiles_path));
      if (!counts_json.empty()) cfg["synth"]["counts"] = json::parse(counts_json);
    }
    if (gradcheck->parsed() && !inject_fault.empty())
      cfg["gradcheck"]["inject_fault"] = inject_fault;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const std::string cfg_text = cfg.dump();

  tsrnn_status status = TSRNN_OK;
  if (prep->parsed()) {
    status = tsrnn_run_prep(stack_path.c_str(), labels_path.c_str(), out_path.c_str(),
                            cfg_text.c_str());
    if (status == TSRNN_OK) std::cout << "wrote " << out_path << "\n";
  } else if (synth->parsed()) {
    char* summary = nullptr;
    status = tsrnn_run_synth(out_path.c_str(), cfg_text.c_str(), &summary);
    if (status == TSRNN_OK) {
      std::cout << summary << "wrote " << out_path << "\n";
      tsrnn_string_free(summary);
    }
  } else if (xval->parsed()) {
    status = tsrnn_run_xval(data_path.c_str(), out_path.c_str(), cfg_text.c_str());
    if (status == TSRNN_OK) {
      print_file(out_path + "/summary.txt");
      std::cout << "wrote " << out_path << "\n";
    }
  } else if (train->parsed()) {
    status = tsrnn_run_train(data_path.c_str(), out_path.c_str(), cfg_text.c_str());
    if (status == TSRNN_OK) std::cout << "wrote " << out_path << "\n";
  } else if (gradcheck->parsed()) {
    char* text = nullptr;
    status = tsrnn_run_gradcheck(cfg_text.c_str(), out_path.empty() ? nullptr : out_path.c_str(),
                                 &text);
    if (text) {
      std::cout << text;
      tsrnn_string_free(text);
    }
  } else if (report->parsed()) {
    status = tsrnn_run_report(pred_path.c_str(), out_path.c_str(), cfg_text.c_str());
    if (status == TSRNN_OK) print_file(out_path + "/eval_report.txt");
  }

  if (status != TSRNN_OK) return fail(status);
  return 0;
}
