#pragma once

#include <map>
#include <string>

#include "tsrnn/config.hpp"
#include "tsrnn/eval.hpp"
#include "tsrnn/gradcheck.hpp"

namespace tsrnn {

// Pipeline commands behind the CLI and the C API. Each writes only into its
// stated destination; inputs are validated before any output is created.

struct PrepResult {
  long long labeled_pixels = 0;
  long long excluded_missing = 0;
};
PrepResult run_prep(const std::string& stack_json, const std::string& labels_json,
                    const std::string& out_dir, const RunConfig& cfg);

// returns a class-count summary table
std::string run_synth(const std::string& out_csv, const RunConfig& cfg);

struct XvalResult {
  std::map<std::string, EvalReport> by_model;
};
XvalResult run_xval(const std::string& dataset_csv, const std::string& out_dir,
                    const RunConfig& cfg);

void run_train(const std::string& dataset_csv, const std::string& out_dir, const RunConfig& cfg);

EvalReport run_report(const std::string& predictions_csv, const std::string& out_dir,
                      const RunConfig& cfg);

GradCheckReport run_gradcheck_cmd(const RunConfig& cfg, const std::string& json_out_or_empty);

}  // namespace tsrnn
