#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsrnn/baseline.hpp"
#include "tsrnn/gradcheck.hpp"
#include "tsrnn/train.hpp"

namespace tsrnn {

// Fully resolved run configuration: defaults, then profile, then explicit
// JSON fields; sub-seeds not given explicitly are derived from the master
// seed. The resolved form is echoed into every output directory.
struct RunConfig {
  std::string profile = "paper";  // paper (spec defaults) or desk (CI scale)
  std::uint64_t seed = 1;
  int threads = 1;
  int num_classes = 5;
  std::vector<std::string> models = {"lstm", "gru", "rf", "logistic"};  // xval
  std::string model = "lstm";                                           // train

  TrainConfig train;  // carries NetworkConfig and RmspropConfig
  ForestConfig forest;
  LogisticConfig logistic;

  struct Synth {
    std::map<int, int> counts;  // default 1000 per class 1..5
    std::string profiles_json;  // empty = built-in default profile set
    std::uint64_t seed = 0;
  } synth;

  struct Prep {
    int window = 7;
    double floor_db = -30.0;
    double low_pct = 2.0;
    double high_pct = 98.0;
  } prep;

  GradCheckOptions gradcheck;
};

// json_text may be empty (all defaults). Unknown keys are rejected.
RunConfig resolve_config(const std::string& json_text);

std::string config_to_json(const RunConfig& cfg);

}  // namespace tsrnn
