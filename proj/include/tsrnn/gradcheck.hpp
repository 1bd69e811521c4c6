#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tsrnn {

struct GradCheckOptions {
  int cell_instances = 100;  // per cell kind: T=4, input 3, hidden 5
  int net_instances = 20;    // per cell kind: T=4, 2 layers, hidden 6, 3 classes
  double step = 1e-5;        // central-difference step
  double cell_tol = 1e-5;    // max relative error per cell parameter
  double net_tol = 1e-4;     // max relative error end to end
  std::uint64_t seed = 424242;
  std::string inject_fault;  // self-test hook: tensor name to corrupt
};

struct GradCheckFailure {
  std::string check;   // e.g. "lstm_cell[17]"
  std::string tensor;  // parameter or input name
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckSummary {
  std::string name;
  int instances = 0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
};

struct GradCheckReport {
  bool passed = false;
  std::vector<GradCheckSummary> suites;
  std::vector<GradCheckFailure> failures;  // capped listing
  double seconds = 0.0;
};

// Central finite differences against the analytic BPTT gradients: both cell
// kinds (parameters and inputs) plus the full stacked-network loss gradient.
GradCheckReport run_gradcheck(const GradCheckOptions& opts);

std::string gradcheck_json(const GradCheckReport& r);
std::string gradcheck_text(const GradCheckReport& r);

}  // namespace tsrnn
