#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsrnn/net.hpp"

namespace tsrnn {

struct RmspropConfig {
  double base_rate = 5e-4;
  double decay = 5e-5;  // inverse-time decay per update step
  double rho = 0.9;
  double epsilon = 1e-8;
};

// RMSprop with the legacy inverse-time rate schedule:
//   rate_t = base_rate / (1 + decay * t)
//   acc   <- rho * acc + (1 - rho) * g^2
//   p     <- p - rate_t * g / (sqrt(acc) + epsilon)
// One accumulator per parameter tensor; epsilon sits outside the root.
class Rmsprop {
public:
  Rmsprop(const RmspropConfig& cfg, const std::vector<TensorView>& params);

  // Rejects non-finite gradients (naming tensor and index) without touching
  // parameters or state.
  void apply_update(const std::vector<TensorView>& params, const std::vector<TensorView>& grads);

  double effective_rate() const;
  long long iteration() const { return iteration_; }
  const RmspropConfig& config() const { return cfg_; }

private:
  RmspropConfig cfg_;
  long long iteration_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> acc_;
};

}  // namespace tsrnn
