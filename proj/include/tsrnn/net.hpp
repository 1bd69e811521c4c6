#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tsrnn/cells.hpp"

namespace tsrnn {

enum class CellKind { Lstm, Gru };

const char* cell_kind_name(CellKind k);
CellKind cell_kind_from_name(const std::string& name);

struct NetworkConfig {
  CellKind cell = CellKind::Lstm;
  int num_layers = 5;
  int hidden_dim = 512;
  int input_dim = 2;
  int num_classes = 5;
  std::uint64_t seed = 1;
};

using CellParams = std::variant<LstmParams, GruParams>;

// Layer 0 consumes input_dim columns, layers >= 1 consume hidden_dim. Only
// the last layer's final hidden state feeds the softmax head.
struct NetworkParams {
  NetworkConfig cfg;
  std::vector<CellParams> layers;
  Matrix softmax_W;  // num_classes x hidden_dim
  Vec softmax_b;     // num_classes
};

struct NetworkGrads {
  std::vector<CellParams> layers;  // same shapes as the parameters
  Matrix softmax_W;
  Vec softmax_b;
  void zero();
};

struct Prediction {
  Vec probs;
  Vec log_probs;
  int argmax_class = 0;  // 0-based; smallest index attaining the maximum
};

using CellTrace = std::variant<LstmTrace, GruTrace>;

struct NetTrace {
  std::vector<CellTrace> layers;
  Prediction pred;
  int timesteps = 0;
};

// Named flat views over every tensor ("layer0.W_ix", ..., "softmax.b"), in
// checkpoint order.
std::vector<TensorView> tensor_views(NetworkParams& p);
std::vector<TensorView> tensor_views(NetworkGrads& g);

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases;
// deterministic for a fixed seed.
NetworkParams init_params(const NetworkConfig& cfg);
NetworkGrads make_grads(const NetworkParams& p);

// log-sum-exp stabilized softmax; optionally emits log-probabilities
Vec stable_softmax(const Vec& logits, Vec* log_probs = nullptr);

Prediction forward(const NetworkParams& p, const std::vector<Vec>& xs, NetTrace* trace = nullptr);

// -log p(label); computed from the stabilized log-softmax
double loss(const Prediction& pred, int label);

// Gradient of cotangent_scale * cross-entropy(label), accumulated into acc
// (scale 1/batch gives the mean-reduced batch gradient directly).
void backward_acc(const NetworkParams& p, const NetTrace& trace, int label, double cotangent_scale,
                  NetworkGrads& acc);
NetworkGrads backward(const NetworkParams& p, const NetTrace& trace, int label);

// Checkpoint: <prefix>.meta (key: value lines) + <prefix>.bin (raw
// little-endian float64 in tensor_views order).
void save_checkpoint(const NetworkParams& p, const std::string& path_prefix);
NetworkParams load_checkpoint(const std::string& path_prefix);

}  // namespace tsrnn
