#pragma once

#include <vector>

#include "tsrnn/ndcore.hpp"

namespace tsrnn {

// Gate weights follow the cell equations: W_*x maps the input, W_*h the
// previous hidden state (hidden_dim rows; input_dim or hidden_dim columns).
// The same structs double as gradient containers, so gradient shapes mirror
// parameter shapes by construction.
struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Matrix W_ix, W_ih;  // input gate
  Matrix W_fx, W_fh;  // forget gate
  Matrix W_yx, W_yh;  // cell candidate
  Matrix W_ox, W_oh;  // output gate
  Vec b_i, b_f, b_y, b_o;

  static LstmParams zeros(int input_dim, int hidden_dim);
  void zero();
};

struct GruParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Matrix W_zx, W_zh;  // update gate
  Matrix W_rx, W_rh;  // reset gate
  Matrix W_hx, W_hr;  // candidate; W_hr multiplies (r_t o h_{t-1})
  Vec b_z, b_r, b_h;

  static GruParams zeros(int input_dim, int hidden_dim);
  void zero();
};

// Per-timestep activation caches; enough to run backward without re-running
// forward.
struct LstmStep {
  Vec x, i, f, y, o, c, tanh_c, h;
};
struct GruStep {
  Vec x, z, r, g, h;  // g = candidate activation
};

struct LstmTrace {
  std::vector<LstmStep> steps;
  Vec h0, c0;
  int timesteps() const { return int(steps.size()); }
};
struct GruTrace {
  std::vector<GruStep> steps;
  Vec h0;
  int timesteps() const { return int(steps.size()); }
};

struct LstmGrads {
  LstmParams wrt;          // gradient w.r.t. every parameter
  std::vector<Vec> d_x;    // gradient w.r.t. each input vector
};
struct GruGrads {
  GruParams wrt;
  std::vector<Vec> d_x;
};

// Unprefixed views over every tensor, in checkpoint order.
std::vector<TensorView> tensor_views(LstmParams& p);
std::vector<TensorView> tensor_views(GruParams& p);

// One recurrence step; fills the cache entry (h_t is out.h, c_t is out.c).
void lstm_step(const LstmParams& p, const Vec& x_t, const Vec& h_prev, const Vec& c_prev,
               LstmStep& out);
void gru_step(const GruParams& p, const Vec& x_t, const Vec& h_prev, GruStep& out);

// Full-sequence forward from zero initial state (the h_t sequence is
// trace.steps[t].h). Rejects empty sequences.
LstmTrace lstm_forward(const LstmParams& p, const std::vector<Vec>& xs);
GruTrace gru_forward(const GruParams& p, const std::vector<Vec>& xs);
LstmTrace lstm_forward(const LstmParams& p, const std::vector<Vec>& xs, Vec h0, Vec c0);
GruTrace gru_forward(const GruParams& p, const std::vector<Vec>& xs, Vec h0);

// Reverse pass for the objective sum_t <d_hs[t], h_t>: exact gradients for
// every parameter, accumulated into `acc`; per-timestep input gradients are
// written to *d_x when non-null.
void lstm_backward_acc(const LstmParams& p, const LstmTrace& trace, const std::vector<Vec>& d_hs,
                       LstmParams& acc, std::vector<Vec>* d_x);
void gru_backward_acc(const GruParams& p, const GruTrace& trace, const std::vector<Vec>& d_hs,
                      GruParams& acc, std::vector<Vec>* d_x);

LstmGrads lstm_backward(const LstmParams& p, const LstmTrace& trace, const std::vector<Vec>& d_hs);
GruGrads gru_backward(const GruParams& p, const GruTrace& trace, const std::vector<Vec>& d_hs);

}  // namespace tsrnn
