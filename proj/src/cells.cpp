#include "tsrnn/cells.hpp"

#include <cmath>
#include <sstream>

#include "tsrnn/errors.hpp"

namespace tsrnn {

namespace {

void require_dim(std::size_t got, int want, const char* what) {
  if (got != std::size_t(want)) {
    std::ostringstream os;
    os << what << ": expected length " << want << ", got " << got;
    throw_invalid(os.str());
  }
}

// Sigmoid outputs live in (0,1) mathematically; in doubles they reach the
// closed endpoints at saturation. Candidates are the same story in [-1,1].
void check_gate(const Vec& v, const char* what) {
  for (double x : v) {
    if (!(x >= 0.0 && x <= 1.0)) {
      std::ostringstream os;
      os << what << " outside [0,1]: " << x;
      throw_numeric(os.str());
    }
  }
}

void check_candidate(const Vec& v, const char* what) {
  for (double x : v) {
    if (!(x >= -1.0 && x <= 1.0)) {
      std::ostringstream os;
      os << what << " outside [-1,1]: " << x;
      throw_numeric(os.str());
    }
  }
}

void gate_preact(const Matrix& wx, const Matrix& wh, const Vec& b, const Vec& x, const Vec& h,
                 Vec& out) {
  matvec_into(wx, x, out);
  matvec_acc(wh, h, out);
  add_acc(b, out);
}

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.W_ix = Matrix(hidden_dim, input_dim);
  p.W_ih = Matrix(hidden_dim, hidden_dim);
  p.W_fx = Matrix(hidden_dim, input_dim);
  p.W_fh = Matrix(hidden_dim, hidden_dim);
  p.W_yx = Matrix(hidden_dim, input_dim);
  p.W_yh = Matrix(hidden_dim, hidden_dim);
  p.W_ox = Matrix(hidden_dim, input_dim);
  p.W_oh = Matrix(hidden_dim, hidden_dim);
  p.b_i.assign(std::size_t(hidden_dim), 0.0);
  p.b_f.assign(std::size_t(hidden_dim), 0.0);
  p.b_y.assign(std::size_t(hidden_dim), 0.0);
  p.b_o.assign(std::size_t(hidden_dim), 0.0);
  return p;
}

void LstmParams::zero() {
  for (Matrix* m : {&W_ix, &W_ih, &W_fx, &W_fh, &W_yx, &W_yh, &W_ox, &W_oh})
    m->a.assign(m->a.size(), 0.0);
  for (Vec* v : {&b_i, &b_f, &b_y, &b_o}) v->assign(v->size(), 0.0);
}

GruParams GruParams::zeros(int input_dim, int hidden_dim) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.W_zx = Matrix(hidden_dim, input_dim);
  p.W_zh = Matrix(hidden_dim, hidden_dim);
  p.W_rx = Matrix(hidden_dim, input_dim);
  p.W_rh = Matrix(hidden_dim, hidden_dim);
  p.W_hx = Matrix(hidden_dim, input_dim);
  p.W_hr = Matrix(hidden_dim, hidden_dim);
  p.b_z.assign(std::size_t(hidden_dim), 0.0);
  p.b_r.assign(std::size_t(hidden_dim), 0.0);
  p.b_h.assign(std::size_t(hidden_dim), 0.0);
  return p;
}

void GruParams::zero() {
  for (Matrix* m : {&W_zx, &W_zh, &W_rx, &W_rh, &W_hx, &W_hr}) m->a.assign(m->a.size(), 0.0);
  for (Vec* v : {&b_z, &b_r, &b_h}) v->assign(v->size(), 0.0);
}

std::vector<TensorView> tensor_views(LstmParams& p) {
  return {
      {"W_ix", p.W_ix.a.data(), p.W_ix.a.size()}, {"W_ih", p.W_ih.a.data(), p.W_ih.a.size()},
      {"W_fx", p.W_fx.a.data(), p.W_fx.a.size()}, {"W_fh", p.W_fh.a.data(), p.W_fh.a.size()},
      {"W_yx", p.W_yx.a.data(), p.W_yx.a.size()}, {"W_yh", p.W_yh.a.data(), p.W_yh.a.size()},
      {"W_ox", p.W_ox.a.data(), p.W_ox.a.size()}, {"W_oh", p.W_oh.a.data(), p.W_oh.a.size()},
      {"b_i", p.b_i.data(), p.b_i.size()},        {"b_f", p.b_f.data(), p.b_f.size()},
      {"b_y", p.b_y.data(), p.b_y.size()},        {"b_o", p.b_o.data(), p.b_o.size()},
  };
}

std::vector<TensorView> tensor_views(GruParams& p) {
  return {
      {"W_zx", p.W_zx.a.data(), p.W_zx.a.size()}, {"W_zh", p.W_zh.a.data(), p.W_zh.a.size()},
      {"W_rx", p.W_rx.a.data(), p.W_rx.a.size()}, {"W_rh", p.W_rh.a.data(), p.W_rh.a.size()},
      {"W_hx", p.W_hx.a.data(), p.W_hx.a.size()}, {"W_hr", p.W_hr.a.data(), p.W_hr.a.size()},
      {"b_z", p.b_z.data(), p.b_z.size()},        {"b_r", p.b_r.data(), p.b_r.size()},
      {"b_h", p.b_h.data(), p.b_h.size()},
  };
}

void lstm_step(const LstmParams& p, const Vec& x_t, const Vec& h_prev, const Vec& c_prev,
               LstmStep& out) {
  require_dim(x_t.size(), p.input_dim, "lstm_step: x_t");
  require_dim(h_prev.size(), p.hidden_dim, "lstm_step: h_prev");
  require_dim(c_prev.size(), p.hidden_dim, "lstm_step: c_prev");

  out.x = x_t;
  Vec pre;
  gate_preact(p.W_ix, p.W_ih, p.b_i, x_t, h_prev, pre);
  sigmoid_into(pre, out.i);
  gate_preact(p.W_fx, p.W_fh, p.b_f, x_t, h_prev, pre);
  sigmoid_into(pre, out.f);
  gate_preact(p.W_yx, p.W_yh, p.b_y, x_t, h_prev, pre);
  tanh_into(pre, out.y);
  gate_preact(p.W_ox, p.W_oh, p.b_o, x_t, h_prev, pre);
  sigmoid_into(pre, out.o);

  const std::size_t n = std::size_t(p.hidden_dim);
  out.c.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.c[k] = out.i[k] * out.y[k] + out.f[k] * c_prev[k];
  tanh_into(out.c, out.tanh_c);
  out.h.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.h[k] = out.o[k] * out.tanh_c[k];

  check_gate(out.i, "lstm i_t");
  check_gate(out.f, "lstm f_t");
  check_gate(out.o, "lstm o_t");
  check_candidate(out.y, "lstm y_t");
  check_finite(out.c, "lstm c_t");
  check_finite(out.h, "lstm h_t");
}

void gru_step(const GruParams& p, const Vec& x_t, const Vec& h_prev, GruStep& out) {
  require_dim(x_t.size(), p.input_dim, "gru_step: x_t");
  require_dim(h_prev.size(), p.hidden_dim, "gru_step: h_prev");

  out.x = x_t;
  Vec pre;
  gate_preact(p.W_zx, p.W_zh, p.b_z, x_t, h_prev, pre);
  sigmoid_into(pre, out.z);
  gate_preact(p.W_rx, p.W_rh, p.b_r, x_t, h_prev, pre);
  sigmoid_into(pre, out.r);

  // candidate: tanh(W_hx x + W_hr (r o h_prev) + b_h), reset applied before
  // the matrix
  const std::size_t n = std::size_t(p.hidden_dim);
  Vec rh(n);
  for (std::size_t k = 0; k < n; ++k) rh[k] = out.r[k] * h_prev[k];
  matvec_into(p.W_hx, x_t, pre);
  matvec_acc(p.W_hr, rh, pre);
  add_acc(p.b_h, pre);
  tanh_into(pre, out.g);

  out.h.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    out.h[k] = out.z[k] * h_prev[k] + (1.0 - out.z[k]) * out.g[k];

  check_gate(out.z, "gru z_t");
  check_gate(out.r, "gru r_t");
  check_candidate(out.g, "gru candidate");
  check_finite(out.h, "gru h_t");
}

LstmTrace lstm_forward(const LstmParams& p, const std::vector<Vec>& xs, Vec h0, Vec c0) {
  if (xs.empty()) throw_invalid("lstm_forward: empty sequence");
  require_dim(h0.size(), p.hidden_dim, "lstm_forward: h0");
  require_dim(c0.size(), p.hidden_dim, "lstm_forward: c0");
  LstmTrace trace;
  trace.h0 = std::move(h0);
  trace.c0 = std::move(c0);
  trace.steps.resize(xs.size());
  const Vec* h = &trace.h0;
  const Vec* c = &trace.c0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    lstm_step(p, xs[t], *h, *c, trace.steps[t]);
    h = &trace.steps[t].h;
    c = &trace.steps[t].c;
  }
  return trace;
}

LstmTrace lstm_forward(const LstmParams& p, const std::vector<Vec>& xs) {
  return lstm_forward(p, xs, Vec(std::size_t(p.hidden_dim), 0.0),
                      Vec(std::size_t(p.hidden_dim), 0.0));
}

GruTrace gru_forward(const GruParams& p, const std::vector<Vec>& xs, Vec h0) {
  if (xs.empty()) throw_invalid("gru_forward: empty sequence");
  require_dim(h0.size(), p.hidden_dim, "gru_forward: h0");
  GruTrace trace;
  trace.h0 = std::move(h0);
  trace.steps.resize(xs.size());
  const Vec* h = &trace.h0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    gru_step(p, xs[t], *h, trace.steps[t]);
    h = &trace.steps[t].h;
  }
  return trace;
}

GruTrace gru_forward(const GruParams& p, const std::vector<Vec>& xs) {
  return gru_forward(p, xs, Vec(std::size_t(p.hidden_dim), 0.0));
}

void lstm_backward_acc(const LstmParams& p, const LstmTrace& trace, const std::vector<Vec>& d_hs,
                       LstmParams& acc, std::vector<Vec>* d_x) {
  const int T = trace.timesteps();
  if (T == 0) throw_invalid("lstm_backward: empty trace");
  if (d_hs.size() != std::size_t(T)) {
    std::ostringstream os;
    os << "lstm_backward: trace has " << T << " steps but d_hs has " << d_hs.size();
    throw_invalid(os.str());
  }
  if (acc.hidden_dim != p.hidden_dim || acc.input_dim != p.input_dim)
    throw_invalid("lstm_backward: gradient accumulator shape mismatch");

  const std::size_t n = std::size_t(p.hidden_dim);
  if (d_x) d_x->assign(std::size_t(T), Vec(std::size_t(p.input_dim), 0.0));

  Vec dh_next(n, 0.0), dc_next(n, 0.0);
  Vec dh(n), dc(n), da_i(n), da_f(n), da_y(n), da_o(n);
  for (int t = T - 1; t >= 0; --t) {
    const LstmStep& s = trace.steps[std::size_t(t)];
    require_dim(d_hs[std::size_t(t)].size(), p.hidden_dim, "lstm_backward: d_hs[t]");
    const Vec& c_prev = (t == 0) ? trace.c0 : trace.steps[std::size_t(t - 1)].c;
    const Vec& h_prev = (t == 0) ? trace.h0 : trace.steps[std::size_t(t - 1)].h;

    for (std::size_t k = 0; k < n; ++k) {
      dh[k] = d_hs[std::size_t(t)][k] + dh_next[k];
      // h = o o tanh(c): split into the output gate and the cell state
      const double do_k = dh[k] * s.tanh_c[k];
      dc[k] = dc_next[k] + dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
      da_o[k] = do_k * s.o[k] * (1.0 - s.o[k]);
      // c = i o y + f o c_prev
      da_i[k] = dc[k] * s.y[k] * s.i[k] * (1.0 - s.i[k]);
      da_y[k] = dc[k] * s.i[k] * (1.0 - s.y[k] * s.y[k]);
      da_f[k] = dc[k] * c_prev[k] * s.f[k] * (1.0 - s.f[k]);
      dc_next[k] = dc[k] * s.f[k];
    }

    outer_acc(acc.W_ix, da_i, s.x);
    outer_acc(acc.W_ih, da_i, h_prev);
    add_acc(da_i, acc.b_i);
    outer_acc(acc.W_fx, da_f, s.x);
    outer_acc(acc.W_fh, da_f, h_prev);
    add_acc(da_f, acc.b_f);
    outer_acc(acc.W_yx, da_y, s.x);
    outer_acc(acc.W_yh, da_y, h_prev);
    add_acc(da_y, acc.b_y);
    outer_acc(acc.W_ox, da_o, s.x);
    outer_acc(acc.W_oh, da_o, h_prev);
    add_acc(da_o, acc.b_o);

    dh_next.assign(n, 0.0);
    matvec_t_acc(p.W_ih, da_i, dh_next);
    matvec_t_acc(p.W_fh, da_f, dh_next);
    matvec_t_acc(p.W_yh, da_y, dh_next);
    matvec_t_acc(p.W_oh, da_o, dh_next);

    if (d_x) {
      Vec& dx = (*d_x)[std::size_t(t)];
      matvec_t_acc(p.W_ix, da_i, dx);
      matvec_t_acc(p.W_fx, da_f, dx);
      matvec_t_acc(p.W_yx, da_y, dx);
      matvec_t_acc(p.W_ox, da_o, dx);
    }
  }
}

void gru_backward_acc(const GruParams& p, const GruTrace& trace, const std::vector<Vec>& d_hs,
                      GruParams& acc, std::vector<Vec>* d_x) {
  const int T = trace.timesteps();
  if (T == 0) throw_invalid("gru_backward: empty trace");
  if (d_hs.size() != std::size_t(T)) {
    std::ostringstream os;
    os << "gru_backward: trace has " << T << " steps but d_hs has " << d_hs.size();
    throw_invalid(os.str());
  }
  if (acc.hidden_dim != p.hidden_dim || acc.input_dim != p.input_dim)
    throw_invalid("gru_backward: gradient accumulator shape mismatch");

  const std::size_t n = std::size_t(p.hidden_dim);
  if (d_x) d_x->assign(std::size_t(T), Vec(std::size_t(p.input_dim), 0.0));

  Vec dh_next(n, 0.0);
  Vec dh(n), da_z(n), da_r(n), da_g(n), rh(n), d_rh(n);
  for (int t = T - 1; t >= 0; --t) {
    const GruStep& s = trace.steps[std::size_t(t)];
    require_dim(d_hs[std::size_t(t)].size(), p.hidden_dim, "gru_backward: d_hs[t]");
    const Vec& h_prev = (t == 0) ? trace.h0 : trace.steps[std::size_t(t - 1)].h;

    for (std::size_t k = 0; k < n; ++k) {
      dh[k] = d_hs[std::size_t(t)][k] + dh_next[k];
      // h = z o h_prev + (1-z) o g
      const double dz_k = dh[k] * (h_prev[k] - s.g[k]);
      const double dg_k = dh[k] * (1.0 - s.z[k]);
      da_z[k] = dz_k * s.z[k] * (1.0 - s.z[k]);
      da_g[k] = dg_k * (1.0 - s.g[k] * s.g[k]);
      rh[k] = s.r[k] * h_prev[k];
    }

    outer_acc(acc.W_hx, da_g, s.x);
    outer_acc(acc.W_hr, da_g, rh);
    add_acc(da_g, acc.b_h);

    d_rh.assign(n, 0.0);
    matvec_t_acc(p.W_hr, da_g, d_rh);
    for (std::size_t k = 0; k < n; ++k) {
      const double dr_k = d_rh[k] * h_prev[k];
      da_r[k] = dr_k * s.r[k] * (1.0 - s.r[k]);
    }

    outer_acc(acc.W_zx, da_z, s.x);
    outer_acc(acc.W_zh, da_z, h_prev);
    add_acc(da_z, acc.b_z);
    outer_acc(acc.W_rx, da_r, s.x);
    outer_acc(acc.W_rh, da_r, h_prev);
    add_acc(da_r, acc.b_r);

    for (std::size_t k = 0; k < n; ++k) dh_next[k] = dh[k] * s.z[k] + d_rh[k] * s.r[k];
    matvec_t_acc(p.W_zh, da_z, dh_next);
    matvec_t_acc(p.W_rh, da_r, dh_next);

    if (d_x) {
      Vec& dx = (*d_x)[std::size_t(t)];
      matvec_t_acc(p.W_zx, da_z, dx);
      matvec_t_acc(p.W_rx, da_r, dx);
      matvec_t_acc(p.W_hx, da_g, dx);
    }
  }
}

LstmGrads lstm_backward(const LstmParams& p, const LstmTrace& trace,
                        const std::vector<Vec>& d_hs) {
  LstmGrads g;
  g.wrt = LstmParams::zeros(p.input_dim, p.hidden_dim);
  lstm_backward_acc(p, trace, d_hs, g.wrt, &g.d_x);
  return g;
}

GruGrads gru_backward(const GruParams& p, const GruTrace& trace, const std::vector<Vec>& d_hs) {
  GruGrads g;
  g.wrt = GruParams::zeros(p.input_dim, p.hidden_dim);
  gru_backward_acc(p, trace, d_hs, g.wrt, &g.d_x);
  return g;
}

}  // namespace tsrnn
