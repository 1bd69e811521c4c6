#include "tsrnn/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "tsrnn/errors.hpp"
#include "tsrnn/rng.hpp"

namespace tsrnn {

const char* cell_kind_name(CellKind k) { return k == CellKind::Lstm ? "lstm" : "gru"; }

CellKind cell_kind_from_name(const std::string& name) {
  if (name == "lstm") return CellKind::Lstm;
  if (name == "gru") return CellKind::Gru;
  throw_invalid("unknown cell kind '" + name + "' (expected lstm or gru)");
}

namespace {

void validate_config(const NetworkConfig& cfg) {
  if (cfg.num_layers < 1) throw_invalid("network: num_layers must be >= 1");
  if (cfg.hidden_dim < 1) throw_invalid("network: hidden_dim must be >= 1");
  if (cfg.input_dim < 1) throw_invalid("network: input_dim must be >= 1");
  if (cfg.num_classes < 2) throw_invalid("network: num_classes must be >= 2");
}

double glorot_bound(int fan_in, int fan_out) { return std::sqrt(6.0 / double(fan_in + fan_out)); }

void fill_glorot(Matrix& m, Rng& rng) {
  // fan_in = cols (input side), fan_out = rows
  const double b = glorot_bound(m.cols, m.rows);
  for (double& x : m.a) x = rng.uniform(-b, b);
}

void init_lstm(LstmParams& p, Rng& rng) {
  for (Matrix* m : {&p.W_ix, &p.W_ih, &p.W_fx, &p.W_fh, &p.W_yx, &p.W_yh, &p.W_ox, &p.W_oh})
    fill_glorot(*m, rng);
}

void init_gru(GruParams& p, Rng& rng) {
  for (Matrix* m : {&p.W_zx, &p.W_zh, &p.W_rx, &p.W_rh, &p.W_hx, &p.W_hr}) fill_glorot(*m, rng);
}

template <typename T>
std::vector<TensorView> views_impl(T& p) {
  std::vector<TensorView> out;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    std::visit(
        [&](auto& cp) {
          for (TensorView& v : tensor_views(cp)) out.push_back({prefix + v.name, v.data, v.size});
        },
        p.layers[l]);
  }
  out.push_back({"softmax.W", p.softmax_W.a.data(), p.softmax_W.a.size()});
  out.push_back({"softmax.b", p.softmax_b.data(), p.softmax_b.size()});
  return out;
}

std::vector<CellParams> zero_layers(const NetworkConfig& cfg) {
  std::vector<CellParams> layers;
  layers.reserve(std::size_t(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l) {
    const int in = (l == 0) ? cfg.input_dim : cfg.hidden_dim;
    if (cfg.cell == CellKind::Lstm)
      layers.emplace_back(LstmParams::zeros(in, cfg.hidden_dim));
    else
      layers.emplace_back(GruParams::zeros(in, cfg.hidden_dim));
  }
  return layers;
}

}  // namespace

std::vector<TensorView> tensor_views(NetworkParams& p) { return views_impl(p); }
std::vector<TensorView> tensor_views(NetworkGrads& g) { return views_impl(g); }

void NetworkGrads::zero() {
  for (CellParams& cp : layers) std::visit([](auto& c) { c.zero(); }, cp);
  softmax_W.a.assign(softmax_W.a.size(), 0.0);
  softmax_b.assign(softmax_b.size(), 0.0);
}

NetworkParams init_params(const NetworkConfig& cfg) {
  validate_config(cfg);
  NetworkParams p;
  p.cfg = cfg;
  p.layers = zero_layers(cfg);
  p.softmax_W = Matrix(cfg.num_classes, cfg.hidden_dim);
  p.softmax_b.assign(std::size_t(cfg.num_classes), 0.0);

  Rng rng(cfg.seed);
  for (CellParams& cp : p.layers) {
    if (auto* l = std::get_if<LstmParams>(&cp))
      init_lstm(*l, rng);
    else
      init_gru(std::get<GruParams>(cp), rng);
  }
  fill_glorot(p.softmax_W, rng);
  return p;
}

NetworkGrads make_grads(const NetworkParams& p) {
  NetworkGrads g;
  g.layers = zero_layers(p.cfg);
  g.softmax_W = Matrix(p.cfg.num_classes, p.cfg.hidden_dim);
  g.softmax_b.assign(std::size_t(p.cfg.num_classes), 0.0);
  return g;
}

Vec stable_softmax(const Vec& logits, Vec* log_probs) {
  if (logits.empty()) throw_invalid("softmax: empty logits");
  double m = logits[0];
  for (double x : logits) m = std::max(m, x);
  double sum = 0.0;
  Vec e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(logits[i] - m);
    sum += e[i];
  }
  const double log_sum = std::log(sum);
  if (log_probs) {
    log_probs->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) (*log_probs)[i] = logits[i] - m - log_sum;
  }
  for (std::size_t i = 0; i < logits.size(); ++i) e[i] /= sum;
  return e;
}

Prediction forward(const NetworkParams& p, const std::vector<Vec>& xs, NetTrace* trace) {
  if (xs.empty()) throw_invalid("forward: empty input sequence");
  NetTrace local;
  NetTrace& tr = trace ? *trace : local;
  tr.layers.clear();
  tr.layers.reserve(p.layers.size());
  tr.timesteps = int(xs.size());

  const std::vector<Vec>* input = &xs;
  std::vector<Vec> hidden_seq;
  for (const CellParams& cp : p.layers) {
    if (const auto* l = std::get_if<LstmParams>(&cp)) {
      tr.layers.emplace_back(lstm_forward(*l, *input));
    } else {
      tr.layers.emplace_back(gru_forward(std::get<GruParams>(cp), *input));
    }
    // each layer hands its full hidden sequence to the next
    hidden_seq.resize(xs.size());
    std::visit(
        [&](const auto& t) {
          for (std::size_t i = 0; i < t.steps.size(); ++i) hidden_seq[i] = t.steps[i].h;
        },
        tr.layers.back());
    input = &hidden_seq;
  }

  const Vec& h_last = hidden_seq.back();
  Vec logits = matvec(p.softmax_W, h_last);
  add_acc(p.softmax_b, logits);

  Prediction pred;
  pred.probs = stable_softmax(logits, &pred.log_probs);
  pred.argmax_class = 0;
  for (std::size_t i = 1; i < pred.probs.size(); ++i)
    if (pred.probs[i] > pred.probs[pred.argmax_class]) pred.argmax_class = int(i);
  tr.pred = pred;
  return pred;
}

double loss(const Prediction& pred, int label) {
  if (label < 0 || std::size_t(label) >= pred.log_probs.size()) {
    std::ostringstream os;
    os << "loss: label " << label << " out of range [0," << pred.log_probs.size() << ")";
    throw_invalid(os.str());
  }
  return -pred.log_probs[std::size_t(label)];
}

void backward_acc(const NetworkParams& p, const NetTrace& trace, int label, double cotangent_scale,
                  NetworkGrads& acc) {
  if (trace.layers.size() != p.layers.size())
    throw_invalid("backward: trace does not match parameters (layer count)");
  if (trace.timesteps < 1) throw_invalid("backward: empty trace");
  if (label < 0 || label >= p.cfg.num_classes) throw_invalid("backward: label out of range");
  if (acc.layers.size() != p.layers.size())
    throw_invalid("backward: gradient accumulator layer count mismatch");
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    if (trace.layers[l].index() != p.layers[l].index())
      throw_invalid("backward: trace cell kind does not match parameters");

  const std::size_t T = std::size_t(trace.timesteps);
  const Vec& h_last = std::visit([](const auto& t) -> const Vec& { return t.steps.back().h; },
                                 trace.layers.back());

  // softmax layer: d logits = scale * (probs - onehot(label))
  Vec dlogits = trace.pred.probs;
  dlogits[std::size_t(label)] -= 1.0;
  for (double& x : dlogits) x *= cotangent_scale;

  outer_acc(acc.softmax_W, dlogits, h_last);
  add_acc(dlogits, acc.softmax_b);

  // cotangent on the top layer's hidden sequence: only the final state is
  // connected to the head
  std::vector<Vec> d_hs(T, Vec(std::size_t(p.cfg.hidden_dim), 0.0));
  matvec_t_acc(p.softmax_W, dlogits, d_hs[T - 1]);

  std::vector<Vec> d_x;
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const bool need_dx = li > 0;
    if (const auto* l = std::get_if<LstmParams>(&p.layers[li])) {
      lstm_backward_acc(*l, std::get<LstmTrace>(trace.layers[li]), d_hs,
                        std::get<LstmParams>(acc.layers[li]), need_dx ? &d_x : nullptr);
    } else {
      gru_backward_acc(std::get<GruParams>(p.layers[li]), std::get<GruTrace>(trace.layers[li]),
                       d_hs, std::get<GruParams>(acc.layers[li]), need_dx ? &d_x : nullptr);
    }
    if (need_dx) d_hs = std::move(d_x);
  }
}

NetworkGrads backward(const NetworkParams& p, const NetTrace& trace, int label) {
  NetworkGrads g = make_grads(p);
  backward_acc(p, trace, label, 1.0, g);
  return g;
}

void save_checkpoint(const NetworkParams& p, const std::string& path_prefix) {
  NetworkParams& mp = const_cast<NetworkParams&>(p);
  std::vector<TensorView> views = tensor_views(mp);

  std::ofstream meta(path_prefix + ".meta");
  if (!meta) throw_io("cannot write " + path_prefix + ".meta");
  meta << "format: tsrnn-checkpoint-v1\n";
  meta << "cell: " << cell_kind_name(p.cfg.cell) << "\n";
  meta << "num_layers: " << p.cfg.num_layers << "\n";
  meta << "hidden_dim: " << p.cfg.hidden_dim << "\n";
  meta << "input_dim: " << p.cfg.input_dim << "\n";
  meta << "num_classes: " << p.cfg.num_classes << "\n";
  meta << "seed: " << p.cfg.seed << "\n";
  meta << "dtype: float64-le\n";
  meta << "tensors: " << views.size() << "\n";
  for (const TensorView& v : views) meta << "tensor: " << v.name << " " << v.size << "\n";
  meta.close();
  if (!meta) throw_io("failed writing " + path_prefix + ".meta");

  std::ofstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw_io("cannot write " + path_prefix + ".bin");
  for (const TensorView& v : views)
    bin.write(reinterpret_cast<const char*>(v.data), std::streamsize(v.size * sizeof(double)));
  bin.close();
  if (!bin) throw_io("failed writing " + path_prefix + ".bin");
}

NetworkParams load_checkpoint(const std::string& path_prefix) {
  std::ifstream meta(path_prefix + ".meta");
  if (!meta) throw_io("cannot open " + path_prefix + ".meta");
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::size_t>> tensors;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    auto colon = line.find(": ");
    if (colon == std::string::npos) throw_io("malformed checkpoint meta line: " + line);
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 2);
    if (key == "tensor") {
      std::istringstream is(value);
      std::string name;
      std::size_t n = 0;
      is >> name >> n;
      if (name.empty() || n == 0) throw_io("malformed tensor line: " + line);
      tensors.emplace_back(name, n);
    } else {
      kv[key] = value;
    }
  }
  if (kv["format"] != "tsrnn-checkpoint-v1")
    throw_io("unsupported checkpoint format '" + kv["format"] + "'");
  if (kv["dtype"] != "float64-le") throw_io("unsupported checkpoint dtype '" + kv["dtype"] + "'");

  NetworkConfig cfg;
  cfg.cell = cell_kind_from_name(kv["cell"]);
  cfg.num_layers = std::stoi(kv["num_layers"]);
  cfg.hidden_dim = std::stoi(kv["hidden_dim"]);
  cfg.input_dim = std::stoi(kv["input_dim"]);
  cfg.num_classes = std::stoi(kv["num_classes"]);
  cfg.seed = std::stoull(kv["seed"]);
  validate_config(cfg);

  NetworkParams p;
  p.cfg = cfg;
  p.layers = zero_layers(cfg);
  p.softmax_W = Matrix(cfg.num_classes, cfg.hidden_dim);
  p.softmax_b.assign(std::size_t(cfg.num_classes), 0.0);
  std::vector<TensorView> views = tensor_views(p);

  if (views.size() != tensors.size()) throw_io("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].name != tensors[i].first || views[i].size != tensors[i].second)
      throw_io("checkpoint tensor mismatch at " + tensors[i].first);
  }

  std::ifstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw_io("cannot open " + path_prefix + ".bin");
  for (TensorView& v : views) {
    bin.read(reinterpret_cast<char*>(v.data), std::streamsize(v.size * sizeof(double)));
    if (std::size_t(bin.gcount()) != v.size * sizeof(double))
      throw_io("checkpoint binary truncated at " + v.name);
  }
  char extra;
  if (bin.read(&extra, 1)) throw_io("checkpoint binary has trailing bytes");
  return p;
}

}  // namespace tsrnn
