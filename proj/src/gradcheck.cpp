#include "tsrnn/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/net.hpp"
#include "tsrnn/rng.hpp"

namespace tsrnn {

namespace {

// Relative error with a scale floor: entries below the floor are compared
// absolutely at floor*tol, which stays far above the ~1e-10 truncation error
// of central differences at step 1e-5.
double rel_err(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / scale;
}

constexpr int kMaxFailuresListed = 25;

struct Checker {
  const GradCheckOptions& opts;
  GradCheckReport& report;
  bool fault_matched = false;

  void compare(const std::string& check, const std::string& tensor, std::size_t index,
               double analytic, double numeric, double tol, double& max_err) {
    const double e = rel_err(analytic, numeric);
    max_err = std::max(max_err, e);
    if (e > tol && report.failures.size() < kMaxFailuresListed)
      report.failures.push_back({check, tensor, index, analytic, numeric, e});
  }

  // central differences over every tensor entry
  void check_tensors(const std::string& check, std::vector<TensorView> params,
                     std::vector<TensorView> analytic, const std::function<double()>& eval,
                     double tol, double& max_err) {
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
      double* a = analytic[ti].data;
      if (!opts.inject_fault.empty() && analytic[ti].name == opts.inject_fault) {
        a[0] += 1e-2;  // self-test hook: corrupt the analytic gradient
        fault_matched = true;
      }
      for (std::size_t k = 0; k < params[ti].size; ++k) {
        double* p = params[ti].data + k;
        const double saved = *p;
        *p = saved + opts.step;
        const double up = eval();
        *p = saved - opts.step;
        const double down = eval();
        *p = saved;
        compare(check, analytic[ti].name, k, a[k], (up - down) / (2.0 * opts.step), tol,
                max_err);
      }
    }
  }
};

std::vector<Vec> random_sequence(Rng& rng, int T, int dim) {
  std::vector<Vec> xs(static_cast<std::size_t>(T), Vec(static_cast<std::size_t>(dim)));
  for (Vec& x : xs)
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return xs;
}

std::vector<TensorView> input_views(std::vector<Vec>& xs) {
  std::vector<TensorView> out;
  for (std::size_t t = 0; t < xs.size(); ++t)
    out.push_back({"x[" + std::to_string(t) + "]", xs[t].data(), xs[t].size()});
  return out;
}

template <typename Params, typename ForwardFn, typename BackwardFn, typename InitFn>
void check_cell(Checker& ck, const char* name, const ForwardFn& fwd, const BackwardFn& bwd,
                const InitFn& make_params, GradCheckSummary& summary) {
  const int T = 4, input_dim = 3, hidden_dim = 5;
  summary.instances = ck.opts.cell_instances;
  summary.tolerance = ck.opts.cell_tol;

  for (int inst = 0; inst < ck.opts.cell_instances; ++inst) {
    Rng rng(derive_seed(ck.opts.seed, std::uint64_t(inst) * 2 + (name[0] == 'g')));
    Params p = make_params(input_dim, hidden_dim);
    for (TensorView& v : tensor_views(p))
      for (std::size_t k = 0; k < v.size; ++k) v.data[k] = rng.uniform(-0.8, 0.8);
    std::vector<Vec> xs = random_sequence(rng, T, input_dim);
    std::vector<Vec> d_hs = random_sequence(rng, T, hidden_dim);

    // objective: sum_t <d_hs[t], h_t>
    auto eval = [&]() {
      auto trace = fwd(p, xs);
      double L = 0.0;
      for (int t = 0; t < T; ++t)
        L += dot(d_hs[std::size_t(t)].data(), trace.steps[std::size_t(t)].h.data(),
                 std::size_t(hidden_dim));
      return L;
    };

    auto trace = fwd(p, xs);
    auto grads = bwd(p, trace, d_hs);

    const std::string check = std::string(name) + "[" + std::to_string(inst) + "]";
    ck.check_tensors(check, tensor_views(p), tensor_views(grads.wrt), eval, ck.opts.cell_tol,
                     summary.max_rel_err);
    ck.check_tensors(check + ".inputs", input_views(xs), input_views(grads.d_x), eval,
                     ck.opts.cell_tol, summary.max_rel_err);
  }
}

void check_network(Checker& ck, CellKind kind, GradCheckSummary& summary) {
  NetworkConfig cfg;
  cfg.cell = kind;
  cfg.num_layers = 2;
  cfg.hidden_dim = 6;
  cfg.input_dim = 2;
  cfg.num_classes = 3;
  const int T = 4;
  summary.instances = ck.opts.net_instances;
  summary.tolerance = ck.opts.net_tol;

  for (int inst = 0; inst < ck.opts.net_instances; ++inst) {
    cfg.seed = derive_seed(ck.opts.seed, 9000 + std::uint64_t(inst) * 2 + (kind == CellKind::Gru));
    Rng rng(derive_seed(cfg.seed, 77));
    NetworkParams params = init_params(cfg);
    std::vector<Vec> xs = random_sequence(rng, T, cfg.input_dim);
    const int label = int(rng.below(std::uint64_t(cfg.num_classes)));

    auto eval = [&]() { return loss(forward(params, xs), label); };

    NetTrace trace;
    forward(params, xs, &trace);
    NetworkGrads grads = backward(params, trace, label);

    const std::string check =
        std::string("net_") + cell_kind_name(kind) + "[" + std::to_string(inst) + "]";
    ck.check_tensors(check, tensor_views(params), tensor_views(grads), eval, ck.opts.net_tol,
                     summary.max_rel_err);
  }
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckReport report;
  Checker ck{opts, report};

  report.suites.resize(4);
  report.suites[0].name = "lstm_cell";
  check_cell<LstmParams>(
      ck, "lstm_cell",
      [](const LstmParams& p, const std::vector<Vec>& xs) { return lstm_forward(p, xs); },
      [](const LstmParams& p, const LstmTrace& tr, const std::vector<Vec>& d) {
        return lstm_backward(p, tr, d);
      },
      [](int i, int h) { return LstmParams::zeros(i, h); }, report.suites[0]);

  report.suites[1].name = "gru_cell";
  check_cell<GruParams>(
      ck, "gru_cell",
      [](const GruParams& p, const std::vector<Vec>& xs) { return gru_forward(p, xs); },
      [](const GruParams& p, const GruTrace& tr, const std::vector<Vec>& d) {
        return gru_backward(p, tr, d);
      },
      [](int i, int h) { return GruParams::zeros(i, h); }, report.suites[1]);

  report.suites[2].name = "net_lstm";
  check_network(ck, CellKind::Lstm, report.suites[2]);
  report.suites[3].name = "net_gru";
  check_network(ck, CellKind::Gru, report.suites[3]);

  if (!opts.inject_fault.empty() && !ck.fault_matched)
    throw_invalid("gradcheck: inject_fault names unknown tensor '" + opts.inject_fault + "'");

  report.passed = report.failures.empty();
  for (const GradCheckSummary& s : report.suites)
    if (s.max_rel_err > s.tolerance) report.passed = false;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string gradcheck_json(const GradCheckReport& r) {
  nlohmann::ordered_json j;
  j["passed"] = r.passed;
  j["seconds"] = r.seconds;
  j["suites"] = nlohmann::ordered_json::array();
  for (const GradCheckSummary& s : r.suites) {
    nlohmann::ordered_json js;
    js["name"] = s.name;
    js["instances"] = s.instances;
    js["max_rel_err"] = s.max_rel_err;
    js["tolerance"] = s.tolerance;
    j["suites"].push_back(js);
  }
  j["failures"] = nlohmann::ordered_json::array();
  for (const GradCheckFailure& f : r.failures) {
    nlohmann::ordered_json jf;
    jf["check"] = f.check;
    jf["tensor"] = f.tensor;
    jf["index"] = f.index;
    jf["analytic"] = f.analytic;
    jf["numeric"] = f.numeric;
    jf["rel_err"] = f.rel_err;
    j["failures"].push_back(jf);
  }
  return j.dump(2) + "\n";
}

std::string gradcheck_text(const GradCheckReport& r) {
  std::ostringstream os;
  char buf[160];
  for (const GradCheckSummary& s : r.suites) {
    std::snprintf(buf, sizeof(buf), "%-10s instances %4d  max rel err %.3e  (tol %.1e)  %s\n",
                  s.name.c_str(), s.instances, s.max_rel_err, s.tolerance,
                  s.max_rel_err <= s.tolerance ? "ok" : "FAIL");
    os << buf;
  }
  for (const GradCheckFailure& f : r.failures) {
    std::snprintf(buf, sizeof(buf),
                  "FAIL %s %s[%zu]: analytic %.9e vs numeric %.9e (rel err %.3e)\n",
                  f.check.c_str(), f.tensor.c_str(), f.index, f.analytic, f.numeric, f.rel_err);
    os << buf;
  }
  os << (r.passed ? "gradcheck: PASS" : "gradcheck: FAIL") << "\n";
  return os.str();
}

}  // namespace tsrnn
