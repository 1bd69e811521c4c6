// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tsrnn/cells.hpp"
#include "tsrnn/config.hpp"
#include "tsrnn/data.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/eval.hpp"
#include "tsrnn/gradcheck.hpp"
#include "tsrnn/net.hpp"
#include "tsrnn/rng.hpp"
#include "tsrnn/runner.hpp"
#include "tsrnn/sarprep.hpp"
#include "tsrnn/train.hpp"

using namespace tsrnn;
namespace fs = std::filesystem;

namespace {

fs::path g_work;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, const char* f = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset benchmark_dataset(int per_class, std::uint64_t seed) {
  std::map<int, int> counts;
  for (int c = 1; c <= 5; ++c) counts[c] = per_class;
  return synth_generate(default_profiles(), counts, seed);
}

std::vector<int> truth_of(const Dataset& ds) {
  std::vector<int> t;
  t.reserve(ds.size());
  for (const TimeSeriesSample& s : ds.samples) t.push_back(s.label);
  return t;
}

// ---- criterion 1: gradient fidelity --------------------------------------

Check criterion_gradients() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckOptions opts;  // 100 instances per cell kind, 20 per network kind
  opts.cell_instances = 100;
  opts.net_instances = 20;
  GradCheckReport r = run_gradcheck(opts);
  c.expect(r.passed, "gradient check failed");
  double worst = 0.0;
  for (const GradCheckSummary& s : r.suites) {
    worst = std::max(worst, s.max_rel_err);
    c.expect(s.max_rel_err <= 1e-4, s.name + " rel err " + fmt(s.max_rel_err, "%.2e"));
  }
  const double secs = seconds_since(t0);
  c.expect(secs <= 120.0, "runtime " + fmt(secs, "%.0f") + "s > 120s");
  c.note("max rel err " + fmt(worst, "%.2e") + ", " + fmt(secs, "%.0f") + "s");
  return c;
}

// ---- criterion 2: cell identities -----------------------------------------

Check criterion_cell_identities() {
  Check c;
  Rng rng(1001);

  // zero-parameter fixed points
  LstmParams lz = LstmParams::zeros(3, 4);
  GruParams gz = GruParams::zeros(3, 4);
  std::vector<Vec> xs(6, Vec(3));
  for (Vec& x : xs)
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
  for (const LstmStep& s : lstm_forward(lz, xs).steps)
    for (double h : s.h) c.expect(h == 0.0, "lstm zero fixed point violated");
  for (const GruStep& s : gru_forward(gz, xs).steps)
    for (double h : s.h) c.expect(h == 0.0, "gru zero fixed point violated");

  // LSTM memory pass-through: saturated forget, closed input gate
  LstmParams lp = LstmParams::zeros(2, 3);
  for (TensorView& v : tensor_views(lp))
    for (std::size_t k = 0; k < v.size; ++k) v.data[k] = rng.uniform(-0.8, 0.8);
  lp.b_f.assign(3, 50.0);
  lp.b_i.assign(3, -50.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    Vec h{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    Vec cc{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    LstmStep step;
    lstm_step(lp, x, h, cc, step);
    for (int k = 0; k < 3; ++k)
      c.expect(std::abs(step.c[std::size_t(k)] - cc[std::size_t(k)]) <= 1e-12,
               "lstm pass-through drift");
  }

  // GRU carry-over under a saturated update gate
  GruParams gp = GruParams::zeros(2, 3);
  for (TensorView& v : tensor_views(gp))
    for (std::size_t k = 0; k < v.size; ++k) v.data[k] = rng.uniform(-0.8, 0.8);
  gp.b_z.assign(3, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    Vec h{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    GruStep step;
    gru_step(gp, x, h, step);
    for (int k = 0; k < 3; ++k)
      c.expect(std::abs(step.h[std::size_t(k)] - h[std::size_t(k)]) <= 1e-12,
               "gru carry-over drift");
  }
  return c;
}

// ---- criterion 3: comparative claim ---------------------------------------

Check criterion_comparative() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = g_work / "comparative";

  RunConfig cfg = resolve_config(R"({
    "seed": 2016,
    "profile": "desk",
    "threads": 1,
    "models": ["lstm", "gru", "rf"]
  })");
  Dataset ds = benchmark_dataset(1000, cfg.synth.seed);
  save_csv(ds, (dir / "bench.csv").string());
  XvalResult res = run_xval((dir / "bench.csv").string(), (dir / "xval").string(), cfg);

  const double f_lstm = res.by_model.at("lstm").f.macro;
  const double f_gru = res.by_model.at("gru").f.macro;
  const double f_rf = res.by_model.at("rf").f.macro;
  const int cross = default_crossing_class();
  const double x_lstm = res.by_model.at("lstm").f.per_class[std::size_t(cross - 1)];
  const double x_gru = res.by_model.at("gru").f.per_class[std::size_t(cross - 1)];
  const double x_rf = res.by_model.at("rf").f.per_class[std::size_t(cross - 1)];

  c.expect(f_lstm - f_rf >= 0.05,
           "lstm macro-F1 lead " + fmt(100 * (f_lstm - f_rf), "%.1f") + "pt < 5pt");
  c.expect(f_gru - f_rf >= 0.05,
           "gru macro-F1 lead " + fmt(100 * (f_gru - f_rf), "%.1f") + "pt < 5pt");
  c.expect(x_lstm - x_rf >= 0.10,
           "lstm crossing-class lead " + fmt(100 * (x_lstm - x_rf), "%.1f") + "pt < 10pt");
  c.expect(x_gru - x_rf >= 0.10,
           "gru crossing-class lead " + fmt(100 * (x_gru - x_rf), "%.1f") + "pt < 10pt");

  const double secs = seconds_since(t0);
  c.expect(secs <= 1800.0, "runtime " + fmt(secs, "%.0f") + "s > 30min");
  c.note("macro-F1 lstm " + fmt(100 * f_lstm, "%.1f") + " gru " + fmt(100 * f_gru, "%.1f") +
         " rf " + fmt(100 * f_rf, "%.1f") + "; class-" + std::to_string(cross) + " F1 lstm " +
         fmt(100 * x_lstm, "%.1f") + " gru " + fmt(100 * x_gru, "%.1f") + " rf " +
         fmt(100 * x_rf, "%.1f") + "; " + fmt(secs, "%.0f") + "s");
  return c;
}

// ---- criterion 4: metric oracles ------------------------------------------

Check criterion_metrics() {
  Check c;
  // hand case: [[40,10],[20,30]] -> accuracy 0.70, kappa 0.40, exactly
  ConfusionMatrix hand(2);
  hand.at(0, 0) = 40;
  hand.at(0, 1) = 10;
  hand.at(1, 0) = 20;
  hand.at(1, 1) = 30;
  c.expect(accuracy(hand) == 0.70, "hand accuracy != 0.70");
  c.expect(kappa(hand) == 0.40, "hand kappa != 0.40");

  // random label pairs vs an independent brute-force pass
  Rng rng(271828);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + int(rng.below(5));
    const int n = 100 + int(rng.below(900));
    std::vector<int> truth(static_cast<std::size_t>(n)), pred(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      truth[std::size_t(i)] = 1 + int(rng.below(std::uint64_t(k)));
      pred[std::size_t(i)] = 1 + int(rng.below(std::uint64_t(k)));
    }
    EvalReport r = evaluate(truth, pred, k);

    // brute force straight from the raw pairs
    long long agree = 0;
    std::vector<long long> row(std::size_t(k), 0), col(std::size_t(k), 0),
        diag(std::size_t(k), 0);
    for (int i = 0; i < n; ++i) {
      if (truth[std::size_t(i)] == pred[std::size_t(i)]) {
        ++agree;
        ++diag[std::size_t(truth[std::size_t(i)] - 1)];
      }
      ++row[std::size_t(truth[std::size_t(i)] - 1)];
      ++col[std::size_t(pred[std::size_t(i)] - 1)];
    }
    const double p_o = double(agree) / double(n);
    double p_e = 0.0;
    for (int cls = 0; cls < k; ++cls)
      p_e += double(row[std::size_t(cls)]) * double(col[std::size_t(cls)]) /
             (double(n) * double(n));
    const double bf_kappa = p_e == 1.0 ? 0.0 : (p_o - p_e) / (1.0 - p_e);

    c.expect(r.accuracy == p_o, "accuracy mismatch vs brute force");
    c.expect(std::abs(r.kappa - bf_kappa) <= 1e-12, "kappa mismatch vs brute force");

    double macro_sum = 0.0;
    int macro_n = 0;
    for (int cls = 0; cls < k; ++cls) {
      const double tp = double(diag[std::size_t(cls)]);
      const double prec = col[std::size_t(cls)] > 0 ? tp / double(col[std::size_t(cls)]) : 0.0;
      const double rec = row[std::size_t(cls)] > 0 ? tp / double(row[std::size_t(cls)]) : 0.0;
      const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
      c.expect(std::abs(r.f.per_class[std::size_t(cls)] - f1) <= 1e-12,
               "per-class F1 mismatch vs brute force");
      if (row[std::size_t(cls)] > 0) {
        macro_sum += f1;
        ++macro_n;
      }
    }
    c.expect(std::abs(r.f.macro - macro_sum / double(macro_n)) <= 1e-12,
             "macro F1 mismatch vs brute force");
  }
  return c;
}

// ---- criterion 5: cross-validation integrity -------------------------------

Check criterion_cv_integrity() {
  Check c;
  const std::vector<long long> table1{12589, 15000, 15000, 15000, 15000};

  std::map<int, int> counts;
  for (int cls = 1; cls <= 5; ++cls) counts[cls] = int(table1[std::size_t(cls - 1)]);
  Dataset ds = synth_generate(default_profiles(), counts, 99);
  c.expect(ds.size() == 72589, "dataset size != 72589");

  std::vector<int> labels = truth_of(ds);
  FoldPlan plan = make_folds(labels, 5, 12345);
  std::map<int, std::map<int, long long>> sizes;
  long long assigned = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (plan.assignment[i] >= 0 && plan.assignment[i] < 5) ++assigned;
    ++sizes[labels[i]][plan.assignment[i]];
  }
  c.expect(assigned == 72589, "folds do not cover all samples");
  for (int cls = 1; cls <= 5; ++cls) {
    long long lo = 1LL << 60, hi = 0;
    for (int f = 0; f < 5; ++f) {
      lo = std::min(lo, sizes[cls][f]);
      hi = std::max(hi, sizes[cls][f]);
    }
    c.expect(hi - lo <= 1, "class " + std::to_string(cls) + " fold sizes differ by more than 1");
  }

  // aggregated predictions over the folds, cheap flat model
  RunLog log = cross_validate_custom(
      ds, 5, 777,
      [&](std::span<const int> train_idx, int) {
        LogisticConfig lc;
        lc.epochs = 2;
        auto m = std::make_shared<LogisticModel>(fit_logistic(ds, train_idx, lc, 5));
        return [m](const TimeSeriesSample& s) {
          return predict_logistic(*m, s.features).argmax_class + 1;
        };
      });
  long long predictions = 0;
  for (int p : log.predicted)
    if (p >= 1 && p <= 5) ++predictions;
  c.expect(predictions == 72589,
           "aggregated predictions " + std::to_string(predictions) + " != 72589");
  ConfusionMatrix cm = confusion(truth_of(ds), log.predicted, 5);
  c.expect(cm.total() == 72589, "confusion total != 72589");
  return c;
}

// ---- criterion 6: null model ------------------------------------------------

Check criterion_null_model() {
  Check c;
  const fs::path dir = g_work / "null";

  Dataset ds = benchmark_dataset(300, 555);
  std::vector<int> labels = truth_of(ds);
  Rng rng(556);
  rng.shuffle(labels);
  for (std::size_t i = 0; i < ds.size(); ++i) ds.samples[i].label = labels[i];
  save_csv(ds, (dir / "permuted.csv").string());

  RunConfig cfg = resolve_config(R"({
    "seed": 557,
    "profile": "desk",
    "threads": 1,
    "models": ["lstm", "gru", "rf", "logistic"],
    "train": {"epochs": 10}
  })");
  XvalResult res = run_xval((dir / "permuted.csv").string(), (dir / "xval").string(), cfg);
  for (const auto& [model, report] : res.by_model) {
    c.expect(report.accuracy >= 0.15 && report.accuracy <= 0.25,
             model + " accuracy " + fmt(report.accuracy) + " outside [0.15, 0.25]");
    c.note(model + " " + fmt(report.accuracy, "%.3f"));
  }
  return c;
}

// ---- criterion 7: temporal filter -------------------------------------------

Check criterion_temporal_filter() {
  Check c;

  // constant-image fixed point, exact (dyadic levels)
  RasterStack s;
  s.width = 6;
  s.height = 5;
  s.dates = {"2016-10-07", "2016-10-19", "2016-10-31"};
  s.channels = {"vv"};
  const double level[3] = {1.5, 2.0, 0.25};
  s.values.assign(3 * 30, 0.0);
  for (int d = 0; d < 3; ++d)
    for (std::size_t i = 0; i < 30; ++i) s.values[std::size_t(d) * 30 + i] = level[d];
  FilterResult fr = temporal_filter(s, 3);
  for (int d = 0; d < 3; ++d)
    for (std::size_t i = 0; i < 30; ++i)
      c.expect(fr.stack.values[std::size_t(d) * 30 + i] == level[d],
               "constant fixed point not exact");

  // whole-image-window hand case
  RasterStack h;
  h.width = 2;
  h.height = 1;
  h.dates = {"2016-10-07", "2016-10-19"};
  h.channels = {"vv"};
  h.values = {1.0, 3.0, 2.0, 2.0};
  FilterResult hb = temporal_filter(h, 99);
  c.expect(hb.stack.values == std::vector<double>{1.5, 2.5, 1.5, 2.5},
           "hand case (1,3)/(2,2) -> (1.5,2.5) not exact");

  // speckle-variance reduction on gamma-noise stacks
  Rng rng(7777);
  RasterStack g;
  g.width = 32;
  g.height = 32;
  g.channels = {"vv"};
  const int M = 9;
  for (int d = 0; d < M; ++d) g.dates.push_back("2016-11-" + std::to_string(10 + d));
  g.values.assign(std::size_t(M) * 1024, 0.0);
  auto gamma4 = [&rng]() {
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) sum += -std::log(1.0 - rng.uniform01());
    return sum / 4.0;
  };
  for (double& v : g.values) v = 1.3 * gamma4();
  FilterResult gf = temporal_filter(g, 7);
  int reduced = 0;
  for (std::size_t pix = 0; pix < 1024; ++pix) {
    double mb = 0.0, ma = 0.0;
    for (int d = 0; d < M; ++d) {
      mb += g.values[std::size_t(d) * 1024 + pix];
      ma += gf.stack.values[std::size_t(d) * 1024 + pix];
    }
    mb /= M;
    ma /= M;
    double vb = 0.0, va = 0.0;
    for (int d = 0; d < M; ++d) {
      const double db = g.values[std::size_t(d) * 1024 + pix] - mb;
      const double da = gf.stack.values[std::size_t(d) * 1024 + pix] - ma;
      vb += db * db;
      va += da * da;
    }
    if (va <= vb) ++reduced;
  }
  const double frac = double(reduced) / 1024.0;
  c.expect(frac >= 0.95, "variance reduced on only " + fmt(100 * frac, "%.1f") + "% of pixels");
  c.note("variance reduced on " + fmt(100 * frac, "%.1f") + "% of pixels");
  return c;
}

// ---- criterion 8: determinism ------------------------------------------------

Check criterion_determinism() {
  Check c;
  const char* cli = std::getenv("TSRNN_CLI_BIN");
  if (!cli) {
    c.expect(false, "TSRNN_CLI_BIN not set");
    return c;
  }
  const fs::path dir = g_work / "determinism";
  fs::create_directories(dir);

  auto run_cli = [&](const std::string& args) {
    const std::string cmd =
        std::string(cli) + " " + args + " > " + (dir / "cli.log").string() + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };

  const std::string counts = R"('{"1":60,"2":60,"3":60,"4":60,"5":60}')";
  c.expect(run_cli("synth --seed 31 --counts " + counts + " --out " +
                   (dir / "d.csv").string()) == 0,
           "synth failed");
  const std::string xval_args = "xval --data " + (dir / "d.csv").string() +
                                " --models gru,logistic --profile desk --epochs 3 --seed 31";
  c.expect(run_cli(xval_args + " --threads 1 --out " + (dir / "x1").string()) == 0,
           "xval run 1 failed");
  c.expect(run_cli(xval_args + " --threads 1 --out " + (dir / "x2").string()) == 0,
           "xval run 2 failed");
  c.expect(run_cli(xval_args + " --threads 2 --out " + (dir / "x3").string()) == 0,
           "xval run 3 failed");

  // repeated single-thread runs: bit-identical reports (timings aside)
  for (const auto& entry : fs::directory_iterator(dir / "x1")) {
    const std::string name = entry.path().filename().string();
    if (name == "timings.txt") continue;
    c.expect(slurp(entry.path()) == slurp(dir / "x2" / name), name + " differs between reruns");
  }
  // threaded run: identical metrics and predictions (config echo differs by
  // the threads field, wall clock by nature)
  for (const auto& entry : fs::directory_iterator(dir / "x1")) {
    const std::string name = entry.path().filename().string();
    if (name == "timings.txt" || name == "config_resolved.json") continue;
    c.expect(slurp(entry.path()) == slurp(dir / "x3" / name),
             name + " differs under --threads 2");
  }
  return c;
}

// ---- criterion 9: paper-profile smoke ----------------------------------------

Check criterion_paper_smoke() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  Dataset ds = benchmark_dataset(100, 888);  // 500 samples
  RunConfig cfg = resolve_config(R"({
    "seed": 889,
    "profile": "paper",
    "train": {"epochs": 2}
  })");
  // paper configuration sanity
  c.expect(cfg.train.network.num_layers == 5, "paper profile layers != 5");
  c.expect(cfg.train.network.hidden_dim == 512, "paper profile hidden != 512");
  c.expect(cfg.train.batch_size == 64, "paper profile batch != 64");
  c.expect(cfg.train.optimizer.base_rate == 5e-4, "paper profile rate != 5e-4");
  c.expect(cfg.train.optimizer.decay == 5e-5, "paper profile decay != 5e-5");

  // epoch-0 loss: the untrained network over the full dataset
  NetworkConfig net_cfg = cfg.train.network;
  net_cfg.cell = CellKind::Lstm;
  net_cfg.input_dim = ds.channels;
  NetworkParams init = init_params(net_cfg);
  double loss0 = 0.0;
  for (const TimeSeriesSample& s : ds.samples) {
    Prediction p = forward(init, sample_to_sequence(s, ds.timesteps, ds.channels));
    loss0 += loss(p, s.label - 1);
  }
  loss0 /= double(ds.size());

  std::vector<int> idx(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) idx[i] = int(i);
  TrainConfig tc = cfg.train;
  tc.network = net_cfg;
  bool finite_run = true;
  double loss2 = 0.0;
  try {
    TrainedNetwork t = train_fold(ds, idx, tc);
    loss2 = t.epoch_loss.back();
  } catch (const Error&) {
    finite_run = false;
  }
  c.expect(finite_run, "numerical failure during the paper-profile run");
  if (finite_run) {
    c.expect(loss2 < loss0, "epoch-2 loss " + fmt(loss2) + " not below epoch-0 " + fmt(loss0));
    c.note("epoch-0 loss " + fmt(loss0) + ", epoch-2 loss " + fmt(loss2));
  }
  const double secs = seconds_since(t0);
  c.expect(secs <= 900.0, "runtime " + fmt(secs, "%.0f") + "s > 15min");
  c.note(fmt(secs, "%.0f") + "s");
  return c;
}

}  // namespace

int main() {
  g_work = fs::temp_directory_path() / "tsrnn_acceptance";
  fs::remove_all(g_work);
  fs::create_directories(g_work / "comparative");
  fs::create_directories(g_work / "null");

  struct Criterion {
    int id;
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient fidelity (BPTT vs central differences)", criterion_gradients},
      {2, "cell identity suite", criterion_cell_identities},
      {3, "comparative claim on the crossing-profile benchmark", criterion_comparative},
      {4, "metric oracles", criterion_metrics},
      {5, "cross-validation integrity at paper scale", criterion_cv_integrity},
      {6, "null model on permuted labels", criterion_null_model},
      {7, "temporal filter properties", criterion_temporal_filter},
      {8, "bit-identical reports and thread invariance", criterion_determinism},
      {9, "paper-profile smoke test", criterion_paper_smoke},
  };

  int failures = 0;
  for (const Criterion& cr : criteria) {
    Check result;
    try {
      result = cr.run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    if (!result.ok) ++failures;
    std::printf("[%s] criterion %d: %s%s%s\n", result.ok ? "PASS" : "FAIL", cr.id, cr.name,
                result.detail.empty() ? "" : " -- ", result.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(g_work);
  return failures == 0 ? 0 : 1;
}
