#include "tsrnn/eval.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "tsrnn/errors.hpp"

namespace tsrnn {

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (long long c : counts) t += c;
  return t;
}

long long ConfusionMatrix::row_sum(int c) const {
  long long s = 0;
  for (int p = 0; p < k; ++p) s += at(c, p);
  return s;
}

long long ConfusionMatrix::col_sum(int c) const {
  long long s = 0;
  for (int t = 0; t < k; ++t) s += at(t, c);
  return s;
}

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          int k) {
  if (k < 1) throw_invalid("confusion: k must be >= 1");
  if (truth.size() != predicted.size()) {
    std::ostringstream os;
    os << "confusion: length mismatch (" << truth.size() << " true vs " << predicted.size()
       << " predicted)";
    throw_invalid(os.str());
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 1 || t > k || p < 1 || p > k) {
      std::ostringstream os;
      os << "confusion: label out of range at sample " << i << " (true " << t << ", predicted "
         << p << ", k " << k << ")";
      throw_invalid(os.str());
    }
    ++cm.at(t - 1, p - 1);
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const long long total = cm.total();
  if (total == 0) throw_invalid("accuracy: empty confusion matrix");
  long long diag = 0;
  for (int c = 0; c < cm.k; ++c) diag += cm.at(c, c);
  return double(diag) / double(total);
}

double kappa(const ConfusionMatrix& cm) {
  const long long total = cm.total();
  if (total == 0) throw_invalid("kappa: empty confusion matrix");
  const double p_o = accuracy(cm);
  double p_e = 0.0;
  for (int c = 0; c < cm.k; ++c)
    p_e += double(cm.row_sum(c)) * double(cm.col_sum(c)) / (double(total) * double(total));
  if (p_e == 1.0) return 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

FMeasure f_measure(const ConfusionMatrix& cm) {
  const long long total = cm.total();
  if (total == 0) throw_invalid("f_measure: empty confusion matrix");
  FMeasure f;
  f.per_class.assign(std::size_t(cm.k), 0.0);
  double macro_sum = 0.0;
  int macro_n = 0;
  double weighted_sum = 0.0;
  for (int c = 0; c < cm.k; ++c) {
    const long long row = cm.row_sum(c);
    const long long col = cm.col_sum(c);
    const double tp = double(cm.at(c, c));
    const double precision = col > 0 ? tp / double(col) : 0.0;
    const double recall = row > 0 ? tp / double(row) : 0.0;
    const double f1 =
        (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    f.per_class[std::size_t(c)] = f1;
    if (row > 0) {  // classes never seen in truth stay out of the macro mean
      macro_sum += f1;
      ++macro_n;
      weighted_sum += f1 * double(row);
    }
  }
  f.macro = macro_n > 0 ? macro_sum / double(macro_n) : 0.0;
  f.weighted = weighted_sum / double(total);
  return f;
}

EvalReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted, int k) {
  EvalReport r;
  r.confusion = confusion(truth, predicted, k);
  r.accuracy = accuracy(r.confusion);
  r.kappa = kappa(r.confusion);
  r.f = f_measure(r.confusion);
  return r;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::ordered_json::array();
  for (int c = 1; c <= r.confusion.k; ++c) j["classes"].push_back(c);
  j["total"] = r.confusion.total();
  j["accuracy"] = r.accuracy;
  j["kappa"] = r.kappa;
  j["f_macro"] = r.f.macro;
  j["f_weighted"] = r.f.weighted;
  j["f_per_class"] = r.f.per_class;
  j["confusion"] = nlohmann::ordered_json::array();
  for (int t = 0; t < r.confusion.k; ++t) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int p = 0; p < r.confusion.k; ++p) row.push_back(r.confusion.at(t, p));
    j["confusion"].push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string report_text(const EvalReport& r) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "accuracy   %8.4f%%\n", 100.0 * r.accuracy);
  os << buf;
  std::snprintf(buf, sizeof(buf), "kappa      %8.4f\n", r.kappa);
  os << buf;
  std::snprintf(buf, sizeof(buf), "F macro    %8.4f%%\n", 100.0 * r.f.macro);
  os << buf;
  std::snprintf(buf, sizeof(buf), "F weighted %8.4f%%\n", 100.0 * r.f.weighted);
  os << buf;
  os << "per-class F1:\n";
  for (int c = 0; c < r.confusion.k; ++c) {
    std::snprintf(buf, sizeof(buf), "  class %d  %8.4f%%\n", c + 1,
                  100.0 * r.f.per_class[std::size_t(c)]);
    os << buf;
  }
  os << "confusion (rows true, cols predicted):\n";
  for (int t = 0; t < r.confusion.k; ++t) {
    os << " ";
    for (int p = 0; p < r.confusion.k; ++p) {
      std::snprintf(buf, sizeof(buf), " %8lld", r.confusion.at(t, p));
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "true\\pred";
  for (int p = 1; p <= cm.k; ++p) os << "," << p;
  os << "\n";
  for (int t = 0; t < cm.k; ++t) {
    os << t + 1;
    for (int p = 0; p < cm.k; ++p) os << "," << cm.at(t, p);
    os << "\n";
  }
  return os.str();
}

}  // namespace tsrnn
