#pragma once

#include <string>
#include <vector>

namespace tsrnn {

// Rows are true classes, columns predicted; class labels are 1..k.
struct ConfusionMatrix {
  int k = 0;
  std::vector<long long> counts;  // k * k, row-major

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int classes) : k(classes), counts(std::size_t(classes) * classes, 0) {}

  long long at(int t, int p) const { return counts[std::size_t(t) * k + std::size_t(p)]; }
  long long& at(int t, int p) { return counts[std::size_t(t) * k + std::size_t(p)]; }
  long long total() const;
  long long row_sum(int c) const;
  long long col_sum(int c) const;
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          int k);

double accuracy(const ConfusionMatrix& cm);

// Cohen's kappa (p_o - p_e) / (1 - p_e); 0 by convention when p_e == 1.
double kappa(const ConfusionMatrix& cm);

struct FMeasure {
  std::vector<double> per_class;  // F1 per class, index c-1
  double macro = 0.0;             // unweighted mean over classes with true samples
  double weighted = 0.0;          // weighted by true class frequency
};
FMeasure f_measure(const ConfusionMatrix& cm);

struct EvalReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double kappa = 0.0;
  FMeasure f;
};

EvalReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted, int k);

std::string report_json(const EvalReport& r);
std::string report_text(const EvalReport& r);
std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace tsrnn
