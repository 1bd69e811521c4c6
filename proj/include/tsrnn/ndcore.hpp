#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tsrnn {

using Vec = std::vector<double>;

// Dense row-major matrix. The smallest kernel that serves the recurrent
// cells: no views, no broadcasting, 64-bit floats throughout.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec a;  // rows * cols entries, row-major

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(std::size_t(r) * std::size_t(c), fill) {}

  double& at(int r, int c) { return a[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return a[std::size_t(r) * cols + c]; }
  const double* row(int r) const { return a.data() + std::size_t(r) * cols; }
  double* row(int r) { return a.data() + std::size_t(r) * cols; }
  std::size_t size() const { return a.size(); }
};

// Named flat view over one parameter or gradient tensor.
struct TensorView {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

// Fixed-order dot product (4 independent accumulators), deterministic for a
// given input regardless of optimization level.
double dot(const double* a, const double* b, std::size_t n);

Vec matvec(const Matrix& m, const Vec& v);
void matvec_into(const Matrix& m, const Vec& v, Vec& out);  // out = M v
void matvec_acc(const Matrix& m, const Vec& v, Vec& out);   // out += M v
void matvec_t_acc(const Matrix& m, const Vec& v, Vec& out); // out += M^T v
void outer_acc(Matrix& m, const Vec& u, const Vec& v);      // M += u v^T

double sigmoid_scalar(double x);  // two-branch form, no overflow
Vec sigmoid(const Vec& v);
void sigmoid_into(const Vec& v, Vec& out);

Vec tanh_vec(const Vec& v);
void tanh_into(const Vec& v, Vec& out);

Vec hadamard(const Vec& a, const Vec& b);
void hadamard_into(const Vec& a, const Vec& b, Vec& out);

void add_acc(const Vec& a, Vec& out);            // out += a
void axpy(double alpha, const Vec& x, Vec& y);   // y += alpha * x

// Throws a numeric error naming `what` and the offending index.
void check_finite(std::span<const double> v, const std::string& what);

}  // namespace tsrnn
