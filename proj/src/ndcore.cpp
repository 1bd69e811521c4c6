#include "tsrnn/ndcore.hpp"

#include <cmath>
#include <sstream>

#include "tsrnn/errors.hpp"

namespace tsrnn {

namespace {

void require_length(std::size_t got, std::size_t want, const char* op) {
  if (got != want) {
    std::ostringstream os;
    os << op << ": length mismatch, got " << got << ", expected " << want;
    throw_invalid(os.str());
  }
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

void matvec_into(const Matrix& m, const Vec& v, Vec& out) {
  if (int(v.size()) != m.cols) {
    std::ostringstream os;
    os << "matvec: shape mismatch, matrix is " << m.rows << "x" << m.cols
       << " but vector has length " << v.size();
    throw_invalid(os.str());
  }
  out.resize(std::size_t(m.rows));
  for (int r = 0; r < m.rows; ++r) out[std::size_t(r)] = dot(m.row(r), v.data(), v.size());
}

Vec matvec(const Matrix& m, const Vec& v) {
  Vec out;
  matvec_into(m, v, out);
  return out;
}

void matvec_acc(const Matrix& m, const Vec& v, Vec& out) {
  if (int(v.size()) != m.cols || int(out.size()) != m.rows) {
    std::ostringstream os;
    os << "matvec_acc: shape mismatch, matrix " << m.rows << "x" << m.cols << ", in "
       << v.size() << ", out " << out.size();
    throw_invalid(os.str());
  }
  for (int r = 0; r < m.rows; ++r) out[std::size_t(r)] += dot(m.row(r), v.data(), v.size());
}

void matvec_t_acc(const Matrix& m, const Vec& v, Vec& out) {
  if (int(v.size()) != m.rows || int(out.size()) != m.cols) {
    std::ostringstream os;
    os << "matvec_t_acc: shape mismatch, matrix " << m.rows << "x" << m.cols << ", in "
       << v.size() << ", out " << out.size();
    throw_invalid(os.str());
  }
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    const double s = v[std::size_t(r)];
    for (int c = 0; c < m.cols; ++c) out[std::size_t(c)] += s * row[c];
  }
}

void outer_acc(Matrix& m, const Vec& u, const Vec& v) {
  if (int(u.size()) != m.rows || int(v.size()) != m.cols) {
    std::ostringstream os;
    os << "outer_acc: shape mismatch, matrix " << m.rows << "x" << m.cols << ", u "
       << u.size() << ", v " << v.size();
    throw_invalid(os.str());
  }
  for (int r = 0; r < m.rows; ++r) {
    double* row = m.row(r);
    const double s = u[std::size_t(r)];
    for (int c = 0; c < m.cols; ++c) row[c] += s * v[std::size_t(c)];
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void sigmoid_into(const Vec& v, Vec& out) {
  out.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid_scalar(v[i]);
}

Vec sigmoid(const Vec& v) {
  Vec out;
  sigmoid_into(v, out);
  return out;
}

void tanh_into(const Vec& v, Vec& out) {
  out.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
}

Vec tanh_vec(const Vec& v) {
  Vec out;
  tanh_into(v, out);
  return out;
}

void hadamard_into(const Vec& a, const Vec& b, Vec& out) {
  require_length(b.size(), a.size(), "hadamard");
  out.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
}

Vec hadamard(const Vec& a, const Vec& b) {
  Vec out;
  hadamard_into(a, b, out);
  return out;
}

void add_acc(const Vec& a, Vec& out) {
  require_length(a.size(), out.size(), "add_acc");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
}

void axpy(double alpha, const Vec& x, Vec& y) {
  require_length(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void check_finite(std::span<const double> v, const std::string& what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << "non-finite value in " << what << " at index " << i << " (" << v[i] << ")";
      throw_numeric(os.str());
    }
  }
}

}  // namespace tsrnn
