#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace advtext {

// Dense row-major matrix of doubles. Everything in this project is small
// enough that a flat vector beats any fancier storage.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Matrix&) const = default;
};

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// y += c * x
inline void axpy(double c, const std::vector<double>& x, std::vector<double>& y) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
}

inline double l1_norm(const double* a, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

// Numerically stable softmax.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax of empty vector");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

// Backward of p = softmax(l) with upstream dL/dp: dL/dl_j = p_j (dp_j - <dp, p>).
inline std::vector<double> softmax_backward(const std::vector<double>& p,
                                            const std::vector<double>& dp) {
  double inner = 0.0;
  for (size_t i = 0; i < p.size(); ++i) inner += dp[i] * p[i];
  std::vector<double> dl(p.size());
  for (size_t i = 0; i < p.size(); ++i) dl[i] = p[i] * (dp[i] - inner);
  return dl;
}

// Backward of log p = log_softmax(l) with upstream dL/dlogp:
// dL/dl_j = dlogp_j - p_j * sum(dlogp).
inline std::vector<double> log_softmax_backward(const std::vector<double>& p,
                                                const std::vector<double>& dlogp) {
  double total = 0.0;
  for (double v : dlogp) total += v;
  std::vector<double> dl(p.size());
  for (size_t i = 0; i < p.size(); ++i) dl[i] = dlogp[i] - p[i] * total;
  return dl;
}

inline int argmax_lowest(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;  // strict: ties keep the lowest index
  return best;
}

}  // namespace advtext
