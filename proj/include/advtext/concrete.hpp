#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/matrix.hpp"
#include "advtext/rng.hpp"
#include "advtext/victim.hpp"

namespace advtext {

constexpr double kProbFloor = 1e-12;  // clamp before any log

inline double gumbel_from_uniform(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("uniform draw must be in (0,1)");
  return -std::log(-std::log(u));
}

inline double sample_gumbel(SplitRng& rng) { return gumbel_from_uniform(rng.next_open()); }

inline std::vector<double> sample_gumbel_vec(SplitRng& rng, int n) {
  std::vector<double> out(n);
  for (double& v : out) v = sample_gumbel(rng);
  return out;
}

// Point on the relaxed simplex: entries in [0,1] summing to 1.
struct ConcreteSample {
  std::vector<double> weights;
};

// weights_i = softmax((log p_i + eps_i) / tau). Differentiable in log p with
// the noise held fixed.
inline ConcreteSample concrete_from_noise(const std::vector<double>& p, double tau,
                                          const std::vector<double>& eps) {
  if (tau <= 0.0) throw std::invalid_argument("temperature must be > 0");
  if (p.size() != eps.size()) throw std::invalid_argument("noise size mismatch");
  std::vector<double> y(p.size());
  for (size_t i = 0; i < p.size(); ++i)
    y[i] = (std::log(std::max(p[i], kProbFloor)) + eps[i]) / tau;
  return ConcreteSample{softmax(y)};
}

inline ConcreteSample sample_concrete(const std::vector<double>& p, double tau, SplitRng& rng) {
  if (tau <= 0.0) throw std::invalid_argument("temperature must be > 0");
  return concrete_from_noise(p, tau, sample_gumbel_vec(rng, static_cast<int>(p.size())));
}

// Elementwise max of k Concrete draws from the same distribution; the
// relaxation of a k-hot mask. `branch[i]` records which draw won position i
// so gradients can be routed through the max.
struct RelaxedMask {
  std::vector<double> u;
  std::vector<int> branch;
  std::vector<ConcreteSample> draws;
};

inline RelaxedMask relaxed_topk_mask_from_noise(const std::vector<double>& p, int k, double tau,
                                                const std::vector<std::vector<double>>& eps) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (static_cast<int>(eps.size()) != k) throw std::invalid_argument("need k noise vectors");
  const int n = static_cast<int>(p.size());
  RelaxedMask out;
  out.u.assign(n, 0.0);
  out.branch.assign(n, 0);
  out.draws.reserve(k);
  for (int s = 0; s < k; ++s) {
    out.draws.push_back(concrete_from_noise(p, tau, eps[s]));
    const auto& w = out.draws.back().weights;
    for (int i = 0; i < n; ++i) {
      if (s == 0 || w[i] > out.u[i]) {
        out.u[i] = w[i];
        out.branch[i] = s;
      }
    }
  }
  return out;
}

inline RelaxedMask relaxed_topk_mask(const std::vector<double>& p, int k, double tau,
                                     SplitRng& rng) {
  std::vector<std::vector<double>> eps(k);
  for (auto& e : eps) e = sample_gumbel_vec(rng, static_cast<int>(p.size()));
  return relaxed_topk_mask_from_noise(p, k, tau, eps);
}

// Relaxed masking in embedding space: row i is the convex combination
// (1 - U_i) * emb(x_i) + U_i * emb(w0), and emb(w0) is zero.
inline Matrix apply_relaxed_mask(const std::vector<double>& u, const TokenSequence& x,
                                 const EmbeddingTable& table) {
  if (static_cast<int>(u.size()) != x.length())
    throw std::invalid_argument("mask length mismatch");
  Matrix out(x.length(), table.dim());
  for (int i = 0; i < x.length(); ++i) {
    const double* src = table.vectors.row(x.ids[i]);
    double* dst = out.row(i);
    for (int j = 0; j < table.dim(); ++j) dst[j] = (1.0 - u[i]) * src[j];
  }
  return out;
}

// Relaxed substitution in embedding space: each selected row becomes the
// V-weighted sum of pool-word embeddings; other rows keep their original
// embeddings. rows[s] pairs with selected[s].
inline Matrix apply_relaxed_substitution(const std::vector<ConcreteSample>& rows,
                                         const TokenSequence& x,
                                         const std::vector<int>& selected,
                                         const SubDictionary& pool,
                                         const EmbeddingTable& table) {
  if (rows.size() != selected.size())
    throw std::invalid_argument("one concrete row per selected position required");
  Matrix out(x.length(), table.dim());
  for (int i = 0; i < x.length(); ++i) {
    const double* src = table.vectors.row(x.ids[i]);
    double* dst = out.row(i);
    for (int j = 0; j < table.dim(); ++j) dst[j] = src[j];
  }
  for (size_t s = 0; s < selected.size(); ++s) {
    int i = selected[s];
    if (i < 0 || i >= x.length()) throw std::out_of_range("selected index out of range");
    if (static_cast<int>(rows[s].weights.size()) != pool.size())
      throw std::invalid_argument("concrete row size must match pool");
    double* dst = out.row(i);
    for (int j = 0; j < table.dim(); ++j) dst[j] = 0.0;
    for (int jw = 0; jw < pool.size(); ++jw) {
      const double* w = table.vectors.row(pool.ids[jw]);
      double c = rows[s].weights[jw];
      for (int j = 0; j < table.dim(); ++j) dst[j] += c * w[j];
    }
  }
  return out;
}

}  // namespace advtext
