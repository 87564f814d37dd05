#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "advtext/greedy.hpp"
#include "advtext/outcome.hpp"
#include "advtext/rng.hpp"
#include "advtext/victim.hpp"

namespace advtext {

enum class BaselineMethod { Delete1, Saliency, ProjectedFgsm, SaliencyFgsm, DeepWordBug, Random };

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::Delete1;
  int k = 1;
  double dwb_weight = 0.5;  // mix of forward and backward temporal scores
  uint64_t seed = 0;
};

namespace detail {

inline AttackOutcome finish_outcome(const VictimModel& model, const PreparedSample& prep,
                                    TokenSequence x_tilde, std::vector<int> positions,
                                    std::vector<int> replacements, uint64_t evals_before,
                                    double t0) {
  AttackOutcome outcome;
  outcome.x_orig = prep.x;
  outcome.orig_class = prep.predicted;
  ClassDistribution final_dist =
      x_tilde == prep.x ? prep.dist : model.predict(x_tilde);
  outcome.x_tilde = std::move(x_tilde);
  outcome.positions = std::move(positions);
  outcome.replacements = std::move(replacements);
  outcome.final_class = final_dist.argmax();
  outcome.success = outcome.final_class != prep.predicted ? 1 : 0;
  outcome.surrogate = flip_score(final_dist, prep.predicted);
  outcome.evals_used = model.evals() - evals_before;
  outcome.wall_clock = monotonic_seconds() - t0;
  return outcome;
}

}  // namespace detail

// Score each feature by the drop in the predicted-class probability when it
// is masked, then mask the top-k. d scoring evaluations plus the final check.
inline AttackOutcome delete1_attack(const VictimModel& model, const PreparedSample& prep,
                                    int k) {
  const int d = prep.x.length();
  if (k < 0 || k > d) throw std::invalid_argument("k must be in [0, d]");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  std::vector<double> drop(d);
  const double base = prep.dist.probs[prep.predicted];
  for (int i = 0; i < d; ++i)
    drop[i] = base - model.predict(mask_one(prep.x, i)).probs[prep.predicted];

  std::vector<int> positions = top_k_indices(drop, k);
  TokenSequence x_tilde = mask(prep.x, positions);
  std::vector<int> replacements(positions.size(), kReferenceId);
  return detail::finish_outcome(model, prep, std::move(x_tilde), std::move(positions),
                                std::move(replacements), evals_before, t0);
}

// l1 norm of the embedding gradient of the predicted class, per position.
inline std::vector<double> saliency_scores(const VictimModel& model,
                                           const PreparedSample& prep) {
  Matrix grad = model.embedding_gradient(prep.x, prep.predicted);
  std::vector<double> scores(grad.rows);
  for (int i = 0; i < grad.rows; ++i) scores[i] = l1_norm(grad.row(i), grad.cols);
  return scores;
}

// Mask the top-k saliency positions. White-box only.
inline AttackOutcome saliency_attack(const VictimModel& model, const PreparedSample& prep,
                                     int k) {
  const int d = prep.x.length();
  if (k < 0 || k > d) throw std::invalid_argument("k must be in [0, d]");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  std::vector<int> positions = top_k_indices(saliency_scores(model, prep), k);
  TokenSequence x_tilde = mask(prep.x, positions);
  std::vector<int> replacements(positions.size(), kReferenceId);
  return detail::finish_outcome(model, prep, std::move(x_tilde), std::move(positions),
                                std::move(replacements), evals_before, t0);
}

// Pool word whose embedding step direction best matches the gradient signs:
// minimizes ||sgn(emb(w') - emb(w)) - sgn(grad_f)||_1, ties to the lower id.
// grad_f_row is the gradient of the flip score at position i.
inline int fgsm_project(const VictimModel& model, const TokenSequence& x, int i,
                        const SubDictionary& pool, const double* grad_f_row) {
  if (pool.size() == 0) throw std::invalid_argument("empty replacement pool");
  const EmbeddingTable& table = model.embedding();
  const int e = table.dim();
  auto sgn = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };

  const double* orig = table.vectors.row(x.ids[i]);
  double best_dist = 0.0;
  int best_id = -1;
  for (int w : pool.ids) {
    const double* cand = table.vectors.row(w);
    double dist = 0.0;
    for (int j = 0; j < e; ++j)
      dist += std::abs(sgn(cand[j] - orig[j]) - sgn(grad_f_row[j]));
    if (best_id < 0 || dist < best_dist || (dist == best_dist && w < best_id)) {
      best_dist = dist;
      best_id = w;
    }
  }
  return best_id;
}

// Gradient of the flip score 1 - P(orig|x) wrt the embedded input: the
// negated class-probability gradient, computed once at the original point.
inline Matrix flip_gradient(const VictimModel& model, const PreparedSample& prep) {
  Matrix grad = model.embedding_gradient(prep.x, prep.predicted);
  for (double& v : grad.data) v = -v;
  return grad;
}

// Replace k uniformly chosen positions by their FGSM projections.
inline AttackOutcome projected_fgsm_attack(const VictimModel& model, const PreparedSample& prep,
                                           int k, const SubDictionary& pool, SplitRng rng) {
  const int d = prep.x.length();
  if (k < 0 || k > d) throw std::invalid_argument("k must be in [0, d]");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  std::vector<int> positions = rng.sample_without_replacement(d, k);
  Matrix grad = flip_gradient(model, prep);
  TokenSequence x_tilde = prep.x;
  std::vector<int> replacements;
  for (int pos : positions) {
    int w = fgsm_project(model, prep.x, pos, pool, grad.row(pos));
    x_tilde.ids[pos] = w;
    replacements.push_back(w);
  }
  return detail::finish_outcome(model, prep, std::move(x_tilde), std::move(positions),
                                std::move(replacements), evals_before, t0);
}

// Top-k saliency positions, each replaced by its FGSM projection. One
// gradient evaluation serves both the ranking and the projection.
inline AttackOutcome saliency_fgsm_attack(const VictimModel& model, const PreparedSample& prep,
                                          int k, const SubDictionary& pool) {
  const int d = prep.x.length();
  if (k < 0 || k > d) throw std::invalid_argument("k must be in [0, d]");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  Matrix grad = flip_gradient(model, prep);
  std::vector<double> scores(d);
  for (int i = 0; i < d; ++i) scores[i] = l1_norm(grad.row(i), grad.cols);
  std::vector<int> positions = top_k_indices(scores, k);
  TokenSequence x_tilde = prep.x;
  std::vector<int> replacements;
  for (int pos : positions) {
    int w = fgsm_project(model, prep.x, pos, pool, grad.row(pos));
    x_tilde.ids[pos] = w;
    replacements.push_back(w);
  }
  return detail::finish_outcome(model, prep, std::move(x_tilde), std::move(positions),
                                std::move(replacements), evals_before, t0);
}

// Temporal scores from prefix and suffix scans: score_i mixes the flip-score
// change when feature i extends its prefix and its suffix. 2d+2 evaluations.
inline std::vector<double> deepwordbug_scores(const VictimModel& model,
                                              const PreparedSample& prep, double mu) {
  if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("score weight must be in [0,1]");
  const int d = prep.x.length();

  // prefix_t keeps positions [0, t); suffix_t keeps positions [d-t, d)
  std::vector<double> pre(d + 1), suf(d + 1);
  for (int t = 0; t <= d; ++t) {
    TokenSequence kept(std::vector<int>(d, kReferenceId));
    for (int i = 0; i < t; ++i) kept.ids[i] = prep.x.ids[i];
    pre[t] = flip_score(model.predict(kept), prep.predicted);
  }
  for (int t = 0; t <= d; ++t) {
    TokenSequence kept(std::vector<int>(d, kReferenceId));
    for (int i = d - t; i < d; ++i) kept.ids[i] = prep.x.ids[i];
    suf[t] = flip_score(model.predict(kept), prep.predicted);
  }

  std::vector<double> scores(d);
  for (int i = 0; i < d; ++i) {
    double fwd = pre[i + 1] - pre[i];
    double bwd = suf[d - i] - suf[d - i - 1];
    scores[i] = mu * fwd + (1.0 - mu) * bwd;
  }
  return scores;
}

// Top-k temporal-score positions, each replaced by a uniformly drawn pool
// word different from the original token when possible.
inline AttackOutcome deepwordbug_attack(const VictimModel& model, const PreparedSample& prep,
                                        int k, double mu, const SubDictionary& pool,
                                        SplitRng rng) {
  const int d = prep.x.length();
  if (k < 0 || k > d) throw std::invalid_argument("k must be in [0, d]");
  if (pool.size() == 0) throw std::invalid_argument("empty replacement pool");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  std::vector<int> positions = top_k_indices(deepwordbug_scores(model, prep, mu), k);
  TokenSequence x_tilde = prep.x;
  std::vector<int> replacements;
  for (int pos : positions) {
    std::vector<int> candidates;
    for (int w : pool.ids)
      if (w != prep.x.ids[pos]) candidates.push_back(w);
    int w = candidates.empty() ? prep.x.ids[pos]
                               : candidates[rng.next_below(candidates.size())];
    x_tilde.ids[pos] = w;
    replacements.push_back(w);
  }
  return detail::finish_outcome(model, prep, std::move(x_tilde), std::move(positions),
                                std::move(replacements), evals_before, t0);
}

// Uniform positions, uniform pool words. The floor every method must beat.
inline AttackOutcome random_attack(const VictimModel& model, const PreparedSample& prep, int k,
                                   const SubDictionary& pool, SplitRng rng) {
  const int d = prep.x.length();
  if (k < 0 || k > d) throw std::invalid_argument("k must be in [0, d]");
  if (pool.size() == 0) throw std::invalid_argument("empty replacement pool");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  std::vector<int> positions = rng.sample_without_replacement(d, k);
  TokenSequence x_tilde = prep.x;
  std::vector<int> replacements;
  for (int pos : positions) {
    int w = pool.ids[rng.next_below(pool.ids.size())];
    x_tilde.ids[pos] = w;
    replacements.push_back(w);
  }
  return detail::finish_outcome(model, prep, std::move(x_tilde), std::move(positions),
                                std::move(replacements), evals_before, t0);
}

inline AttackOutcome run_baseline(const VictimModel& model, const PreparedSample& prep,
                                  const BaselineConfig& cfg, const SubDictionary& pool,
                                  SplitRng rng) {
  switch (cfg.method) {
    case BaselineMethod::Delete1:
      return delete1_attack(model, prep, cfg.k);
    case BaselineMethod::Saliency:
      return saliency_attack(model, prep, cfg.k);
    case BaselineMethod::ProjectedFgsm:
      return projected_fgsm_attack(model, prep, cfg.k, pool, rng);
    case BaselineMethod::SaliencyFgsm:
      return saliency_fgsm_attack(model, prep, cfg.k, pool);
    case BaselineMethod::DeepWordBug:
      return deepwordbug_attack(model, prep, cfg.k, cfg.dwb_weight, pool, rng);
    case BaselineMethod::Random:
      return random_attack(model, prep, cfg.k, pool, rng);
  }
  throw std::logic_error("unknown baseline method");
}

}  // namespace advtext
