#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "advtext/outcome.hpp"
#include "advtext/victim.hpp"

namespace advtext {

inline double monotonic_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct MaskedScoreVector {
  std::vector<double> scores;  // scores[i] = flip score of masking position i
};

// Flip score of each single-position masking. Exactly d evaluations; the
// original class comes from the prepared sample.
inline MaskedScoreVector masked_scores(const VictimModel& model, const PreparedSample& prep) {
  const int d = prep.x.length();
  MaskedScoreVector out;
  out.scores.resize(d);
  for (int i = 0; i < d; ++i)
    out.scores[i] = flip_score(model.predict(mask_one(prep.x, i)), prep.predicted);
  return out;
}

// Indices of the k largest values, in descending value order; ties go to the
// lower index.
inline std::vector<int> top_k_indices(const std::vector<double>& values, int k) {
  const int d = static_cast<int>(values.size());
  if (k > d) throw std::invalid_argument("k exceeds sequence length");
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

// The order is the stage-two processing order.
inline std::vector<int> select_topk(const MaskedScoreVector& scored, int k) {
  return top_k_indices(scored.scores, k);
}

struct GreedySubstitution {
  TokenSequence x;
  std::vector<int> replacements;
  ClassDistribution final_dist;  // distribution of the last chosen candidate
  int steps_taken = 0;
};

// Processes the positions in order; at each step every word of the pool is
// tried on the current working sequence and the best flip score is kept
// (ties to the lower token id), so later steps see earlier substitutions.
// |W'| evaluations per step.
inline GreedySubstitution greedy_substitute(const VictimModel& model, const PreparedSample& prep,
                                            const std::vector<int>& positions,
                                            const SubDictionary& pool,
                                            bool stop_on_flip = false) {
  if (pool.size() == 0) throw std::invalid_argument("empty replacement pool");
  GreedySubstitution result;
  result.x = prep.x;
  result.final_dist = prep.dist;
  for (int pos : positions) {
    double best_score = -1.0;
    int best_id = -1;
    ClassDistribution best_dist;
    for (int w : pool.ids) {
      ClassDistribution dist = model.predict(substitute(result.x, pos, w));
      double score = flip_score(dist, prep.predicted);
      if (score > best_score || (score == best_score && w < best_id)) {
        best_score = score;
        best_id = w;
        best_dist = dist;
      }
    }
    result.x.ids[pos] = best_id;
    result.replacements.push_back(best_id);
    result.final_dist = best_dist;
    ++result.steps_taken;
    if (stop_on_flip && best_dist.argmax() != prep.predicted) break;
  }
  return result;
}

// Two-stage greedy attack: rank positions by single-mask flip scores, then
// substitute sequentially from the pool. Uses exactly d + k*|W'| victim
// evaluations (fewer only when stop_on_flip ends stage two early).
inline AttackOutcome greedy_attack(const VictimModel& model, const PreparedSample& prep, int k,
                                   const SubDictionary& pool, bool stop_on_flip = false) {
  const int d = prep.x.length();
  if (k < 0 || k > d) throw std::invalid_argument("k must be in [0, d]");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  MaskedScoreVector scored = masked_scores(model, prep);
  std::vector<int> positions = select_topk(scored, k);
  GreedySubstitution sub = greedy_substitute(model, prep, positions, pool, stop_on_flip);
  positions.resize(sub.steps_taken);

  AttackOutcome outcome;
  outcome.x_orig = prep.x;
  outcome.x_tilde = sub.x;
  outcome.positions = positions;
  outcome.replacements = sub.replacements;
  outcome.orig_class = prep.predicted;
  outcome.final_class = sub.final_dist.argmax();
  outcome.success = outcome.final_class != outcome.orig_class ? 1 : 0;
  outcome.surrogate = flip_score(sub.final_dist, prep.predicted);
  outcome.evals_used = model.evals() - evals_before;
  outcome.wall_clock = monotonic_seconds() - t0;

  uint64_t expected = static_cast<uint64_t>(d) +
                      static_cast<uint64_t>(sub.steps_taken) * pool.size();
  if (outcome.evals_used != expected)
    throw std::logic_error("greedy attack evaluation accounting broke");
  return outcome;
}

}  // namespace advtext
