#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "advtext/checkpoint.hpp"
#include "advtext/concrete.hpp"
#include "advtext/greedy.hpp"
#include "advtext/matrix.hpp"
#include "advtext/outcome.hpp"
#include "advtext/rng.hpp"
#include "advtext/victim.hpp"

namespace advtext {

// --- scorer network -------------------------------------------------------
//
// Shared trunk for the identifier and the perturber: token embedding, one
// 1-D convolution (kernel 3, relu), a mean-pooled global context vector
// concatenated to every position, and a linear head. The identifier head has
// one output per position (softmax over positions); the perturber head has
// one output per pool word (softmax per position row).

struct ScorerParams {
  Matrix emb;     // vocab x e
  Matrix conv_w;  // filters x 3e
  std::vector<double> conv_b;
  Matrix head_w;  // out x 2*filters
  std::vector<double> head_b;

  int embed_dim() const { return emb.cols; }
  int filters() const { return conv_w.rows; }
  int out_dim() const { return head_w.rows; }

  static ScorerParams make(int vocab, int e, int filters, int out) {
    ScorerParams p;
    p.emb = Matrix(vocab, e);
    p.conv_w = Matrix(filters, 3 * e);
    p.conv_b.assign(filters, 0.0);
    p.head_w = Matrix(out, 2 * filters);
    p.head_b.assign(out, 0.0);
    return p;
  }

  ScorerParams zeros_like() const {
    return make(emb.rows, emb.cols, conv_w.rows, head_w.rows);
  }

  template <typename F>
  void for_arrays(F&& f) {
    f(emb.data);
    f(conv_w.data);
    f(conv_b);
    f(head_w.data);
    f(head_b);
  }
  template <typename F>
  void for_arrays(F&& f) const {
    f(emb.data);
    f(conv_w.data);
    f(conv_b);
    f(head_w.data);
    f(head_b);
  }

  void randomize(uint64_t seed) {
    SplitRng rng(seed);
    int stream = 0;
    for_arrays([&](std::vector<double>& a) {
      SplitRng r = rng.split(++stream);
      for (double& v : a) v = r.next_range(-0.05, 0.05);
    });
  }

  bool operator==(const ScorerParams&) const = default;
};

struct ScorerTrace {
  Matrix pre;             // d x filters
  Matrix h;               // d x filters
  std::vector<double> g;  // filters (mean pooled)
  Matrix logits;          // d x out
};

inline void scorer_forward(const ScorerParams& net, const TokenSequence& x, ScorerTrace& t) {
  const int d = x.length();
  const int e = net.embed_dim();
  const int nf = net.filters();
  const int out = net.out_dim();

  t.pre = Matrix(d, nf);
  t.h = Matrix(d, nf);
  for (int i = 0; i < d; ++i) {
    for (int f = 0; f < nf; ++f) {
      const double* w = net.conv_w.row(f);
      double acc = net.conv_b[f];
      for (int s = 0; s < 3; ++s) {
        int r = i + s - 1;
        if (r < 0 || r >= d) continue;
        acc += dot(w + s * e, net.emb.row(x.ids[r]), e);
      }
      t.pre.at(i, f) = acc;
      t.h.at(i, f) = acc > 0.0 ? acc : 0.0;
    }
  }
  t.g.assign(nf, 0.0);
  for (int i = 0; i < d; ++i)
    for (int f = 0; f < nf; ++f) t.g[f] += t.h.at(i, f) / d;

  t.logits = Matrix(d, out);
  for (int i = 0; i < d; ++i) {
    for (int o = 0; o < out; ++o) {
      const double* w = net.head_w.row(o);
      double acc = net.head_b[o];
      acc += dot(w, t.h.row(i), nf);
      acc += dot(w + nf, t.g.data(), nf);
      t.logits.at(i, o) = acc;
    }
  }
}

// Accumulates d(loss)/d(params) into grads given d(loss)/d(logits).
inline void scorer_backward(const ScorerParams& net, const TokenSequence& x,
                            const ScorerTrace& t, const Matrix& dlogits, ScorerParams& grads) {
  const int d = x.length();
  const int e = net.embed_dim();
  const int nf = net.filters();
  const int out = net.out_dim();

  Matrix dh(d, nf);
  std::vector<double> dg(nf, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int o = 0; o < out; ++o) {
      double dl = dlogits.at(i, o);
      if (dl == 0.0) continue;
      grads.head_b[o] += dl;
      double* gw = grads.head_w.row(o);
      const double* w = net.head_w.row(o);
      const double* hi = t.h.row(i);
      double* dhi = dh.row(i);
      for (int f = 0; f < nf; ++f) {
        gw[f] += dl * hi[f];
        gw[nf + f] += dl * t.g[f];
        dhi[f] += dl * w[f];
        dg[f] += dl * w[nf + f];
      }
    }
  }
  for (int i = 0; i < d; ++i)
    for (int f = 0; f < nf; ++f) dh.at(i, f) += dg[f] / d;

  for (int i = 0; i < d; ++i) {
    for (int f = 0; f < nf; ++f) {
      if (t.pre.at(i, f) <= 0.0) continue;
      double da = dh.at(i, f);
      if (da == 0.0) continue;
      grads.conv_b[f] += da;
      double* gw = grads.conv_w.row(f);
      const double* w = net.conv_w.row(f);
      for (int s = 0; s < 3; ++s) {
        int r = i + s - 1;
        if (r < 0 || r >= d) continue;
        const double* ar = net.emb.row(x.ids[r]);
        double* ge = grads.emb.row(x.ids[r]);
        for (int j = 0; j < e; ++j) {
          gw[s * e + j] += da * ar[j];
          ge[j] += da * w[s * e + j];
        }
      }
    }
  }
}

// --- identifier p_alpha and perturber q_theta ------------------------------

struct IdentifierParams {
  ScorerParams net;  // head out_dim == 1
};

struct PerturberParams {
  ScorerParams net;           // head out_dim == |pool|
  std::vector<int> pool_ids;  // the W' this perturber scores, in pool order
};

// Position distribution p_alpha(x): strictly positive softmax over positions.
inline std::vector<double> identifier_forward(const IdentifierParams& alpha,
                                              const TokenSequence& x,
                                              ScorerTrace* trace = nullptr) {
  ScorerTrace local;
  ScorerTrace& t = trace ? *trace : local;
  scorer_forward(alpha.net, x, t);
  std::vector<double> logits(x.length());
  for (int i = 0; i < x.length(); ++i) logits[i] = t.logits.at(i, 0);
  return softmax(logits);
}

// Row-stochastic replacement scores q_theta(x): d x |pool|, softmax per row.
inline Matrix perturber_forward(const PerturberParams& theta, const TokenSequence& x,
                                ScorerTrace* trace = nullptr) {
  ScorerTrace local;
  ScorerTrace& t = trace ? *trace : local;
  scorer_forward(theta.net, x, t);
  Matrix q(x.length(), theta.net.out_dim());
  for (int i = 0; i < x.length(); ++i) {
    std::vector<double> row(t.logits.row(i), t.logits.row(i) + t.logits.cols);
    std::vector<double> p = softmax(row);
    for (int j = 0; j < q.cols; ++j) q.at(i, j) = p[j];
  }
  return q;
}

// --- training configuration ------------------------------------------------

struct TrainConfig {
  double lambda1 = 1.0;  // weight of the relaxed (Gumbel) objective
  double lambda2 = 1.0;  // weight of the greedy objective on D0
  double lr = 0.001;     // rmsprop step size
  int epochs = 2;
  int batch = 32;
  int d0_size = 1000;
  double tau = 0.5;
  uint64_t seed = 1;
  int k = 1;
  bool paper_literal_sign = false;  // score masked positions by 1-f instead of f
  int scorer_e = 8;
  int scorer_filters = 8;
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0)
    throw std::invalid_argument("objective weights must be >= 0");
  if (cfg.lambda1 == 0.0 && cfg.lambda2 == 0.0)
    throw std::invalid_argument("at least one objective weight must be positive");
  if (cfg.tau <= 0.0) throw std::invalid_argument("temperature must be > 0");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (cfg.k < 1) throw std::invalid_argument("k must be >= 1");
  if (cfg.d0_size < 1) throw std::invalid_argument("d0_size must be >= 1");
}

struct LossValue {
  double gumbel_term = 0.0;  // mean log f under the relaxed perturbation
  double greedy_term = 0.0;  // mean greedy surrogate objective
  double loss = 0.0;         // -(lambda1 * gumbel_term + lambda2 * greedy_term)
};

struct TelemetryRow {
  int epoch = 0;
  double term_gumbel = 0.0;
  double term_greedy = 0.0;
  double total_loss = 0.0;
};

// --- stage 1: identifier loss ----------------------------------------------

struct Stage1Item {
  const TokenSequence* x;
  int orig_class;  // victim's prediction on the clean sample
};

struct ScoredItem {
  const TokenSequence* x;
  const std::vector<double>* masked_scores;  // flip score of masking each position
};

// noise[sample][draw][position], exactly cfg.k draws per lambda1 sample.
// Minimized loss = -(lambda1 * mean log f(U (.) x) + lambda2 * mean log sum_i p_i s_i).
inline LossValue stage1_loss(const IdentifierParams& alpha,
                             const std::vector<Stage1Item>& batch_d,
                             const std::vector<ScoredItem>& batch_d0,
                             const VictimModel& model, const TrainConfig& cfg,
                             const std::vector<std::vector<std::vector<double>>>& noise,
                             ScorerParams* grads) {
  if (cfg.lambda1 > 0.0 && !model.white_box())
    throw std::runtime_error("gradient unavailable: gumbel objective needs a white-box victim");
  if (cfg.lambda1 > 0.0 && noise.size() != batch_d.size())
    throw std::invalid_argument("one noise block per gumbel sample required");

  LossValue value;
  if (cfg.lambda1 > 0.0 && !batch_d.empty()) {
    const double coef = -cfg.lambda1 / batch_d.size();
    for (size_t n = 0; n < batch_d.size(); ++n) {
      const TokenSequence& x = *batch_d[n].x;
      ScorerTrace trace;
      std::vector<double> p = identifier_forward(alpha, x, &trace);
      RelaxedMask relaxed = relaxed_topk_mask_from_noise(p, cfg.k, cfg.tau, noise[n]);
      Matrix x_emb = model.embed(x);
      Matrix masked = apply_relaxed_mask(relaxed.u, x, model.embedding());
      Matrix dprob;
      ClassDistribution dist =
          model.relaxed_forward(masked, batch_d[n].orig_class, grads ? &dprob : nullptr);
      double f = std::max(flip_score(dist, batch_d[n].orig_class), kProbFloor);
      value.gumbel_term += std::log(f) / batch_d.size();
      if (!grads) continue;

      // d log f / dU_i = (1/f) <dP. row i, emb(x_i)>; route through the max
      // to the winning concrete draw, then back to the position logits.
      std::vector<double> du(x.length());
      for (int i = 0; i < x.length(); ++i)
        du[i] = dot(dprob.row(i), x_emb.row(i), x_emb.cols) / f;
      std::vector<double> dlogp(x.length(), 0.0);
      for (int s = 0; s < cfg.k; ++s) {
        std::vector<double> dc(x.length(), 0.0);
        bool touched = false;
        for (int i = 0; i < x.length(); ++i) {
          if (relaxed.branch[i] == s && du[i] != 0.0) {
            dc[i] = du[i];
            touched = true;
          }
        }
        if (!touched) continue;
        std::vector<double> dy = softmax_backward(relaxed.draws[s].weights, dc);
        for (int i = 0; i < x.length(); ++i) dlogp[i] += dy[i] / cfg.tau;
      }
      std::vector<double> dl = log_softmax_backward(p, dlogp);
      Matrix dlogits(x.length(), 1);
      for (int i = 0; i < x.length(); ++i) dlogits.at(i, 0) = coef * dl[i];
      scorer_backward(alpha.net, x, trace, dlogits, *grads);
    }
  }

  if (cfg.lambda2 > 0.0 && !batch_d0.empty()) {
    const double coef = -cfg.lambda2 / batch_d0.size();
    for (const ScoredItem& item : batch_d0) {
      const TokenSequence& x = *item.x;
      ScorerTrace trace;
      std::vector<double> p = identifier_forward(alpha, x, &trace);
      double t = 0.0;
      for (int i = 0; i < x.length(); ++i) {
        double s = (*item.masked_scores)[i];
        if (cfg.paper_literal_sign) s = 1.0 - s;
        t += p[i] * s;
      }
      t = std::max(t, kProbFloor);
      value.greedy_term += std::log(t) / batch_d0.size();
      if (!grads) continue;

      std::vector<double> dp(x.length());
      for (int i = 0; i < x.length(); ++i) {
        double s = (*item.masked_scores)[i];
        if (cfg.paper_literal_sign) s = 1.0 - s;
        dp[i] = s / t;
      }
      std::vector<double> dl = softmax_backward(p, dp);
      Matrix dlogits(x.length(), 1);
      for (int i = 0; i < x.length(); ++i) dlogits.at(i, 0) = coef * dl[i];
      scorer_backward(alpha.net, x, trace, dlogits, *grads);
    }
  }

  value.loss = -(cfg.lambda1 * value.gumbel_term + cfg.lambda2 * value.greedy_term);
  return value;
}

// --- stage 2: perturber loss -----------------------------------------------

struct Stage2Item {
  const TokenSequence* x;
  int orig_class;
  const std::vector<int>* selected;  // phi^G(x): top-k of the trained identifier
};

struct SubstitutionScoredItem {
  const TokenSequence* x;
  const std::vector<int>* selected;
  // substitution_scores[s][j] = flip score of replacing position selected[s]
  // with pool word j
  const std::vector<std::vector<double>>* substitution_scores;
};

// noise[sample][s][j]: one gumbel vector over the pool per selected position.
inline LossValue stage2_loss(const PerturberParams& theta,
                             const std::vector<Stage2Item>& batch_d,
                             const std::vector<SubstitutionScoredItem>& batch_d0,
                             const VictimModel& model, const TrainConfig& cfg,
                             const std::vector<std::vector<std::vector<double>>>& noise,
                             ScorerParams* grads) {
  if (cfg.lambda1 > 0.0 && !model.white_box())
    throw std::runtime_error("gradient unavailable: gumbel objective needs a white-box victim");
  if (cfg.lambda1 > 0.0 && noise.size() != batch_d.size())
    throw std::invalid_argument("one noise block per gumbel sample required");
  const int pool_n = static_cast<int>(theta.pool_ids.size());
  SubDictionary pool{theta.pool_ids};

  LossValue value;
  if (cfg.lambda1 > 0.0 && !batch_d.empty()) {
    const double coef = -cfg.lambda1 / batch_d.size();
    for (size_t n = 0; n < batch_d.size(); ++n) {
      const TokenSequence& x = *batch_d[n].x;
      const std::vector<int>& selected = *batch_d[n].selected;
      ScorerTrace trace;
      Matrix q = perturber_forward(theta, x, &trace);
      std::vector<ConcreteSample> rows;
      rows.reserve(selected.size());
      for (size_t s = 0; s < selected.size(); ++s) {
        std::vector<double> qrow(q.row(selected[s]), q.row(selected[s]) + pool_n);
        rows.push_back(concrete_from_noise(qrow, cfg.tau, noise[n][s]));
      }
      Matrix relaxed = apply_relaxed_substitution(rows, x, selected, pool, model.embedding());
      Matrix dprob;
      ClassDistribution dist =
          model.relaxed_forward(relaxed, batch_d[n].orig_class, grads ? &dprob : nullptr);
      double f = std::max(flip_score(dist, batch_d[n].orig_class), kProbFloor);
      value.gumbel_term += std::log(f) / batch_d.size();
      if (!grads) continue;

      Matrix dlogits(x.length(), pool_n);
      const EmbeddingTable& table = model.embedding();
      for (size_t s = 0; s < selected.size(); ++s) {
        int i = selected[s];
        std::vector<double> dv(pool_n);
        for (int j = 0; j < pool_n; ++j)
          dv[j] = -dot(dprob.row(i), table.vectors.row(pool.ids[j]), table.dim()) / f;
        // d log f = (-1/f) dP; V row -> (log q + eps)/tau -> row logits
        std::vector<double> dy = softmax_backward(rows[s].weights, dv);
        std::vector<double> dlogq(pool_n);
        for (int j = 0; j < pool_n; ++j) dlogq[j] = dy[j] / cfg.tau;
        std::vector<double> qrow(q.row(i), q.row(i) + pool_n);
        std::vector<double> dl = log_softmax_backward(qrow, dlogq);
        for (int j = 0; j < pool_n; ++j) dlogits.at(i, j) += coef * dl[j];
      }
      scorer_backward(theta.net, x, trace, dlogits, *grads);
    }
  }

  if (cfg.lambda2 > 0.0 && !batch_d0.empty()) {
    const double coef = -cfg.lambda2 / batch_d0.size();
    for (const SubstitutionScoredItem& item : batch_d0) {
      const TokenSequence& x = *item.x;
      const std::vector<int>& selected = *item.selected;
      ScorerTrace trace;
      Matrix q = perturber_forward(theta, x, &trace);
      Matrix dlogits(x.length(), pool_n);
      for (size_t s = 0; s < selected.size(); ++s) {
        int i = selected[s];
        const std::vector<double>& scores = (*item.substitution_scores)[s];
        double t = 0.0;
        for (int j = 0; j < pool_n; ++j) t += q.at(i, j) * scores[j];
        t = std::max(t, kProbFloor);
        value.greedy_term += std::log(t) / batch_d0.size();
        if (!grads) continue;
        std::vector<double> dq(pool_n);
        for (int j = 0; j < pool_n; ++j) dq[j] = scores[j] / t;
        std::vector<double> qrow(q.row(i), q.row(i) + pool_n);
        std::vector<double> dl = softmax_backward(qrow, dq);
        for (int j = 0; j < pool_n; ++j) dlogits.at(i, j) += coef * dl[j];
      }
      if (grads) scorer_backward(theta.net, x, trace, dlogits, *grads);
    }
  }

  value.loss = -(cfg.lambda1 * value.gumbel_term + cfg.lambda2 * value.greedy_term);
  return value;
}

// --- rmsprop ----------------------------------------------------------------

struct RmsProp {
  double decay = 0.9;
  double eps = 1e-8;
  std::vector<std::vector<double>> cache;

  void step(ScorerParams& params, const ScorerParams& grads, double lr) {
    if (cache.empty()) {
      params.for_arrays([&](std::vector<double>& a) { cache.emplace_back(a.size(), 0.0); });
    }
    size_t slot = 0;
    std::vector<const std::vector<double>*> gs;
    grads.for_arrays([&](const std::vector<double>& g) { gs.push_back(&g); });
    params.for_arrays([&](std::vector<double>& a) {
      const std::vector<double>& g = *gs[slot];
      std::vector<double>& c = cache[slot];
      for (size_t i = 0; i < a.size(); ++i) {
        c[i] = decay * c[i] + (1.0 - decay) * g[i] * g[i];
        a[i] -= lr * g[i] / (std::sqrt(c[i]) + eps);
      }
      ++slot;
    });
  }
};

// --- training ----------------------------------------------------------------

namespace detail {

inline std::vector<int> pick_d0(int n, int d0_size, SplitRng rng) {
  int take = std::min(n, d0_size);
  return rng.sample_without_replacement(n, take);
}

// wrap-around batch of indices from a shuffled order
inline std::vector<int> cycle_batch(const std::vector<int>& order, size_t start, int count) {
  std::vector<int> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(order[(start + i) % order.size()]);
  return out;
}

}  // namespace detail

struct IdentifierTrainResult {
  IdentifierParams alpha;
  std::vector<TelemetryRow> telemetry;
  double train_seconds = 0.0;
};

// Algorithm: precompute the greedy masked scores on a fixed random subset D0,
// then run rmsprop over minibatches of the combined objective. Deterministic
// given cfg.seed; fresh gumbel noise each step. vocab_size is the attacker's
// own knowledge of the dictionary, so black-box victims work too.
inline IdentifierTrainResult train_identifier(const VictimModel& model,
                                              const std::vector<TokenSequence>& train_set,
                                              int vocab_size, const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  if (cfg.lambda1 > 0.0 && !model.white_box())
    throw std::runtime_error("gradient unavailable: gumbel objective needs a white-box victim");

  const double t_start = monotonic_seconds();
  SplitRng root(cfg.seed);
  IdentifierTrainResult result;
  result.alpha.net = ScorerParams::make(vocab_size, cfg.scorer_e, cfg.scorer_filters, 1);
  result.alpha.net.randomize(root.split(1).next_u64());

  // per-sample caches
  std::vector<int> orig_class(train_set.size(), -1);
  auto orig_of = [&](int idx) {
    if (orig_class[idx] < 0) orig_class[idx] = model.predict(train_set[idx]).argmax();
    return orig_class[idx];
  };

  std::vector<int> d0 =
      cfg.lambda2 > 0.0
          ? detail::pick_d0(static_cast<int>(train_set.size()), cfg.d0_size, root.split(2))
          : std::vector<int>{};
  std::vector<std::vector<double>> d0_scores(d0.size());
  for (size_t i = 0; i < d0.size(); ++i) {
    PreparedSample prep = prepare_sample(model, train_set[d0[i]]);
    d0_scores[i] = masked_scores(model, prep).scores;
  }

  RmsProp opt;
  std::vector<int> d_order(train_set.size());
  std::iota(d_order.begin(), d_order.end(), 0);
  std::vector<int> d0_order(d0.size());
  std::iota(d0_order.begin(), d0_order.end(), 0);
  SplitRng shuffle_d = root.split(3);
  SplitRng shuffle_d0 = root.split(4);

  const bool use_d = cfg.lambda1 > 0.0;
  const size_t primary_n = use_d ? train_set.size() : d0.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (use_d) shuffle_d.shuffle(d_order);
    if (!d0.empty()) shuffle_d0.shuffle(d0_order);
    TelemetryRow row;
    row.epoch = epoch;
    int steps = 0;
    size_t d0_cursor = 0;
    for (size_t start = 0; start < primary_n; start += cfg.batch) {
      std::vector<Stage1Item> batch_d;
      std::vector<std::vector<std::vector<double>>> noise;
      if (use_d) {
        size_t end = std::min(primary_n, start + cfg.batch);
        SplitRng noise_rng = root.split(5).split(epoch).split(start);
        for (size_t i = start; i < end; ++i) {
          int idx = d_order[i];
          batch_d.push_back({&train_set[idx], orig_of(idx)});
          std::vector<std::vector<double>> eps(cfg.k);
          for (auto& v : eps)
            v = sample_gumbel_vec(noise_rng, train_set[idx].length());
          noise.push_back(std::move(eps));
        }
      }
      std::vector<ScoredItem> batch_d0;
      if (cfg.lambda2 > 0.0 && !d0.empty()) {
        int want = use_d ? std::min<int>(cfg.batch, static_cast<int>(d0.size()))
                         : static_cast<int>(std::min(d0.size() - start, static_cast<size_t>(cfg.batch)));
        std::vector<int> ids = detail::cycle_batch(d0_order, d0_cursor, want);
        d0_cursor += want;
        for (int i : ids) batch_d0.push_back({&train_set[d0[i]], &d0_scores[i]});
      }
      ScorerParams grads = result.alpha.net.zeros_like();
      LossValue v = stage1_loss(result.alpha, batch_d, batch_d0, model, cfg, noise, &grads);
      if (!std::isfinite(v.loss)) throw std::runtime_error("training diverged (non-finite loss)");
      opt.step(result.alpha.net, grads, cfg.lr);
      row.term_gumbel += v.gumbel_term;
      row.term_greedy += v.greedy_term;
      row.total_loss += v.loss;
      ++steps;
    }
    if (steps > 0) {
      row.term_gumbel /= steps;
      row.term_greedy /= steps;
      row.total_loss /= steps;
    }
    result.telemetry.push_back(row);
  }
  result.train_seconds = monotonic_seconds() - t_start;
  return result;
}

struct PerturberTrainResult {
  PerturberParams theta;
  std::vector<TelemetryRow> telemetry;
  double train_seconds = 0.0;
};

// Trains q_theta given the trained identifier: positions come from the
// deterministic top-k of p_alpha, replacement scores on D0 come from
// exhaustive per-position substitution.
inline PerturberTrainResult train_perturber(const VictimModel& model,
                                            const std::vector<TokenSequence>& train_set,
                                            int vocab_size, const TrainConfig& cfg,
                                            const IdentifierParams& alpha,
                                            const SubDictionary& pool) {
  validate_train_config(cfg);
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  if (pool.size() == 0) throw std::invalid_argument("empty replacement pool");
  if (cfg.lambda1 > 0.0 && !model.white_box())
    throw std::runtime_error("gradient unavailable: gumbel objective needs a white-box victim");

  const double t_start = monotonic_seconds();
  SplitRng root(cfg.seed);
  PerturberTrainResult result;
  result.theta.net =
      ScorerParams::make(vocab_size, cfg.scorer_e, cfg.scorer_filters, pool.size());
  result.theta.net.randomize(root.split(11).next_u64());
  result.theta.pool_ids = pool.ids;

  std::vector<int> orig_class(train_set.size(), -1);
  auto orig_of = [&](int idx) {
    if (orig_class[idx] < 0) orig_class[idx] = model.predict(train_set[idx]).argmax();
    return orig_class[idx];
  };
  std::vector<std::vector<int>> selected(train_set.size());
  auto selected_of = [&](int idx) -> const std::vector<int>& {
    if (selected[idx].empty())
      selected[idx] = top_k_indices(identifier_forward(alpha, train_set[idx]),
                                    std::min(cfg.k, train_set[idx].length()));
    return selected[idx];
  };

  std::vector<int> d0 =
      cfg.lambda2 > 0.0
          ? detail::pick_d0(static_cast<int>(train_set.size()), cfg.d0_size, root.split(12))
          : std::vector<int>{};
  std::vector<std::vector<std::vector<double>>> d0_scores(d0.size());
  for (size_t i = 0; i < d0.size(); ++i) {
    int idx = d0[i];
    const TokenSequence& x = train_set[idx];
    int c = orig_of(idx);
    const std::vector<int>& sel = selected_of(idx);
    d0_scores[i].resize(sel.size());
    for (size_t s = 0; s < sel.size(); ++s) {
      d0_scores[i][s].resize(pool.size());
      for (int j = 0; j < pool.size(); ++j)
        d0_scores[i][s][j] = flip_score(model.predict(substitute(x, sel[s], pool.ids[j])), c);
    }
  }

  RmsProp opt;
  std::vector<int> d_order(train_set.size());
  std::iota(d_order.begin(), d_order.end(), 0);
  std::vector<int> d0_order(d0.size());
  std::iota(d0_order.begin(), d0_order.end(), 0);
  SplitRng shuffle_d = root.split(13);
  SplitRng shuffle_d0 = root.split(14);

  const bool use_d = cfg.lambda1 > 0.0;
  const size_t primary_n = use_d ? train_set.size() : d0.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (use_d) shuffle_d.shuffle(d_order);
    if (!d0.empty()) shuffle_d0.shuffle(d0_order);
    TelemetryRow row;
    row.epoch = epoch;
    int steps = 0;
    size_t d0_cursor = 0;
    for (size_t start = 0; start < primary_n; start += cfg.batch) {
      std::vector<Stage2Item> batch_d;
      std::vector<std::vector<std::vector<double>>> noise;
      if (use_d) {
        size_t end = std::min(primary_n, start + cfg.batch);
        SplitRng noise_rng = root.split(15).split(epoch).split(start);
        for (size_t i = start; i < end; ++i) {
          int idx = d_order[i];
          batch_d.push_back({&train_set[idx], orig_of(idx), &selected_of(idx)});
          std::vector<std::vector<double>> eps(selected_of(idx).size());
          for (auto& v : eps) v = sample_gumbel_vec(noise_rng, pool.size());
          noise.push_back(std::move(eps));
        }
      }
      std::vector<SubstitutionScoredItem> batch_d0;
      if (cfg.lambda2 > 0.0 && !d0.empty()) {
        int want = use_d ? std::min<int>(cfg.batch, static_cast<int>(d0.size()))
                         : static_cast<int>(std::min(d0.size() - start, static_cast<size_t>(cfg.batch)));
        std::vector<int> ids = detail::cycle_batch(d0_order, d0_cursor, want);
        d0_cursor += want;
        for (int i : ids)
          batch_d0.push_back({&train_set[d0[i]], &selected[d0[i]], &d0_scores[i]});
      }
      ScorerParams grads = result.theta.net.zeros_like();
      LossValue v = stage2_loss(result.theta, batch_d, batch_d0, model, cfg, noise, &grads);
      if (!std::isfinite(v.loss)) throw std::runtime_error("training diverged (non-finite loss)");
      opt.step(result.theta.net, grads, cfg.lr);
      row.term_gumbel += v.gumbel_term;
      row.term_greedy += v.greedy_term;
      row.total_loss += v.loss;
      ++steps;
    }
    if (steps > 0) {
      row.term_gumbel /= steps;
      row.term_greedy /= steps;
      row.total_loss /= steps;
    }
    result.telemetry.push_back(row);
  }
  result.train_seconds = monotonic_seconds() - t_start;
  return result;
}

// --- inference ---------------------------------------------------------------

// Fast parametric attack: positions from the identifier's top-k, one word per
// position from the perturber's row argmax (ties to the lower token id).
// Exactly two victim evaluations, for success accounting only.
inline AttackOutcome gumbel_attack_apply(const VictimModel& model, const IdentifierParams& alpha,
                                         const PerturberParams& theta, const TokenSequence& x,
                                         int k) {
  if (k < 0 || k > x.length()) throw std::invalid_argument("k must be in [0, d]");
  const uint64_t evals_before = model.evals();
  const double t0 = monotonic_seconds();

  ClassDistribution orig = model.predict(x);
  int c = orig.argmax();

  std::vector<double> p = identifier_forward(alpha, x);
  std::vector<int> positions = top_k_indices(p, k);
  Matrix q = perturber_forward(theta, x);

  AttackOutcome outcome;
  outcome.x_orig = x;
  outcome.x_tilde = x;
  outcome.orig_class = c;
  for (int pos : positions) {
    int best_j = 0;
    for (int j = 1; j < q.cols; ++j) {
      if (q.at(pos, j) > q.at(pos, best_j) ||
          (q.at(pos, j) == q.at(pos, best_j) && theta.pool_ids[j] < theta.pool_ids[best_j]))
        best_j = j;
    }
    outcome.x_tilde.ids[pos] = theta.pool_ids[best_j];
    outcome.positions.push_back(pos);
    outcome.replacements.push_back(theta.pool_ids[best_j]);
  }

  ClassDistribution final_dist = model.predict(outcome.x_tilde);
  outcome.final_class = final_dist.argmax();
  outcome.success = outcome.final_class != c ? 1 : 0;
  outcome.surrogate = flip_score(final_dist, c);
  outcome.evals_used = model.evals() - evals_before;
  outcome.wall_clock = monotonic_seconds() - t0;
  if (outcome.evals_used != 2)
    throw std::logic_error("gumbel attack evaluation accounting broke");
  return outcome;
}

// --- checkpoints ---------------------------------------------------------------

inline Checkpoint scorer_to_checkpoint(const ScorerParams& net, const char* tag, uint64_t seed) {
  Checkpoint ck;
  ck.tag = tag;
  ck.seed = seed;
  ck.add_dim("vocab", net.emb.rows);
  ck.add_dim("e", net.emb.cols);
  ck.add_dim("filters", net.conv_w.rows);
  ck.add_dim("out", net.head_w.rows);
  ck.add_array("emb", net.emb.data);
  ck.add_array("conv_w", net.conv_w.data);
  ck.add_array("conv_b", net.conv_b);
  ck.add_array("head_w", net.head_w.data);
  ck.add_array("head_b", net.head_b);
  return ck;
}

inline ScorerParams scorer_from_checkpoint(const Checkpoint& ck) {
  ScorerParams net = ScorerParams::make(
      static_cast<int>(ck.dim("vocab")), static_cast<int>(ck.dim("e")),
      static_cast<int>(ck.dim("filters")), static_cast<int>(ck.dim("out")));
  net.emb.data = ck.array("emb");
  net.conv_w.data = ck.array("conv_w");
  net.conv_b = ck.array("conv_b");
  net.head_w.data = ck.array("head_w");
  net.head_b = ck.array("head_b");
  return net;
}

inline void save_identifier(const IdentifierParams& alpha, const std::string& path,
                            uint64_t seed) {
  scorer_to_checkpoint(alpha.net, "identifier-v1", seed).save(path);
}

inline IdentifierParams load_identifier(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.tag != "identifier-v1") throw std::runtime_error("not an identifier checkpoint");
  return IdentifierParams{scorer_from_checkpoint(ck)};
}

inline void save_perturber(const PerturberParams& theta, const std::string& path,
                           uint64_t seed) {
  Checkpoint ck = scorer_to_checkpoint(theta.net, "perturber-v1", seed);
  std::vector<double> ids(theta.pool_ids.begin(), theta.pool_ids.end());
  ck.add_array("pool_ids", std::move(ids));
  ck.save(path);
}

inline PerturberParams load_perturber(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.tag != "perturber-v1") throw std::runtime_error("not a perturber checkpoint");
  PerturberParams theta;
  theta.net = scorer_from_checkpoint(ck);
  for (double v : ck.array("pool_ids")) theta.pool_ids.push_back(static_cast<int>(v));
  return theta;
}

// Telemetry: one row per epoch.
inline void write_telemetry_csv(const std::vector<TelemetryRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "epoch,term_gumbel,term_greedy,total_loss\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g\n", r.epoch, r.term_gumbel,
                  r.term_greedy, r.total_loss);
    out << buf;
  }
}

}  // namespace advtext
