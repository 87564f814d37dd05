#pragma once

#include <cmath>
#include <iostream>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "advtext/checkpoint.hpp"
#include "advtext/matrix.hpp"
#include "advtext/rng.hpp"
#include "advtext/synthetic.hpp"
#include "advtext/victim.hpp"

namespace advtext {

enum class VictimArch { BagLinear, ConvPoolLinear };

inline const char* arch_name(VictimArch a) {
  return a == VictimArch::BagLinear ? "bag-v1" : "conv-v1";
}

struct ToyVictimConfig {
  VictimArch architecture = VictimArch::BagLinear;
  int e = 16;       // embedding dimension
  int hidden = 16;  // conv filter count (ConvPoolLinear only)
  double lr = 0.5;
  int epochs = 30;
  int batch = 32;
  uint64_t seed = 1;
};

// Mean of token embeddings into a linear softmax head. Smooth everywhere,
// position-insensitive except through token identity.
class BagVictim final : public VictimModel {
 public:
  BagVictim(int vocab_size, int e, int d, int classes)
      : d_(d), classes_(classes), head_w_(classes, e), head_b_(classes, 0.0) {
    emb_.vectors = Matrix(vocab_size, e);
  }

  int num_classes() const override { return classes_; }
  int seq_len() const override { return d_; }
  bool white_box() const override { return true; }
  const EmbeddingTable& embedding() const override { return emb_; }

  EmbeddingTable& mutable_embedding() { return emb_; }
  Matrix& head_w() { return head_w_; }
  std::vector<double>& head_b() { return head_b_; }

  Checkpoint to_checkpoint(uint64_t seed) const {
    Checkpoint ck;
    ck.tag = arch_name(VictimArch::BagLinear);
    ck.seed = seed;
    ck.add_dim("vocab", emb_.vocab_size());
    ck.add_dim("e", emb_.dim());
    ck.add_dim("d", d_);
    ck.add_dim("classes", classes_);
    ck.add_array("embedding", emb_.vectors.data);
    ck.add_array("head_w", head_w_.data);
    ck.add_array("head_b", head_b_);
    return ck;
  }

  static std::unique_ptr<BagVictim> from_checkpoint(const Checkpoint& ck) {
    auto m = std::make_unique<BagVictim>(static_cast<int>(ck.dim("vocab")),
                                         static_cast<int>(ck.dim("e")),
                                         static_cast<int>(ck.dim("d")),
                                         static_cast<int>(ck.dim("classes")));
    m->emb_.vectors.data = ck.array("embedding");
    m->head_w_.data = ck.array("head_w");
    m->head_b_ = ck.array("head_b");
    return m;
  }

 protected:
  ClassDistribution forward(const TokenSequence& x) const override {
    return relaxed_impl(embed(x), 0, nullptr);
  }

  ClassDistribution relaxed_impl(const Matrix& embedded, int c, Matrix* grad_c) const override {
    const int e = embedded.cols;
    std::vector<double> z(e, 0.0);
    for (int i = 0; i < embedded.rows; ++i) {
      const double* row = embedded.row(i);
      for (int j = 0; j < e; ++j) z[j] += row[j];
    }
    for (double& v : z) v /= embedded.rows;

    std::vector<double> logits(classes_);
    for (int y = 0; y < classes_; ++y) logits[y] = dot(head_w_.row(y), z.data(), e) + head_b_[y];
    ClassDistribution dist{softmax(logits)};

    if (grad_c) {
      // dP_c/dz = P_c (W_c - sum_y P_y W_y); uniform across positions / d
      std::vector<double> dz(e);
      for (int j = 0; j < e; ++j) {
        double avg = 0.0;
        for (int y = 0; y < classes_; ++y) avg += dist.probs[y] * head_w_.at(y, j);
        dz[j] = dist.probs[c] * (head_w_.at(c, j) - avg);
      }
      *grad_c = Matrix(embedded.rows, e);
      for (int i = 0; i < embedded.rows; ++i) {
        double* row = grad_c->row(i);
        for (int j = 0; j < e; ++j) row[j] = dz[j] / embedded.rows;
      }
    }
    return dist;
  }

 private:
  int d_;
  int classes_;
  EmbeddingTable emb_;
  Matrix head_w_;  // classes x e
  std::vector<double> head_b_;

  friend struct ToyTrainer;
};

// Single 1-D convolution (kernel 3, zero padding), global max pool, linear
// softmax head. Position-sensitive through the pooling argmax.
class ConvVictim final : public VictimModel {
 public:
  ConvVictim(int vocab_size, int e, int d, int classes, int filters)
      : d_(d), classes_(classes), filters_(filters), conv_w_(filters, 3 * e),
        conv_b_(filters, 0.0), head_w_(classes, filters), head_b_(classes, 0.0) {
    emb_.vectors = Matrix(vocab_size, e);
  }

  int num_classes() const override { return classes_; }
  int seq_len() const override { return d_; }
  bool white_box() const override { return true; }
  const EmbeddingTable& embedding() const override { return emb_; }

  Checkpoint to_checkpoint(uint64_t seed) const {
    Checkpoint ck;
    ck.tag = arch_name(VictimArch::ConvPoolLinear);
    ck.seed = seed;
    ck.add_dim("vocab", emb_.vocab_size());
    ck.add_dim("e", emb_.dim());
    ck.add_dim("d", d_);
    ck.add_dim("classes", classes_);
    ck.add_dim("filters", filters_);
    ck.add_array("embedding", emb_.vectors.data);
    ck.add_array("conv_w", conv_w_.data);
    ck.add_array("conv_b", conv_b_);
    ck.add_array("head_w", head_w_.data);
    ck.add_array("head_b", head_b_);
    return ck;
  }

  static std::unique_ptr<ConvVictim> from_checkpoint(const Checkpoint& ck) {
    auto m = std::make_unique<ConvVictim>(
        static_cast<int>(ck.dim("vocab")), static_cast<int>(ck.dim("e")),
        static_cast<int>(ck.dim("d")), static_cast<int>(ck.dim("classes")),
        static_cast<int>(ck.dim("filters")));
    m->emb_.vectors.data = ck.array("embedding");
    m->conv_w_.data = ck.array("conv_w");
    m->conv_b_ = ck.array("conv_b");
    m->head_w_.data = ck.array("head_w");
    m->head_b_ = ck.array("head_b");
    return m;
  }

  struct Trace {
    Matrix pre;                  // d x filters, pre-activation
    std::vector<double> pooled;  // filters
    std::vector<int> arg;        // pooling argmax per filter, lowest index on ties
    std::vector<double> logits;
  };

  ClassDistribution forward_trace(const Matrix& embedded, Trace& t) const {
    const int e = embedded.cols;
    const int d = embedded.rows;
    t.pre = Matrix(d, filters_);
    for (int i = 0; i < d; ++i) {
      for (int f = 0; f < filters_; ++f) {
        const double* w = conv_w_.row(f);
        double acc = conv_b_[f];
        for (int s = 0; s < 3; ++s) {
          int r = i + s - 1;
          if (r < 0 || r >= d) continue;
          acc += dot(w + s * e, embedded.row(r), e);
        }
        t.pre.at(i, f) = acc;
      }
    }
    t.pooled.assign(filters_, 0.0);
    t.arg.assign(filters_, 0);
    for (int f = 0; f < filters_; ++f) {
      double best = std::max(t.pre.at(0, f), 0.0);
      int arg = 0;
      for (int i = 1; i < d; ++i) {
        double h = std::max(t.pre.at(i, f), 0.0);
        if (h > best) {
          best = h;
          arg = i;
        }
      }
      t.pooled[f] = best;
      t.arg[f] = arg;
    }
    t.logits.assign(classes_, 0.0);
    for (int y = 0; y < classes_; ++y)
      t.logits[y] = dot(head_w_.row(y), t.pooled.data(), filters_) + head_b_[y];
    return ClassDistribution{softmax(t.logits)};
  }

 protected:
  ClassDistribution forward(const TokenSequence& x) const override {
    return relaxed_impl(embed(x), 0, nullptr);
  }

  ClassDistribution relaxed_impl(const Matrix& embedded, int c, Matrix* grad_c) const override {
    Trace t;
    ClassDistribution dist = forward_trace(embedded, t);
    if (grad_c) {
      const int e = embedded.cols;
      const int d = embedded.rows;
      std::vector<double> dlogits(classes_);
      for (int y = 0; y < classes_; ++y)
        dlogits[y] = dist.probs[c] * ((y == c ? 1.0 : 0.0) - dist.probs[y]);
      *grad_c = Matrix(d, e);
      for (int f = 0; f < filters_; ++f) {
        int i = t.arg[f];
        if (t.pre.at(i, f) <= 0.0) continue;  // relu gate at the pooled position
        double da = 0.0;
        for (int y = 0; y < classes_; ++y) da += dlogits[y] * head_w_.at(y, f);
        const double* w = conv_w_.row(f);
        for (int s = 0; s < 3; ++s) {
          int r = i + s - 1;
          if (r < 0 || r >= d) continue;
          double* dst = grad_c->row(r);
          for (int j = 0; j < e; ++j) dst[j] += da * w[s * e + j];
        }
      }
    }
    return dist;
  }

 private:
  int d_;
  int classes_;
  int filters_;
  EmbeddingTable emb_;
  Matrix conv_w_;  // filters x 3e
  std::vector<double> conv_b_;
  Matrix head_w_;  // classes x filters
  std::vector<double> head_b_;

  friend struct ToyTrainer;
};

struct ToyTrainResult {
  std::unique_ptr<VictimModel> model;
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
};

inline double clamped_log(double v) { return std::log(std::max(v, 1e-12)); }

// Plain mini-batch gradient descent with a fixed learning rate; row 0 of the
// embedding stays pinned at zero. Deterministic given the seed.
struct ToyTrainer {
  static ToyTrainResult train(const LabeledDataset& data, int vocab_size, int num_classes,
                              const ToyVictimConfig& cfg) {
    if (data.size() == 0) throw std::invalid_argument("empty training set");
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (cfg.e < 1) throw std::invalid_argument("embedding dim must be >= 1");
    int distinct = 0;
    {
      std::vector<int> seen(num_classes, 0);
      for (int l : data.labels) {
        if (l < 0 || l >= num_classes) throw std::invalid_argument("label out of range");
        seen[l] = 1;
      }
      for (int s : seen) distinct += s;
    }
    if (distinct < 2)
      std::cerr << "warning: training on a single-class dataset\n";

    const int d = data.xs[0].length();
    ToyTrainResult result;
    if (cfg.architecture == VictimArch::BagLinear) {
      auto m = std::make_unique<BagVictim>(vocab_size, cfg.e, d, num_classes);
      init_matrix(m->emb_.vectors, cfg.seed, 1, /*skip_row0=*/true);
      init_matrix(m->head_w_, cfg.seed, 2, false);
      run(*m, data, cfg, result);
      result.model = std::move(m);
    } else {
      auto m = std::make_unique<ConvVictim>(vocab_size, cfg.e, d, num_classes, cfg.hidden);
      init_matrix(m->emb_.vectors, cfg.seed, 1, true);
      init_matrix(m->conv_w_, cfg.seed, 2, false);
      init_matrix(m->head_w_, cfg.seed, 3, false);
      run(*m, data, cfg, result);
      result.model = std::move(m);
    }
    return result;
  }

 private:
  static void init_matrix(Matrix& m, uint64_t seed, uint64_t stream, bool skip_row0) {
    SplitRng rng = SplitRng(seed).split(stream);
    for (int r = skip_row0 ? 1 : 0; r < m.rows; ++r)
      for (int c = 0; c < m.cols; ++c) m.at(r, c) = rng.next_range(-0.05, 0.05);
  }

  template <typename ModelT>
  static void run(ModelT& model, const LabeledDataset& data, const ToyVictimConfig& cfg,
                  ToyTrainResult& result) {
    const int n = static_cast<int>(data.size());
    result.initial_loss = mean_loss(model, data);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitRng shuffler = SplitRng(cfg.seed).split(7);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffler.shuffle(order);
      for (int start = 0; start < n; start += cfg.batch) {
        int end = std::min(n, start + cfg.batch);
        batch_step(model, data, order, start, end, cfg.lr);
      }
      result.epoch_loss.push_back(mean_loss(model, data));
    }
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      ClassDistribution dist = model.relaxed_impl(model.embed(data.xs[i]), 0, nullptr);
      if (dist.argmax() == data.labels[i]) ++correct;
    }
    result.train_accuracy = static_cast<double>(correct) / n;
  }

  template <typename ModelT>
  static double mean_loss(ModelT& model, const LabeledDataset& data) {
    double total = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
      ClassDistribution dist = model.relaxed_impl(model.embed(data.xs[i]), 0, nullptr);
      total -= clamped_log(dist.probs[data.labels[i]]);
    }
    return total / data.size();
  }

  static double batch_step(BagVictim& m, const LabeledDataset& data,
                           const std::vector<int>& order, int start, int end, double lr) {
    const int e = m.emb_.dim();
    const int d = m.d_;
    Matrix demb(m.emb_.vocab_size(), e);
    Matrix dw(m.classes_, e);
    std::vector<double> db(m.classes_, 0.0);
    double loss = 0.0;
    for (int bi = start; bi < end; ++bi) {
      const TokenSequence& x = data.xs[order[bi]];
      int label = data.labels[order[bi]];
      std::vector<double> z(e, 0.0);
      for (int id : x.ids) {
        const double* row = m.emb_.vectors.row(id);
        for (int j = 0; j < e; ++j) z[j] += row[j];
      }
      for (double& v : z) v /= d;
      std::vector<double> logits(m.classes_);
      for (int y = 0; y < m.classes_; ++y)
        logits[y] = dot(m.head_w_.row(y), z.data(), e) + m.head_b_[y];
      std::vector<double> p = softmax(logits);
      loss -= clamped_log(p[label]);

      std::vector<double> dz(e, 0.0);
      for (int y = 0; y < m.classes_; ++y) {
        double dl = p[y] - (y == label ? 1.0 : 0.0);
        db[y] += dl;
        double* dwy = dw.row(y);
        const double* wy = m.head_w_.row(y);
        for (int j = 0; j < e; ++j) {
          dwy[j] += dl * z[j];
          dz[j] += dl * wy[j];
        }
      }
      for (int id : x.ids) {
        if (id == kReferenceId) continue;
        double* row = demb.row(id);
        for (int j = 0; j < e; ++j) row[j] += dz[j] / d;
      }
    }
    apply_update(m.emb_.vectors, demb, lr, end - start, true);
    apply_update(m.head_w_, dw, lr, end - start, false);
    apply_update(m.head_b_, db, lr, end - start);
    return loss / (end - start);
  }

  static double batch_step(ConvVictim& m, const LabeledDataset& data,
                           const std::vector<int>& order, int start, int end, double lr) {
    const int e = m.emb_.dim();
    const int d = m.d_;
    Matrix demb(m.emb_.vocab_size(), e);
    Matrix dconv(m.filters_, 3 * e);
    std::vector<double> dconv_b(m.filters_, 0.0);
    Matrix dw(m.classes_, m.filters_);
    std::vector<double> db(m.classes_, 0.0);
    double loss = 0.0;
    Matrix dx(d, e);
    for (int bi = start; bi < end; ++bi) {
      const TokenSequence& x = data.xs[order[bi]];
      int label = data.labels[order[bi]];
      Matrix embedded = m.embed(x);
      ConvVictim::Trace t;
      std::vector<double> p = m.forward_trace(embedded, t).probs;
      loss -= clamped_log(p[label]);

      std::vector<double> dpooled(m.filters_, 0.0);
      for (int y = 0; y < m.classes_; ++y) {
        double dl = p[y] - (y == label ? 1.0 : 0.0);
        db[y] += dl;
        double* dwy = dw.row(y);
        const double* wy = m.head_w_.row(y);
        for (int f = 0; f < m.filters_; ++f) {
          dwy[f] += dl * t.pooled[f];
          dpooled[f] += dl * wy[f];
        }
      }
      dx.fill(0.0);
      for (int f = 0; f < m.filters_; ++f) {
        int i = t.arg[f];
        if (t.pre.at(i, f) <= 0.0) continue;
        double da = dpooled[f];
        dconv_b[f] += da;
        double* dwf = dconv.row(f);
        const double* wf = m.conv_w_.row(f);
        for (int s = 0; s < 3; ++s) {
          int r = i + s - 1;
          if (r < 0 || r >= d) continue;
          const double* xr = embedded.row(r);
          double* dxr = dx.row(r);
          for (int j = 0; j < e; ++j) {
            dwf[s * e + j] += da * xr[j];
            dxr[j] += da * wf[s * e + j];
          }
        }
      }
      for (int i = 0; i < d; ++i) {
        int id = x.ids[i];
        if (id == kReferenceId) continue;
        double* row = demb.row(id);
        const double* dxr = dx.row(i);
        for (int j = 0; j < e; ++j) row[j] += dxr[j];
      }
    }
    apply_update(m.emb_.vectors, demb, lr, end - start, true);
    apply_update(m.conv_w_, dconv, lr, end - start, false);
    apply_update(m.conv_b_, dconv_b, lr, end - start);
    apply_update(m.head_w_, dw, lr, end - start, false);
    apply_update(m.head_b_, db, lr, end - start);
    return loss / (end - start);
  }

  static void apply_update(Matrix& param, const Matrix& grad, double lr, int batch_n,
                           bool skip_row0) {
    size_t begin = skip_row0 ? static_cast<size_t>(param.cols) : 0;
    for (size_t i = begin; i < param.data.size(); ++i)
      param.data[i] -= lr * grad.data[i] / batch_n;
  }
  static void apply_update(std::vector<double>& param, const std::vector<double>& grad,
                           double lr, int batch_n) {
    for (size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i] / batch_n;
  }
};

inline ToyTrainResult train_toy_victim(const LabeledDataset& data, int vocab_size,
                                       int num_classes, const ToyVictimConfig& cfg) {
  return ToyTrainer::train(data, vocab_size, num_classes, cfg);
}

inline double dataset_accuracy(const VictimModel& model, const LabeledDataset& data) {
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  int correct = 0;
  for (size_t i = 0; i < data.size(); ++i)
    if (model.predict(data.xs[i]).argmax() == data.labels[i]) ++correct;
  return static_cast<double>(correct) / data.size();
}

inline void save_victim(const VictimModel& model, const std::string& path, uint64_t seed) {
  if (auto* bag = dynamic_cast<const BagVictim*>(&model)) {
    bag->to_checkpoint(seed).save(path);
    return;
  }
  if (auto* conv = dynamic_cast<const ConvVictim*>(&model)) {
    conv->to_checkpoint(seed).save(path);
    return;
  }
  throw std::runtime_error("cannot checkpoint this model type");
}

inline std::unique_ptr<VictimModel> load_victim(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.tag == arch_name(VictimArch::BagLinear)) return BagVictim::from_checkpoint(ck);
  if (ck.tag == arch_name(VictimArch::ConvPoolLinear)) return ConvVictim::from_checkpoint(ck);
  throw std::runtime_error("unknown victim architecture tag: " + ck.tag);
}

}  // namespace advtext
