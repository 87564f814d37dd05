#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/matrix.hpp"

namespace advtext {

struct ClassDistribution {
  std::vector<double> probs;

  int size() const { return static_cast<int>(probs.size()); }
  int argmax() const { return argmax_lowest(probs); }  // lowest class index wins ties
};

// Token embeddings. Row 0 (w0) is pinned to zero and never trained, so the
// reference token carries no classification signal.
struct EmbeddingTable {
  Matrix vectors;  // vocab_size x e

  int vocab_size() const { return vectors.rows; }
  int dim() const { return vectors.cols; }
};

// Classifier contract. predict() is pure given the parameters; the eval
// counter advances by exactly one per forward pass, hard or relaxed.
class VictimModel {
 public:
  virtual ~VictimModel() = default;

  virtual int num_classes() const = 0;
  virtual int seq_len() const = 0;
  virtual bool white_box() const = 0;

  ClassDistribution predict(const TokenSequence& x) const {
    if (x.length() != seq_len()) throw std::invalid_argument("sequence length mismatch");
    ++eval_count_;
    return forward(x);
  }

  uint64_t evals() const { return eval_count_.load(); }

  // --- white-box surface; black-box models throw ---

  virtual const EmbeddingTable& embedding() const = 0;

  // d x e matrix of token embeddings for x
  Matrix embed(const TokenSequence& x) const {
    const EmbeddingTable& table = embedding();
    Matrix out(x.length(), table.dim());
    for (int i = 0; i < x.length(); ++i) {
      const double* src = table.vectors.row(x.ids[i]);
      double* dst = out.row(i);
      for (int j = 0; j < table.dim(); ++j) dst[j] = src[j];
    }
    return out;
  }

  // Forward pass from an arbitrary embedded input. When grad_c is non-null
  // it receives dP(c|input)/dinput. Counts as one evaluation. Agrees
  // bit-exactly with predict() on embed(x).
  ClassDistribution relaxed_forward(const Matrix& embedded, int c, Matrix* grad_c = nullptr) const {
    if (embedded.rows != seq_len() || embedded.cols != embedding().dim())
      throw std::invalid_argument("embedded input shape mismatch");
    if (c < 0 || c >= num_classes()) throw std::invalid_argument("class out of range");
    ++eval_count_;
    return relaxed_impl(embedded, c, grad_c);
  }

  // dP(c|x)/d(embedded input), computed analytically
  Matrix embedding_gradient(const TokenSequence& x, int c) const {
    Matrix grad;
    relaxed_forward(embed(x), c, &grad);
    return grad;
  }

 protected:
  virtual ClassDistribution forward(const TokenSequence& x) const = 0;
  virtual ClassDistribution relaxed_impl(const Matrix& embedded, int c, Matrix* grad_c) const = 0;

  mutable std::atomic<uint64_t> eval_count_{0};
};

// View of a model with the gradient/embedding surface walled off. Evaluation
// counts pass through to the wrapped model.
class BlackBoxModel final : public VictimModel {
 public:
  explicit BlackBoxModel(const VictimModel& inner) : inner_(inner) {}

  int num_classes() const override { return inner_.num_classes(); }
  int seq_len() const override { return inner_.seq_len(); }
  bool white_box() const override { return false; }

  uint64_t inner_evals() const { return inner_.evals(); }

  const EmbeddingTable& embedding() const override {
    throw std::runtime_error("gradient unavailable: black-box model");
  }

 protected:
  ClassDistribution forward(const TokenSequence& x) const override { return inner_.predict(x); }
  ClassDistribution relaxed_impl(const Matrix&, int, Matrix*) const override {
    throw std::runtime_error("gradient unavailable: black-box model");
  }

 private:
  const VictimModel& inner_;
};

// --- perturbation primitives ---

// First-stage map: listed positions take the reference value w0.
inline TokenSequence mask(const TokenSequence& x, const std::vector<int>& positions) {
  TokenSequence out = x;
  for (int p : positions) {
    if (p < 0 || p >= x.length()) throw std::out_of_range("mask position out of range");
    out.ids[p] = kReferenceId;
  }
  return out;
}

inline TokenSequence mask_one(const TokenSequence& x, int position) {
  return mask(x, std::vector<int>{position});
}

// Second-stage map: position i takes token w, everything else unchanged.
inline TokenSequence substitute(const TokenSequence& x, int i, int w) {
  if (i < 0 || i >= x.length()) throw std::out_of_range("substitute position out of range");
  if (w < 0) throw std::out_of_range("invalid token id");
  TokenSequence out = x;
  out.ids[i] = w;
  return out;
}

// --- success accounting ---

inline int predicted_class(const VictimModel& model, const TokenSequence& x) {
  return model.predict(x).argmax();
}

// 1 iff the predicted class changed. Two evaluations when called directly;
// attacks use cached distributions instead.
inline int flip_indicator(const VictimModel& model, const TokenSequence& x_orig,
                          const TokenSequence& x_tilde) {
  return predicted_class(model, x_tilde) != predicted_class(model, x_orig) ? 1 : 0;
}

// Soft flip score against a known original class: the probability mass the
// model puts off that class.
inline double flip_score(const ClassDistribution& dist, int orig_class) {
  return 1.0 - dist.probs[orig_class];
}

inline double flip_surrogate(const VictimModel& model, const TokenSequence& x_orig,
                             const TokenSequence& x_tilde) {
  int c = predicted_class(model, x_orig);
  return flip_score(model.predict(x_tilde), c);
}

// One evaluation, shared by every attack on the same sample; the attacks
// score candidates against the class recorded here, which keeps their own
// evaluation counts at the advertised values.
struct PreparedSample {
  TokenSequence x;
  ClassDistribution dist;
  int predicted = 0;
};

inline PreparedSample prepare_sample(const VictimModel& model, const TokenSequence& x) {
  PreparedSample prep;
  prep.x = x;
  prep.dist = model.predict(x);
  prep.predicted = prep.dist.argmax();
  return prep;
}

}  // namespace advtext
