#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/rng.hpp"

namespace advtext {

// Desk-scale classification task whose labels are carried by known keyword
// tokens, so feature importance has an exact oracle.
struct SyntheticTaskSpec {
  int num_classes = 2;
  int d = 30;
  int vocab_size = 200;
  std::vector<std::vector<int>> planted_tokens_per_class;
  double planting_rate = 1.0;  // probability a sample receives its keyword at all
  double heavy_rate = 0.0;     // fraction of planted samples getting heavy_copies occurrences
  int heavy_copies = 3;
  uint64_t noise_seed = 0;
};

struct LabeledDataset {
  std::vector<TokenSequence> xs;
  std::vector<int> labels;

  size_t size() const { return xs.size(); }
};

inline void validate_task_spec(const SyntheticTaskSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (spec.d < 1) throw std::invalid_argument("sequence length must be >= 1");
  if (static_cast<int>(spec.planted_tokens_per_class.size()) != spec.num_classes)
    throw std::invalid_argument("one planted token set per class required");
  if (!(spec.planting_rate > 0.0 && spec.planting_rate <= 1.0))
    throw std::invalid_argument("planting_rate must be in (0,1]");
  if (spec.heavy_rate < 0.0 || spec.heavy_rate >= 1.0)
    throw std::invalid_argument("heavy_rate must be in [0,1)");
  if (spec.heavy_copies < 1 || spec.heavy_copies > spec.d)
    throw std::invalid_argument("heavy_copies must be in [1,d]");
  std::unordered_set<int> seen;
  for (const auto& set : spec.planted_tokens_per_class) {
    if (set.empty()) throw std::invalid_argument("empty planted token set");
    for (int id : set) {
      if (id <= 0 || id >= spec.vocab_size)
        throw std::invalid_argument("planted token id out of range");
      if (!seen.insert(id).second)
        throw std::invalid_argument("planted token sets must be disjoint");
    }
  }
  if (static_cast<int>(seen.size()) + 2 > spec.vocab_size)
    throw std::invalid_argument("vocabulary too small for filler tokens");
}

// Pure function of (spec, n_samples, seed). Sample i draws from its own
// counter-based stream. Labels cycle through classes; filler positions are
// uniform over non-planted ids; with probability planting_rate one keyword
// from the label's set is planted at 1 (or heavy_copies) distinct positions.
inline LabeledDataset generate_planted_dataset(const SyntheticTaskSpec& spec, int n_samples) {
  validate_task_spec(spec);

  std::unordered_set<int> planted_all;
  for (const auto& set : spec.planted_tokens_per_class)
    planted_all.insert(set.begin(), set.end());
  std::vector<int> fillers;
  for (int id = 1; id < spec.vocab_size; ++id)
    if (!planted_all.count(id)) fillers.push_back(id);

  LabeledDataset data;
  data.xs.reserve(n_samples);
  data.labels.reserve(n_samples);
  SplitRng root(spec.noise_seed);
  for (int i = 0; i < n_samples; ++i) {
    SplitRng rng = root.split(i);
    int label = i % spec.num_classes;
    TokenSequence x;
    x.ids.resize(spec.d);
    for (int p = 0; p < spec.d; ++p)
      x.ids[p] = fillers[rng.next_below(fillers.size())];
    if (rng.next_double() < spec.planting_rate) {
      const auto& set = spec.planted_tokens_per_class[label];
      int keyword = set[rng.next_below(set.size())];
      int copies = rng.next_double() < spec.heavy_rate ? spec.heavy_copies : 1;
      for (int p : rng.sample_without_replacement(spec.d, copies)) x.ids[p] = keyword;
    }
    data.xs.push_back(std::move(x));
    data.labels.push_back(label);
  }
  return data;
}

// Classifies by planted-keyword lookup; -1 when no (or conflicting) keywords
// are present. The independent ground truth for planted tasks.
inline int keyword_label(const TokenSequence& x,
                         const std::vector<std::vector<int>>& planted_per_class) {
  int found = -1;
  for (int c = 0; c < static_cast<int>(planted_per_class.size()); ++c) {
    for (int id : planted_per_class[c]) {
      for (int v : x.ids) {
        if (v == id) {
          if (found != -1 && found != c) return -1;
          found = c;
          break;
        }
      }
    }
  }
  return found;
}

// A generated task re-labelled into frequency-ordered vocabulary ids, plus
// the matching surface vocabulary. Round-trips bit-exactly through the
// text + vocab.tsv file formats.
struct PlantedCorpus {
  Vocabulary vocab;
  LabeledDataset train;
  LabeledDataset test;
  std::vector<std::vector<int>> planted_ids;  // remapped per class
};

inline std::string synthetic_surface(int raw_id, int vocab_size) {
  int width = 1;
  for (int v = vocab_size - 1; v >= 10; v /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "tok%0*d", width, raw_id);
  return buf;
}

// Generates train+test in one pass, counts token frequencies over the train
// split, and reassigns ids by (frequency desc, surface asc) so the standard
// vocabulary invariant holds. Tokens absent from the train split map to w0.
inline PlantedCorpus make_planted_corpus(const SyntheticTaskSpec& spec, int n_train,
                                         int n_test) {
  LabeledDataset full = generate_planted_dataset(spec, n_train + n_test);

  std::vector<int64_t> counts(spec.vocab_size, 0);
  for (int i = 0; i < n_train; ++i)
    for (int id : full.xs[i].ids) ++counts[id];

  std::vector<int> order;
  for (int id = 1; id < spec.vocab_size; ++id)
    if (counts[id] > 0) order.push_back(id);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;  // zero-padded surfaces sort like raw ids
  });

  PlantedCorpus corpus;
  corpus.vocab.unit = TokenUnit::Word;
  corpus.vocab.tokens.push_back(kReferenceToken);
  corpus.vocab.frequencies.push_back(0);
  std::vector<int> remap(spec.vocab_size, kReferenceId);
  for (int new_id = 1; new_id <= static_cast<int>(order.size()); ++new_id) {
    int raw = order[new_id - 1];
    remap[raw] = new_id;
    corpus.vocab.tokens.push_back(synthetic_surface(raw, spec.vocab_size));
    corpus.vocab.frequencies.push_back(counts[raw]);
  }
  corpus.vocab.rebuild_index();

  auto remap_seq = [&](TokenSequence& x) {
    for (int& id : x.ids) id = remap[id];
  };
  for (int i = 0; i < n_train + n_test; ++i) {
    remap_seq(full.xs[i]);
    auto& dst = i < n_train ? corpus.train : corpus.test;
    dst.xs.push_back(std::move(full.xs[i]));
    dst.labels.push_back(full.labels[i]);
  }

  corpus.planted_ids.resize(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c)
    for (int raw : spec.planted_tokens_per_class[c])
      if (remap[raw] != kReferenceId) corpus.planted_ids[c].push_back(remap[raw]);
  return corpus;
}

}  // namespace advtext
