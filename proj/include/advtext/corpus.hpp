#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace advtext {

enum class TokenUnit { Word, Character };

// id 0 is the reference token w0: it doubles as padding, the unknown-token
// target, and the masking value.
constexpr int kReferenceId = 0;
inline constexpr const char* kReferenceToken = "<pad>";

// Fixed-length encoded input. Every id is < vocabulary size.
struct TokenSequence {
  std::vector<int> ids;

  TokenSequence() = default;
  explicit TokenSequence(std::vector<int> v) : ids(std::move(v)) {}

  int length() const { return static_cast<int>(ids.size()); }
  int operator[](int i) const { return ids[i]; }

  bool operator==(const TokenSequence&) const = default;
};

// The attacker's replacement pool W'. Never contains the reference id.
struct SubDictionary {
  std::vector<int> ids;
  int size() const { return static_cast<int>(ids.size()); }
};

struct Vocabulary {
  std::vector<std::string> tokens;    // index = token id; tokens[0] is w0
  std::vector<int64_t> frequencies;   // frequencies[0] == 0
  TokenUnit unit = TokenUnit::Word;

  int size() const { return static_cast<int>(tokens.size()); }

  const std::string& token_of(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
    return tokens[id];
  }

  // id of a surface token; unknown tokens map to the reference id
  int id_of(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? kReferenceId : it->second;
  }

  void rebuild_index() {
    index_.clear();
    index_.reserve(tokens.size());
    for (int i = 1; i < size(); ++i) index_.emplace(tokens[i], i);
  }

 private:
  std::unordered_map<std::string, int> index_;
};

// --- tokenization ---

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// One token per Unicode scalar value; malformed bytes fall back to
// single-byte tokens. Whitespace code points are skipped.
inline std::vector<std::string> split_characters(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    size_t len = 1;
    if (c >= 0xF0)
      len = 4;
    else if (c >= 0xE0)
      len = 3;
    else if (c >= 0xC0)
      len = 2;
    if (i + len > n) len = 1;
    for (size_t j = 1; j < len; ++j) {
      unsigned char cc = static_cast<unsigned char>(text[i + j]);
      if ((cc & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    if (len == 1 && (c == ' ' || c == '\t' || c == '\n' || c == '\r')) {
      ++i;
      continue;
    }
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

inline std::vector<std::string> tokenize(const std::string& text, TokenUnit unit) {
  return unit == TokenUnit::Word ? split_words(text) : split_characters(text);
}

// --- vocabulary construction ---

// id 0 is reserved for w0; remaining ids are assigned by descending
// frequency, ties broken by lexicographic order of the surface string.
// max_size counts the w0 entry. Raw tokens equal to the reserved w0
// surface are dropped (they would encode to id 0 anyway).
inline Vocabulary build_vocabulary(const std::vector<std::string>& texts, int max_size,
                                   TokenUnit unit) {
  if (texts.empty()) throw std::invalid_argument("empty corpus");
  if (max_size < 2) throw std::invalid_argument("max_size must be >= 2");

  std::unordered_map<std::string, int64_t> counts;
  for (const auto& text : texts)
    for (auto& tok : tokenize(text, unit)) {
      if (tok == kReferenceToken) continue;
      ++counts[tok];
    }

  std::vector<std::pair<std::string, int64_t>> order(counts.begin(), counts.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(order.size()) > max_size - 1) order.resize(max_size - 1);

  Vocabulary vocab;
  vocab.unit = unit;
  vocab.tokens.reserve(order.size() + 1);
  vocab.frequencies.reserve(order.size() + 1);
  vocab.tokens.push_back(kReferenceToken);
  vocab.frequencies.push_back(0);
  for (auto& [tok, freq] : order) {
    vocab.tokens.push_back(tok);
    vocab.frequencies.push_back(freq);
  }
  vocab.rebuild_index();
  return vocab;
}

// --- encoding ---

// Total function: unknown tokens map to id 0, short texts are right-padded
// with id 0, long texts are truncated to d.
inline TokenSequence encode(const std::string& text, const Vocabulary& vocab, int d) {
  if (d < 1) throw std::invalid_argument("sequence length must be >= 1");
  TokenSequence seq;
  seq.ids.assign(d, kReferenceId);
  auto toks = tokenize(text, vocab.unit);
  int n = std::min<int>(d, static_cast<int>(toks.size()));
  for (int i = 0; i < n; ++i) seq.ids[i] = vocab.id_of(toks[i]);
  return seq;
}

// Inverse of encode for display: reference ids are dropped, word tokens are
// joined by single spaces, character tokens are concatenated.
inline std::string decode(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (int id : seq.ids) {
    if (id == kReferenceId) continue;
    if (vocab.unit == TokenUnit::Word && !out.empty()) out += ' ';
    out += vocab.token_of(id);
  }
  return out;
}

// --- replacement pools ---

// The n non-reference ids with the highest frequency, ties by lower id.
// n larger than the vocabulary clamps with a warning.
inline SubDictionary top_frequency_subdict(const Vocabulary& vocab, int n) {
  if (n < 1) throw std::invalid_argument("subdictionary size must be >= 1");
  int avail = vocab.size() - 1;
  if (n > avail) {
    std::cerr << "warning: requested subdictionary of " << n << " but vocabulary has only "
              << avail << " candidate tokens; clamping\n";
    n = avail;
  }
  std::vector<int> ids(avail);
  for (int i = 0; i < avail; ++i) ids[i] = i + 1;
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (vocab.frequencies[a] != vocab.frequencies[b])
      return vocab.frequencies[a] > vocab.frequencies[b];
    return a < b;
  });
  ids.resize(n);
  return SubDictionary{std::move(ids)};
}

// Every non-reference id; for character vocabularies this is the alphabet.
inline SubDictionary alphabet_subdict(const Vocabulary& vocab) {
  if (vocab.unit != TokenUnit::Character)
    throw std::logic_error("alphabet subdictionary requires a character vocabulary");
  std::vector<int> ids(vocab.size() - 1);
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) ids[i] = i + 1;
  return SubDictionary{std::move(ids)};
}

// --- file formats ---

// Vocabulary: one "id<TAB>token<TAB>frequency" row per line, row 0 is w0.
inline void write_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (int i = 0; i < vocab.size(); ++i)
    out << i << '\t' << vocab.tokens[i] << '\t' << vocab.frequencies[i] << '\n';
}

inline Vocabulary read_vocabulary(const std::string& path, TokenUnit unit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  Vocabulary vocab;
  vocab.unit = unit;
  std::string line;
  int expect = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = line.rfind('\t');
    if (t1 == std::string::npos || t2 == t1)
      throw std::runtime_error("malformed vocabulary row: " + line);
    int id = std::stoi(line.substr(0, t1));
    if (id != expect) throw std::runtime_error("vocabulary ids must be dense from 0");
    vocab.tokens.push_back(line.substr(t1 + 1, t2 - t1 - 1));
    vocab.frequencies.push_back(std::stoll(line.substr(t2 + 1)));
    ++expect;
  }
  if (vocab.tokens.empty()) throw std::runtime_error("empty vocabulary file: " + path);
  vocab.rebuild_index();
  return vocab;
}

// Corpus files: one document per line. Label files: one integer per line,
// aligned with the corpus by line number.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_lines(const std::vector<std::string>& lines, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& l : lines) out << l << '\n';
}

inline std::vector<int> read_labels(const std::string& path) {
  std::vector<int> labels;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    labels.push_back(std::stoi(line));
  }
  return labels;
}

inline void write_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (int l : labels) out << l << '\n';
}

}  // namespace advtext
