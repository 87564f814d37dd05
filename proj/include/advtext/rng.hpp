#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace advtext {

// splitmix64 finalizer
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream: output i of a stream is a pure function of
// (key, i), and keys are derived by hashing (parent key, stream id).
// Per-sample streams therefore agree between serial and parallel runs.
class SplitRng {
 public:
  explicit SplitRng(uint64_t seed, uint64_t stream = 0)
      : key_(mix64(seed ^ mix64(stream ^ 0x5851f42d4c957f2dULL))) {}

  // Derive an independent child stream. Does not advance this generator.
  SplitRng split(uint64_t stream) const { return SplitRng(key_, stream); }

  uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in the open interval (0, 1)
  double next_open() {
    for (;;) {
      double u = next_double();
      if (u > 0.0) return u;
    }
  }

  double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [0, n), rejection sampled to avoid modulo bias
  uint64_t next_below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below(0)");
    uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= lim);
    return x % n;
  }

  // k distinct indices from [0, n), reported in draw order
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(next_below(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  // in-place Fisher-Yates shuffle
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace advtext
