#pragma once

#include <cstdint>
#include <vector>

#include "advtext/corpus.hpp"

namespace advtext {

// Result of attacking one sample. x_tilde differs from x_orig only at
// `positions`; success is the hard flip indicator against the model that
// produced the outcome.
struct AttackOutcome {
  TokenSequence x_orig;
  TokenSequence x_tilde;
  std::vector<int> positions;     // processing order i1..ik
  std::vector<int> replacements;  // token placed at each position
  int success = 0;
  double surrogate = 0.0;  // final flip score 1 - P(orig class | x_tilde)
  uint64_t evals_used = 0;
  double wall_clock = 0.0;  // seconds

  int orig_class = 0;
  int final_class = 0;
};

}  // namespace advtext
