#pragma once

// Core of the variable-elimination evaluators. A staged sum is
//
//   (1/N^k) sum_{1<=n_1..n_k<=N}  stage_m ... stage_2 stage_1 (init),
//
// processed left to right while maintaining a table of values keyed by the
// live index variables. A variable is summed out, and the 1/N factor
// absorbed, at its last occurrence. Index variables that never occur simply
// cancel against the normalization, so nothing tracks them here.
//
// Three stage kinds cover both the entangled averages and the proof-bound
// sums of the splitting machinery:
//   Operator: value -> post(pow^{exps[n-1]} value)   (post may be absent)
//   Scalar:   value -> coeffs[n-1] * value
//   Seed:     value -> value * (*seeds)[n-1]         (value must be scalar,
//             i.e. a 1-dim table entry; this is where a scalar prefix turns
//             into vectors)
//
// Powers are only ever taken of vectors. Within a stage the needed exponents
// are visited in sorted order so one running power serves them all; a stage
// that sums its variable out accumulates in descending exponent order
// (Horner), which costs max(exps) applications instead of sum(exps).
//
// Determinism: every output slot is produced by one worker with a fixed
// serial reduction order, so parallel and serial runs agree bitwise.

#include <cstddef>
#include <vector>

#include "ergo/operators.hpp"

namespace ergo::detail {

struct Stage {
  enum class Kind { Operator, Scalar, Seed };
  Kind kind = Kind::Operator;
  int var = 0;  // 1-based index variable driving this stage
  const Operator* pow = nullptr;
  const Operator* post = nullptr;
  std::vector<long long> exps;              // size N, exponent per n
  std::vector<Complex> coeffs;              // size N, multiplier per n
  const std::vector<Vec>* seeds = nullptr;  // size N, vector per n
};

struct StagedStats {
  std::size_t peak_slots = 0;     // largest table held
  std::size_t applications = 0;   // operator-to-vector products
};

Vec staged_sum(const std::vector<Stage>& stages, const Vec& init, long long N,
               bool parallel, StagedStats* stats = nullptr);

}  // namespace ergo::detail
