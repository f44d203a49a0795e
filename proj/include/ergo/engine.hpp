#pragma once

// Entangled Cesaro averages
//
//   (1/N^k) sum_{1<=n_1..n_k<=N} T_m^{n_alpha(m)} A_{m-1} ... A_1 T_1^{n_alpha(1)} f
//
// for Dunford-Schwartz operators T_j, bounded operators A_j, and an
// entanglement map alpha: {1..m} -> {1..k} that need not be surjective.
//
// Two evaluation routes are kept deliberately separate:
//  * naive_average enumerates every index tuple and applies the operator
//    chain literally; it is the reference oracle.
//  * entangled_average eliminates index variables one stage at a time. A
//    variable is summed out (and divided by N) right after its last
//    occurrence, so the working table is keyed by at most `width` live
//    variables. Powers are produced by repeated operator-to-vector
//    application, never as matrix powers. Work on distinct table slots is
//    data parallel; each slot is reduced serially in a fixed order, so
//    parallel and serial runs produce identical bits.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ergo/operators.hpp"
#include "ergo/polynomial.hpp"

namespace ergo {

// Raised when a run would exceed an explicit work or memory budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EntanglementMap {
  int m = 0;  // number of operator stages
  int k = 0;  // number of index variables
  std::vector<int> alpha;  // size m, values in 1..k

  EntanglementMap(int m_, int k_, std::vector<int> alpha_);
};

struct JointBoundCertificate {
  double C = 1.0;       // sup over sampled n of ||A_j T_j^n||_{inf->inf}, floored at 1
  long long horizon = 0;
};

struct EntangledProblem {
  SpacePtr space;
  std::vector<Operator> T;  // m Dunford-Schwartz operators
  std::vector<Operator> A;  // m-1 bounded operators
  EntanglementMap ent;
  std::optional<JointBoundCertificate> joint_bound;

  EntangledProblem(SpacePtr space_, std::vector<Operator> T_, std::vector<Operator> A_,
                   EntanglementMap ent_);
  int dim() const { return space->dim(); }
};

JointBoundCertificate certify_joint_bound(const EntangledProblem& p, long long horizon);

struct EliminationSchedule {
  int m = 0, k = 0;
  std::vector<int> first_stage;  // per variable (1-based stages; 0 = unused)
  std::vector<int> last_stage;
  std::vector<std::vector<int>> live_at_stage;  // per stage, ascending variable ids
  int width = 0;                                // max live-set size
};

EliminationSchedule elimination_schedule(const EntanglementMap& ent);

struct EvalOptions {
  bool parallel = true;
  double naive_budget = 1e7;                  // cap on N^k * m stage applications
  std::size_t max_table_bytes = 1ull << 30;   // cap on N^width * d complex entries
};

struct EvalStats {
  std::size_t peak_slots = 0;     // largest table held
  std::size_t applications = 0;   // operator-to-vector products
};

Func naive_average(const EntangledProblem& p, const Func& f, long long N,
                   const EvalOptions& opts = {});
Func naive_polynomial_average(const EntangledProblem& p, const Func& f,
                              const std::vector<IntPolynomial>& polys, long long N,
                              const EvalOptions& opts = {});

Func entangled_average(const EntangledProblem& p, const Func& f, long long N,
                       const EvalOptions& opts = {}, EvalStats* stats = nullptr);
Func polynomial_entangled_average(const EntangledProblem& p, const Func& f,
                                  const std::vector<IntPolynomial>& polys, long long N,
                                  const EvalOptions& opts = {}, EvalStats* stats = nullptr);

// (1/N^k) sum over tuples of |chain applied to f| per atom. The absolute
// value destroys the linearity that elimination relies on, so this only has
// the naive route.
Func absolute_entangled_average(const EntangledProblem& p, const Func& f, long long N,
                                const EvalOptions& opts = {});

enum class TrajectoryVariant { Plain, Absolute, Polynomial };

struct TrajectoryPoint {
  long long N = 0;
  Func value;
  double linf = 0.0;
  double cauchy_gap = 0.0;  // ||value(N_i) - value(N_{i-1})||_inf, 0 at the first checkpoint
};

// Checkpoints must be strictly increasing. Each checkpoint is recomputed
// from scratch; no partial sums are reused across checkpoints.
std::vector<TrajectoryPoint> average_trajectory(const EntangledProblem& p, const Func& f,
                                                const std::vector<long long>& checkpoints,
                                                TrajectoryVariant variant,
                                                const std::vector<IntPolynomial>& polys = {},
                                                const EvalOptions& opts = {});

}  // namespace ergo
