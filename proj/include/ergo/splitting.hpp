#pragma once

// Orbit compactness certificates and the recursive splitting tree built from
// them, together with numerical checks of the error budgets the construction
// promises.
//
// A certificate for a pair (A, T) and seed f exhibits a subspace U of small
// dimension ell such that every sampled orbit element A T^n f stays within
// eps of U in the L^inf norm after projecting along U. U is taken from the
// top left singular directions of the mu-weighted orbit matrix, which
// optimizes an L^2 proxy; the L^inf residual is then checked directly, and
// ell grows until the requested bound holds. The dual functionals are the
// weighted-orthonormal basis vectors themselves, so they are biorthogonal
// and vanish on the orthogonal complement.
//
// build_splitting_tree drives the recursion: the root budget is
// c = eps * C^{-m} (C the certified joint bound), each node is certified
// against its own budget c_v, and every child inherits
// c_w = c_v / (u_v * ell_v), which makes the per-level budgets telescope
// back to c. The Reversible variant additionally splits every node's seed
// into its reversible and stable parts with respect to the next stage
// operator; certificates then decompose the reversible part only.
//
// verify_splitting_bounds evaluates, at a finite horizon N, the side of the
// construction's error estimate that the tree's data determines: for Stable
// trees the Cesaro sum of budget terms C^m c_w weighted by the coefficient
// sequences (which tends to eps from above), for Reversible trees the L^inf
// norm of the aggregated remainder-term sum (bounded by eps*(m-2) uniformly
// in N). Both sides are reported; nothing is asserted here.

#include <optional>
#include <utility>
#include <vector>

#include "ergo/engine.hpp"
#include "ergo/jdlg.hpp"

namespace ergo {

struct OrbitCertificate {
  int stage = 0;        // which (A_j, T_j) pair the orbit uses; 0 when standalone
  Func seed;            // f
  std::vector<Func> basis;  // ell weighted-orthonormal functions spanning U
  std::vector<Func> duals;  // biorthogonal functionals, zero on the complement
  Mat complement;           // d x (d - ell) columns spanning the complement of U
  double epsilon_achieved = 0.0;  // max sampled L^inf residual
  double u_const = 0.0;           // ||f||_p * ||A*||_{p'} * max_i ||phi_i||_{p'}
  long long n_orbit = 0;
  double p_norm = 2.0;

  int ell() const { return static_cast<int>(basis.size()); }
};

// n_orbit <= 0 selects the default 4*d. The certificate search accepts the
// smallest ell whose residual is <= eps; at ell = d the complement is trivial
// and the residual vanishes, so the search always terminates.
OrbitCertificate certify_orbit_compactness(const Operator& A, const Operator& T,
                                           const Func& f, double eps,
                                           long long n_orbit = 0, double p = 2.0);

// Coefficients lambda_i = phi_i(A T^n f) and remainder r = A T^n f - sum
// lambda_i basis_i, for any n >= 1 (not restricted to the sampled range).
std::pair<std::vector<Complex>, Func> decompose_orbit_element(const OrbitCertificate& cert,
                                                              const Operator& A,
                                                              const Operator& T,
                                                              const Func& f, long long n);

enum class SplitVariant {
  Stable,      // seed lies in the stable part of T_1
  Reversible,  // seed lies in the reversible part of T_1
};

struct SplitNode {
  std::vector<int> index;  // child positions from the root (1-based); empty at the root
  int parent = -1;         // node id, -1 at the root
  int depth = 0;
  Func seed;  // f_v (Stable) or g_v (Reversible)
  std::optional<Func> reversible_part;  // Reversible only: seed = reversible + stable
  std::optional<Func> stable_part;
  double c = 0.0;  // error budget for this node's certificate
  double u = 0.0;  // coefficient bound u_v from the certificate
  std::optional<OrbitCertificate> cert;  // absent on the last level
  std::vector<int> children;             // node ids; empty when the orbit is zero

  int ell() const { return cert ? cert->ell() : 0; }
};

struct SplitOptions {
  double p = 2.0;          // which L^p scale the constants u_v are measured in
  long long n_orbit = 0;   // certificate sample length, 0 = default 4*d
  bool parallel = true;    // used by verify_splitting_bounds table sweeps
};

struct SplittingTree {
  SplitVariant variant = SplitVariant::Stable;
  double epsilon = 0.0;
  double C = 1.0;   // certified joint bound constant
  double c = 0.0;   // root budget eps * C^{-m}
  double p_norm = 2.0;
  int m = 0, k = 0;
  std::vector<SplitNode> nodes;            // breadth-first, nodes[0] is the root
  std::vector<std::vector<int>> levels;    // node ids per depth 0..m-1
};

// Requires p.joint_bound. The seed must lie in the declared spectral part of
// T_1 within 1e-9, else the call is rejected. Nodes whose decomposition
// orbit is identically zero (u_v below 1e-14) keep their certificate but
// spawn no children; their subtree would consist of zero contributions only.
SplittingTree build_splitting_tree(const EntangledProblem& p, const Func& f, double eps,
                                   SplitVariant variant, const SplitOptions& opts = {});

struct SplitBoundReport {
  SplitVariant variant = SplitVariant::Stable;
  long long N = 0;
  double measured = 0.0;  // evaluated side at horizon N
  double budget = 0.0;    // eps (Stable) or eps*(m-2) (Reversible)
};

SplitBoundReport verify_splitting_bounds(const SplittingTree& tree,
                                         const EntangledProblem& p, const Func& f,
                                         long long N, const SplitOptions& opts = {});

}  // namespace ergo
