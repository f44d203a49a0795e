#pragma once

// Jacobs-deLeeuw-Glicksberg splitting of a Dunford-Schwartz operator on a
// finite space: E = E_r + E_s, where E_r is spanned by eigenvectors with
// unimodular eigenvalues and E_s is the complementary invariant subspace, on
// which correlations <phi, T^n f> have vanishing Cesaro absolute means.
//
// The projector onto E_r along E_s is assembled from paired right and left
// unimodular eigenbases, P = V (W^H V)^{-1} W^H, which stays well conditioned
// even when the stable spectrum is defective (e.g. nilpotent operators).
// Cesaro averaging is deliberately not used here; it serves as an
// independent cross-check in the tests.

#include <cstdint>
#include <utility>
#include <vector>

#include "ergo/operators.hpp"

namespace ergo {

struct SpectralSplit {
  SpacePtr space;
  std::vector<Func> reversible_basis;          // orthonormal in L^2(mu) per eigenvalue cluster
  std::vector<Complex> reversible_eigenvalues; // parallel to reversible_basis
  std::vector<Func> stable_basis;
  Operator projector_r;
  double unimodular_tol;

  int dim_reversible() const { return static_cast<int>(reversible_basis.size()); }
  int dim_stable() const { return static_cast<int>(stable_basis.size()); }
};

// Requires is_dunford_schwartz(T, 1e-9). Eigenvalues with |lambda| >= 1 - tol
// count as unimodular; eigenvalues within 1e-8 of each other form one cluster.
// Throws when a unimodular eigenvalue is defective (numerical pathology or a
// barely-DS input).
SpectralSplit spectral_split(const Operator& T, double unimodular_tol = 1e-8);

// f = f_r + f_s with f_r = P f.
std::pair<Func, Func> split_function(const SpectralSplit& s, const Func& f);

struct DecayProfile {
  std::vector<long long> checkpoints;
  std::vector<double> values;  // D_N = (1/N) sum_{n<=N} |<phi, T^n f_s>|
};

struct SplitVerification {
  double idempotency_error = 0.0;    // ||P^2 - P||_{inf->inf}
  double commutation_error = 0.0;    // ||PT - TP||_{inf->inf}
  double max_eigen_residual = 0.0;   // max_i ||T g_i - lambda_i g_i||_2
  double max_reassembly_error = 0.0; // max over trials ||f - f_r - f_s||_inf
  std::vector<DecayProfile> profiles;
  bool stable_decay_ok = true;       // last checkpoint <= 5% of D_1, eventually decreasing
  bool ok = false;
};

SplitVerification verify_split(const Operator& T, const SpectralSplit& s, int trials,
                               long long max_n, std::uint64_t seed = 0x5eedULL);

}  // namespace ergo
