#pragma once

// Dense linear operators on a finite measure space, with the two norms that
// define the Dunford-Schwartz class:
//   L^inf -> L^inf:  max_i sum_j |M_ij|
//   L^1   -> L^1:    max_j (1/mu_j) sum_i mu_i |M_ij|
// An operator is Dunford-Schwartz when both are <= 1; interpolation then
// bounds it on every L^p. Both norms are computed once at construction.

#include <cstdint>
#include <vector>

#include "ergo/measure_space.hpp"

namespace ergo {

struct DsReport {
  double l1_norm = 0.0;
  double linf_norm = 0.0;
  bool ok = false;
};

class Operator {
 public:
  Operator(SpacePtr space, Mat entries);

  const Mat& entries() const { return m_; }
  const SpacePtr& space() const { return space_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  double norm_l1() const { return l1_; }
  double norm_linf() const { return linf_; }

 private:
  SpacePtr space_;
  Mat m_;
  double l1_, linf_;
};

enum class OperatorNormKind { L1, Linf };

Func apply(const Operator& T, const Func& f);
double operator_norm(const Operator& T, OperatorNormKind which);
DsReport is_dunford_schwartz(const Operator& T, double tol);

// Entrywise absolute value |T|; dominates T on moduli: |T^n f| <= |T|^n |f|.
Operator modulus(const Operator& T);

// Koopman operator (Tf)_i = f_{sigma(i)} of an atom map sigma (0-based).
// sigma must preserve the measure: the preimage of each atom has its weight.
Operator koopman_from_map(const SpacePtr& space, const std::vector<int>& sigma);

// Left-endpoint discretization of integration over [0,1) on d uniform atoms:
// (Vf)_i = (1/d) sum_{j<i} f_j. Strictly lower triangular, nilpotent.
Operator volterra_discrete(int d);

enum class RandomDsKind { DoublyStochastic, SignedContraction };

// Seeded random Dunford-Schwartz operators on the uniform d-atom space.
// DoublyStochastic: positive entries, rows and columns summing to 1.
// SignedContraction: unimodular diagonal twists of a doubly stochastic core,
// giving genuinely complex entries with both norms still 1.
Operator random_ds(int d, std::uint64_t seed, RandomDsKind kind);

Operator identity_op(const SpacePtr& space);
Operator scale(const Operator& T, Complex factor);
Operator compose(const Operator& S, const Operator& T);  // (S*T) f = S(Tf)

}  // namespace ergo
