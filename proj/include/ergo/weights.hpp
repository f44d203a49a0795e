#pragma once

// Weight sequences (a_n) and the averages they drive. Four generator kinds:
//   trig_poly: a_n = sum_j b_j rho_j^n with unimodular frequencies rho_j
//   linear:    a_n = <phi, T^n y>, tagged by the JdLG part containing y
//   product:   componentwise product of factors
//   explicit:  stored prefix
// Products of trigonometric polynomials fold back into a trig_poly (cross
// products of coefficients and frequencies), so closure under multiplication
// holds at the generator level, not just numerically.
//
// Generators are pure values; evaluating a prefix never mutates them, so any
// number of threads may share one sequence.

#include <optional>
#include <vector>

#include "ergo/jdlg.hpp"
#include "ergo/operators.hpp"
#include "ergo/polynomial.hpp"

namespace ergo {

enum class LinearTag { Stable, Reversible };

class WeightSequence {
 public:
  enum class Kind { TrigPoly, Linear, Product, Explicit };

  static WeightSequence trig_poly(std::vector<Complex> coeffs, std::vector<Complex> freqs);
  // Certifies at construction that y lies in the tagged JdLG part of T
  // within 1e-9.
  static WeightSequence linear(Operator T, Func y, Func phi, LinearTag tag);
  static WeightSequence product(std::vector<WeightSequence> factors);
  static WeightSequence explicit_values(std::vector<Complex> values);

  Kind kind() const { return kind_; }
  std::vector<Complex> eval(long long N) const;  // (a_1, ..., a_N)

 private:
  WeightSequence() = default;

  Kind kind_ = Kind::Explicit;
  std::vector<Complex> b_, rho_;         // TrigPoly
  std::optional<Operator> op_;           // Linear
  std::optional<Func> y_, phi_;          // Linear
  LinearTag tag_ = LinearTag::Stable;    // Linear
  std::vector<WeightSequence> factors_;  // Product
  std::vector<Complex> values_;          // Explicit
};

std::vector<Complex> eval_weights(const WeightSequence& w, long long N);

// (1/N) sum_{n<=N} |a_n|; the class N of the splitting arguments is exactly
// the sequences driving this to 0.
double cesaro_abs_mean(const WeightSequence& w, long long N);

// Finite-N Besicovitch seminorm estimate ((1/N) sum_{s<=N} |a_{q(s)}|^p)^{1/p},
// q = identity when subseq is absent.
double besicovitch_seminorm(const WeightSequence& w, double p,
                            const std::optional<IntPolynomial>& subseq, long long N);

// (1/N) sum_{n<=N} a_n T^{q(n)} f with q = identity when subseq is absent.
Func weighted_average(const Operator& T, const Func& f, const WeightSequence& w,
                      const std::optional<IntPolynomial>& subseq, long long N);

// Sampled correlations <phi, A T^{q(n)} g> as an explicit sequence. The
// caller is responsible for g lying in the stable part of T when the class-N
// conclusion is wanted.
WeightSequence correlation_sequence(const Operator& A, const Operator& T, const Func& g,
                                    const Func& phi, const std::optional<IntPolynomial>& subseq,
                                    long long N);

}  // namespace ergo
