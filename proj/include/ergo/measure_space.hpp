#pragma once

// Finite atomic probability space (X, mu) and complex-valued functions on it.
// All Banach norms used elsewhere are the weighted L^p norms from this file:
//   ||f||_p   = (sum_i mu_i |f_i|^p)^(1/p),  1 <= p < inf
//   ||f||_inf = max_i |f_i|
// Functionals are represented as functions via the conjugate-linear pairing
//   <phi, f> = sum_i mu_i conj(phi_i) f_i,
// which reduces to the L^2(mu) inner product; the dual of L^p is L^{p'} with
// 1/p + 1/p' = 1 (p = 1 pairs with the sup norm).

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace ergo {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

class FiniteMeasureSpace {
 public:
  // Atom weights must be strictly positive and sum to 1 within 1e-12.
  explicit FiniteMeasureSpace(std::vector<double> weights);
  static FiniteMeasureSpace uniform(int d);

  int dim() const { return static_cast<int>(mu_.size()); }
  double weight(int i) const { return mu_[i]; }
  const Eigen::VectorXd& weights() const { return mu_; }
  bool same_as(const FiniteMeasureSpace& other) const;

 private:
  Eigen::VectorXd mu_;
};

using SpacePtr = std::shared_ptr<const FiniteMeasureSpace>;

SpacePtr make_space(std::vector<double> weights);
SpacePtr uniform_space(int d);

// A complex function on the atoms of a fixed space.
struct Func {
  SpacePtr space;
  Vec values;

  Func(SpacePtr s, Vec v);
  int dim() const { return static_cast<int>(values.size()); }
};

// Two funcs/operators interoperate only on the same space (checked).
bool compatible(const SpacePtr& a, const SpacePtr& b);
void require_compatible(const SpacePtr& a, const SpacePtr& b, const char* what);

// Weighted L^p norm, finite p >= 1 only (p = inf is norm_inf).
double norm_p(const Func& f, double p);
double norm_inf(const Func& f);

// Norm of f as a functional on L^p via the pairing: the L^{p'} norm,
// with p = 1 giving max_i |f_i|.
double dual_norm(const Func& phi, double p);

Complex pairing(const Func& phi, const Func& f);

}  // namespace ergo
