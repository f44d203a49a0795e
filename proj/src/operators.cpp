#include "ergo/operators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "ergo/rng.hpp"

namespace ergo {

namespace {

double linf_operator_norm(const Mat& m) {
  double best = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (int j = 0; j < m.cols(); ++j) row += std::abs(m(i, j));
    best = std::max(best, row);
  }
  return best;
}

double l1_operator_norm(const Mat& m, const Eigen::VectorXd& mu) {
  double best = 0.0;
  for (int j = 0; j < m.cols(); ++j) {
    double col = 0.0;
    for (int i = 0; i < m.rows(); ++i) col += mu[i] * std::abs(m(i, j));
    best = std::max(best, col / mu[j]);
  }
  return best;
}

}  // namespace

Operator::Operator(SpacePtr space, Mat entries) : space_(std::move(space)), m_(std::move(entries)) {
  if (!space_) throw std::invalid_argument("operator needs a space");
  if (m_.rows() != m_.cols() || m_.rows() != space_->dim())
    throw std::invalid_argument("operator entries must be d x d for the space dimension");
  linf_ = linf_operator_norm(m_);
  l1_ = l1_operator_norm(m_, space_->weights());
}

Func apply(const Operator& T, const Func& f) {
  require_compatible(T.space(), f.space, "apply");
  return Func(f.space, T.entries() * f.values);
}

double operator_norm(const Operator& T, OperatorNormKind which) {
  return which == OperatorNormKind::L1 ? T.norm_l1() : T.norm_linf();
}

DsReport is_dunford_schwartz(const Operator& T, double tol) {
  DsReport r;
  r.l1_norm = T.norm_l1();
  r.linf_norm = T.norm_linf();
  r.ok = r.l1_norm <= 1.0 + tol && r.linf_norm <= 1.0 + tol;
  return r;
}

Operator modulus(const Operator& T) {
  Mat m = T.entries().cwiseAbs().cast<Complex>();
  return Operator(T.space(), std::move(m));
}

Operator koopman_from_map(const SpacePtr& space, const std::vector<int>& sigma) {
  const int d = space->dim();
  if (static_cast<int>(sigma.size()) != d)
    throw std::invalid_argument("atom map must assign an image to each of the " +
                                std::to_string(d) + " atoms");
  for (int i = 0; i < d; ++i)
    if (sigma[i] < 0 || sigma[i] >= d)
      throw std::invalid_argument("atom map image out of range at atom " + std::to_string(i));
  Eigen::VectorXd preimage = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) preimage[sigma[i]] += space->weight(i);
  for (int i = 0; i < d; ++i)
    if (std::abs(preimage[i] - space->weight(i)) > 1e-12)
      throw std::invalid_argument("atom map does not preserve the measure at atom " +
                                  std::to_string(i) + " (preimage mass " +
                                  std::to_string(preimage[i]) + ", atom mass " +
                                  std::to_string(space->weight(i)) + ")");
  Mat m = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) m(i, sigma[i]) = Complex(1.0, 0.0);
  return Operator(space, std::move(m));
}

Operator volterra_discrete(int d) {
  if (d <= 0) throw std::invalid_argument("volterra_discrete needs d >= 1");
  auto space = uniform_space(d);
  Mat m = Mat::Zero(d, d);
  const double h = 1.0 / d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) m(i, j) = Complex(h, 0.0);
  return Operator(space, std::move(m));
}

namespace {

Mat random_doubly_stochastic(int d, std::mt19937_64& rng) {
  // Sinkhorn balancing of a positive random matrix; entries bounded away
  // from 0 so the iteration converges fast.
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = 0.1 + rand_unit(rng);
  for (int sweep = 0; sweep < 200; ++sweep) {
    for (int i = 0; i < d; ++i) a.row(i) /= a.row(i).sum();
    for (int j = 0; j < d; ++j) a.col(j) /= a.col(j).sum();
    double worst = 0.0;
    for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(a.row(i).sum() - 1.0));
    if (worst < 1e-15) break;
  }
  return a.cast<Complex>();
}

}  // namespace

Operator random_ds(int d, std::uint64_t seed, RandomDsKind kind) {
  if (d <= 0) throw std::invalid_argument("random_ds needs d >= 1");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  Mat core = random_doubly_stochastic(d, rng);
  if (kind == RandomDsKind::DoublyStochastic) return Operator(uniform_space(d), std::move(core));
  // Unimodular diagonal twists preserve entry moduli, hence both norms.
  Vec left(d), right(d);
  const double two_pi = 6.283185307179586476925286766559;
  for (int i = 0; i < d; ++i) {
    double th = two_pi * rand_range(rng, 0.03, 0.97);
    left[i] = Complex(std::cos(th), std::sin(th));
  }
  for (int j = 0; j < d; ++j) {
    double th = two_pi * rand_range(rng, 0.03, 0.97);
    right[j] = Complex(std::cos(th), std::sin(th));
  }
  Mat m = left.asDiagonal() * core * right.asDiagonal();
  return Operator(uniform_space(d), std::move(m));
}

Operator identity_op(const SpacePtr& space) {
  return Operator(space, Mat::Identity(space->dim(), space->dim()));
}

Operator scale(const Operator& T, Complex factor) {
  return Operator(T.space(), factor * T.entries());
}

Operator compose(const Operator& S, const Operator& T) {
  require_compatible(S.space(), T.space(), "compose");
  return Operator(S.space(), S.entries() * T.entries());
}

}  // namespace ergo
