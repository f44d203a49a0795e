#include "ergo/measure_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ergo {

FiniteMeasureSpace::FiniteMeasureSpace(std::vector<double> weights) {
  if (weights.empty()) throw std::invalid_argument("measure space needs at least one atom");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0))
      throw std::invalid_argument("atom weight " + std::to_string(i) + " is not positive");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("atom weights sum to " + std::to_string(total) + ", expected 1");
  mu_ = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<long>(weights.size()));
}

FiniteMeasureSpace FiniteMeasureSpace::uniform(int d) {
  if (d <= 0) throw std::invalid_argument("uniform space needs d >= 1");
  // 1/d is inexact for most d; rescale so the weights sum to 1 exactly.
  std::vector<double> w(static_cast<std::size_t>(d), 1.0 / d);
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return FiniteMeasureSpace(std::move(w));
}

bool FiniteMeasureSpace::same_as(const FiniteMeasureSpace& other) const {
  return mu_.size() == other.mu_.size() && mu_ == other.mu_;
}

SpacePtr make_space(std::vector<double> weights) {
  return std::make_shared<FiniteMeasureSpace>(std::move(weights));
}

SpacePtr uniform_space(int d) {
  return std::make_shared<FiniteMeasureSpace>(FiniteMeasureSpace::uniform(d));
}

Func::Func(SpacePtr s, Vec v) : space(std::move(s)), values(std::move(v)) {
  if (!space) throw std::invalid_argument("func needs a space");
  if (values.size() != space->dim())
    throw std::invalid_argument("func has " + std::to_string(values.size()) + " values on a " +
                                std::to_string(space->dim()) + "-atom space");
}

bool compatible(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  return a && b && a->same_as(*b);
}

void require_compatible(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (!compatible(a, b)) throw std::invalid_argument(std::string(what) + ": measure spaces differ");
}

double norm_p(const Func& f, double p) {
  if (!(p >= 1.0) || std::isinf(p))
    throw std::invalid_argument("norm_p needs finite p >= 1 (use norm_inf for p = inf)");
  const Eigen::VectorXd& mu = f.space->weights();
  double acc = 0.0;
  for (int i = 0; i < f.dim(); ++i) acc += mu[i] * std::pow(std::abs(f.values[i]), p);
  return std::pow(acc, 1.0 / p);
}

double norm_inf(const Func& f) {
  double m = 0.0;
  for (int i = 0; i < f.dim(); ++i) m = std::max(m, std::abs(f.values[i]));
  return m;
}

double dual_norm(const Func& phi, double p) {
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("dual_norm needs finite p >= 1");
  if (p == 1.0) return norm_inf(phi);
  return norm_p(phi, p / (p - 1.0));
}

Complex pairing(const Func& phi, const Func& f) {
  require_compatible(phi.space, f.space, "pairing");
  const Eigen::VectorXd& mu = phi.space->weights();
  Complex acc(0.0, 0.0);
  for (int i = 0; i < phi.dim(); ++i) acc += mu[i] * std::conj(phi.values[i]) * f.values[i];
  return acc;
}

}  // namespace ergo
