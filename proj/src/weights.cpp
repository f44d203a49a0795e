#include "ergo/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ergo {
namespace {

// Visit (n, T^{e(n)} x) for n = 1..len(exps), one running power serving all
// exponents in ascending order. Exponent sequences from integer polynomials
// may dip or repeat; sorting keeps the walk monotone.
template <typename Visit>
void walk_powers(const Mat& M, const Vec& x, const std::vector<long long>& exps, Visit visit) {
  std::vector<int> ord(exps.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    return exps[a] != exps[b] ? exps[a] < exps[b] : a < b;
  });
  Vec w = x;
  long long p = 0;
  for (int i : ord) {
    for (; p < exps[i]; ++p) w = M * w;
    visit(i, w);
  }
}

std::vector<long long> subseq_exponents(const std::optional<IntPolynomial>& subseq,
                                        long long N) {
  std::vector<long long> e(static_cast<std::size_t>(N));
  if (subseq) {
    subseq->require_positive_nonconstant(N);
    for (long long n = 1; n <= N; ++n) e[n - 1] = (*subseq)(n);
  } else {
    for (long long n = 1; n <= N; ++n) e[n - 1] = n;
  }
  return e;
}

}  // namespace

WeightSequence WeightSequence::trig_poly(std::vector<Complex> coeffs,
                                         std::vector<Complex> freqs) {
  if (coeffs.empty() || coeffs.size() != freqs.size())
    throw std::invalid_argument("trig_poly needs matching, non-empty coefficient lists");
  for (const Complex& r : freqs)
    if (std::abs(std::abs(r) - 1.0) > 1e-12)
      throw std::invalid_argument("trig_poly frequencies must be unimodular");
  WeightSequence w;
  w.kind_ = Kind::TrigPoly;
  w.b_ = std::move(coeffs);
  w.rho_ = std::move(freqs);
  return w;
}

WeightSequence WeightSequence::linear(Operator T, Func y, Func phi, LinearTag tag) {
  require_compatible(T.space(), y.space, "linear weight sequence");
  require_compatible(T.space(), phi.space, "linear weight sequence");
  const SpectralSplit split = spectral_split(T);
  auto [yr, ys] = split_function(split, y);
  const double off = tag == LinearTag::Stable ? norm_inf(yr) : norm_inf(ys);
  if (off > 1e-9 * std::max(1.0, norm_inf(y)))
    throw std::invalid_argument(tag == LinearTag::Stable
                                    ? "linear sequence seed is not in the stable part"
                                    : "linear sequence seed is not in the reversible part");
  WeightSequence w;
  w.kind_ = Kind::Linear;
  w.op_ = std::move(T);
  w.y_ = std::move(y);
  w.phi_ = std::move(phi);
  w.tag_ = tag;
  return w;
}

WeightSequence WeightSequence::product(std::vector<WeightSequence> factors) {
  if (factors.empty()) throw std::invalid_argument("product needs at least one factor");
  const bool all_trig = std::all_of(factors.begin(), factors.end(), [](const WeightSequence& f) {
    return f.kind_ == Kind::TrigPoly;
  });
  if (all_trig) {
    // fold pairwise: sums of unimodular exponentials are closed under products
    WeightSequence acc = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) {
      std::vector<Complex> b, rho;
      for (std::size_t s = 0; s < acc.b_.size(); ++s)
        for (std::size_t t = 0; t < factors[i].b_.size(); ++t) {
          b.push_back(acc.b_[s] * factors[i].b_[t]);
          rho.push_back(acc.rho_[s] * factors[i].rho_[t]);
        }
      acc = trig_poly(std::move(b), std::move(rho));
    }
    return acc;
  }
  WeightSequence w;
  w.kind_ = Kind::Product;
  w.factors_ = std::move(factors);
  return w;
}

WeightSequence WeightSequence::explicit_values(std::vector<Complex> values) {
  if (values.empty()) throw std::invalid_argument("explicit weight sequence needs values");
  WeightSequence w;
  w.kind_ = Kind::Explicit;
  w.values_ = std::move(values);
  return w;
}

std::vector<Complex> WeightSequence::eval(long long N) const {
  if (N < 1) throw std::invalid_argument("weight prefix length must be positive");
  std::vector<Complex> out(static_cast<std::size_t>(N));
  switch (kind_) {
    case Kind::TrigPoly: {
      std::vector<Complex> cur(rho_.size(), Complex(1.0));
      for (long long n = 1; n <= N; ++n) {
        Complex a = 0.0;
        for (std::size_t j = 0; j < rho_.size(); ++j) {
          cur[j] *= rho_[j];
          a += b_[j] * cur[j];
        }
        out[n - 1] = a;
      }
      break;
    }
    case Kind::Linear: {
      const Mat& M = op_->entries();
      Vec w = y_->values;
      for (long long n = 1; n <= N; ++n) {
        w = M * w;
        out[n - 1] = pairing(*phi_, Func(y_->space, w));
      }
      break;
    }
    case Kind::Product: {
      out = factors_.front().eval(N);
      for (std::size_t i = 1; i < factors_.size(); ++i) {
        const std::vector<Complex> f = factors_[i].eval(N);
        for (long long n = 0; n < N; ++n) out[n] *= f[n];
      }
      break;
    }
    case Kind::Explicit: {
      if (static_cast<std::size_t>(N) > values_.size())
        throw std::invalid_argument("explicit weight sequence is shorter than the prefix");
      std::copy(values_.begin(), values_.begin() + N, out.begin());
      break;
    }
  }
  return out;
}

std::vector<Complex> eval_weights(const WeightSequence& w, long long N) { return w.eval(N); }

double cesaro_abs_mean(const WeightSequence& w, long long N) {
  const std::vector<Complex> a = w.eval(N);
  double sum = 0.0;
  for (const Complex& x : a) sum += std::abs(x);
  return sum / static_cast<double>(N);
}

double besicovitch_seminorm(const WeightSequence& w, double p,
                            const std::optional<IntPolynomial>& subseq, long long N) {
  if (p < 1.0) throw std::invalid_argument("Besicovitch seminorm needs p >= 1");
  const std::vector<long long> e = subseq_exponents(subseq, N);
  const long long max_n = *std::max_element(e.begin(), e.end());
  const std::vector<Complex> a = w.eval(max_n);
  double sum = 0.0;
  for (long long s = 0; s < N; ++s) sum += std::pow(std::abs(a[e[s] - 1]), p);
  return std::pow(sum / static_cast<double>(N), 1.0 / p);
}

Func weighted_average(const Operator& T, const Func& f, const WeightSequence& w,
                      const std::optional<IntPolynomial>& subseq, long long N) {
  require_compatible(T.space(), f.space, "weighted_average");
  const DsReport ds = is_dunford_schwartz(T, 1e-9);
  if (!ds.ok) throw std::invalid_argument("weighted_average needs a Dunford-Schwartz operator");
  const std::vector<long long> e = subseq_exponents(subseq, N);
  const std::vector<Complex> a = w.eval(N);
  Vec acc = Vec::Zero(f.dim());
  walk_powers(T.entries(), f.values, e, [&](int i, const Vec& pw) { acc += a[i] * pw; });
  acc /= static_cast<double>(N);
  return Func(f.space, std::move(acc));
}

WeightSequence correlation_sequence(const Operator& A, const Operator& T, const Func& g,
                                    const Func& phi, const std::optional<IntPolynomial>& subseq,
                                    long long N) {
  require_compatible(A.space(), T.space(), "correlation_sequence");
  require_compatible(T.space(), g.space, "correlation_sequence");
  require_compatible(T.space(), phi.space, "correlation_sequence");
  const std::vector<long long> e = subseq_exponents(subseq, N);
  std::vector<Complex> values(static_cast<std::size_t>(N));
  walk_powers(T.entries(), g.values, e, [&](int i, const Vec& pw) {
    values[i] = pairing(phi, Func(g.space, A.entries() * pw));
  });
  return WeightSequence::explicit_values(std::move(values));
}

}  // namespace ergo
