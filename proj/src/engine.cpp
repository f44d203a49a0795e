#include "ergo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "staged_sum.hpp"

namespace ergo {
namespace {

std::vector<std::vector<long long>> plain_exponents(int k, long long N) {
  std::vector<std::vector<long long>> e(k, std::vector<long long>(N));
  for (int v = 0; v < k; ++v)
    for (long long n = 1; n <= N; ++n) e[v][n - 1] = n;
  return e;
}

std::vector<std::vector<long long>> poly_exponents(const std::vector<IntPolynomial>& polys,
                                                   int k, long long N) {
  if (static_cast<int>(polys.size()) != k)
    throw std::invalid_argument("need one exponent polynomial per index variable");
  std::vector<std::vector<long long>> e(k, std::vector<long long>(N));
  for (int v = 0; v < k; ++v) {
    polys[v].require_positive_nonconstant(N);
    for (long long n = 1; n <= N; ++n) e[v][n - 1] = polys[v](n);
  }
  return e;
}

void check_naive_budget(const EntangledProblem& p, long long N, const EvalOptions& opts) {
  const double work = static_cast<double>(p.ent.m) *
                      std::pow(static_cast<double>(N), static_cast<double>(p.ent.k));
  if (work > opts.naive_budget) {
    std::ostringstream os;
    os << "naive budget exceeded: N^k * m = " << work << " stage applications, budget "
       << opts.naive_budget;
    throw BudgetError(os.str());
  }
}

// Chain for one index tuple (1-based values), overwriting g.
void apply_chain(const EntangledProblem& p, const std::vector<long long>& tuple,
                 const std::vector<std::vector<long long>>& exps, Vec& g) {
  const int m = p.ent.m;
  for (int j = 1; j <= m; ++j) {
    const int v = p.ent.alpha[j - 1];
    const long long e = exps[v - 1][tuple[v - 1] - 1];
    const Mat& M = p.T[j - 1].entries();
    for (long long s = 0; s < e; ++s) g = M * g;
    if (j < m) g = p.A[j - 1].entries() * g;
  }
}

Func naive_impl(const EntangledProblem& p, const Func& f, long long N,
                const std::vector<std::vector<long long>>& exps, const EvalOptions& opts) {
  require_compatible(p.space, f.space, "naive_average");
  if (N < 1) throw std::invalid_argument("naive_average needs N >= 1");
  check_naive_budget(p, N, opts);
  const int k = p.ent.k;
  std::vector<long long> tuple(k, 1);
  Vec sum = Vec::Zero(p.dim());
  for (;;) {
    Vec g = f.values;
    apply_chain(p, tuple, exps, g);
    sum += g;
    int v = k - 1;
    while (v >= 0 && tuple[v] == N) tuple[v--] = 1;
    if (v < 0) break;
    ++tuple[v];
  }
  sum /= std::pow(static_cast<double>(N), static_cast<double>(k));
  return Func(p.space, std::move(sum));
}

Func staged_average(const EntangledProblem& p, const Func& f, long long N,
                    const std::vector<std::vector<long long>>& exps, const EvalOptions& opts,
                    EvalStats* stats) {
  require_compatible(p.space, f.space, "entangled_average");
  if (N < 1) throw std::invalid_argument("entangled_average needs N >= 1");
  const EliminationSchedule sched = elimination_schedule(p.ent);
  const double entries =
      std::pow(static_cast<double>(N), static_cast<double>(sched.width)) * p.dim();
  const double bytes = entries * static_cast<double>(sizeof(Complex));
  if (bytes > static_cast<double>(opts.max_table_bytes)) {
    std::ostringstream os;
    os << "elimination table estimate " << bytes << " bytes (N^width * d = " << entries
       << " entries) exceeds cap " << opts.max_table_bytes << " bytes";
    throw BudgetError(os.str());
  }
  std::vector<detail::Stage> stages(p.ent.m);
  for (int j = 1; j <= p.ent.m; ++j) {
    detail::Stage& sg = stages[j - 1];
    sg.kind = detail::Stage::Kind::Operator;
    sg.var = p.ent.alpha[j - 1];
    sg.pow = &p.T[j - 1];
    sg.post = j < p.ent.m ? &p.A[j - 1] : nullptr;
    sg.exps = exps[sg.var - 1];
  }
  detail::StagedStats st;
  Vec r = detail::staged_sum(stages, f.values, N, opts.parallel, &st);
  if (stats) *stats = EvalStats{st.peak_slots, st.applications};
  return Func(p.space, std::move(r));
}

double mat_linf_norm(const Mat& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

EntanglementMap::EntanglementMap(int m_, int k_, std::vector<int> alpha_)
    : m(m_), k(k_), alpha(std::move(alpha_)) {
  if (m < 1) throw std::invalid_argument("entanglement map needs at least one stage");
  if (k < 1) throw std::invalid_argument("entanglement map needs at least one index variable");
  if (static_cast<int>(alpha.size()) != m)
    throw std::invalid_argument("alpha must assign one index variable per stage");
  for (int a : alpha)
    if (a < 1 || a > k) throw std::invalid_argument("alpha values must lie in 1..k");
}

EntangledProblem::EntangledProblem(SpacePtr space_, std::vector<Operator> T_,
                                   std::vector<Operator> A_, EntanglementMap ent_)
    : space(std::move(space_)), T(std::move(T_)), A(std::move(A_)), ent(std::move(ent_)) {
  if (static_cast<int>(T.size()) != ent.m)
    throw std::invalid_argument("problem needs one transfer operator per stage");
  if (static_cast<int>(A.size()) != ent.m - 1)
    throw std::invalid_argument("problem needs one connecting operator between stages");
  for (const Operator& t : T) require_compatible(space, t.space(), "entangled problem");
  for (const Operator& a : A) require_compatible(space, a.space(), "entangled problem");
  for (std::size_t i = 0; i < T.size(); ++i) {
    const DsReport r = is_dunford_schwartz(T[i], 1e-9);
    if (!r.ok) {
      std::ostringstream os;
      os << "T_" << (i + 1) << " is not Dunford-Schwartz (L1 norm " << r.l1_norm
         << ", Linf norm " << r.linf_norm << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

JointBoundCertificate certify_joint_bound(const EntangledProblem& p, long long horizon) {
  if (horizon < 1) throw std::invalid_argument("joint bound horizon must be positive");
  double C = 1.0;
  for (std::size_t j = 0; j + 1 < p.T.size(); ++j) {
    const Mat& T = p.T[j].entries();
    const Mat& A = p.A[j].entries();
    Mat P = T;
    for (long long n = 1; n <= horizon; ++n) {
      C = std::max(C, mat_linf_norm(A * P));
      if (n < horizon) P = P * T;
    }
  }
  return JointBoundCertificate{C, horizon};
}

EliminationSchedule elimination_schedule(const EntanglementMap& ent) {
  EliminationSchedule s;
  s.m = ent.m;
  s.k = ent.k;
  s.first_stage.assign(ent.k, 0);
  s.last_stage.assign(ent.k, 0);
  for (int j = 1; j <= ent.m; ++j) {
    const int v = ent.alpha[j - 1];
    if (s.first_stage[v - 1] == 0) s.first_stage[v - 1] = j;
    s.last_stage[v - 1] = j;
  }
  s.live_at_stage.assign(ent.m, {});
  for (int j = 1; j <= ent.m; ++j) {
    for (int v = 1; v <= ent.k; ++v)
      if (s.first_stage[v - 1] != 0 && s.first_stage[v - 1] <= j && j <= s.last_stage[v - 1])
        s.live_at_stage[j - 1].push_back(v);
    s.width = std::max(s.width, static_cast<int>(s.live_at_stage[j - 1].size()));
  }
  return s;
}

Func naive_average(const EntangledProblem& p, const Func& f, long long N,
                   const EvalOptions& opts) {
  return naive_impl(p, f, N, plain_exponents(p.ent.k, N), opts);
}

Func naive_polynomial_average(const EntangledProblem& p, const Func& f,
                              const std::vector<IntPolynomial>& polys, long long N,
                              const EvalOptions& opts) {
  return naive_impl(p, f, N, poly_exponents(polys, p.ent.k, N), opts);
}

Func entangled_average(const EntangledProblem& p, const Func& f, long long N,
                       const EvalOptions& opts, EvalStats* stats) {
  return staged_average(p, f, N, plain_exponents(p.ent.k, N), opts, stats);
}

Func polynomial_entangled_average(const EntangledProblem& p, const Func& f,
                                  const std::vector<IntPolynomial>& polys, long long N,
                                  const EvalOptions& opts, EvalStats* stats) {
  return staged_average(p, f, N, poly_exponents(polys, p.ent.k, N), opts, stats);
}

Func absolute_entangled_average(const EntangledProblem& p, const Func& f, long long N,
                                const EvalOptions& opts) {
  require_compatible(p.space, f.space, "absolute_entangled_average");
  if (N < 1) throw std::invalid_argument("absolute_entangled_average needs N >= 1");
  check_naive_budget(p, N, opts);
  const auto exps = plain_exponents(p.ent.k, N);
  const int k = p.ent.k;
  long long total = 1;
  for (int v = 0; v < k; ++v) total *= N;

  // Fixed-size tuple blocks with a serial combine keep the reduction order
  // independent of the number of workers.
  const long long block = 4096;
  const long long nblocks = (total + block - 1) / block;
  std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(nblocks));
#pragma omp parallel for if (opts.parallel && nblocks > 1)
  for (long long b = 0; b < nblocks; ++b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim());
    std::vector<long long> tuple(k);
    const long long hi = std::min(total, (b + 1) * block);
    for (long long t = b * block; t < hi; ++t) {
      long long rest = t;
      for (int v = k - 1; v >= 0; --v) {
        tuple[v] = rest % N + 1;
        rest /= N;
      }
      Vec g = f.values;
      apply_chain(p, tuple, exps, g);
      acc += g.cwiseAbs();
    }
    partial[b] = std::move(acc);
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p.dim());
  for (const Eigen::VectorXd& acc : partial) sum += acc;
  sum /= std::pow(static_cast<double>(N), static_cast<double>(k));
  return Func(p.space, sum.cast<Complex>());
}

std::vector<TrajectoryPoint> average_trajectory(const EntangledProblem& p, const Func& f,
                                                const std::vector<long long>& checkpoints,
                                                TrajectoryVariant variant,
                                                const std::vector<IntPolynomial>& polys,
                                                const EvalOptions& opts) {
  if (checkpoints.empty()) throw std::invalid_argument("trajectory needs checkpoints");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || (i > 0 && checkpoints[i] <= checkpoints[i - 1]))
      throw std::invalid_argument("checkpoints must be strictly increasing and positive");
  }
  std::vector<TrajectoryPoint> out;
  out.reserve(checkpoints.size());
  for (long long N : checkpoints) {
    Func value = variant == TrajectoryVariant::Plain ? entangled_average(p, f, N, opts)
                 : variant == TrajectoryVariant::Absolute
                     ? absolute_entangled_average(p, f, N, opts)
                     : polynomial_entangled_average(p, f, polys, N, opts);
    TrajectoryPoint pt{N, value, norm_inf(value), 0.0};
    if (!out.empty())
      pt.cauchy_gap = norm_inf(Func(p.space, value.values - out.back().value.values));
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace ergo
