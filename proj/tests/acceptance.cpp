// Acceptance battery. Eight criteria, one pass/fail line each; the binary
// exits nonzero when any criterion fails. Every tolerance is pinned inline.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "ergo/engine.hpp"
#include "ergo/jdlg.hpp"
#include "ergo/operators.hpp"
#include "ergo/polynomial.hpp"
#include "ergo/rng.hpp"
#include "ergo/splitting.hpp"
#include "ergo/weights.hpp"
#include "reference_problem.hpp"

using ergo::Complex;

namespace {

struct Criterion {
  std::string label;
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

ergo::Func random_unit(const ergo::SpacePtr& sp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ergo::Vec v(sp->dim());
  for (int i = 0; i < sp->dim(); ++i) v[i] = ergo::rand_complex(rng);
  ergo::Func f(sp, std::move(v));
  f.values /= ergo::norm_p(f, 2.0);
  return f;
}

ergo::Operator cyclic_shift(const ergo::SpacePtr& sp) {
  std::vector<int> sigma(sp->dim());
  for (int i = 0; i < sp->dim(); ++i) sigma[i] = (i + 1) % sp->dim();
  return ergo::koopman_from_map(sp, sigma);
}

double rel_linf(const ergo::Func& got, const ergo::Func& want) {
  const double diff = (got.values - want.values).cwiseAbs().maxCoeff();
  return diff / std::max(want.values.cwiseAbs().maxCoeff(), 1e-14);
}

// 1. The elimination evaluator against the tuple-enumeration reference, with
// and without exponent polynomials, on seeded random problems.
Criterion criterion_evaluators() {
  const std::vector<ergo::IntPolynomial> pool = {
      ergo::IntPolynomial{{1, 1}},     // n + 1
      ergo::IntPolynomial{{0, 0, 1}},  // n^2
      ergo::IntPolynomial{{0, 1, 1}},  // n^2 + n
  };
  double worst_plain = 0.0, worst_poly = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(2026 + trial);
    const int d = 2 + ergo::rand_index(rng, 4);
    const int m = 1 + ergo::rand_index(rng, 4);
    const int k = 1 + ergo::rand_index(rng, 3);
    const long long N = 2 + ergo::rand_index(rng, 5);
    auto sp = ergo::uniform_space(d);
    std::vector<int> alpha(m);
    for (int& a : alpha) a = 1 + ergo::rand_index(rng, k);
    std::vector<ergo::Operator> T, A;
    for (int j = 0; j < m; ++j)
      T.push_back(ergo::random_ds(d, rng(), j % 2 == 0
                                               ? ergo::RandomDsKind::DoublyStochastic
                                               : ergo::RandomDsKind::SignedContraction));
    for (int j = 0; j + 1 < m; ++j)
      A.push_back(ergo::random_ds(d, rng(), ergo::RandomDsKind::SignedContraction));
    const ergo::EntangledProblem prob(sp, T, A, ergo::EntanglementMap(m, k, alpha));
    const ergo::Func f = random_unit(sp, rng());

    worst_plain = std::max(worst_plain, rel_linf(ergo::entangled_average(prob, f, N),
                                                 ergo::naive_average(prob, f, N)));

    std::vector<ergo::IntPolynomial> polys;
    for (int v = 0; v < k; ++v) polys.push_back(pool[v % pool.size()]);
    worst_poly = std::max(
        worst_poly, rel_linf(ergo::polynomial_entangled_average(prob, f, polys, N),
                             ergo::naive_polynomial_average(prob, f, polys, N)));
  }
  const bool ok = worst_plain <= 1e-10 && worst_poly <= 1e-10;
  return {"elimination matches the serial reference on 100 random problems", ok,
          "worst relative error " + fmt("%.2e", worst_plain) + " plain, " +
              fmt("%.2e", worst_poly) + " with exponent polynomials"};
}

// 2. Single-stage Cesaro averages of doubly stochastic operators settle:
// Cauchy gaps decrease along the checkpoints and the final gap is small.
Criterion criterion_single_stage() {
  auto sp = ergo::uniform_space(32);
  bool ok = true;
  double worst_final = 0.0;
  for (int i = 0; i < 10; ++i) {
    const ergo::EntangledProblem prob(
        sp, {ergo::random_ds(32, 500 + i, ergo::RandomDsKind::DoublyStochastic)}, {},
        ergo::EntanglementMap(1, 1, {1}));
    const auto tr = ergo::average_trajectory(prob, random_unit(sp, 900 + i),
                                             {64, 256, 1024, 4096},
                                             ergo::TrajectoryVariant::Plain);
    for (std::size_t j = 2; j < tr.size(); ++j)
      ok = ok && tr[j].cauchy_gap < tr[j - 1].cauchy_gap;
    worst_final = std::max(worst_final, tr.back().cauchy_gap);
    ok = ok && tr.back().cauchy_gap < 1e-2;
  }
  return {"single-stage averages of doubly stochastic operators are Cauchy", ok,
          "10 seeded operators, worst final gap " + fmt("%.2e", worst_final)};
}

// 3. Absolute-value averages decay when the first stage is a strict
// contraction, so nothing survives the modulus.
Criterion criterion_absolute_decay() {
  auto sp = ergo::uniform_space(32);
  const ergo::Operator t1 =
      ergo::scale(ergo::random_ds(32, 2026, ergo::RandomDsKind::SignedContraction), 0.9);
  const ergo::EntangledProblem prob(sp, {t1, cyclic_shift(sp)},
                                    {ergo::volterra_discrete(32)},
                                    ergo::EntanglementMap(2, 1, {1, 1}));
  const ergo::Func f = random_unit(sp, 2027);
  std::vector<double> v;
  for (long long N : {16, 64, 256})
    v.push_back(ergo::norm_inf(ergo::absolute_entangled_average(prob, f, N)));
  const bool ok = v[1] < v[0] && v[2] < v[1] && v[2] <= 0.2 * v[0];
  return {"absolute averages decay for a strictly contractive first stage", ok,
          "sup norms " + fmt("%.3e", v[0]) + " -> " + fmt("%.3e", v[1]) + " -> " +
              fmt("%.3e", v[2]) + " over N = 16, 64, 256"};
}

// 4. A unimodular eigenvector seed gives Cauchy trajectories both when the
// two stages share the index variable and when they use separate ones.
Criterion criterion_eigenvector_seed() {
  auto sp = ergo::uniform_space(8);
  ergo::Vec v(8);
  for (int i = 0; i < 8; ++i) v[i] = std::polar(1.0, 2.0 * M_PI * i / 8.0);
  const ergo::Func f(sp, std::move(v));
  const ergo::Operator shift = cyclic_shift(sp);
  const ergo::Operator vol = ergo::volterra_discrete(8);

  const ergo::EntangledProblem shared(sp, {shift, shift}, {vol},
                                      ergo::EntanglementMap(2, 1, {1, 1}));
  const auto tr1 = ergo::average_trajectory(shared, f, {1024, 2048, 4096},
                                            ergo::TrajectoryVariant::Plain);
  const ergo::EntangledProblem separate(sp, {shift, shift}, {vol},
                                        ergo::EntanglementMap(2, 2, {1, 2}));
  const auto tr2 = ergo::average_trajectory(separate, f, {128, 256, 512},
                                            ergo::TrajectoryVariant::Plain);
  const double g1 = tr1.back().cauchy_gap, g2 = tr2.back().cauchy_gap;
  const bool ok = g1 < 1e-3 && g2 < 1e-3;
  return {"eigenvector seeds yield Cauchy trajectories in one and two variables", ok,
          "gap " + fmt("%.2e", g1) + " at N = 4096 (shared), " + fmt("%.2e", g2) +
              " at N = 512 (separate)"};
}

// Structural invariants of one splitting tree: budget recursion and
// telescoping within 1e-12, reconstruction against an independent orbit walk
// within 1e-9, coefficient bounds honored on a 10x sampling horizon.
bool check_tree_invariants(const ergo::SplittingTree& tree,
                           const ergo::EntangledProblem& p, std::string& why) {
  constexpr double kRecursion = 1e-12;
  constexpr double kReconstruct = 1e-9;
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    const ergo::SplitNode& nd = tree.nodes[id];
    if (!nd.children.empty()) {
      double sum = 0.0;
      for (int w : nd.children) {
        const ergo::SplitNode& ch = tree.nodes[w];
        sum += ch.c * nd.u;
        if (std::abs(ch.c - nd.c / (nd.u * nd.ell())) > kRecursion * nd.c) {
          why = "budget recursion off at node " + std::to_string(w);
          return false;
        }
      }
      if (std::abs(sum - nd.c) > kRecursion * nd.c) {
        why = "telescoping identity off at node " + std::to_string(id);
        return false;
      }
    }
    if (!nd.cert) continue;
    const ergo::OrbitCertificate& cert = *nd.cert;
    if (cert.epsilon_achieved > nd.c * (1.0 + 1e-12)) {
      why = "certificate misses its budget at node " + std::to_string(id);
      return false;
    }
    const ergo::Operator& A = p.A[cert.stage - 1];
    const ergo::Operator& T = p.T[cert.stage - 1];
    ergo::Vec x = cert.seed.values;
    for (long long n = 1; n <= 10 * cert.n_orbit; ++n) {
      x = T.entries() * x;
      const ergo::Vec y = A.entries() * x;
      for (int i = 0; i < cert.ell(); ++i) {
        const Complex lam = ergo::pairing(cert.duals[i], ergo::Func(p.space, y));
        if (std::abs(lam) > cert.u_const * (1.0 + 1e-12)) {
          why = "coefficient bound broken at node " + std::to_string(id) + ", n = " +
                std::to_string(n);
          return false;
        }
      }
      if (n == 1 || n % 97 == 0 || n == 10 * cert.n_orbit) {
        auto [lam, rem] = ergo::decompose_orbit_element(cert, A, T, cert.seed, n);
        ergo::Vec rebuilt = rem.values;
        for (int i = 0; i < cert.ell(); ++i) rebuilt += lam[i] * cert.basis[i].values;
        if ((rebuilt - y).cwiseAbs().maxCoeff() > kReconstruct) {
          why = "reconstruction off at node " + std::to_string(id);
          return false;
        }
      }
    }
  }
  return true;
}

// 5. Splitting trees on the reference problem: structural invariants for
// both variants, then the aggregated remainder bound at several horizons.
Criterion criterion_splitting_tree() {
  const ergo::EntangledProblem p = refprob::reference_problem();
  std::string why;
  double worst_margin = 0.0;
  bool ok = true;

  const ergo::SplittingTree stable = ergo::build_splitting_tree(
      p, refprob::stable_seed(p.space), 1e-3, ergo::SplitVariant::Stable);
  ok = ok && check_tree_invariants(stable, p, why);

  for (double eps : {0.1, 0.01}) {
    const ergo::SplittingTree tree = ergo::build_splitting_tree(
        p, refprob::reversible_seed(p.space), eps, ergo::SplitVariant::Reversible);
    ok = ok && check_tree_invariants(tree, p, why);
    for (long long N : {16, 64, 256}) {
      const auto rep =
          ergo::verify_splitting_bounds(tree, p, refprob::reversible_seed(p.space), N);
      if (rep.budget != eps * (p.ent.m - 2)) {
        ok = false;
        why = "unexpected remainder budget";
      }
      if (rep.measured > rep.budget) {
        ok = false;
        why = "remainder bound broken at N = " + std::to_string(N);
      }
      worst_margin = std::max(worst_margin, rep.measured / rep.budget);
    }
  }
  return {"splitting-tree certificates and remainder bounds on the reference problem",
          ok,
          ok ? "invariants hold; worst remainder at " + fmt("%.1f", 100.0 * worst_margin) +
                   "% of budget"
             : why};
}

// 6. Orbit-compactness certificates for the cumulative-sum connector along a
// cyclic shift: low rank, residuals verified on every sampled element, rank
// monotone in the tolerance.
Criterion criterion_orbit_certificate() {
  auto sp = ergo::uniform_space(64);
  const ergo::Operator A = ergo::volterra_discrete(64);
  const ergo::Operator T = cyclic_shift(sp);
  const ergo::Func f = random_unit(sp, 2026);

  const ergo::OrbitCertificate cert = ergo::certify_orbit_compactness(A, T, f, 1e-2);
  bool ok = cert.ell() < 64 && cert.epsilon_achieved <= 1e-2;
  ergo::Vec x = f.values;
  double worst = 0.0;
  for (long long n = 1; n <= cert.n_orbit; ++n) {
    x = T.entries() * x;
    auto [lam, rem] = ergo::decompose_orbit_element(cert, A, T, f, n);
    ergo::Vec rebuilt = rem.values;
    for (int i = 0; i < cert.ell(); ++i) rebuilt += lam[i] * cert.basis[i].values;
    worst = std::max(worst, rem.values.cwiseAbs().maxCoeff());
    ok = ok && (rebuilt - ergo::Vec(A.entries() * x)).cwiseAbs().maxCoeff() <= 1e-12;
  }
  ok = ok && worst <= cert.epsilon_achieved * (1.0 + 1e-12);

  std::vector<int> ranks;
  for (double eps : {1e-3, 1e-2, 1e-1})
    ranks.push_back(ergo::certify_orbit_compactness(A, T, f, eps).ell());
  ok = ok && ranks[0] >= ranks[1] && ranks[1] >= ranks[2];
  return {"orbit-compactness certificates compress the cumulative-sum connector", ok,
          "rank " + std::to_string(cert.ell()) + " of 64 at tolerance 1e-2, ranks " +
              std::to_string(ranks[0]) + " >= " + std::to_string(ranks[1]) + " >= " +
              std::to_string(ranks[2]) + " as the tolerance grows, worst residual " +
              fmt("%.2e", worst)};
}

// 7. Weight diagnostics: (a) the all-ones sequence has unit Besicovitch
// seminorm exactly; (b) a unimodular weight/eigenvalue pair that multiplies
// to one recovers the seed exactly at every horizon; (c) correlations of a
// strictly contractive operator along n^2 average below 1e-6 by N = 512.
Criterion criterion_weights() {
  const ergo::WeightSequence ones = ergo::WeightSequence::trig_poly({1.0}, {1.0});
  const ergo::IntPolynomial square{{0, 0, 1}};
  bool a_ok = true;
  for (double pp : {1.0, 2.0})
    for (long long N : {1LL, 37LL, 512LL}) {
      a_ok = a_ok && ergo::besicovitch_seminorm(ones, pp, std::nullopt, N) == 1.0;
      a_ok = a_ok && ergo::besicovitch_seminorm(ones, pp, square, N) == 1.0;
    }

  auto sp4 = ergo::uniform_space(4);
  const ergo::Func seed(sp4, (ergo::Vec(4) << Complex(1.0), Complex(-0.5),
                              Complex(0.25), Complex(0.75)).finished());
  const ergo::Operator rot = ergo::scale(ergo::identity_op(sp4), Complex(0.0, 1.0));
  const ergo::WeightSequence counter =
      ergo::WeightSequence::trig_poly({1.0}, {Complex(0.0, -1.0)});
  bool b_ok = true;
  for (long long N = 1; N <= 64; ++N) {
    const ergo::Func got = ergo::weighted_average(rot, seed, counter, std::nullopt, N);
    b_ok = b_ok && (got.values - seed.values).cwiseAbs().maxCoeff() == 0.0;
  }

  auto sp32 = ergo::uniform_space(32);
  const ergo::Operator half = ergo::scale(ergo::identity_op(sp32), 0.5);
  const ergo::WeightSequence corr =
      ergo::correlation_sequence(ergo::identity_op(sp32), half, random_unit(sp32, 7),
                                 random_unit(sp32, 8), square, 512);
  const double mean = ergo::cesaro_abs_mean(corr, 512);
  const bool c_ok = mean < 1e-6;

  return {"weight diagnostics: seminorms, eigenpair recovery, correlation decay",
          a_ok && b_ok && c_ok,
          std::string("unit seminorm ") + (a_ok ? "exact" : "WRONG") +
              ", eigenpair recovery " + (b_ok ? "exact through N = 64" : "WRONG") +
              ", correlation mean " + fmt("%.2e", mean) +
              (c_ok ? " < 1e-6" : " >= 1e-6")};
}

// 8. The reversible/stable decomposition across seeded operators: projector
// algebra, eigenvector residuals, reassembly, and stable-part decay.
Criterion criterion_jdlg() {
  bool ok = true;
  double worst_proj = 0.0, worst_reasm = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int d = 2 + (i % 15);
    const ergo::Operator T = ergo::random_ds(
        d, 1000 + i, i % 2 == 0 ? ergo::RandomDsKind::DoublyStochastic
                                : ergo::RandomDsKind::SignedContraction);
    const ergo::SpectralSplit s = ergo::spectral_split(T);
    const ergo::SplitVerification vr = ergo::verify_split(T, s, 4, 512, 7000 + i);
    worst_proj = std::max({worst_proj, vr.idempotency_error, vr.commutation_error});
    worst_reasm = std::max(worst_reasm, vr.max_reassembly_error);
    ok = ok && vr.idempotency_error <= 1e-9 && vr.commutation_error <= 1e-9 &&
         vr.max_eigen_residual <= 1e-9 && vr.max_reassembly_error <= 1e-10 &&
         vr.stable_decay_ok && vr.ok;
  }
  return {"reversible/stable splitting verified on 20 seeded operators", ok,
          "worst projector error " + fmt("%.2e", worst_proj) + ", worst reassembly " +
              fmt("%.2e", worst_reasm)};
}

}  // namespace

int main() {
  const std::vector<Criterion> results = {
      criterion_evaluators(),    criterion_single_stage(), criterion_absolute_decay(),
      criterion_eigenvector_seed(), criterion_splitting_tree(),
      criterion_orbit_certificate(), criterion_weights(),  criterion_jdlg(),
  };
  int failures = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Criterion& r = results[i];
    if (!r.pass) ++failures;
    std::printf("[%s] C%zu %s (%s)\n", r.pass ? "PASS" : "FAIL", i + 1, r.label.c_str(),
                r.detail.c_str());
  }
  if (failures) std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
