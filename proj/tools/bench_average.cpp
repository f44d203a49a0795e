// Timing comparison for the three average evaluators: the naive tuple
// enumeration kept as a serial reference, the elimination engine with the
// OpenMP pragmas disabled, and the elimination engine running parallel.
// All three are checked against each other before timings are reported.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "ergo/engine.hpp"
#include "ergo/operators.hpp"
#include "ergo/rng.hpp"

using ergo::Complex;

namespace {

ergo::Func random_unit(const ergo::SpacePtr& sp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ergo::Vec v(sp->dim());
  for (int i = 0; i < sp->dim(); ++i) v[i] = ergo::rand_complex(rng);
  ergo::Func f(sp, std::move(v));
  f.values /= ergo::norm_p(f, 2.0);
  return f;
}

template <class Fn>
double best_of(int repeats, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

double max_diff(const ergo::Func& a, const ergo::Func& b) {
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entangled average evaluator benchmark"};
  int dim = 64;
  std::uint64_t seed = 2026;
  int repeats = 3;
  long long max_naive = 128;
  std::vector<long long> checkpoints = {8, 32, 128, 512};
  app.add_option("--dim", dim, "atom count")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "rng seed for the operators and the seed function");
  app.add_option("--repeats", repeats, "timing repeats, best is kept")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-naive", max_naive,
                 "largest N the tuple-enumeration reference is attempted at");
  app.add_option("--checkpoints", checkpoints, "values of N to time");
  CLI11_PARSE(app, argc, argv);

  auto sp = ergo::uniform_space(dim);
  std::vector<int> shift(dim);
  for (int i = 0; i < dim; ++i) shift[i] = (i + 1) % dim;
  const std::vector<ergo::Operator> T = {
      ergo::random_ds(dim, seed, ergo::RandomDsKind::DoublyStochastic),
      ergo::koopman_from_map(sp, shift),
      ergo::random_ds(dim, seed + 1, ergo::RandomDsKind::DoublyStochastic)};
  const std::vector<ergo::Operator> A = {ergo::volterra_discrete(dim),
                                         ergo::volterra_discrete(dim)};
  const ergo::EntangledProblem prob(sp, T, A, ergo::EntanglementMap(3, 2, {1, 2, 1}));
  const ergo::Func f = random_unit(sp, seed + 2);

  ergo::EvalOptions serial, parallel;
  serial.parallel = false;
  serial.naive_budget = 1e12;
  parallel.parallel = true;

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("d = %d, m = 3, k = 2, alpha = (1,2,1), threads = %d, best of %d\n\n",
              dim, threads, repeats);
  std::printf("%8s %14s %14s %14s %9s %11s\n", "N", "naive ms", "elim-1t ms",
              "elim ms", "speedup", "max |diff|");

  for (long long N : checkpoints) {
    ergo::Func ref(sp, ergo::Vec::Zero(dim));
    double t_naive = -1.0;
    if (N <= max_naive) {
      t_naive = best_of(repeats, [&] { ref = ergo::naive_average(prob, f, N, serial); });
    }
    ergo::Func e1 = ref, ep = ref;
    const double t_serial =
        best_of(repeats, [&] { e1 = ergo::entangled_average(prob, f, N, serial); });
    const double t_par =
        best_of(repeats, [&] { ep = ergo::entangled_average(prob, f, N, parallel); });

    double diff = max_diff(e1, ep);
    if (t_naive >= 0.0) diff = std::max(diff, max_diff(ref, ep));

    char naive_buf[32];
    if (t_naive >= 0.0)
      std::snprintf(naive_buf, sizeof naive_buf, "%14.3f", t_naive);
    else
      std::snprintf(naive_buf, sizeof naive_buf, "%14s", "skipped");
    std::printf("%8lld %s %14.3f %14.3f %8.2fx %11.2e\n", N, naive_buf, t_serial,
                t_par, t_serial / t_par, diff);
    if (diff > 1e-9) {
      std::fprintf(stderr, "evaluators disagree at N = %lld\n", N);
      return 1;
    }
  }
  return 0;
}
