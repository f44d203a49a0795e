#include "ergo/jdlg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ergo/rng.hpp"

namespace ergo {

namespace {

constexpr double kClusterTol = 1e-8;

// Indices of eigenvalues with |lambda| >= 1 - tol.
std::vector<int> unimodular_indices(const Vec& eigenvalues, double tol) {
  std::vector<int> idx;
  for (int i = 0; i < eigenvalues.size(); ++i)
    if (std::abs(eigenvalues[i]) >= 1.0 - tol) idx.push_back(i);
  return idx;
}

// Greedy clustering of near-coincident eigenvalues.
std::vector<std::vector<int>> cluster_eigenvalues(const Vec& eigenvalues,
                                                  const std::vector<int>& idx) {
  std::vector<std::vector<int>> clusters;
  for (int i : idx) {
    bool placed = false;
    for (auto& c : clusters) {
      if (std::abs(eigenvalues[i] - eigenvalues[c.front()]) <= kClusterTol) {
        c.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({i});
  }
  return clusters;
}

}  // namespace

SpectralSplit spectral_split(const Operator& T, double unimodular_tol) {
  const int d = T.dim();
  const SpacePtr& sp = T.space();
  const Eigen::VectorXd& mu = sp->weights();
  Eigen::VectorXd w_sqrt = mu.cwiseSqrt();

  Eigen::ComplexEigenSolver<Mat> right(T.entries());
  Eigen::ComplexEigenSolver<Mat> left(T.entries().adjoint());
  if (right.info() != Eigen::Success || left.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");

  std::vector<int> r_idx = unimodular_indices(right.eigenvalues(), unimodular_tol);
  std::vector<int> l_idx = unimodular_indices(left.eigenvalues(), unimodular_tol);
  const int r = static_cast<int>(r_idx.size());
  if (static_cast<int>(l_idx.size()) != r)
    throw std::runtime_error("left/right unimodular eigenvalue counts disagree (" +
                             std::to_string(l_idx.size()) + " vs " + std::to_string(r) + ")");

  std::vector<Func> rev_basis;
  std::vector<Complex> rev_eigs;
  Mat v_all(d, r), w_all(d, r);
  int col = 0;

  auto clusters = cluster_eigenvalues(right.eigenvalues(), r_idx);
  for (const auto& c : clusters) {
    const int a = static_cast<int>(c.size());
    Mat block(d, a);
    Complex lambda_sum(0, 0);
    for (int j = 0; j < a; ++j) {
      block.col(j) = right.eigenvectors().col(c[static_cast<std::size_t>(j)]);
      lambda_sum += right.eigenvalues()[c[static_cast<std::size_t>(j)]];
    }
    Complex lambda = lambda_sum / static_cast<double>(a);
    if (!block.allFinite())
      throw std::runtime_error("defective unimodular eigenvalue near " +
                               std::to_string(lambda.real()) + (lambda.imag() < 0 ? "-" : "+") +
                               std::to_string(std::abs(lambda.imag())) + "i");
    // Orthonormalize within the cluster in L^2(mu); a rank drop means the
    // eigenvalue has fewer eigenvectors than its multiplicity.
    Mat weighted = w_sqrt.asDiagonal() * block;
    Eigen::JacobiSVD<Mat> svd(weighted, Eigen::ComputeThinU);
    double smax = svd.singularValues()[0];
    int rank = 0;
    for (int j = 0; j < a; ++j)
      if (svd.singularValues()[j] > smax * 1e-8) ++rank;
    if (rank < a)
      throw std::runtime_error("defective unimodular eigenvalue near " +
                               std::to_string(lambda.real()) + (lambda.imag() < 0 ? "-" : "+") +
                               std::to_string(std::abs(lambda.imag())) + "i");
    Mat ortho = w_sqrt.cwiseInverse().asDiagonal() * svd.matrixU().leftCols(a);
    for (int j = 0; j < a; ++j) {
      rev_basis.emplace_back(sp, ortho.col(j));
      rev_eigs.push_back(lambda);
      v_all.col(col++) = ortho.col(j);
    }
  }

  for (int j = 0; j < r; ++j) w_all.col(j) = left.eigenvectors().col(l_idx[static_cast<std::size_t>(j)]);

  // Defectiveness is diagnosed first so that a Jordan block reports its real
  // problem rather than the norm bound it also violates.
  auto ds = is_dunford_schwartz(T, 1e-9);
  if (!ds.ok)
    throw std::invalid_argument("spectral_split needs a Dunford-Schwartz operator (L1 norm " +
                                std::to_string(ds.l1_norm) + ", Linf norm " +
                                std::to_string(ds.linf_norm) + ")");

  Mat proj = Mat::Zero(d, d);
  if (r > 0) {
    Mat pairing_m = w_all.adjoint() * v_all;
    Eigen::JacobiSVD<Mat> psvd(pairing_m);
    double cond = psvd.singularValues()[0] / psvd.singularValues()[r - 1];
    if (!std::isfinite(cond) || cond > 1e10)
      throw std::runtime_error("unimodular left/right eigenvector pairing is singular "
                               "(defective unimodular spectrum)");
    proj = v_all * pairing_m.partialPivLu().solve(w_all.adjoint());
  }

  std::vector<Func> stable_basis;
  if (r < d) {
    Mat q = Mat::Identity(d, d) - proj;
    Eigen::JacobiSVD<Mat> qsvd(q, Eigen::ComputeThinU);
    for (int j = 0; j < d - r; ++j) stable_basis.emplace_back(sp, qsvd.matrixU().col(j));
  }

  return SpectralSplit{sp,
                       std::move(rev_basis),
                       std::move(rev_eigs),
                       std::move(stable_basis),
                       Operator(sp, std::move(proj)),
                       unimodular_tol};
}

std::pair<Func, Func> split_function(const SpectralSplit& s, const Func& f) {
  Func fr = apply(s.projector_r, f);
  return {fr, Func(f.space, f.values - fr.values)};
}

SplitVerification verify_split(const Operator& T, const SpectralSplit& s, int trials,
                               long long max_n, std::uint64_t seed) {
  require_compatible(T.space(), s.space, "verify_split");
  SplitVerification v;
  const int d = T.dim();
  const Mat& p = s.projector_r.entries();

  v.idempotency_error = Operator(s.space, p * p - p).norm_linf();
  v.commutation_error = Operator(s.space, p * T.entries() - T.entries() * p).norm_linf();
  for (std::size_t i = 0; i < s.reversible_basis.size(); ++i) {
    const Func& g = s.reversible_basis[i];
    Func res(s.space, T.entries() * g.values - s.reversible_eigenvalues[i] * g.values);
    v.max_eigen_residual = std::max(v.max_eigen_residual, norm_p(res, 2.0));
  }

  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    Vec fv(d), phiv(d);
    for (int i = 0; i < d; ++i) {
      fv[i] = rand_complex(rng);
      phiv[i] = rand_complex(rng);
    }
    Func f(s.space, fv), phi(s.space, phiv);
    auto [fr, fs] = split_function(s, f);
    Func back(s.space, f.values - fr.values - fs.values);
    v.max_reassembly_error = std::max(v.max_reassembly_error, norm_inf(back));

    if (s.dim_stable() == 0 || norm_inf(fs) < 1e-14) continue;
    DecayProfile prof;
    Func cur = fs;
    double acc = 0.0;
    long long next_checkpoint = 1;
    for (long long n = 1; n <= max_n; ++n) {
      cur = apply(T, cur);
      acc += std::abs(pairing(phi, cur));
      if (n == next_checkpoint) {
        prof.checkpoints.push_back(n);
        prof.values.push_back(acc / static_cast<double>(n));
        next_checkpoint *= 2;
      }
    }
    v.profiles.push_back(std::move(prof));
  }

  for (const auto& prof : v.profiles) {
    if (prof.values.empty() || prof.values.front() < 1e-14) continue;
    if (prof.values.back() > 0.05 * prof.values.front()) v.stable_decay_ok = false;
    std::size_t nv = prof.values.size();
    if (nv >= 3 && !(prof.values[nv - 1] <= prof.values[nv - 2] &&
                     prof.values[nv - 2] <= prof.values[nv - 3]))
      v.stable_decay_ok = false;
  }

  v.ok = v.idempotency_error <= 1e-9 && v.commutation_error <= 1e-9 &&
         v.max_eigen_residual <= 1e-9 && v.max_reassembly_error <= 1e-10 && v.stable_decay_ok;
  return v;
}

}  // namespace ergo
