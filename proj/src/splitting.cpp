#include "ergo/splitting.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "staged_sum.hpp"

namespace ergo {

namespace {

constexpr double kZeroOrbitTol = 1e-14;

double holder_conjugate(double p) {
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

Operator weighted_adjoint(const Operator& A) {
  const Eigen::VectorXd& mu = A.space()->weights();
  Mat adj = mu.cwiseInverse().asDiagonal() * A.entries().adjoint() * mu.asDiagonal();
  return Operator(A.space(), std::move(adj));
}

// Operator norm on L^p(mu). Exact for p in {1, 2, inf}; otherwise the
// Riesz-Thorin interpolation bound between the exact endpoint norms.
double lp_operator_norm(const Operator& M, double p) {
  if (p == 1.0) return operator_norm(M, OperatorNormKind::L1);
  if (std::isinf(p)) return operator_norm(M, OperatorNormKind::Linf);
  const Eigen::VectorXd& mu = M.space()->weights();
  if (p == 2.0) {
    Mat scaled = mu.cwiseSqrt().asDiagonal() * M.entries() *
                 mu.cwiseSqrt().cwiseInverse().asDiagonal();
    return Eigen::JacobiSVD<Mat>(scaled).singularValues()(0);
  }
  const double t = 1.0 / p;
  return std::pow(operator_norm(M, OperatorNormKind::L1), t) *
         std::pow(operator_norm(M, OperatorNormKind::Linf), 1.0 - t);
}

void require_ds(const Operator& T, const char* what) {
  DsReport rep = is_dunford_schwartz(T, 1e-9);
  if (!rep.ok) {
    std::ostringstream os;
    os << what << " needs a Dunford-Schwartz operator (L1 norm " << rep.l1_norm
       << ", Linf norm " << rep.linf_norm << ")";
    throw std::invalid_argument(os.str());
  }
}

std::vector<long long> plain_exps(long long N) {
  std::vector<long long> e(static_cast<std::size_t>(N));
  for (long long n = 1; n <= N; ++n) e[static_cast<std::size_t>(n - 1)] = n;
  return e;
}

}  // namespace

OrbitCertificate certify_orbit_compactness(const Operator& A, const Operator& T,
                                           const Func& f, double eps, long long n_orbit,
                                           double p) {
  require_compatible(A.space(), T.space(), "certify_orbit_compactness");
  require_compatible(A.space(), f.space, "certify_orbit_compactness");
  if (eps <= 0.0) throw std::invalid_argument("certify_orbit_compactness needs eps > 0");
  if (p < 1.0) throw std::invalid_argument("certify_orbit_compactness needs p >= 1");
  require_ds(T, "certify_orbit_compactness");
  const int d = A.dim();
  if (n_orbit <= 0) n_orbit = 4ll * d;

  const Eigen::VectorXd& mu = A.space()->weights();
  const Eigen::VectorXd sqrt_mu = mu.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt_mu = sqrt_mu.cwiseInverse();

  if (norm_inf(f) == 0.0) {
    // zero seed: the orbit is {0}; any one-dimensional subspace certifies it
    Vec b = Vec::Zero(d);
    b[0] = 1.0 / sqrt_mu[0];
    Mat comp = Mat::Zero(d, d - 1);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0 / sqrt_mu[i];
    Func unit(A.space(), b);
    return OrbitCertificate{0, f,    {unit}, {unit}, std::move(comp),
                            0.0, 0.0, n_orbit, p};
  }

  Mat X(d, n_orbit);
  Vec x = f.values;
  for (long long n = 1; n <= n_orbit; ++n) {
    x = T.entries() * x;
    X.col(n - 1) = A.entries() * x;
  }

  Eigen::JacobiSVD<Mat> svd(sqrt_mu.asDiagonal() * X, Eigen::ComputeFullU);
  const Mat& U = svd.matrixU();
  Mat G = U.adjoint() * (sqrt_mu.asDiagonal() * X);

  Mat R = X;
  int ell = d;
  double achieved = 0.0;
  for (int l = 1; l <= d; ++l) {
    R.noalias() -= (inv_sqrt_mu.asDiagonal() * U.col(l - 1)) * G.row(l - 1);
    achieved = R.cwiseAbs().maxCoeff();
    if (achieved <= eps || l == d) {
      ell = l;
      break;
    }
  }

  std::vector<Func> basis;
  basis.reserve(static_cast<std::size_t>(ell));
  for (int i = 0; i < ell; ++i)
    basis.emplace_back(A.space(), inv_sqrt_mu.asDiagonal() * U.col(i));
  Mat comp = inv_sqrt_mu.asDiagonal() * U.rightCols(d - ell);

  const double q = holder_conjugate(p);
  double max_dual = 0.0;
  for (const Func& phi : basis) max_dual = std::max(max_dual, dual_norm(phi, p));
  const double u_const = norm_p(f, p) * lp_operator_norm(weighted_adjoint(A), q) * max_dual;

  return OrbitCertificate{0,        f,       basis,   basis, std::move(comp),
                          achieved, u_const, n_orbit, p};
}

std::pair<std::vector<Complex>, Func> decompose_orbit_element(const OrbitCertificate& cert,
                                                              const Operator& A,
                                                              const Operator& T,
                                                              const Func& f, long long n) {
  require_compatible(A.space(), f.space, "decompose_orbit_element");
  if (n < 1) {
    std::ostringstream os;
    os << "decompose_orbit_element needs n >= 1, got n = " << n;
    throw std::invalid_argument(os.str());
  }
  Vec x = f.values;
  for (long long s = 0; s < n; ++s) x = T.entries() * x;
  Vec y = A.entries() * x;
  Func yf(A.space(), y);

  std::vector<Complex> lambda(cert.basis.size());
  Vec r = y;
  for (std::size_t i = 0; i < cert.basis.size(); ++i) {
    lambda[i] = pairing(cert.duals[i], yf);
    r -= lambda[i] * cert.basis[i].values;
  }
  return {std::move(lambda), Func(A.space(), std::move(r))};
}

SplittingTree build_splitting_tree(const EntangledProblem& p, const Func& f, double eps,
                                   SplitVariant variant, const SplitOptions& opts) {
  require_compatible(p.space, f.space, "build_splitting_tree");
  if (eps <= 0.0) throw std::invalid_argument("build_splitting_tree needs eps > 0");
  if (!p.joint_bound)
    throw std::invalid_argument(
        "build_splitting_tree needs a problem with a certified joint bound");
  const int m = p.ent.m;

  SplittingTree tree;
  tree.variant = variant;
  tree.epsilon = eps;
  tree.C = p.joint_bound->C;
  tree.c = eps * std::pow(tree.C, -m);
  tree.p_norm = opts.p;
  tree.m = m;
  tree.k = p.ent.k;
  tree.levels.assign(static_cast<std::size_t>(m), {});

  std::vector<std::optional<SpectralSplit>> splits(static_cast<std::size_t>(m) + 1);
  auto split_for_stage = [&](int j) -> const SpectralSplit& {
    auto& slot = splits[static_cast<std::size_t>(j)];
    if (!slot) slot = spectral_split(p.T[static_cast<std::size_t>(j - 1)]);
    return *slot;
  };

  auto attach_parts = [&](SplitNode& node) {
    if (variant != SplitVariant::Reversible) return;
    auto [fr, fs] = split_function(split_for_stage(node.depth + 1), node.seed);
    node.reversible_part = fr;
    node.stable_part = Func(p.space, node.seed.values - fr.values);
    (void)fs;
  };

  SplitNode root{{},      -1,  0,   f, std::nullopt, std::nullopt,
                 tree.c, 0.0, std::nullopt, {}};
  const double f_scale = std::max(1.0, norm_inf(f));
  if (variant == SplitVariant::Stable) {
    auto [fr, fs] = split_function(split_for_stage(1), f);
    if (norm_inf(fr) > 1e-9 * f_scale) {
      std::ostringstream os;
      os << "splitting seed must lie in the stable part of T_1 (reversible component "
         << norm_inf(fr) << ")";
      throw std::invalid_argument(os.str());
    }
  } else {
    auto [fr, fs] = split_function(split_for_stage(1), f);
    if (norm_inf(fs) > 1e-9 * f_scale) {
      std::ostringstream os;
      os << "splitting seed must lie in the reversible part of T_1 (stable component "
         << norm_inf(fs) << ")";
      throw std::invalid_argument(os.str());
    }
  }
  attach_parts(root);
  tree.nodes.push_back(std::move(root));
  tree.levels[0].push_back(0);

  for (int depth = 0; depth + 1 < m; ++depth) {
    for (int id : tree.levels[static_cast<std::size_t>(depth)]) {
      Func seed = tree.variant == SplitVariant::Reversible
                      ? *tree.nodes[static_cast<std::size_t>(id)].reversible_part
                      : tree.nodes[static_cast<std::size_t>(id)].seed;
      OrbitCertificate cert = certify_orbit_compactness(
          p.A[static_cast<std::size_t>(depth)], p.T[static_cast<std::size_t>(depth)], seed,
          tree.nodes[static_cast<std::size_t>(id)].c, opts.n_orbit, opts.p);
      cert.stage = depth + 1;
      SplitNode& node = tree.nodes[static_cast<std::size_t>(id)];
      node.u = cert.u_const;
      const int ell = cert.ell();
      const double c_child = node.c / (cert.u_const * ell);
      const double u = cert.u_const;
      node.cert = std::move(cert);
      if (u < kZeroOrbitTol) continue;  // zero orbit: every contribution below is 0
      for (int j = 1; j <= ell; ++j) {
        std::vector<int> idx = tree.nodes[static_cast<std::size_t>(id)].index;
        idx.push_back(j);
        SplitNode child{std::move(idx),
                        id,
                        depth + 1,
                        tree.nodes[static_cast<std::size_t>(id)].cert->basis
                            [static_cast<std::size_t>(j - 1)],
                        std::nullopt,
                        std::nullopt,
                        c_child,
                        0.0,
                        std::nullopt,
                        {}};
        attach_parts(child);
        const int child_id = static_cast<int>(tree.nodes.size());
        tree.nodes[static_cast<std::size_t>(id)].children.push_back(child_id);
        tree.levels[static_cast<std::size_t>(depth + 1)].push_back(child_id);
        tree.nodes.push_back(std::move(child));
      }
    }
  }
  return tree;
}

SplitBoundReport verify_splitting_bounds(const SplittingTree& tree,
                                         const EntangledProblem& p, const Func& f,
                                         long long N, const SplitOptions& opts) {
  require_compatible(p.space, f.space, "verify_splitting_bounds");
  if (N < 1) throw std::invalid_argument("verify_splitting_bounds needs N >= 1");
  if (tree.m != p.ent.m || tree.k != p.ent.k)
    throw std::invalid_argument("verify_splitting_bounds: tree does not match the problem");
  const int m = tree.m, k = tree.k;
  const auto& alpha = p.ent.alpha;
  const int d = p.dim();
  const std::size_t nn = tree.nodes.size();

  // One orbit walk per node that has children: coefficient sequences for
  // every child edge, and (Reversible) the per-n remainder vectors.
  std::vector<std::vector<std::vector<Complex>>> edge_lambda(nn);
  std::vector<std::vector<Vec>> remainders(nn);
  for (std::size_t v = 0; v < nn; ++v) {
    const SplitNode& node = tree.nodes[v];
    if (!node.cert || node.children.empty()) continue;
    const OrbitCertificate& cert = *node.cert;
    const Operator& T = p.T[static_cast<std::size_t>(node.depth)];
    const Operator& A = p.A[static_cast<std::size_t>(node.depth)];
    edge_lambda[v].assign(cert.basis.size(),
                          std::vector<Complex>(static_cast<std::size_t>(N)));
    if (tree.variant == SplitVariant::Reversible)
      remainders[v].assign(static_cast<std::size_t>(N), Vec());
    Vec x = cert.seed.values;
    for (long long n = 1; n <= N; ++n) {
      x = T.entries() * x;
      Vec y = A.entries() * x;
      Func yf(p.space, y);
      Vec r = y;
      for (std::size_t i = 0; i < cert.basis.size(); ++i) {
        const Complex lam = pairing(cert.duals[i], yf);
        edge_lambda[v][i][static_cast<std::size_t>(n - 1)] = lam;
        if (tree.variant == SplitVariant::Reversible) r -= lam * cert.basis[i].values;
      }
      if (tree.variant == SplitVariant::Reversible)
        remainders[v][static_cast<std::size_t>(n - 1)] = std::move(r);
    }
  }

  SplitBoundReport report;
  report.variant = tree.variant;
  report.N = N;

  if (tree.variant == SplitVariant::Stable) {
    // sum over certified nodes of C^m c_w times the Cesaro mean of the
    // |lambda| products along the path; the product factors per variable
    double lhs = 0.0;
    for (std::size_t v = 0; v < nn; ++v) {
      if (!tree.nodes[v].cert) continue;
      std::vector<std::vector<double>> per_var(static_cast<std::size_t>(k) + 1);
      for (int cur = static_cast<int>(v); tree.nodes[static_cast<std::size_t>(cur)].parent >= 0;
           cur = tree.nodes[static_cast<std::size_t>(cur)].parent) {
        const SplitNode& nd = tree.nodes[static_cast<std::size_t>(cur)];
        const int var = alpha[static_cast<std::size_t>(nd.depth - 1)];
        const auto& lam =
            edge_lambda[static_cast<std::size_t>(nd.parent)]
                       [static_cast<std::size_t>(nd.index.back() - 1)];
        auto& acc = per_var[static_cast<std::size_t>(var)];
        if (acc.empty()) acc.assign(static_cast<std::size_t>(N), 1.0);
        for (std::size_t n = 0; n < acc.size(); ++n) acc[n] *= std::abs(lam[n]);
      }
      double factor = 1.0;
      for (int var = 1; var <= k; ++var) {
        const auto& acc = per_var[static_cast<std::size_t>(var)];
        if (acc.empty()) continue;
        double mean = 0.0;
        for (double a : acc) mean += a;
        factor *= mean / static_cast<double>(N);
      }
      lhs += std::pow(tree.C, m) * tree.nodes[v].c * factor;
    }
    report.measured = lhs;
    report.budget = tree.epsilon;
    return report;
  }

  // Reversible: aggregate the remainder-term sums of every certified node
  // and take the L^inf norm. Childless certified nodes have zero orbits,
  // hence identically zero remainders, and are skipped exactly.
  Vec aggregate = Vec::Zero(d);
  const std::vector<long long> exps = plain_exps(N);
  for (std::size_t v = 0; v < nn; ++v) {
    const SplitNode& node = tree.nodes[v];
    if (!node.cert || node.children.empty()) continue;

    std::vector<int> chain;  // ancestors of v below the root, top down, then v
    for (int cur = static_cast<int>(v); tree.nodes[static_cast<std::size_t>(cur)].parent >= 0;
         cur = tree.nodes[static_cast<std::size_t>(cur)].parent)
      chain.push_back(cur);
    std::reverse(chain.begin(), chain.end());

    std::vector<detail::Stage> stages;
    for (int x : chain) {
      const SplitNode& nd = tree.nodes[static_cast<std::size_t>(x)];
      detail::Stage s;
      s.kind = detail::Stage::Kind::Scalar;
      s.var = alpha[static_cast<std::size_t>(nd.depth - 1)];
      s.coeffs = edge_lambda[static_cast<std::size_t>(nd.parent)]
                            [static_cast<std::size_t>(nd.index.back() - 1)];
      stages.push_back(std::move(s));
    }
    {
      detail::Stage s;
      s.kind = detail::Stage::Kind::Seed;
      s.var = alpha[static_cast<std::size_t>(node.depth)];
      s.seeds = &remainders[v];
      stages.push_back(std::move(s));
    }
    for (int j = node.depth + 2; j <= m; ++j) {
      detail::Stage s;
      s.kind = detail::Stage::Kind::Operator;
      s.var = alpha[static_cast<std::size_t>(j - 1)];
      s.pow = &p.T[static_cast<std::size_t>(j - 1)];
      if (j < m) s.post = &p.A[static_cast<std::size_t>(j - 1)];
      s.exps = exps;
      stages.push_back(std::move(s));
    }

    Vec init(1);
    init[0] = Complex(1.0);
    aggregate += detail::staged_sum(stages, init, N, opts.parallel);
  }
  report.measured = aggregate.size() > 0 ? aggregate.cwiseAbs().maxCoeff() : 0.0;
  report.budget = tree.epsilon * std::max(0, m - 2);
  return report;
}

}  // namespace ergo
