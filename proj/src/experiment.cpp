#include "ergo/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "ergo/jdlg.hpp"

namespace fs = std::filesystem;

namespace ergo {
namespace {

[[noreturn]] void fail(const std::string& what, const std::string& msg) {
  throw ValidationError("config field \"" + what + "\": " + msg);
}

const Json& need(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key))
    fail(what, std::string("missing \"") + key + "\"");
  return j.at(key);
}

double need_number(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(what, "expected a number");
  return j.get<double>();
}

long long need_int(const Json& j, const std::string& what) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(what, "expected an integer");
  return j.get<long long>();
}

std::string need_string(const Json& j, const std::string& what) {
  if (!j.is_string()) fail(what, "expected a string");
  return j.get<std::string>();
}

Complex complex_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  fail(what, "expected a number or an [re, im] pair");
}

std::vector<Complex> complex_list(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(what, "expected an array");
  std::vector<Complex> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(complex_from_json(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

std::string fmt17(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

Func random_unit(const SpacePtr& sp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1p-53; };
  Vec v(sp->dim());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = Complex(2.0 * u() - 1.0, 2.0 * u() - 1.0);
  Func f(sp, v);
  const double nrm = norm_p(f, 2.0);
  if (nrm > 0.0) f.values /= nrm;
  return f;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ValidationError("cannot write " + p.string());
  os << body;
  if (!os) throw ValidationError("write failed for " + p.string());
}

void write_json(const fs::path& p, const Json& j) { write_file(p, j.dump(2) + "\n"); }

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const Json& normalized) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(normalized.dump());
  return os.str();
}

Json read_json_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read " + path);
  Json j;
  try {
    is >> j;
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return j;
}

SpacePtr space_from_descriptor(const Json& desc) {
  if (!desc.is_object()) fail("space", "expected an object");
  if (desc.contains("uniform")) {
    const long long d = need_int(desc.at("uniform"), "space.uniform");
    if (d < 1) fail("space.uniform", "dimension must be positive");
    return uniform_space(static_cast<int>(d));
  }
  if (desc.contains("mu")) {
    const Json& arr = desc.at("mu");
    if (!arr.is_array() || arr.empty()) fail("space.mu", "expected a nonempty array");
    std::vector<double> mu(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
      mu[i] = need_number(arr[i], "space.mu[" + std::to_string(i) + "]");
    return make_space(mu);
  }
  fail("space", "expected \"uniform\" or \"mu\"");
}

Operator operator_from_descriptor(const SpacePtr& sp, const Json& desc,
                                  std::uint64_t default_seed, const std::string& what) {
  if (!desc.is_object()) fail(what, "expected an object");
  const std::string kind = need_string(need(desc, "kind", what), what + ".kind");
  const int d = sp->dim();
  try {
    if (kind == "matrix") {
      const Json& ent = need(desc, "entries", what);
      if (!ent.is_array() || static_cast<int>(ent.size()) != d * d)
        fail(what + ".entries", "expected " + std::to_string(d * d) +
                                    " row-major entries for dimension " + std::to_string(d));
      Mat M(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          M(r, c) = complex_from_json(ent[static_cast<std::size_t>(r * d + c)],
                                      what + ".entries[" + std::to_string(r * d + c) + "]");
      return Operator(sp, M);
    }
    if (kind == "koopman") {
      const Json& mp = need(desc, "map", what);
      if (!mp.is_array() || static_cast<int>(mp.size()) != d)
        fail(what + ".map", "expected " + std::to_string(d) + " atom indices");
      std::vector<int> sigma(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) {
        const long long s =
            need_int(mp[static_cast<std::size_t>(i)], what + ".map[" + std::to_string(i) + "]");
        if (s < 0 || s >= d)
          fail(what + ".map[" + std::to_string(i) + "]", "atom index out of range");
        sigma[static_cast<std::size_t>(i)] = static_cast<int>(s);
      }
      return koopman_from_map(sp, sigma);
    }
    if (kind == "volterra") {
      if (desc.contains("d") && need_int(desc.at("d"), what + ".d") != d)
        fail(what + ".d", "does not match the space dimension " + std::to_string(d));
      return Operator(sp, volterra_discrete(d).entries());
    }
    if (kind == "random_ds") {
      const std::uint64_t seed =
          desc.contains("seed")
              ? static_cast<std::uint64_t>(need_int(desc.at("seed"), what + ".seed"))
              : default_seed;
      const std::string flavor =
          desc.contains("flavor") ? need_string(desc.at("flavor"), what + ".flavor")
                                  : std::string("doubly_stochastic");
      RandomDsKind k;
      if (flavor == "doubly_stochastic")
        k = RandomDsKind::DoublyStochastic;
      else if (flavor == "signed")
        k = RandomDsKind::SignedContraction;
      else
        fail(what + ".flavor", "expected \"doubly_stochastic\" or \"signed\"");
      return Operator(sp, random_ds(d, seed, k).entries());
    }
    if (kind == "identity") return identity_op(sp);
    if (kind == "scale") {
      const Complex factor = complex_from_json(need(desc, "factor", what), what + ".factor");
      return scale(operator_from_descriptor(sp, need(desc, "of", what), default_seed,
                                            what + ".of"),
                   factor);
    }
  } catch (const std::invalid_argument& e) {
    fail(what, e.what());
  }
  fail(what + ".kind", "unknown operator kind \"" + kind + "\"");
}

Func func_from_descriptor(const SpacePtr& sp, const Json& desc, std::uint64_t default_seed,
                          const std::string& what) {
  if (!desc.is_object()) fail(what, "expected an object");
  const std::string kind = need_string(need(desc, "kind", what), what + ".kind");
  const int d = sp->dim();
  if (kind == "values") {
    const Json& re = need(desc, "re", what);
    if (!re.is_array() || static_cast<int>(re.size()) != d)
      fail(what + ".re", "expected " + std::to_string(d) + " entries");
    Vec v(d);
    for (int i = 0; i < d; ++i)
      v[i] = Complex(need_number(re[static_cast<std::size_t>(i)],
                                 what + ".re[" + std::to_string(i) + "]"),
                     0.0);
    if (desc.contains("im")) {
      const Json& im = desc.at("im");
      if (!im.is_array() || static_cast<int>(im.size()) != d)
        fail(what + ".im", "expected " + std::to_string(d) + " entries");
      for (int i = 0; i < d; ++i)
        v[i] += Complex(0.0, need_number(im[static_cast<std::size_t>(i)],
                                         what + ".im[" + std::to_string(i) + "]"));
    }
    return Func(sp, v);
  }
  if (kind == "random") {
    const std::uint64_t seed =
        desc.contains("seed")
            ? static_cast<std::uint64_t>(need_int(desc.at("seed"), what + ".seed"))
            : default_seed;
    return random_unit(sp, seed);
  }
  if (kind == "fourier") {
    const long long block =
        desc.contains("block_dim") ? need_int(desc.at("block_dim"), what + ".block_dim")
                                   : d;
    const long long offset =
        desc.contains("offset") ? need_int(desc.at("offset"), what + ".offset") : 0;
    if (block < 1 || offset < 0 || offset + block > d)
      fail(what, "block [" + std::to_string(offset) + ", " +
                     std::to_string(offset + block) + ") does not fit dimension " +
                     std::to_string(d));
    const Json& modes = need(desc, "modes", what);
    if (!modes.is_array() || modes.empty()) fail(what + ".modes", "expected a nonempty array");
    Vec v = Vec::Zero(d);
    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
      const std::string mw = what + ".modes[" + std::to_string(mi) + "]";
      const Json& mode = modes[mi];
      if (!mode.is_object()) fail(mw, "expected an object");
      const long long j = need_int(need(mode, "j", mw), mw + ".j");
      const Complex coeff = mode.contains("coeff")
                                ? complex_from_json(mode.at("coeff"), mw + ".coeff")
                                : Complex(1.0);
      for (long long i = 0; i < block; ++i)
        v[offset + i] += coeff * std::polar(1.0, 2.0 * M_PI * static_cast<double>(j * i) /
                                                     static_cast<double>(block));
    }
    return Func(sp, v);
  }
  fail(what + ".kind", "unknown function kind \"" + kind + "\"");
}

WeightSequence weight_from_descriptor(const SpacePtr& sp, const Json& desc,
                                      std::uint64_t default_seed, const std::string& what) {
  if (!desc.is_object()) fail(what, "expected an object");
  const std::string kind = need_string(need(desc, "kind", what), what + ".kind");
  try {
    if (kind == "trig_poly")
      return WeightSequence::trig_poly(complex_list(need(desc, "b", what), what + ".b"),
                                       complex_list(need(desc, "rho", what), what + ".rho"));
    if (kind == "explicit")
      return WeightSequence::explicit_values(
          complex_list(need(desc, "values", what), what + ".values"));
    if (kind == "linear") {
      Operator T = operator_from_descriptor(sp, need(desc, "operator", what), default_seed,
                                            what + ".operator");
      Func y = func_from_descriptor(sp, need(desc, "y", what), default_seed, what + ".y");
      Func phi =
          func_from_descriptor(sp, need(desc, "phi", what), default_seed, what + ".phi");
      const std::string tag = need_string(need(desc, "tag", what), what + ".tag");
      if (tag != "stable" && tag != "reversible")
        fail(what + ".tag", "expected \"stable\" or \"reversible\"");
      return WeightSequence::linear(
          T, y, phi, tag == "stable" ? LinearTag::Stable : LinearTag::Reversible);
    }
    if (kind == "product") {
      const Json& fac = need(desc, "factors", what);
      if (!fac.is_array() || fac.empty()) fail(what + ".factors", "expected a nonempty array");
      std::vector<WeightSequence> factors;
      for (std::size_t i = 0; i < fac.size(); ++i)
        factors.push_back(weight_from_descriptor(sp, fac[i], default_seed,
                                                 what + ".factors[" + std::to_string(i) + "]"));
      return WeightSequence::product(std::move(factors));
    }
  } catch (const std::invalid_argument& e) {
    fail(what, e.what());
  }
  fail(what + ".kind", "unknown weight kind \"" + kind + "\"");
}

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("config root must be a JSON object");
  static const std::set<std::string> known = {
      "name",  "space",       "operators", "connectors", "alpha", "k",       "f", "weights",
      "polynomials", "variant", "epsilon",  "schedule",   "seed",  "horizon", "out"};
  for (const auto& item : doc.items())
    if (!known.count(item.key()))
      throw ValidationError("unknown config field \"" + item.key() + "\"");

  ExperimentConfig cfg;
  cfg.name = doc.contains("name") ? need_string(doc.at("name"), "name") : "experiment";
  cfg.seed = doc.contains("seed")
                 ? static_cast<std::uint64_t>(need_int(doc.at("seed"), "seed"))
                 : 0;
  cfg.horizon = doc.contains("horizon") ? need_int(doc.at("horizon"), "horizon") : 64;
  if (cfg.horizon < 1) fail("horizon", "must be positive");
  cfg.epsilon = doc.contains("epsilon") ? need_number(doc.at("epsilon"), "epsilon") : 1e-2;
  if (!(cfg.epsilon > 0.0)) fail("epsilon", "must be positive");
  cfg.out = doc.contains("out") ? need_string(doc.at("out"), "out") : "";

  cfg.space = space_from_descriptor(need(doc, "space", "space"));

  if (doc.contains("schedule")) {
    const Json& sch = doc.at("schedule");
    if (!sch.is_array() || sch.empty()) fail("schedule", "expected a nonempty array");
    for (std::size_t i = 0; i < sch.size(); ++i) {
      const long long n = need_int(sch[i], "schedule[" + std::to_string(i) + "]");
      if (n < 1) fail("schedule[" + std::to_string(i) + "]", "checkpoints must be positive");
      if (!cfg.schedule.empty() && n <= cfg.schedule.back())
        fail("schedule[" + std::to_string(i) + "]",
             "checkpoints must be strictly increasing");
      cfg.schedule.push_back(n);
    }
  } else {
    cfg.schedule = {16, 64, 256};
  }

  const Json& ops = need(doc, "operators", "operators");
  if (!ops.is_array() || ops.empty()) fail("operators", "expected a nonempty array");
  const int m = static_cast<int>(ops.size());
  std::vector<Operator> T;
  for (int j = 0; j < m; ++j)
    T.push_back(operator_from_descriptor(cfg.space, ops[static_cast<std::size_t>(j)],
                                         cfg.seed, "operators[" + std::to_string(j) + "]"));

  std::vector<Operator> A;
  if (doc.contains("connectors")) {
    const Json& con = doc.at("connectors");
    if (!con.is_array()) fail("connectors", "expected an array");
    if (static_cast<int>(con.size()) != m - 1)
      fail("connectors", "expected " + std::to_string(m - 1) + " entries for " +
                             std::to_string(m) + " operators, got " +
                             std::to_string(con.size()));
    for (std::size_t j = 0; j < con.size(); ++j)
      A.push_back(operator_from_descriptor(cfg.space, con[j], cfg.seed,
                                           "connectors[" + std::to_string(j) + "]"));
  } else if (m > 1) {
    fail("connectors", "required when more than one operator is given");
  }

  const Json& al = need(doc, "alpha", "alpha");
  if (!al.is_array() || static_cast<int>(al.size()) != m)
    fail("alpha", "expected one entry per operator (" + std::to_string(m) + ")");
  std::vector<int> alpha;
  long long max_alpha = 0;
  for (std::size_t i = 0; i < al.size(); ++i) {
    const long long a = need_int(al[i], "alpha[" + std::to_string(i) + "]");
    max_alpha = std::max(max_alpha, a);
    alpha.push_back(static_cast<int>(a));
  }
  const long long k = doc.contains("k") ? need_int(doc.at("k"), "k") : max_alpha;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] < 1 || alpha[i] > k)
      fail("alpha[" + std::to_string(i) + "]", "entry " + std::to_string(alpha[i]) +
                                                   " lies outside 1..k with k = " +
                                                   std::to_string(k));

  try {
    cfg.problem.emplace(cfg.space, std::move(T), std::move(A),
                        EntanglementMap(m, static_cast<int>(k), alpha));
    cfg.problem->joint_bound = certify_joint_bound(*cfg.problem, cfg.horizon);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("config problem: ") + e.what());
  }

  if (doc.contains("f"))
    cfg.f = func_from_descriptor(cfg.space, doc.at("f"), cfg.seed, "f");

  if (doc.contains("weights")) {
    const Json& ws = doc.at("weights");
    if (!ws.is_array()) fail("weights", "expected an array");
    for (std::size_t i = 0; i < ws.size(); ++i)
      cfg.weights.push_back(weight_from_descriptor(cfg.space, ws[i], cfg.seed,
                                                   "weights[" + std::to_string(i) + "]"));
  }

  if (doc.contains("polynomials")) {
    const Json& ps = doc.at("polynomials");
    if (!ps.is_array() || static_cast<long long>(ps.size()) != k)
      fail("polynomials",
           "need one exponent polynomial per index variable (k = " + std::to_string(k) + ")");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string pw = "polynomials[" + std::to_string(i) + "]";
      if (!ps[i].is_array() || ps[i].empty()) fail(pw, "expected a nonempty coefficient array");
      IntPolynomial poly;
      for (std::size_t c = 0; c < ps[i].size(); ++c)
        poly.coeffs.push_back(need_int(ps[i][c], pw + "[" + std::to_string(c) + "]"));
      cfg.polynomials.push_back(std::move(poly));
    }
  }

  if (doc.contains("variant")) {
    const std::string v = need_string(doc.at("variant"), "variant");
    if (v == "stable")
      cfg.variant = SplitVariant::Stable;
    else if (v == "reversible")
      cfg.variant = SplitVariant::Reversible;
    else
      fail("variant", "expected \"stable\" or \"reversible\"");
  }

  Json norm;
  norm["name"] = cfg.name;
  norm["space"] = doc.at("space");
  norm["operators"] = doc.at("operators");
  norm["connectors"] = doc.contains("connectors") ? doc.at("connectors") : Json::array();
  norm["alpha"] = doc.at("alpha");
  norm["k"] = k;
  if (cfg.f) norm["f"] = doc.at("f");
  if (!cfg.weights.empty()) norm["weights"] = doc.at("weights");
  if (!cfg.polynomials.empty()) norm["polynomials"] = doc.at("polynomials");
  if (doc.contains("variant")) norm["variant"] = doc.at("variant");
  norm["epsilon"] = cfg.epsilon;
  norm["schedule"] = cfg.schedule;
  norm["seed"] = cfg.seed;
  norm["horizon"] = cfg.horizon;
  cfg.doc = std::move(norm);
  cfg.hash = config_hash(cfg.doc);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_json_file(path));
}

namespace {

std::vector<std::string> run_simulate(const ExperimentConfig& cfg, const fs::path& dir) {
  if (!cfg.f) throw ValidationError("simulate needs config field \"f\"");
  const TrajectoryVariant variant =
      cfg.polynomials.empty() ? TrajectoryVariant::Plain : TrajectoryVariant::Polynomial;
  const auto traj =
      average_trajectory(*cfg.problem, *cfg.f, cfg.schedule, variant, cfg.polynomials);

  std::ostringstream csv;
  csv << "N,atom,re,im,linf,cauchy_gap\n";
  Json summary = Json::array();
  for (const TrajectoryPoint& pt : traj) {
    for (int a = 0; a < pt.value.dim(); ++a)
      csv << pt.N << ',' << a << ',' << fmt17(pt.value.values[a].real()) << ','
          << fmt17(pt.value.values[a].imag()) << ',' << fmt17(pt.linf) << ','
          << fmt17(pt.cauchy_gap) << '\n';
    summary.push_back({{"N", pt.N}, {"linf", pt.linf}, {"cauchy_gap", pt.cauchy_gap}});
  }
  write_file(dir / "trajectory.csv", csv.str());
  write_json(dir / "summary.json", summary);
  return {"trajectory.csv", "summary.json"};
}

std::vector<std::string> run_decompose(const ExperimentConfig& cfg, const fs::path& dir) {
  Json out = Json::array();
  for (std::size_t j = 0; j < cfg.problem->T.size(); ++j) {
    const SpectralSplit s = spectral_split(cfg.problem->T[j]);
    Json eig = Json::array();
    for (const Complex& lam : s.reversible_eigenvalues) eig.push_back(complex_to_json(lam));
    Json basis = Json::array();
    for (const Func& g : s.reversible_basis) {
      Json vec = Json::array();
      for (Eigen::Index i = 0; i < g.values.size(); ++i)
        vec.push_back(complex_to_json(g.values[i]));
      basis.push_back(std::move(vec));
    }
    out.push_back({{"stage", j + 1},
                   {"dim_reversible", s.dim_reversible()},
                   {"dim_stable", s.dim_stable()},
                   {"eigenvalues", std::move(eig)},
                   {"basis", std::move(basis)}});
  }
  write_json(dir / "decompose.json", out);
  return {"decompose.json"};
}

std::vector<std::string> run_split(const ExperimentConfig& cfg, const fs::path& dir) {
  if (!cfg.f) throw ValidationError("split needs config field \"f\"");
  if (!cfg.variant) throw ValidationError("split needs config field \"variant\"");
  const SplittingTree tree =
      build_splitting_tree(*cfg.problem, *cfg.f, cfg.epsilon, *cfg.variant);

  Json nodes = Json::array();
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const SplitNode& nd = tree.nodes[v];
    Json entry = {{"id", v},          {"parent", nd.parent}, {"depth", nd.depth},
                  {"ell", nd.ell()},  {"c", nd.c},           {"u", nd.u}};
    entry["epsilon_achieved"] = nd.cert ? Json(nd.cert->epsilon_achieved) : Json();
    nodes.push_back(std::move(entry));
  }
  const Json tj = {{"variant", *cfg.variant == SplitVariant::Stable ? "stable" : "reversible"},
                   {"epsilon", tree.epsilon},
                   {"C", tree.C},
                   {"c", tree.c},
                   {"p_norm", tree.p_norm},
                   {"m", tree.m},
                   {"k", tree.k},
                   {"nodes", nodes}};
  write_json(dir / "tree.json", tj);

  Json reports = Json::array();
  for (long long N : cfg.schedule) {
    const SplitBoundReport rep = verify_splitting_bounds(tree, *cfg.problem, *cfg.f, N);
    reports.push_back({{"N", N}, {"measured", rep.measured}, {"budget", rep.budget}});
  }
  write_json(dir / "verify.json", reports);
  return {"tree.json", "verify.json"};
}

std::vector<std::string> run_weights(const ExperimentConfig& cfg, const fs::path& dir) {
  if (cfg.weights.empty())
    throw ValidationError("weights subcommand needs a nonempty \"weights\" list");
  std::vector<std::string> files;
  for (std::size_t i = 0; i < cfg.weights.size(); ++i) {
    std::ostringstream csv;
    csv << "N,estimate\n";
    for (long long N : cfg.schedule)
      csv << N << ',' << fmt17(besicovitch_seminorm(cfg.weights[i], 1.0, std::nullopt, N))
          << '\n';
    const std::string name = "weights_" + std::to_string(i + 1) + ".csv";
    write_file(dir / name, csv.str());
    files.push_back(name);
  }
  return files;
}

std::vector<std::string> run_check(const ExperimentConfig& cfg, const fs::path& dir,
                                   Json& checks) {
  Json items = Json::array();
  bool all = true;
  auto add = [&](const std::string& name, bool pass, double detail) {
    items.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
    all = all && pass;
  };

  const EntangledProblem& p = *cfg.problem;
  for (std::size_t j = 0; j < p.T.size(); ++j) {
    const DsReport rep = is_dunford_schwartz(p.T[j], 1e-9);
    add("T_" + std::to_string(j + 1) + " dunford_schwartz", rep.ok,
        std::max(rep.l1_norm, rep.linf_norm));
  }
  add("joint bound certified", p.joint_bound && p.joint_bound->C >= 1.0,
      p.joint_bound ? p.joint_bound->C : 0.0);

  for (std::size_t j = 0; j < p.T.size(); ++j) {
    const SpectralSplit s = spectral_split(p.T[j]);
    // the 5% profile threshold needs roughly 20/(1-r) steps at decay rate r;
    // 256 covers rates up to ~0.9 with margin
    const SplitVerification v =
        verify_split(p.T[j], s, 4, 256, cfg.seed + static_cast<std::uint64_t>(j));
    add("T_" + std::to_string(j + 1) + " jdlg split", v.ok,
        std::max({v.idempotency_error, v.commutation_error, v.max_eigen_residual}));
  }

  if (cfg.f) {
    const long long N = p.ent.k <= 2 ? 8 : 4;
    const Func fast = entangled_average(p, *cfg.f, N);
    const Func slow = naive_average(p, *cfg.f, N);
    const double diff = norm_inf(Func(cfg.space, fast.values - slow.values));
    add("engine elimination matches naive", diff <= 1e-10, diff);
    if (!cfg.polynomials.empty()) {
      const Func pf = polynomial_entangled_average(p, *cfg.f, cfg.polynomials, N);
      const Func pn = naive_polynomial_average(p, *cfg.f, cfg.polynomials, N);
      const double pdiff = norm_inf(Func(cfg.space, pf.values - pn.values));
      add("polynomial elimination matches naive", pdiff <= 1e-10, pdiff);
    }
  }

  for (std::size_t i = 0; i < cfg.weights.size(); ++i) {
    const auto vals = cfg.weights[i].eval(16);
    bool finite = static_cast<long long>(vals.size()) == 16;
    for (const Complex& z : vals)
      finite = finite && std::isfinite(z.real()) && std::isfinite(z.imag());
    add("weights[" + std::to_string(i) + "] evaluates", finite, static_cast<double>(vals.size()));
  }

  if (cfg.variant && cfg.f) {
    const SplittingTree tree = build_splitting_tree(p, *cfg.f, cfg.epsilon, *cfg.variant);
    double tel_err = 0.0;
    bool budgets = true;
    for (const SplitNode& nd : tree.nodes) {
      if (nd.cert) budgets = budgets && nd.cert->epsilon_achieved <= nd.c;
      if (nd.children.empty()) continue;
      double sum = 0.0;
      for (int ch : nd.children) sum += tree.nodes[static_cast<std::size_t>(ch)].c * nd.u;
      tel_err = std::max(tel_err, std::abs(sum - nd.c) / nd.c);
    }
    add("splitting telescoping", tel_err <= 1e-12, tel_err);
    add("splitting certificate budgets", budgets, tree.epsilon);
    const SplitBoundReport rep = verify_splitting_bounds(tree, p, *cfg.f, 16);
    if (*cfg.variant == SplitVariant::Reversible && tree.m >= 3)
      add("splitting remainder bound", rep.measured <= rep.budget, rep.measured);
    else
      add("splitting report finite", std::isfinite(rep.measured), rep.measured);
  }

  checks = Json{{"all_pass", all}, {"items", items}};
  write_json(dir / "check.json", checks);
  return {"check.json"};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& subcommand,
                         const std::string& out_dir, bool force) {
  static const std::set<std::string> subs = {"simulate", "decompose", "split", "weights",
                                             "check"};
  if (!subs.count(subcommand))
    throw ValidationError("unknown subcommand \"" + subcommand + "\"");

  const std::string root =
      !out_dir.empty() ? out_dir : (!cfg.out.empty() ? cfg.out : std::string("results"));
  const fs::path dir = fs::path(root) / cfg.hash;
  if (fs::exists(dir / "manifest.json") && !force)
    throw ValidationError("results for config " + cfg.hash + " already exist at " +
                          dir.string() + "; pass --force to replace them");
  fs::create_directories(dir);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> files;
  Json checks;
  if (subcommand == "simulate") files = run_simulate(cfg, dir);
  if (subcommand == "decompose") files = run_decompose(cfg, dir);
  if (subcommand == "split") files = run_split(cfg, dir);
  if (subcommand == "weights") files = run_weights(cfg, dir);
  if (subcommand == "check") files = run_check(cfg, dir, checks);
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json manifest = {{"artifact_version", 1},
                   {"command", subcommand},
                   {"name", cfg.name},
                   {"config", cfg.doc},
                   {"config_hash", cfg.hash},
                   {"files", files},
                   {"wall_clock_seconds", dt},
                   {"pass", checks.is_null() ? true : checks.at("all_pass").get<bool>()}};
  if (!checks.is_null()) manifest["checks"] = checks;
  write_json(dir / "manifest.json", manifest);
  return {dir.string(), manifest};
}

void validate_manifest(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const Json man = read_json_file((dir / "manifest.json").string());
  for (const char* key : {"artifact_version", "command", "config", "config_hash", "files"})
    if (!man.contains(key))
      throw ValidationError("manifest at " + run_dir + " is missing \"" + key + "\"");
  if (config_hash(man.at("config")) != man.at("config_hash").get<std::string>())
    throw ValidationError("manifest at " + run_dir + " does not match its config hash");
  for (const Json& f : man.at("files")) {
    const fs::path p = dir / f.get<std::string>();
    if (!fs::exists(p)) throw ValidationError("manifest lists missing file " + p.string());
    if (p.extension() == ".json") read_json_file(p.string());
  }
}

}  // namespace ergo
