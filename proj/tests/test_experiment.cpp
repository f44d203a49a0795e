#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ergo/engine.hpp"
#include "ergo/experiment.hpp"
#include "ergo/jdlg.hpp"
#include "ergo/operators.hpp"
#include "ergo/splitting.hpp"
#include "ergo/weights.hpp"
#include "reference_problem.hpp"

namespace fs = std::filesystem;
using ergo::Complex;
using ergo::Json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path fresh_out(const std::string& label) {
  fs::path dir = fs::temp_directory_path() / ("ergo_test_" + label);
  fs::remove_all(dir);
  return dir;
}

Json minimal_config() {
  return Json::parse(R"({
    "space": {"uniform": 4},
    "operators": [{"kind": "identity"}],
    "alpha": [1]
  })");
}

// The three-stage reference problem as a config document, with the operator
// matrices serialized entry by entry.
Json reference_config() {
  auto sp = ergo::uniform_space(16);
  auto p = refprob::reference_problem();
  Json ops = Json::array();
  for (const ergo::Operator& T : p.T) {
    Json entries = Json::array();
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        entries.push_back({T.entries()(r, c).real(), T.entries()(r, c).imag()});
    ops.push_back({{"kind", "matrix"}, {"entries", entries}});
  }
  Json doc;
  doc["space"] = {{"uniform", 16}};
  doc["operators"] = ops;
  doc["connectors"] = {{{"kind", "volterra"}}, {{"kind", "volterra"}}};
  doc["alpha"] = {1, 2, 1};
  doc["f"] = {{"kind", "fourier"},
              {"block_dim", 8},
              {"offset", 0},
              {"modes", Json::array({{{"j", 1}}, {{"j", 2}, {"coeff", {0.7, 0.0}}}})}};
  doc["variant"] = "reversible";
  doc["epsilon"] = 1e-2;
  doc["schedule"] = {16, 64};
  return doc;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(ergo::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(ergo::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(ergo::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config hashing is stable under key permutation and default filling") {
  const Json a = Json::parse(R"({
    "space": {"uniform": 4},
    "operators": [{"kind": "identity"}],
    "alpha": [1],
    "seed": 0
  })");
  const Json b = Json::parse(R"({
    "alpha": [1],
    "operators": [{"kind": "identity"}],
    "space": {"uniform": 4}
  })");
  const auto ca = ergo::parse_config(a);
  const auto cb = ergo::parse_config(b);
  CHECK(ca.hash == cb.hash);
  CHECK(ca.hash.size() == 16);

  Json c = minimal_config();
  c["seed"] = 5;
  CHECK(ergo::parse_config(c).hash != ca.hash);

  // the output root is not part of the identity
  Json d = minimal_config();
  d["out"] = "elsewhere";
  CHECK(ergo::parse_config(d).hash == ca.hash);
}

TEST_CASE("parse_config validates eagerly with named errors") {
  const auto cfg = ergo::parse_config(minimal_config());
  REQUIRE(cfg.problem.has_value());
  CHECK(cfg.problem->ent.m == 1);
  CHECK(cfg.problem->ent.k == 1);
  REQUIRE(cfg.problem->joint_bound.has_value());
  CHECK(cfg.problem->joint_bound->C == 1.0);
  CHECK(cfg.schedule == std::vector<long long>{16, 64, 256});

  Json bad = minimal_config();
  bad["operators"] = {{{"kind", "identity"}}, {{"kind", "identity"}}};
  bad["connectors"] = {{{"kind", "identity"}}};
  bad["alpha"] = {1, 3};
  bad["k"] = 2;
  CHECK_THROWS_WITH_AS(ergo::parse_config(bad),
                       doctest::Contains("alpha[1]"), ergo::ValidationError);

  Json nds = minimal_config();
  nds["operators"] = {{{"kind", "scale"}, {"factor", 1.5}, {"of", {{"kind", "identity"}}}}};
  CHECK_THROWS_WITH_AS(ergo::parse_config(nds),
                       doctest::Contains("not Dunford-Schwartz"), ergo::ValidationError);

  Json unk = minimal_config();
  unk["spaze"] = 1;
  CHECK_THROWS_WITH_AS(ergo::parse_config(unk),
                       doctest::Contains("unknown config field \"spaze\""),
                       ergo::ValidationError);

  Json unk_kind = minimal_config();
  unk_kind["operators"] = {{{"kind", "hilbert"}}};
  CHECK_THROWS_WITH_AS(ergo::parse_config(unk_kind),
                       doctest::Contains("unknown operator kind"), ergo::ValidationError);

  Json sched = minimal_config();
  sched["schedule"] = {4, 4};
  CHECK_THROWS_WITH_AS(ergo::parse_config(sched),
                       doctest::Contains("strictly increasing"), ergo::ValidationError);

  Json con = minimal_config();
  con["operators"] = {{{"kind", "identity"}}, {{"kind", "identity"}}};
  con["alpha"] = {1, 1};
  CHECK_THROWS_WITH_AS(ergo::parse_config(con), doctest::Contains("connectors"),
                       ergo::ValidationError);

  Json vd = minimal_config();
  vd["operators"] = {{{"kind", "volterra"}, {"d", 8}}};
  CHECK_THROWS_WITH_AS(ergo::parse_config(vd), doctest::Contains("does not match"),
                       ergo::ValidationError);
}

TEST_CASE("operator descriptors reproduce the library constructors byte for byte") {
  auto sp64 = ergo::uniform_space(64);
  const ergo::Operator from_desc = ergo::operator_from_descriptor(
      sp64, Json::parse(R"({"kind": "volterra"})"), 0, "op");
  const ergo::Operator direct = ergo::volterra_discrete(64);
  REQUIRE(from_desc.dim() == direct.dim());
  CHECK(std::memcmp(from_desc.entries().data(), direct.entries().data(),
                    sizeof(Complex) * 64 * 64) == 0);

  auto sp3 = ergo::uniform_space(3);
  const ergo::Operator koop = ergo::operator_from_descriptor(
      sp3, Json::parse(R"({"kind": "koopman", "map": [1, 2, 0]})"), 0, "op");
  const ergo::Operator koop_direct = ergo::koopman_from_map(sp3, {1, 2, 0});
  CHECK(std::memcmp(koop.entries().data(), koop_direct.entries().data(),
                    sizeof(Complex) * 9) == 0);

  const ergo::Operator rds = ergo::operator_from_descriptor(
      sp3, Json::parse(R"({"kind": "random_ds", "seed": 42, "flavor": "signed"})"), 7, "op");
  const ergo::Operator rds_direct =
      ergo::random_ds(3, 42, ergo::RandomDsKind::SignedContraction);
  CHECK(std::memcmp(rds.entries().data(), rds_direct.entries().data(),
                    sizeof(Complex) * 9) == 0);
}

TEST_CASE("simulate on an identity problem writes zero cauchy gaps") {
  Json doc = minimal_config();
  doc["f"] = {{"kind", "values"}, {"re", {0.5, -0.25, 0.0, 0.0}}};
  doc["schedule"] = {1, 2, 4};
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("identity_sim");
  const auto res = ergo::run_experiment(cfg, "simulate", out.string());

  const std::string csv = slurp(fs::path(res.dir) / "trajectory.csv");
  CHECK(csv.rfind("N,atom,re,im,linf,cauchy_gap\n", 0) == 0);

  const Json summary = ergo::read_json_file((fs::path(res.dir) / "summary.json").string());
  REQUIRE(summary.size() == 3);
  for (const Json& row : summary) {
    CHECK(row.at("linf").get<double>() == 0.5);
    CHECK(row.at("cauchy_gap").get<double>() == 0.0);
  }
  ergo::validate_manifest(res.dir);
}

TEST_CASE("reruns are byte-identical and refuse to overwrite without force") {
  Json doc = minimal_config();
  doc["operators"] = {{{"kind", "random_ds"}, {"seed", 9}},
                      {{"kind", "scale"}, {"factor", 0.8}, {"of", {{"kind", "identity"}}}}};
  doc["connectors"] = {{{"kind", "volterra"}}};
  doc["alpha"] = {1, 2};
  doc["f"] = {{"kind", "random"}, {"seed", 3}};
  doc["schedule"] = {2, 4, 8};
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("determinism");

  const auto r1 = ergo::run_experiment(cfg, "simulate", out.string());
  const std::string csv1 = slurp(fs::path(r1.dir) / "trajectory.csv");
  const std::string summary1 = slurp(fs::path(r1.dir) / "summary.json");

  CHECK_THROWS_WITH_AS(ergo::run_experiment(cfg, "simulate", out.string()),
                       doctest::Contains("--force"), ergo::ValidationError);

  const auto r2 = ergo::run_experiment(cfg, "simulate", out.string(), true);
  CHECK(r1.dir == r2.dir);
  CHECK(slurp(fs::path(r2.dir) / "trajectory.csv") == csv1);
  CHECK(slurp(fs::path(r2.dir) / "summary.json") == summary1);
  ergo::validate_manifest(r1.dir);
}

TEST_CASE("manifest validation catches tampering") {
  Json doc = minimal_config();
  doc["f"] = {{"kind", "values"}, {"re", {1.0, 0.0, 0.0, 0.0}}};
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("manifest");
  const auto res = ergo::run_experiment(cfg, "simulate", out.string());
  ergo::validate_manifest(res.dir);

  SUBCASE("missing file") {
    fs::remove(fs::path(res.dir) / "trajectory.csv");
    CHECK_THROWS_WITH_AS(ergo::validate_manifest(res.dir), doctest::Contains("missing"),
                         ergo::ValidationError);
  }
  SUBCASE("config swapped") {
    Json man = ergo::read_json_file((fs::path(res.dir) / "manifest.json").string());
    man["config"]["seed"] = 12345;
    std::ofstream os(fs::path(res.dir) / "manifest.json", std::ios::binary);
    os << man.dump(2) << "\n";
    os.close();
    CHECK_THROWS_WITH_AS(ergo::validate_manifest(res.dir), doctest::Contains("hash"),
                         ergo::ValidationError);
  }
}

TEST_CASE("decompose reports the swap operator's reversible part") {
  Json doc = Json::parse(R"({
    "space": {"uniform": 2},
    "operators": [{"kind": "matrix", "entries": [[0,0],[1,0],[1,0],[0,0]]}],
    "alpha": [1]
  })");
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("decompose");
  const auto res = ergo::run_experiment(cfg, "decompose", out.string());
  const Json dec = ergo::read_json_file((fs::path(res.dir) / "decompose.json").string());
  REQUIRE(dec.size() == 1);
  CHECK(dec[0].at("stage") == 1);
  CHECK(dec[0].at("dim_reversible") == 2);
  CHECK(dec[0].at("dim_stable") == 0);
  std::vector<Complex> eig;
  for (const Json& e : dec[0].at("eigenvalues"))
    eig.emplace_back(e[0].get<double>(), e[1].get<double>());
  REQUIRE(eig.size() == 2);
  std::sort(eig.begin(), eig.end(),
            [](const Complex& x, const Complex& y) { return x.real() < y.real(); });
  CHECK(std::abs(eig[0] - Complex(-1.0)) <= 1e-12);
  CHECK(std::abs(eig[1] - Complex(1.0)) <= 1e-12);
}

TEST_CASE("split run exports the tree and its bound reports") {
  const Json doc = reference_config();
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("split");
  const auto res = ergo::run_experiment(cfg, "split", out.string());

  const auto tree = ergo::build_splitting_tree(*cfg.problem, *cfg.f, cfg.epsilon,
                                               ergo::SplitVariant::Reversible);
  const Json tj = ergo::read_json_file((fs::path(res.dir) / "tree.json").string());
  CHECK(tj.at("variant") == "reversible");
  CHECK(tj.at("C").get<double>() == tree.C);
  CHECK(tj.at("c").get<double>() == tree.c);
  const Json& nodes = tj.at("nodes");
  REQUIRE(nodes.size() == tree.nodes.size());
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    CHECK(nodes[v].at("id").get<std::size_t>() == v);
    CHECK(nodes[v].at("parent").get<int>() == tree.nodes[v].parent);
    CHECK(nodes[v].at("ell").get<int>() == tree.nodes[v].ell());
    CHECK(nodes[v].at("c").get<double>() == tree.nodes[v].c);
    CHECK(nodes[v].at("u").get<double>() == tree.nodes[v].u);
    if (tree.nodes[v].cert)
      CHECK(nodes[v].at("epsilon_achieved").get<double>() ==
            tree.nodes[v].cert->epsilon_achieved);
    else
      CHECK(nodes[v].at("epsilon_achieved").is_null());
  }

  const Json rep = ergo::read_json_file((fs::path(res.dir) / "verify.json").string());
  REQUIRE(rep.size() == 2);
  for (const Json& row : rep) {
    CHECK(row.at("budget").get<double>() == cfg.epsilon);
    CHECK(row.at("measured").get<double>() <= row.at("budget").get<double>());
  }
}

TEST_CASE("weights run reports besicovitch estimates") {
  Json doc = minimal_config();
  doc["weights"] = Json::parse(R"([
    {"kind": "trig_poly", "b": [[1.0, 0.0]], "rho": [[0.0, 1.0]]},
    {"kind": "product", "factors": [
      {"kind": "trig_poly", "b": [[1.0, 0.0]], "rho": [[0.0, 1.0]]},
      {"kind": "trig_poly", "b": [[1.0, 0.0]], "rho": [[-1.0, 0.0]]}]}
  ])");
  doc["schedule"] = {8, 32};
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("weights");
  const auto res = ergo::run_experiment(cfg, "weights", out.string());
  REQUIRE(cfg.weights.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    std::istringstream csv(slurp(fs::path(res.dir) / ("weights_" + std::to_string(i + 1) +
                                                      ".csv")));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "N,estimate");
    for (long long N : {8LL, 32LL}) {
      REQUIRE(std::getline(csv, line).good());
      const auto comma = line.find(',');
      CHECK(std::stoll(line.substr(0, comma)) == N);
      CHECK(std::stod(line.substr(comma + 1)) ==
            ergo::besicovitch_seminorm(cfg.weights[i], 1.0, std::nullopt, N));
    }
  }
}

TEST_CASE("check run executes the invariant battery") {
  Json doc = reference_config();
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("check");
  const auto res = ergo::run_experiment(cfg, "check", out.string());
  CHECK(res.manifest.at("pass").get<bool>());
  const Json chk = ergo::read_json_file((fs::path(res.dir) / "check.json").string());
  CHECK(chk.at("all_pass").get<bool>());
  CHECK(chk.at("items").size() >= 8);
  for (const Json& item : chk.at("items")) CHECK(item.at("pass").get<bool>());
}

TEST_CASE("oversized elimination tables surface as budget errors") {
  Json doc = Json::parse(R"({
    "space": {"uniform": 16},
    "operators": [{"kind": "identity"}, {"kind": "identity"},
                  {"kind": "identity"}, {"kind": "identity"}],
    "connectors": [{"kind": "identity"}, {"kind": "identity"}, {"kind": "identity"}],
    "alpha": [1, 2, 1, 2],
    "f": {"kind": "random", "seed": 1},
    "schedule": [4096],
    "horizon": 2
  })");
  const auto cfg = ergo::parse_config(doc);
  const auto out = fresh_out("budget");
  CHECK_THROWS_AS(ergo::run_experiment(cfg, "simulate", out.string()), ergo::BudgetError);

  CHECK_THROWS_WITH_AS(ergo::run_experiment(cfg, "orbit", out.string()),
                       doctest::Contains("unknown subcommand"), ergo::ValidationError);
}

}  // TEST_SUITE
