#pragma once

// Experiment orchestration: JSON problem ingestion, deterministic result
// export, and the machinery behind the command-line tool. Configs are
// normalized before hashing (defaults filled in, keys sorted, the output
// directory excluded), so key order and omitted defaults never change the
// run directory, and a rerun with the same effective config lands in the
// same place.
//
// Results live under <out>/<hash>/ with a manifest.json naming every file
// the run produced. Reruns refuse to overwrite an existing manifest unless
// forced. Float columns in CSV files are printed with %.17g; JSON numbers
// round-trip exactly through the vendored parser.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ergo/engine.hpp"
#include "ergo/measure_space.hpp"
#include "ergo/operators.hpp"
#include "ergo/splitting.hpp"
#include "ergo/weights.hpp"

namespace ergo {

using Json = nlohmann::json;

// Configuration problems: schema violations, unknown fields, refusing to
// overwrite results. The CLI maps these to exit code 1 (budget errors keep
// their own type and exit code 2).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Hash of the canonical serialization (sorted keys) of a normalized config.
// Sixteen lowercase hex digits.
std::string config_hash(const Json& normalized);

Json read_json_file(const std::string& path);

// Descriptor constructors. `what` names the config field in error messages;
// `default_seed` feeds descriptors that may omit their own "seed".
SpacePtr space_from_descriptor(const Json& desc);
Operator operator_from_descriptor(const SpacePtr& sp, const Json& desc,
                                  std::uint64_t default_seed, const std::string& what);
Func func_from_descriptor(const SpacePtr& sp, const Json& desc, std::uint64_t default_seed,
                          const std::string& what);
WeightSequence weight_from_descriptor(const SpacePtr& sp, const Json& desc,
                                      std::uint64_t default_seed, const std::string& what);

struct ExperimentConfig {
  Json doc;          // normalized config (defaults filled, "out" stripped)
  std::string hash;  // config_hash(doc)
  std::string name;
  std::string out;   // requested output root, "" when unset

  SpacePtr space;
  std::optional<EntangledProblem> problem;  // joint bound certified eagerly
  std::optional<Func> f;
  std::vector<WeightSequence> weights;
  std::vector<IntPolynomial> polynomials;  // one per index variable when present
  std::optional<SplitVariant> variant;
  double epsilon = 1e-2;
  std::vector<long long> schedule;  // strictly increasing checkpoints
  std::uint64_t seed = 0;
  long long horizon = 64;  // joint bound certification horizon
};

// Validates everything eagerly: all operators are constructed and
// Dunford-Schwartz-checked, alpha entries are range-checked by name, the
// joint bound is certified. Throws ValidationError naming the failing field.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

struct RunResult {
  std::string dir;  // <out>/<hash>
  Json manifest;
};

// Subcommands: simulate, decompose, split, weights, check. `out_dir`
// overrides the config's "out" (default "results"). Existing results are
// only replaced when force is set.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& subcommand,
                         const std::string& out_dir = "", bool force = false);

// Re-checks a written run directory: the manifest parses, every listed file
// exists (JSON files must parse), and the stored config matches its hash.
void validate_manifest(const std::string& run_dir);

}  // namespace ergo
