#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ergo/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for entangled ergodic averages"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool force = false;
  bool seed_set = false;

  const std::pair<const char*, const char*> subs[] = {
      {"simulate", "evaluate average trajectories over the checkpoint schedule"},
      {"decompose", "export the reversible/stable splitting of every operator"},
      {"split", "build a splitting tree and verify its bounds"},
      {"weights", "report Besicovitch seminorm estimates for the weight sequences"},
      {"check", "run the invariant suite of every module the config touches"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output root directory (default: config or results/)");
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_flag("--force", force, "replace existing results for this config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    ergo::Json doc = ergo::read_json_file(config_path);
    if (seed_set) doc["seed"] = seed;
    const ergo::ExperimentConfig cfg = ergo::parse_config(doc);
    const ergo::RunResult res = ergo::run_experiment(cfg, sub, out_dir, force);
    std::cout << res.dir << "\n";
    if (sub == "check" && !res.manifest.at("pass").get<bool>()) {
      for (const auto& item : res.manifest.at("checks").at("items"))
        if (!item.at("pass").get<bool>())
          std::cerr << "failed: " << item.at("name").get<std::string>() << "\n";
      return 1;
    }
    return 0;
  } catch (const ergo::BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 2;
  } catch (const ergo::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
