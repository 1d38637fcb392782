#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "ddreach/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace ddreach::cli;
  CLI::App app{"Data-driven reachability: sample, estimate, check and plot reachable sets"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  std::size_t n = 0, workers = 0, grid_n = 0;
  std::uint64_t seed = 0;
  std::string outputs;
  bool tube = false;

  for (const char* name : {"summary", "sample", "estimate", "check", "plot"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--n", n, "Override the sample count (voids the probabilistic guarantee)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Override the seed");
    sub->add_option("--workers", workers, "Worker threads (default: $DDREACH_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", outputs, "Override the output directory");
    sub->add_option("--grid-n", grid_n, "Override the lattice resolution")->check(CLI::Range(2, 100000));
    sub->add_flag("--tube", tube, "Fit a reach tube over every recorded time");
  }
  app.get_subcommand("summary")->description("Print the estimator summary and the required sample count");
  app.get_subcommand("sample")->description("Draw samples and write CSV files plus a manifest");
  app.get_subcommand("estimate")->description("Fit the reachable-set estimate (draws samples if needed)");
  app.get_subcommand("check")->description("Check the stored estimate against unsafe sets and goal clauses");
  app.get_subcommand("plot")->description("Write lattice field files and an SVG plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const auto* sub = app.get_subcommands().front();
  for (const auto* opt : sub->get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_name();
    if (name == "--n") o.n = n;
    if (name == "--seed") o.seed = seed;
    if (name == "--workers") o.workers = workers;
    if (name == "--out") o.outputs = outputs;
    if (name == "--grid-n") o.grid_n = grid_n;
    if (name == "--tube") o.tube = true;
  }
  nlohmann::json raw;
  try {
    raw = read_json_file(config_path, "config");
  } catch (const ddreach::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return dispatch(sub->get_name(), raw, o, std::cout, std::cerr);
}
