// cartan: scenario-driven checks of Cartan developments.
//
//   cartan <subcommand> --config <path> [--out <dir>] [--steps N]
//          [--integrator rkmk4|rk4] [--seed S] [--quiet]
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cartan/cli/run.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::string subcommand_list() {
  std::string s;
  for (const auto& n : cartan::cli::subcommands()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cartan development checks"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  cartan::cli::RunOptions opt;
  std::string out, integrator;
  int steps = 0;
  std::uint64_t seed = 0;

  for (const auto& name : cartan::cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario JSON file")->required();
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--steps", steps, "evolution steps (overrides evol.steps)")->check(CLI::PositiveNumber);
    sub->add_option("--integrator", integrator, "rkmk4 or rk4")->check(CLI::IsMember({"rkmk4", "rk4"}));
    sub->add_option("--seed", seed, "seed for randomized sweeps");
    sub->add_flag("--quiet", opt.quiet, "print nothing but errors");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "subcommands: " << subcommand_list() << "\n";
    return kUsage;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  const auto* parsed = app.get_subcommands().front();
  if (parsed->count("--out")) opt.out = out;
  if (parsed->count("--steps")) opt.steps = steps;
  if (parsed->count("--integrator")) opt.integrator = integrator;
  if (parsed->count("--seed")) opt.seed = seed;

  cartan::cli::RunResult result;
  cartan::cli::ScenarioConfig config;
  try {
    config = cartan::cli::load_config(config_path);
    result = cartan::cli::run(sub, config, opt);
  } catch (const cartan::Error& e) {
    std::cerr << "cartan " << sub << ": " << e.what() << "\n";
    return e.kind() == cartan::ErrorKind::Config ? kUsage : kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "cartan " << sub << ": " << e.what() << "\n";
    return kCheckFailed;
  }

  const std::string dir = opt.out ? *opt.out : config.output.dir;
  try {
    cartan::cli::write_artifacts(result, dir);
  } catch (const cartan::Error& e) {
    std::cerr << "cartan " << sub << ": " << e.what() << "\n";
    return kUsage;
  }

  const auto& rep = result.report;
  if (!opt.quiet) {
    for (const auto& row : rep.checks)
      std::printf("%s %-32s %.3e <= %.3e\n", row.pass ? "PASS" : "FAIL", row.name.c_str(), row.value,
                  row.tolerance);
    for (const auto& [name, secs] : rep.timings) std::fprintf(stderr, "time %-28s %.3fs\n", name.c_str(), secs);
    if (!rep.coverage.empty()) {
      std::printf("coverage:");
      for (const auto& c : rep.coverage) std::printf(" %s", c.c_str());
      std::printf("\n");
    }
    std::printf("%s\n", rep.pass() ? "all checks passed" : "some checks failed");
  }
  return rep.pass() ? kOk : kCheckFailed;
}
