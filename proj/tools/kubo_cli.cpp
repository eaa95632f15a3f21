// Command-line front end: one subcommand per experiment suite.

#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "kubo/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Linear-response experiments on disordered magnetic lattices"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool check = false;
  int threads = 1;
  std::optional<std::uint64_t> seed;

  const std::map<std::string, std::string> about{
      {"hall", "Hall conductance over a disorder ensemble vs. Streda and the Chern number"},
      {"kubo-sweep", "resolvent, time-integral and finite-difference conductivity across eta"},
      {"dynamics-check", "propagator, Duhamel, gauge and Liouville-equation checks"},
      {"equilibrium", "equilibrium current, clean and disorder-averaged"},
      {"funcalc-check", "Helffer-Sjostrand calculus against the spectral theorem"},
      {"algebra-check", "commutator and conductivity identities"}};
  for (const auto& name : kubo::experiment_names()) {
    auto* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("--config", config_path, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: run.output)");
    sub->add_flag("--check", check, "exit nonzero if any acceptance threshold is violated");
    sub->add_option("--threads", threads, "worker threads over independent cells")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "override model.base_seed");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string experiment = app.get_subcommands().front()->get_name();

  try {
    kubo::ExperimentConfig cfg = config_path.empty() ? kubo::ExperimentConfig{} : kubo::load_config(config_path);
    cfg.run.experiment = experiment;
    if (seed) cfg.model.base_seed = *seed;
    if (!out_dir.empty()) cfg.run.output = out_dir;

    kubo::SuiteResult result;
    const kubo::RunManifest man = kubo::run_experiment(cfg, cfg.run.output, threads, &result);

    for (const auto& c : result.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (" << c.relation << " "
                << c.limit << ")\n";
    for (const auto& e : result.cell_errors) std::cout << "ERROR " << e << "\n";
    std::cout << "wrote " << man.outputs.size() + 1 << " files to " << cfg.run.output << "\n";
    if (check && !man.checks_passed) return 1;
    return result.cell_errors.empty() ? 0 : 3;
  } catch (const kubo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kubo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
