#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dynkin/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dynkin-lab: Lévy-driven SPDE and local-time laboratory"};
  app.set_version_flag("--version", std::string(dynkin::kVersion));

  std::string command;
  std::string config;
  std::string out = "dynkin-out";
  dynkin::Overrides ov;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  double tol = 0.0;
  std::string suite;
  unsigned threads = 0;

  app.add_option("command", command, "check | kernel | synth | spde | localtime | verify")
      ->required()
      ->check(CLI::IsMember(dynkin::command_names()));
  app.add_option("--config", config, "JSON experiment configuration")->required();
  auto* o_seed = app.add_option("--seed", seed, "root seed (overrides config)");
  app.add_option("--out", out, "output directory")->capture_default_str();
  auto* o_paths = app.add_option("--paths", paths, "paths / replications (overrides config)");
  auto* o_tol = app.add_option("--tol", tol, "kernel and verify tolerance (overrides config)");
  auto* o_suite = app.add_option("--suite", suite, "verify suite: all, models, kernels, fields, spde, localtime");
  auto* o_threads = app.add_option("--threads", threads, "worker threads, 0 = all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dynkin::exit_usage;
  }
  if (*o_seed) ov.seed = seed;
  if (*o_paths) ov.paths = paths;
  if (*o_tol) ov.tol = tol;
  if (*o_suite) ov.suite = suite;
  if (*o_threads) ov.threads = threads;

  try {
    return dynkin::execute(command, config, ov, out);
  } catch (const std::exception& e) {
    std::cerr << "dynkin-lab " << command << ": " << e.what() << '\n';
    return dynkin::exit_usage;
  }
}
