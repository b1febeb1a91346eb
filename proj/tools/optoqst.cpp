// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

// optoqst: run transfer experiments described by a JSON config.

#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "optoqst/cli/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quantum state transfer in optomechanical arrays"};
  app.require_subcommand(1);

  std::string config;
  optoqst::cli::RunOptions opts;
  std::string out_dir = ".";

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"check", "Stability, RWA and time-compatibility checks"},
      {"simulate", "Propagate one transfer and report fidelities over time"},
      {"sweep", "Fidelity at tau over a parameter grid"},
      {"bidirectional", "Simultaneous transfer from both ends of a PST array"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_flag("--force-dim", opts.force_dim, "Allow Hilbert spaces beyond the dimension limits");
    sub->add_option("--threads", opts.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--gnuplot-script", opts.gnuplot_script, "Also write a gnuplot script next to the CSV");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : optoqst::cli::kExitConfig;
  }
  opts.out_dir = out_dir;

  const std::string command = app.get_subcommands().front()->get_name();
  const auto result = optoqst::cli::run_command(command, config, opts);
  std::ostream& os = result.exit_code == optoqst::cli::kExitOk ? std::cout : std::cerr;
  os << command << ": " << result.summary << "\n";
  for (const auto& f : result.files) std::cout << "wrote " << f.string() << "\n";
  return result.exit_code;
}
