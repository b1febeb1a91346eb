// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file experiment.hpp
 * @brief Config-driven experiments behind the optoqst command-line tool.
 *
 * A config is JSON validated against schema/experiment.schema.json. Every
 * command returns a CommandResult holding the table written to CSV, the JSON
 * metadata written next to it and the process exit code:
 * 0 ok, 1 physics-check failure, 2 config error, 3 convergence failure.
 */

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "optoqst/dynamics.hpp"
#include "optoqst/metrics.hpp"
#include "optoqst/model.hpp"
#include "optoqst/protocols.hpp"

namespace optoqst::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPhysics = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;

/// CSV schema version written to every results file.
inline constexpr int kCsvSchemaVersion = 1;

enum class OpenMethod { kAuto, kLindblad, kThermalChannel };

struct Experiment {
  nlohmann::json config;  ///< validated config as given
  ArrayConfig array;      ///< resolved, rad/s
  TransferPlan plan;
  double J = 0.0;
  double tau = 0.0;
  StateSpec sender_state = StateSpec::phi_plus();
  std::optional<StateSpec> counter_state;
  int sender_cell = 0;    ///< 0-based
  int receiver_cell = 0;  ///< 0-based
  bool chain_phase = false;
  int mode_dim = 2;
  int cap = 1;
  std::vector<int> convergence_caps;
  double convergence_tol = 1e-4;
  int receiver_cap = 8;
  std::vector<int> receiver_convergence_caps;
  bool open = false;
  OpenMethod open_method = OpenMethod::kAuto;
  std::vector<double> sample_times;
  IntegratorOptions integrator;
  double rwa_margin = 10.0;
  double compat_tol = 1e-9;
  std::string basename;

  /// Route actually used for open runs.
  OpenMethod effective_open_method() const;
};

/// Validate against the schema and resolve units and defaults. A results
/// metadata file is accepted too; its embedded config is used.
/// Throws ConfigError.
Experiment resolve_experiment(const nlohmann::json& config);
Experiment load_experiment(const std::filesystem::path& path);

struct RunOptions {
  int threads = 1;
  bool force_dim = false;
  std::filesystem::path out_dir = ".";
  bool gnuplot_script = false;
  bool write_files = true;
};

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const;  ///< throws if absent
  double number(std::size_t row, const std::string& name) const;
};

struct CommandResult {
  int exit_code = kExitOk;
  Table table;
  nlohmann::json metadata;
  std::vector<std::filesystem::path> files;
  std::string summary;
};

/// One transfer at a single time.
struct TransferSample {
  double time = 0.0;
  double raw = 0.0;
  double corrected = 0.0;
  double root_corrected = 0.0;
  double max_phase = 0.0;            ///< over bare-mode phases
  double max_polariton_phase = 0.0;  ///< over polariton phases; NaN for linearized arrays
  double trace = 1.0;
  double total_excitation = 0.0;
  std::vector<double> populations;  ///< <n> per mode (a1, b1, a2, ...)
  double min_eigenvalue = 0.0;
  /// Second receiver (the sender cell) in bidirectional runs.
  std::optional<double> back_raw;
  std::optional<double> back_corrected;
};

struct TransferRun {
  std::vector<TransferSample> samples;
  double max_trace_drift = 0.0;
  double max_excitation_drift = 0.0;  ///< closed number-conserving runs
  std::size_t dim = 0;
  std::string route;
};

/// Propagate the configured transfer at the given sample times. `cap`
/// overrides the global cap (per-mode dim follows as cap + 1), and
/// `receiver_cap` the thermal-channel receiver cap.
TransferRun run_transfer(const Experiment& ex, const std::vector<double>& times, std::optional<int> cap = std::nullopt,
                         std::optional<int> receiver_cap = std::nullopt, bool force_dim = false);

/// Convergence of the corrected fidelity at tau over the configured caps
/// (global caps, or receiver caps on the thermal-channel route).
std::optional<ConvergenceResult> run_convergence(const Experiment& ex, bool force_dim = false);

CommandResult cmd_check(const Experiment& ex, const RunOptions& opts = {});
CommandResult cmd_simulate(const Experiment& ex, const RunOptions& opts = {});
CommandResult cmd_sweep(const Experiment& ex, const RunOptions& opts = {});
CommandResult cmd_bidirectional(const Experiment& ex, const RunOptions& opts = {});

/// Dispatch by name with exception-to-exit-code mapping; used by the tool.
CommandResult run_command(const std::string& command, const std::filesystem::path& config_path, const RunOptions& opts);

}  // namespace optoqst::cli
