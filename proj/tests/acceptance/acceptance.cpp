// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any selected criterion fails. `--only N` runs a single criterion.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "optoqst/cli/experiment.hpp"
#include "optoqst/dynamics.hpp"
#include "optoqst/error.hpp"
#include "optoqst/fock.hpp"
#include "optoqst/metrics.hpp"
#include "optoqst/model.hpp"
#include "optoqst/polariton.hpp"

namespace fs = std::filesystem;
using namespace optoqst;
using namespace optoqst::cli;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

fs::path g_configs;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Experiment load(const std::string& name) { return load_experiment(g_configs / name); }

RunOptions quiet() {
  RunOptions o;
  o.write_files = false;
  return o;
}

// Max |trace - 1| over every sample of an open simulate run, and the final
// minimum eigenvalue.
struct Physicality {
  double trace_drift = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
};

Physicality simulate_physicality(const CommandResult& r) {
  Physicality p;
  for (std::size_t i = 0; i < r.table.rows.size(); ++i)
    p.trace_drift = std::max(p.trace_drift, std::abs(r.table.number(i, "trace") - 1.0));
  p.min_eig = r.table.number(r.table.rows.size() - 1, "min_eigenvalue");
  return p;
}

// ---------------------------------------------------------------------------

Outcome closed_single_excitation() {
  const Experiment ex = load("simulate_pst.json");
  const auto r = cmd_simulate(ex, quiet());
  const double f = r.table.number(r.table.rows.size() - 1, "corrected_fidelity");

  // Full Fock-space propagation against the one-particle oracle at tau.
  auto s = array_space(ex.array.size(), 2, 1);
  const auto psi0 = initial_sender_state(s, ex.sender_state);
  const auto full = evolve_closed(build_array_hamiltonian(ex.array, s), psi0, ex.tau);
  const Vector sector = single_excitation_sector(full);
  const Vector oracle = single_excitation_oracle(ex.array, ex.tau, single_excitation_sector(psi0));
  const double diff = (sector.cwiseAbs2() - oracle.cwiseAbs2()).cwiseAbs().maxCoeff();

  return {r.exit_code == kExitOk && f >= 0.99 && diff <= 1e-8,
          "corrected F(tau) = " + num(f) + " (>= 0.99), max |P - P_oracle| = " + num(diff) + " (<= 1e-8)"};
}

Outcome coupling_sweep_trend() {
  const Experiment ex = load("coupling_sweep.json");
  const auto r = cmd_sweep(ex, quiet());
  const std::size_t first = 0, last = r.table.rows.size() - 1;
  const double g_first = r.table.number(first, "G_over_J"), g_last = r.table.number(last, "G_over_J");
  const double p1 = r.table.number(first, "phi_plus_corrected"), p25 = r.table.number(last, "phi_plus_corrected");
  const double q1 = r.table.number(first, "Phi_plus_corrected"), q25 = r.table.number(last, "Phi_plus_corrected");
  bool converged = true;
  for (std::size_t i = 0; i < r.table.rows.size(); ++i)
    converged = converged && r.table.number(i, "phi_plus_converged") == 1.0 &&
                r.table.number(i, "Phi_plus_converged") == 1.0;
  const bool pass = r.exit_code == kExitOk && g_first == 1.0 && g_last == 25.0 && ex.cap >= 4 && p25 > p1 &&
                    q25 > q1 && q25 >= 0.95 && converged;
  return {pass, "phi+: " + num(p1) + " -> " + num(p25) + ", Phi+: " + num(q1) + " -> " + num(q25) +
                    " (>= 0.95), cap " + std::to_string(ex.cap) + ", converged " + (converged ? "yes" : "no")};
}

Outcome bogoliubov_correctness() {
  std::mt19937_64 rng(20260415);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int draws = 0;
  while (draws < 1000) {
    CellParams p;
    p.omega_m = 0.2 + 4.8 * u(rng);
    p.delta_p = -(0.05 + 1.95 * u(rng)) * p.omega_m;
    p.kappa = 0.2 * u(rng) * p.omega_m;
    p.gamma = 0.01 * u(rng) * p.omega_m;
    // Bounded dynamics needs both the stability bound and a positive-definite
    // quadratic form, G < sqrt(|delta_p| omega_m) / 2.
    const double gmax = std::min(stability_bound(p), 0.5 * std::sqrt(std::abs(p.delta_p) * p.omega_m));
    p.G = 0.999 * u(rng) * gmax;
    const auto f = polariton_frequencies(p);
    const auto o = symplectic_oracle(p);
    worst = std::max({worst, std::abs(f.omega_minus - o.omega_minus) / o.omega_minus,
                      std::abs(f.omega_plus - o.omega_plus) / o.omega_plus});
    ++draws;
  }
  double worst_red = 0.0;  // largest |error| / (2 G^2 / omega_m)
  for (int i = 0; i < 1000; ++i) {
    CellParams p;
    p.omega_m = 0.5 + 2.5 * u(rng);
    p.delta_p = -p.omega_m;
    p.G = 0.1 * u(rng) * p.omega_m;
    if (p.G == 0.0) continue;
    const auto f = polariton_frequencies(p);
    const double bound = 2 * p.G * p.G / p.omega_m;
    worst_red = std::max({worst_red, std::abs(f.omega_minus - (p.omega_m - p.G)) / bound,
                          std::abs(f.omega_plus - (p.omega_m + p.G)) / bound});
  }
  return {worst <= 1e-10 && worst_red <= 1.0, std::to_string(draws) + " draws, max rel error " + num(worst) +
                                                  " (<= 1e-10); red limit error / (2G^2/w) <= " + num(worst_red)};
}

Outcome thermal_relaxation() {
  const double kappa = 1.0;
  double worst = 0.0;
  for (double nbar : {0.0, 0.5, 2.0}) {
    auto s = make_space({nbar > 1 ? 60 : 30});
    std::vector<Dissipator> d;
    d.reserve(2);
    d.push_back({annihilation(s, 0), kappa * (1 + nbar), "a"});
    if (nbar > 0) d.push_back({creation(s, 0), kappa * nbar, "a_dag"});
    const std::vector<double> times{0.1, 1.0, 5.0};
    IntegratorOptions o;
    o.method = Method::kAdaptive;
    Vector v = Vector::Zero(Eigen::Index(s->dim()));
    v(1) = 1.0;
    const auto tr = evolve_open(EvolutionSpec{zero_operator(s), d, 5.0, times, o}, QuantumState::pure(s, v));
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double expect = nbar + (1.0 - nbar) * std::exp(-kappa * times[i]);
      worst = std::max(worst, std::abs(tr.states[i].expectation(number_operator(s, 0)).real() - expect));
    }
  }
  return {worst <= 1e-6, "max |<n>(t) - law| = " + num(worst) + " (<= 1e-6)"};
}

Physicality g_open_sweep;  // filled by criterion 5 when it runs first
bool g_open_sweep_done = false;

void record_sweep_physicality(const Table& t, const std::vector<std::string>& prefixes) {
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (const auto& c : prefixes) {
      g_open_sweep.trace_drift = std::max(g_open_sweep.trace_drift, t.number(i, c + "_trace_drift"));
      g_open_sweep.min_eig = std::min(g_open_sweep.min_eig, t.number(i, c + "_min_eigenvalue"));
    }
  }
  g_open_sweep_done = true;
}

Outcome open_array_sweep() {
  const Experiment ex = load("loss_sweep.json");
  const auto r = cmd_sweep(ex, quiet());
  const auto& t = r.table;
  bool monotone = true, ordered = true, converged = true;
  double at_01 = std::nan("");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double f1 = t.number(i, "phi_plus_nm1_corrected"), f100 = t.number(i, "phi_plus_nm100_corrected");
    if (i > 0) {
      monotone = monotone && f1 <= t.number(i - 1, "phi_plus_nm1_corrected") + 1e-3 &&
                 f100 <= t.number(i - 1, "phi_plus_nm100_corrected") + 1e-3;
    }
    ordered = ordered && f100 <= f1;
    converged = converged && t.number(i, "phi_plus_nm1_converged") == 1.0 &&
                t.number(i, "phi_plus_nm100_converged") == 1.0;
    if (std::abs(t.number(i, "kappa_over_J") - 0.1) < 1e-9) at_01 = f1;
  }
  record_sweep_physicality(t, {"phi_plus_nm1", "phi_plus_nm100"});
  const bool high = at_01 >= 0.9;
  std::string d = std::string("(a) non-increasing ") + (monotone ? "yes" : "NO") + "; (b) nm=100 <= nm=1 " +
                  (ordered ? "yes" : "NO") + "; (c) F(kappa/J=0.1, nm=1) = " + num(at_01) + " (>= 0.9) " +
                  (high ? "yes" : "NO") + "; converged " + (converged ? "yes" : "NO");
  return {monotone && ordered && high && converged && r.exit_code != kExitConvergence, d};
}

Outcome physicality() {
  Physicality worst;
  // Open runs on both routes.
  for (const auto* name : {"device_check.json"}) {
    for (const auto* method : {"lindblad", "thermal_channel"}) {
      Experiment base = load(name);
      nlohmann::json c = base.config;
      c["open_system"] = {{"enabled", true}, {"method", method}};
      c["time"] = {{"t_final_over_tau", 1.0}, {"num_samples", 5}};
      if (std::string(method) == "lindblad") c["truncation"] = {{"cap", 2}};
      const auto p = simulate_physicality(cmd_simulate(resolve_experiment(c), quiet()));
      worst.trace_drift = std::max(worst.trace_drift, p.trace_drift);
      worst.min_eig = std::min(worst.min_eig, p.min_eig);
    }
  }
  if (!g_open_sweep_done) {
    // Run alone: a coarse version of the loss sweep.
    nlohmann::json c = load("loss_sweep.json").config;
    c["sweep"]["log_grid"]["num"] = 4;
    record_sweep_physicality(cmd_sweep(resolve_experiment(c), quiet()).table, {"phi_plus_nm1", "phi_plus_nm100"});
  }
  worst.trace_drift = std::max(worst.trace_drift, g_open_sweep.trace_drift);
  worst.min_eig = std::min(worst.min_eig, g_open_sweep.min_eig);

  // Closed red-sideband runs: one and two excitations, and both ends at once.
  double n_drift = 0.0;
  for (const auto* kind : {"phi_plus", "Phi_plus"}) {
    Experiment base = load("simulate_pst.json");
    nlohmann::json c = base.config;
    c["initial_state"]["kind"] = kind;
    const Experiment ex = resolve_experiment(c);
    n_drift = std::max(n_drift, run_transfer(ex, ex.sample_times).max_excitation_drift);
  }
  {
    const Experiment ex = load("bidirectional.json");
    const auto r = cmd_bidirectional(ex, quiet());
    for (std::size_t i = 0; i < r.table.rows.size(); ++i)
      n_drift = std::max(n_drift, std::abs(r.table.number(i, "total_excitation") - 2.0));
  }
  const bool pass = worst.trace_drift <= 1e-8 && worst.min_eig >= -1e-7 && n_drift <= 1e-10;
  const std::string d = "open: max |tr - 1| = " + num(worst.trace_drift) + " (<= 1e-8), min eigenvalue = " + num(worst.min_eig) +
      " (>= -1e-7); closed: max |N - N0| = " + num(n_drift) + " (<= 1e-10)";
  return {pass, d};
}

Outcome checks_on_device_parameters() {
  const Experiment ex = load("device_check.json");
  const auto r = cmd_check(ex, quiet());
  bool stab = true, rwa = false;
  double ratio = 0.0;
  for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
    const auto& check = std::get<std::string>(r.table.rows[i][r.table.column("check")]);
    const bool ok = std::get<std::string>(r.table.rows[i][r.table.column("pass")]) == "true";
    if (check == "stability") stab = stab && ok;
    if (check == "rwa") {
      rwa = ok;
      ratio = r.table.number(i, "margin");
    }
  }
  const double bound = stability_bound(ex.array.cells.front());

  nlohmann::json c = ex.config;
  c["array"]["cell"].erase("G_rad_s");
  c["array"]["cell"]["G_over_2pi_hz"] = 3.68e9;  // G = omega_m
  const auto bad = cmd_check(resolve_experiment(c), quiet());
  const bool pass = r.exit_code == kExitOk && stab && rwa && ratio >= 10.0 && bad.exit_code == kExitPhysics;
  return {pass, "G = 5e9 < bound " + num(bound) + ", RWA ratio " + num(ratio) +
                    " (>= 10); G = omega_m exit code " + std::to_string(bad.exit_code) + " (1)"};
}

Outcome bidirectional() {
  const auto r = cmd_bidirectional(load("bidirectional.json"), quiet());
  const std::size_t last = r.table.rows.size() - 1;
  const double fwd = r.table.number(last, "forward_corrected"), back = r.table.number(last, "backward_corrected");
  return {r.exit_code == kExitOk && fwd >= 0.99 && back >= 0.99,
          "forward " + num(fwd) + ", backward " + num(back) + " (both >= 0.99)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optoqst acceptance gate"};
  int only = 0;
  std::string configs =
#ifdef OPTOQST_SOURCE_DIR
      std::string(OPTOQST_SOURCE_DIR) + "/configs";
#else
      "configs";
#endif
  app.add_option("--only", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  app.add_option("--configs", configs, "directory holding the shipped configs")->check(CLI::ExistingDirectory);
  CLI11_PARSE(app, argc, argv);
  g_configs = configs;

  const std::vector<Criterion> criteria{
      {1, "closed single-excitation transfer", 10, closed_single_excitation},
      {2, "coupling-strength sweep trend", 300, coupling_sweep_trend},
      {3, "Bogoliubov frequencies", 10, bogoliubov_correctness},
      {4, "thermal relaxation law", 5, thermal_relaxation},
      {5, "open-array loss sweep", 7200, open_array_sweep},
      {6, "physicality invariants", 600, physicality},
      {7, "stability and RWA checks", 1, checks_on_device_parameters},
      {8, "bidirectional transfer", 30, bidirectional},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %d %s: %s; %.2f s (< %g s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                secs, c.time_limit_s, in_time ? "" : " TIME LIMIT EXCEEDED");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
