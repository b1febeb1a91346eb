// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/cli/experiment.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "optoqst/cli/schema.hpp"
#include "optoqst/error.hpp"
#include "optoqst/polariton.hpp"

#ifndef OPTOQST_VERSION
#define OPTOQST_VERSION "0.0.0"
#endif

namespace optoqst::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Config resolution

// Read one quantity given as <name>_rad_s, <name>_over_2pi_hz or (when J is
// known) <name>_over_J. At most one spelling may be present.
std::optional<double> frequency(const json& obj, const std::string& name, std::optional<double> J) {
  std::optional<double> out;
  int given = 0;
  if (obj.contains(name + "_rad_s")) {
    out = obj[name + "_rad_s"].get<double>();
    ++given;
  }
  if (obj.contains(name + "_over_2pi_hz")) {
    out = kTwoPi * obj[name + "_over_2pi_hz"].get<double>();
    ++given;
  }
  if (obj.contains(name + "_over_J")) {
    if (!J) throw ConfigError(name + "_over_J needs protocol J");
    out = *J * obj[name + "_over_J"].get<double>();
    ++given;
  }
  if (given > 1) throw ConfigError("give only one spelling of " + name);
  return out;
}

// Keys of a quantity family, for override merging.
const std::vector<std::vector<std::string>>& cell_families() {
  static const std::vector<std::vector<std::string>> f = {
      {"omega_m_rad_s", "omega_m_over_2pi_hz"},
      {"delta_p_rad_s", "delta_p_over_2pi_hz"},
      {"G_rad_s", "G_over_2pi_hz", "G_over_J"},
      {"g_rad_s", "g_over_2pi_hz"},
      {"alpha"},
      {"kappa_rad_s", "kappa_over_2pi_hz", "kappa_over_J"},
      {"gamma_rad_s", "gamma_over_2pi_hz"},
      {"n_c"},
      {"n_m"}};
  return f;
}

json merge_cell(json base, const json& over) {
  for (const auto& fam : cell_families()) {
    bool present = false;
    for (const auto& k : fam) present = present || over.contains(k);
    if (!present) continue;
    for (const auto& k : fam) base.erase(k);
    for (const auto& k : fam)
      if (over.contains(k)) base[k] = over[k];
  }
  return base;
}

CellParams parse_cell(const json& c, std::optional<double> J) {
  CellParams p;
  const auto wm = frequency(c, "omega_m", std::nullopt);
  if (!wm) throw ConfigError("cell needs omega_m");
  p.omega_m = *wm;
  p.delta_p = frequency(c, "delta_p", std::nullopt).value_or(-p.omega_m);
  p.G = frequency(c, "G", J).value_or(0.0);
  p.g = frequency(c, "g", std::nullopt);
  if (c.contains("alpha")) p.alpha = c["alpha"].get<double>();
  if (p.g && p.alpha && !c.contains("G_rad_s") && !c.contains("G_over_2pi_hz") && !c.contains("G_over_J"))
    p.G = *p.alpha * *p.g;
  p.kappa = frequency(c, "kappa", J).value_or(0.0);
  p.gamma = frequency(c, "gamma", std::nullopt).value_or(0.0);
  p.n_c = c.value("n_c", 0.0);
  p.n_m = c.value("n_m", 0.0);
  return p;
}

StateSpec parse_state(const json& s) {
  const std::string kind = s.value("kind", std::string("phi_plus"));
  if (kind == "phi_plus") return StateSpec::phi_plus();
  if (kind == "Phi_plus") return StateSpec::Phi_plus();
  if (kind == "vacuum") return StateSpec::vacuum();
  if (!s.contains("amplitudes")) throw ConfigError("custom state needs amplitudes");
  std::vector<std::pair<std::pair<int, int>, cplx>> amps;
  for (const auto& a : s["amplitudes"]) {
    const double na = a[0].get<double>(), nb = a[1].get<double>();
    if (na < 0 || nb < 0 || std::floor(na) != na || std::floor(nb) != nb)
      throw ConfigError("custom amplitudes need non-negative integer occupations");
    const double im = a.size() > 3 ? a[3].get<double>() : 0.0;
    amps.push_back({{static_cast<int>(na), static_cast<int>(nb)}, cplx(a[2].get<double>(), im)});
  }
  return StateSpec::custom(std::move(amps));
}

HopConvention parse_convention(const json& proto) {
  return proto.value("hop_convention", std::string("polariton_chain")) == "as_printed" ? HopConvention::kAsPrinted
                                                                                         : HopConvention::kPolaritonChain;
}

std::string scheme_name(const Experiment& ex) { return ex.config["protocol"].value("scheme", std::string("pst")); }

}  // namespace

OpenMethod Experiment::effective_open_method() const {
  if (open_method != OpenMethod::kAuto) return open_method;
  return array.kind == ModelKind::kRedSideband ? OpenMethod::kThermalChannel : OpenMethod::kLindblad;
}

Experiment resolve_experiment(const json& input) {
  json cfg = input;
  if (cfg.is_object() && cfg.contains("csv_schema_version") && cfg.contains("config")) cfg = cfg["config"];
  const auto errs = validate_against(cfg, experiment_schema());
  if (!errs.empty()) {
    std::string msg = "config does not match the schema:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  Experiment ex;
  ex.config = cfg;
  const json& arr = cfg["array"];
  const json& proto = cfg["protocol"];
  const int N = arr["num_cells"].get<int>();
  const std::string scheme = proto.value("scheme", std::string("pst"));
  const auto J = frequency(proto, "J", std::nullopt);
  const HopConvention conv = parse_convention(proto);
  const double margin = proto.value("margin", 10.0);

  ex.array.kind = arr.value("model", std::string("red_sideband")) == "linearized" ? ModelKind::kLinearized
                                                                                  : ModelKind::kRedSideband;
  const bool explicit_hops = arr.contains("hops_rad_s") || arr.contains("hops_over_J");
  try {
    if (scheme == "custom") {
      if (!explicit_hops) throw ConfigError("custom scheme needs array.hops_rad_s or array.hops_over_J");
      if (!proto.contains("tau_s")) throw ConfigError("custom scheme needs protocol.tau_s");
      if (arr.contains("hops_rad_s") && arr.contains("hops_over_J")) throw ConfigError("give only one hop list");
      if (arr.contains("hops_rad_s")) {
        ex.plan.hops = arr["hops_rad_s"].get<std::vector<double>>();
      } else {
        if (!J) throw ConfigError("hops_over_J needs protocol J");
        for (double h : arr["hops_over_J"].get<std::vector<double>>()) ex.plan.hops.push_back(*J * h);
      }
      ex.plan.tau_A = ex.plan.tau_B = proto["tau_s"].get<double>();
      ex.plan.J = J.value_or(0.0);
      ex.plan.convention = conv;
      ex.plan.compatibility = check_time_compatibility(ex.plan.tau_A, ex.plan.tau_B);
    } else {
      if (explicit_hops) throw ConfigError("explicit hops need protocol.scheme = custom");
      if (!J) throw ConfigError("protocol needs J_rad_s or J_over_2pi_hz");
      if (scheme == "pst") {
        ex.plan = pst_profile(N, *J, conv);
      } else if (scheme == "eigenmode") {
        if (!proto.contains("lambda_over_J")) throw ConfigError("eigenmode scheme needs lambda_over_J");
        ex.plan = eigenmode_profile(N, proto["lambda_over_J"].get<double>() * *J, *J, conv, margin);
      } else {
        if (!proto.contains("lambda_over_J") || !proto.contains("delta_over_J"))
          throw ConfigError("tunneling scheme needs lambda_over_J and delta_over_J");
        ex.plan = tunneling_profile(N, proto["lambda_over_J"].get<double>() * *J, proto["delta_over_J"].get<double>() * *J,
                                    *J, conv, margin);
      }
      if (proto.contains("tau_s")) ex.plan.tau_A = ex.plan.tau_B = proto["tau_s"].get<double>();
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("protocol: ") + e.what());
  }
  if (static_cast<int>(ex.plan.hops.size()) != N - 1) throw ConfigError("hop list length must be num_cells - 1");
  ex.J = J.value_or(0.0);
  ex.tau = ex.plan.tau();

  // Cells.
  std::vector<json> cell_json(static_cast<std::size_t>(N), arr["cell"]);
  if (arr.contains("cell_overrides"))
    for (const auto& o : arr["cell_overrides"]) {
      const int c = o["cell"].get<int>();
      if (c > N) throw ConfigError("cell override index exceeds num_cells");
      cell_json[static_cast<std::size_t>(c - 1)] = merge_cell(cell_json[static_cast<std::size_t>(c - 1)], o.value("params", json::object()));
    }
  const json open = cfg.value("open_system", json::object());
  for (int n = 0; n < N; ++n) {
    CellParams p = parse_cell(cell_json[static_cast<std::size_t>(n)], J);
    if (ex.plan.endpoint_detuning != 0.0 && (n == 0 || n == N - 1)) {
      const bool explicit_detuning = cell_json[static_cast<std::size_t>(n)].contains("delta_p_rad_s") ||
                                     cell_json[static_cast<std::size_t>(n)].contains("delta_p_over_2pi_hz");
      p.omega_m += ex.plan.endpoint_detuning;
      if (!explicit_detuning) p.delta_p = -p.omega_m;
    }
    if (open.contains("n_c")) p.n_c = open["n_c"].get<double>();
    if (open.contains("n_m")) p.n_m = open["n_m"].get<double>();
    ex.array.cells.push_back(p);
  }
  ex.array.hops = ex.plan.hops;
  try {
    ex.array.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("array: ") + e.what());
  }

  // States and endpoints.
  const json st = cfg.value("initial_state", json::object());
  ex.sender_state = parse_state(st);
  ex.sender_cell = st.value("sender_cell", 1) - 1;
  ex.receiver_cell = st.value("receiver_cell", N) - 1;
  ex.chain_phase = st.value("chain_phase", false);
  if (ex.sender_cell >= N || ex.receiver_cell >= N || ex.sender_cell == ex.receiver_cell)
    throw ConfigError("sender and receiver must be distinct cells within the array");
  if (cfg.contains("counter_state")) ex.counter_state = parse_state(cfg["counter_state"]);

  // Open system.
  ex.open = open.value("enabled", false);
  const std::string om = open.value("method", std::string("auto"));
  ex.open_method = om == "lindblad" ? OpenMethod::kLindblad : om == "thermal_channel" ? OpenMethod::kThermalChannel : OpenMethod::kAuto;
  if (ex.open_method == OpenMethod::kThermalChannel && ex.array.kind != ModelKind::kRedSideband)
    throw ConfigError("thermal_channel needs the red_sideband model");

  // Truncation.
  int k = 0;
  try {
    k = ex.sender_state.max_excitation() + (ex.counter_state ? ex.counter_state->max_excitation() : 0);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("initial_state: ") + e.what());
  }
  const json tr = cfg.value("truncation", json::object());
  const bool exact_cap = ex.array.kind == ModelKind::kRedSideband && !ex.open;
  ex.cap = tr.value("cap", exact_cap ? std::max(k, 1) : k + 3);
  // The per-mode dimension never binds for exact closed runs; elsewhere it
  // equals the cap.
  ex.mode_dim = tr.value("mode_dim", exact_cap ? ex.cap + 1 : std::max(ex.cap, 2));
  if (tr.contains("convergence_caps")) ex.convergence_caps = tr["convergence_caps"].get<std::vector<int>>();
  ex.convergence_tol = tr.value("convergence_tol", 1e-4);
  ex.receiver_cap = tr.value("receiver_cap", 8);
  if (tr.contains("receiver_convergence_caps"))
    ex.receiver_convergence_caps = tr["receiver_convergence_caps"].get<std::vector<int>>();

  // Time grid.
  const json tm = cfg.value("time", json::object());
  const double t_final = tm.value("t_final_over_tau", 1.0) * ex.tau;
  if (tm.contains("sample_times_over_tau")) {
    for (double s : tm["sample_times_over_tau"].get<std::vector<double>>()) ex.sample_times.push_back(s * ex.tau);
    std::sort(ex.sample_times.begin(), ex.sample_times.end());
  } else {
    const int ns = tm.value("num_samples", 1);
    if (ns == 1) {
      ex.sample_times = {t_final};
    } else {
      for (int i = 0; i < ns; ++i) ex.sample_times.push_back(t_final * i / (ns - 1));
    }
  }

  // Integrator and limits.
  const json in = cfg.value("integrator", json::object());
  const std::string m = in.value("method", std::string("auto"));
  ex.integrator.method = m == "eigen" ? Method::kEigen : m == "adaptive" ? Method::kAdaptive : Method::kAuto;
  if (in.contains("rel_tol")) ex.integrator.rel_tol = in["rel_tol"].get<double>();
  if (in.contains("abs_tol")) ex.integrator.abs_tol = in["abs_tol"].get<double>();
  const json lim = cfg.value("limits", json::object());
  ex.integrator.guard.pure_limit = lim.value("pure_dim", std::size_t{20000});
  ex.integrator.guard.density_limit = lim.value("density_dim", std::size_t{5000});

  const json ck = cfg.value("checks", json::object());
  ex.rwa_margin = ck.value("rwa_margin", 10.0);
  ex.compat_tol = ck.value("time_compatibility_tol", 1e-9);
  ex.basename = cfg.value("outputs", json::object()).value("basename", std::string());
  return ex;
}

Experiment load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return resolve_experiment(j);
}

// ---------------------------------------------------------------------------
// Tables

std::size_t Table::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("no column named " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
  const auto& c = rows.at(row).at(column(name));
  if (const double* d = std::get_if<double>(&c)) return *d;
  return kNaN;
}

// ---------------------------------------------------------------------------
// Transfer runs

namespace {

std::vector<std::pair<int, StateSpec>> cell_states(const Experiment& ex) {
  std::vector<std::pair<int, StateSpec>> s{{ex.sender_cell, ex.sender_state}};
  if (ex.counter_state) s.emplace_back(ex.receiver_cell, *ex.counter_state);
  return s;
}

double chain_phase(const Experiment& ex) {
  return ex.chain_phase ? pst_chain_phase(static_cast<int>(ex.array.size())) : 0.0;
}

struct Scores {
  double raw, corrected, root, max_phase, max_polariton_phase;
};

Scores score(const QuantumState& rho_r, const StateSpec& target_spec, const CellParams& p, double t,
             const Experiment& ex) {
  const Vector target = two_mode_vector(rho_r.space(), target_spec);
  const auto f = corrected_transfer_fidelity(rho_r, target, p, t, ex.array.kind, chain_phase(ex));
  const auto mp = max_phase_fidelity(rho_r, target);
  const double mpp = ex.array.kind == ModelKind::kRedSideband ? max_polariton_phase_fidelity(rho_r, target).corrected_fidelity
                                                              : kNaN;
  return {f.raw_fidelity, f.corrected_fidelity, std::sqrt(f.corrected_fidelity), mp.corrected_fidelity, mpp};
}

TransferSample sample_from_state(const Experiment& ex, const QuantumState& state, double t) {
  TransferSample s;
  s.time = t;
  const auto& space = *state.space();
  s.populations.assign(space.num_modes(), 0.0);
  double trace = 0.0;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double w = state.is_pure() ? std::norm(state.amplitudes()(ii)) : state.rho()(ii, ii).real();
    trace += w;
    const auto& occ = space.occupation(i);
    for (std::size_t m = 0; m < occ.size(); ++m) s.populations[m] += w * occ[m];
  }
  s.trace = trace;
  for (double n : s.populations) s.total_excitation += n;
  const auto fwd = score(receiver_state(state, ex.receiver_cell), ex.sender_state, ex.array.cells[ex.receiver_cell], t, ex);
  s.raw = fwd.raw;
  s.corrected = fwd.corrected;
  s.root_corrected = fwd.root;
  s.max_phase = fwd.max_phase;
  s.max_polariton_phase = fwd.max_polariton_phase;
  if (ex.counter_state) {
    const auto back = score(receiver_state(state, ex.sender_cell), *ex.counter_state, ex.array.cells[ex.sender_cell], t, ex);
    s.back_raw = back.raw;
    s.back_corrected = back.corrected;
  }
  s.min_eigenvalue = kNaN;
  return s;
}

TransferRun run_fock(const Experiment& ex, const std::vector<double>& times, std::optional<int> cap, bool force_dim) {
  const int c = cap.value_or(ex.cap);
  const int md = cap ? c + 1 : ex.mode_dim;
  const SpacePtr space = array_space(ex.array.size(), md, c);
  DimensionGuard guard = ex.integrator.guard;
  guard.force = force_dim;
  IntegratorOptions opts = ex.integrator;
  opts.guard = guard;
  const StateUse use = ex.open ? StateUse::kDensity : StateUse::kPure;
  const SparseOperator h = build_array_hamiltonian(ex.array, space, use, guard);
  const QuantumState psi0 = product_cell_state(space, cell_states(ex));
  const double tmax = times.back();

  TransferRun run;
  run.dim = space->dim();
  Trajectory traj = [&] {
    if (!ex.open) {
      run.route = "closed";
      return evolve_closed(EvolutionSpec{h, {}, tmax, times, opts}, psi0);
    }
    run.route = "lindblad";
    if (ex.array.kind == ModelKind::kRedSideband) opts.frame_frequency = ex.array.cells.front().omega_m;
    return evolve_open(EvolutionSpec{h, thermal_dissipators(ex.array, space), tmax, times, opts}, psi0);
  }();
  run.max_trace_drift = traj.max_norm_drift;
  const double n0 = psi0.expectation(total_number_operator(space)).real();
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    run.samples.push_back(sample_from_state(ex, traj.states[i], traj.times[i]));
    if (!ex.open && ex.array.kind == ModelKind::kRedSideband)
      run.max_excitation_drift = std::max(run.max_excitation_drift, std::abs(run.samples.back().total_excitation - n0));
  }
  if (ex.open) run.samples.back().min_eigenvalue = min_eigenvalue(traj.final_state());
  else run.samples.back().min_eigenvalue = 0.0;
  return run;
}

TransferRun run_channel(const Experiment& ex, const std::vector<double>& times, std::optional<int> receiver_cap,
                        bool force_dim) {
  int k = ex.sender_state.max_excitation() + (ex.counter_state ? ex.counter_state->max_excitation() : 0);
  k = std::max(k, 1);
  const SpacePtr space = array_space(ex.array.size(), k + 1, k);
  const QuantumState psi0 = product_cell_state(space, cell_states(ex));
  const auto nmodes = static_cast<Eigen::Index>(space->num_modes());
  DenseMatrix n0(nmodes, nmodes);
  for (Eigen::Index i = 0; i < nmodes; ++i)
    for (Eigen::Index j = 0; j < nmodes; ++j)
      n0(i, j) = psi0.expectation(creation(space, static_cast<int>(i)) * annihilation(space, static_cast<int>(j)));

  ChannelOptions copt;
  copt.receiver_cap = receiver_cap.value_or(ex.receiver_cap);
  copt.integrator = ex.integrator;
  copt.integrator.guard.force = force_dim;

  TransferRun run;
  run.route = "thermal_channel";
  run.dim = static_cast<std::size_t>((copt.receiver_cap + 1) * (copt.receiver_cap + 2) / 2);
  for (double t : times) {
    auto receiver_at = [&](int cell) -> std::pair<QuantumState, ChannelResult> {
      if (t == 0.0) {
        QuantumState r = receiver_state(psi0, cell);
        return {r, ChannelResult{r, 0.0, 0.0, 0.0}};
      }
      auto res = thermal_channel_receiver_state(ex.array, psi0, cell, t, copt);
      return {res.receiver, res};
    };
    TransferSample s;
    s.time = t;
    const auto [rho_fwd, res_fwd] = receiver_at(ex.receiver_cell);
    const auto fwd = score(rho_fwd, ex.sender_state, ex.array.cells[ex.receiver_cell], t, ex);
    s.raw = fwd.raw;
    s.corrected = fwd.corrected;
    s.root_corrected = fwd.root;
    s.max_phase = fwd.max_phase;
    s.max_polariton_phase = fwd.max_polariton_phase;
  s.max_polariton_phase = fwd.max_polariton_phase;
    s.trace = rho_fwd.trace();
    s.min_eigenvalue = t == 0.0 ? min_eigenvalue(rho_fwd) : res_fwd.min_eigenvalue;
    run.max_trace_drift = std::max({run.max_trace_drift, res_fwd.loss_trace_drift, res_fwd.noise_trace_drift,
                                    std::abs(s.trace - 1.0)});
    if (ex.counter_state) {
      const auto [rho_back, res_back] = receiver_at(ex.sender_cell);
      const auto back = score(rho_back, *ex.counter_state, ex.array.cells[ex.sender_cell], t, ex);
      s.back_raw = back.raw;
      s.back_corrected = back.corrected;
      run.max_trace_drift = std::max({run.max_trace_drift, res_back.loss_trace_drift, res_back.noise_trace_drift});
    }
    // Mode populations follow from the linear moments: N(t) = T* N0 T^T + Q.
    const auto lin = linear_mode_dynamics(ex.array, t);
    const DenseMatrix nt = lin.T.conjugate() * n0 * lin.T.transpose() + lin.Q;
    for (Eigen::Index m = 0; m < nmodes; ++m) {
      s.populations.push_back(nt(m, m).real());
      s.total_excitation += nt(m, m).real();
    }
    run.samples.push_back(std::move(s));
  }
  return run;
}

}  // namespace

TransferRun run_transfer(const Experiment& ex, const std::vector<double>& times, std::optional<int> cap,
                         std::optional<int> receiver_cap, bool force_dim) {
  if (times.empty()) throw InvalidArgument("run_transfer needs at least one sample time");
  if (ex.open && ex.effective_open_method() == OpenMethod::kThermalChannel)
    return run_channel(ex, times, receiver_cap, force_dim);
  return run_fock(ex, times, cap, force_dim);
}

std::optional<ConvergenceResult> run_convergence(const Experiment& ex, bool force_dim) {
  const bool channel = ex.open && ex.effective_open_method() == OpenMethod::kThermalChannel;
  const auto& caps = channel ? ex.receiver_convergence_caps : ex.convergence_caps;
  if (caps.empty()) return std::nullopt;
  auto observable = [&](int c) {
    const auto run = channel ? run_transfer(ex, {ex.tau}, std::nullopt, c, force_dim)
                             : run_transfer(ex, {ex.tau}, c, std::nullopt, force_dim);
    return run.samples.back().corrected;
  };
  return convergence_run(caps, observable, ex.convergence_tol);
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void write_csv(const Table& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << csv_escape(t.columns[i]);
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "");
      if (const double* d = std::get_if<double>(&row[i])) out << fmt(*d);
      else out << csv_escape(std::get<std::string>(row[i]));
    }
    out << "\n";
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json convergence_json(const std::optional<ConvergenceResult>& c, const std::string& kind) {
  if (!c) return json{{"status", "not_run"}};
  json j{{"status", c->converged ? "converged" : "not_converged"},
         {"caps_kind", kind},
         {"caps", c->caps},
         {"values", c->values},
         {"tolerance", c->tolerance},
         {"last_change", c->last_change}};
  j["converged_at"] = c->converged_at ? json(*c->converged_at) : json(nullptr);
  return j;
}

json resolved_json(const Experiment& ex) {
  json cells = json::array();
  for (const auto& p : ex.array.cells) {
    json c{{"omega_m_rad_s", p.omega_m}, {"delta_p_rad_s", p.delta_p}, {"G_rad_s", p.G},
           {"kappa_rad_s", p.kappa}, {"gamma_rad_s", p.gamma}, {"n_c", p.n_c}, {"n_m", p.n_m}};
    cells.push_back(c);
  }
  return json{{"model", to_string(ex.array.kind)},
              {"scheme", scheme_name(ex)},
              {"hop_convention", to_string(ex.plan.convention)},
              {"J_rad_s", ex.J},
              {"hops_rad_s", ex.array.hops},
              {"tau_s", ex.tau},
              {"tau_A_s", ex.plan.tau_A},
              {"tau_B_s", ex.plan.tau_B},
              {"plan_warnings", ex.plan.warnings},
              {"cells", cells},
              {"sender_cell", ex.sender_cell + 1},
              {"receiver_cell", ex.receiver_cell + 1},
              {"initial_state", ex.sender_state.name()},
              {"counter_state", ex.counter_state ? json(ex.counter_state->name()) : json(nullptr)},
              {"sample_times_s", ex.sample_times}};
}

std::string open_route(const Experiment& ex) {
  if (!ex.open) return "closed";
  return ex.effective_open_method() == OpenMethod::kThermalChannel ? "thermal_channel" : "lindblad";
}

json base_metadata(const std::string& command, const Experiment& ex, const RunOptions& opts) {
  json m;
  m["tool"] = "optoqst";
  m["version"] = OPTOQST_VERSION;
  m["command"] = command;
  m["csv_schema_version"] = kCsvSchemaVersion;
  m["config"] = ex.config;
  m["resolved"] = resolved_json(ex);
  m["conventions"] = {
      {"units", "hbar = 1, angular frequencies in rad/s, times in s"},
      {"mode_order", "a1, b1, a2, b2, ..."},
      {"fidelity", "squared overlap <psi|rho|psi>"},
      {"root_fidelity", "sqrt of the squared overlap (Uhlmann fidelity for a pure target)"},
      {"phase_correction", "exp(+i t H_cell) on the receiver cell, H_cell = omega_A A^dag A + omega_B B^dag B"},
      {"chain_phase", ex.chain_phase ? "exp(+i (N-1) pi/2 N_R) applied" : "not applied"},
      {"max_phase_fidelity", "max over exp(i(phi_a n_a + phi_b n_b)), 64x64 grid + refinement"},
      {"max_polariton_phase_fidelity",
       "max over exp(i(phi_A N_A + phi_B N_B)), A,B = (a +/- b)/sqrt(2); red-sideband only"},
      {"dissipator", "rate (L rho L^dag - {L^dag L, rho}/2); (k/2)(1+n) D[a] enters as rate k(1+n)"}};
  m["truncation"] = {{"route", open_route(ex)},
                     {"mode_dim", ex.mode_dim},
                     {"cap", ex.cap},
                     {"convergence_caps", ex.convergence_caps},
                     {"receiver_cap", ex.receiver_cap},
                     {"receiver_convergence_caps", ex.receiver_convergence_caps},
                     {"convergence_tol", ex.convergence_tol}};
  m["integrator"] = {{"method", to_string(ex.integrator.method)},
                     {"rel_tol", ex.integrator.rel_tol ? json(*ex.integrator.rel_tol) : json("default")},
                     {"abs_tol", ex.integrator.abs_tol ? json(*ex.integrator.abs_tol) : json("default")},
                     {"default_tolerances", "closed rel 1e-10 abs 1e-12; open rel 1e-8 abs 1e-10"}};
  m["threads"] = opts.threads;
  m["force_dim"] = opts.force_dim;
  m["versions"] = {{"optoqst", OPTOQST_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION},
                   {"compiler", __VERSION__}};
  return m;
}

std::string gnuplot_script(const std::string& command, const Table& t, const std::string& csv_name,
                           const Experiment& ex) {
  std::ostringstream gp;
  gp << "# gnuplot script for " << csv_name << "\n";
  gp << "set datafile separator ','\nset key autotitle columnhead\nset grid\n";
  gp << "set terminal pngcairo size 900,600\nset output '" << csv_name.substr(0, csv_name.size() - 4) << ".png'\n";
  if (command == "sweep") {
    const std::string axis = ex.config["sweep"]["axis"].get<std::string>();
    if (axis == "kappa_over_J") gp << "set logscale x\n";
    gp << "set xlabel '" << axis << "'\nset ylabel 'fidelity at tau'\n";
    gp << "plot ";
    bool first = true;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      const auto& c = t.columns[i];
      if (c.size() > 10 && c.compare(c.size() - 10, 10, "_corrected") == 0) {
        gp << (first ? "" : ", ") << "'" << csv_name << "' using 1:" << i + 1 << " with linespoints";
        first = false;
      }
    }
    gp << "\n";
  } else {
    gp << "set xlabel 'time (s)'\nset ylabel 'fidelity'\n";
    gp << "plot '" << csv_name << "' using 1:2 with lines, '' using 1:3 with lines\n";
  }
  return gp.str();
}

void finish(CommandResult& r, const std::string& command, const Experiment& ex, const RunOptions& opts,
            std::chrono::steady_clock::time_point start) {
  r.metadata["exit_code"] = r.exit_code;
  r.metadata["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!opts.write_files) return;
  std::filesystem::create_directories(opts.out_dir);
  const std::string base = ex.basename.empty() ? command : ex.basename;
  const auto csv = opts.out_dir / (base + ".csv");
  const auto meta = opts.out_dir / (base + ".json");
  r.metadata["csv"] = csv.filename().string();
  r.metadata["rerun"] = "optoqst " + command + " --config " + meta.filename().string() + " --threads " +
                        std::to_string(opts.threads) + (opts.force_dim ? " --force-dim" : "");
  write_csv(r.table, csv);
  std::ofstream(meta) << r.metadata.dump(2) << "\n";
  r.files = {csv, meta};
  if (opts.gnuplot_script) {
    const auto gp = opts.out_dir / (base + ".gp");
    std::ofstream(gp) << gnuplot_script(command, r.table, csv.filename().string(), ex);
    r.files.push_back(gp);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

CommandResult cmd_check(const Experiment& ex, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult r;
  r.table.columns = {"check", "subject", "value", "limit", "margin", "pass"};
  bool all = true;
  auto row = [&](const std::string& check, const std::string& subject, double value, double limit, double margin,
                 bool pass) {
    r.table.rows.push_back({check, subject, value, limit, margin, std::string(pass ? "true" : "false")});
    all = all && pass;
  };
  for (std::size_t n = 0; n < ex.array.size(); ++n) {
    const auto& p = ex.array.cells[n];
    const double bound = stability_bound(p);
    row("stability", "cell " + std::to_string(n + 1), p.G, bound, p.G > 0.0 ? bound / p.G : kNaN, check_stability(p));
  }
  double ntot = 0.0;
  for (const auto& [occ, amp] : ex.sender_state.terms()) ntot += std::norm(amp) * (occ.first + occ.second);
  if (ex.counter_state)
    for (const auto& [occ, amp] : ex.counter_state->terms()) ntot += std::norm(amp) * (occ.first + occ.second);
  try {
    const auto rwa = check_rwa(ex.array, ntot, ex.rwa_margin);
    row("rwa", rwa.worst_bond >= 0 ? "bond " + std::to_string(rwa.worst_bond + 1) : "all bonds", rwa.lhs, rwa.rhs,
        rwa.ratio, rwa.ok);
  } catch (const InstabilityError& e) {
    row("rwa", std::string("unstable: ") + e.what(), kNaN, kNaN, kNaN, false);
  }
  double tau_a = ex.plan.tau_A, tau_b = ex.plan.tau_B;
  if (ex.array.kind == ModelKind::kLinearized && ex.array.hops.front() > 0.0) {
    try {
      const auto d = decompose(ex.array);
      const double half = 0.5 * ex.array.hops.front();
      tau_a *= half / std::abs(d.bonds.front().lambda);
      tau_b *= half / std::abs(d.bonds.front().zeta);
    } catch (const InstabilityError&) {
      tau_a = tau_b = kNaN;
    }
  }
  if (std::isfinite(tau_a) && std::isfinite(tau_b) && tau_a > 0.0 && tau_b > 0.0) {
    const auto tc = check_time_compatibility(tau_a, tau_b, ex.compat_tol);
    row("time_compatibility", "tau_A/tau_B", tc.ratio, 1.0, kNaN, tc.ok);
  } else {
    row("time_compatibility", "tau_A/tau_B", kNaN, 1.0, kNaN, false);
  }
  r.exit_code = all ? kExitOk : kExitPhysics;
  r.metadata = base_metadata("check", ex, opts);
  r.metadata["checks_passed"] = all;
  r.metadata["rwa_total_excitation"] = ntot;
  r.summary = all ? "all checks passed" : "one or more checks failed";
  finish(r, "check", ex, opts, start);
  return r;
}

CommandResult cmd_simulate(const Experiment& ex, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult r;
  const auto conv = run_convergence(ex, opts.force_dim);
  const auto run = run_transfer(ex, ex.sample_times, std::nullopt, std::nullopt, opts.force_dim);
  r.table.columns = {"time_s",
                     "raw_fidelity",
                     "corrected_fidelity",
                     "root_corrected_fidelity",
                     "max_phase_fidelity",
                     "max_polariton_phase_fidelity",
                     "trace",
                     "total_excitation",
                     "min_eigenvalue"};
  for (std::size_t c = 0; c < ex.array.size(); ++c) {
    r.table.columns.push_back("n_a" + std::to_string(c + 1));
    r.table.columns.push_back("n_b" + std::to_string(c + 1));
  }
  for (const auto& s : run.samples) {
    std::vector<Cell> row{s.time,      s.raw,   s.corrected,        s.root_corrected, s.max_phase, s.max_polariton_phase,
                          s.trace,     s.total_excitation, s.min_eigenvalue};
    for (double n : s.populations) row.emplace_back(n);
    r.table.rows.push_back(std::move(row));
  }
  r.metadata = base_metadata("simulate", ex, opts);
  r.metadata["route"] = run.route;
  r.metadata["hilbert_dim"] = run.dim;
  r.metadata["convergence"] = convergence_json(conv, run.route == "thermal_channel" ? "receiver_cap" : "global_cap");
  r.metadata["physicality"] = {{"max_trace_drift", run.max_trace_drift},
                               {"max_excitation_drift", run.max_excitation_drift},
                               {"final_min_eigenvalue", number_or_null(run.samples.back().min_eigenvalue)}};
  r.exit_code = conv && !conv->converged ? kExitConvergence : kExitOk;
  r.summary = "corrected fidelity at t = " + fmt(run.samples.back().time) + " s: " + fmt(run.samples.back().corrected);
  finish(r, "simulate", ex, opts, start);
  return r;
}

namespace {

std::vector<double> sweep_grid(const json& sweep) {
  std::vector<double> grid;
  if (sweep.contains("grid")) grid = sweep["grid"].get<std::vector<double>>();
  if (sweep.contains("log_grid")) {
    if (!grid.empty()) throw ConfigError("give either sweep.grid or sweep.log_grid");
    const auto& lg = sweep["log_grid"];
    const double a = std::log10(lg["start"].get<double>()), b = std::log10(lg["stop"].get<double>());
    const int n = lg["num"].get<int>();
    for (int i = 0; i < n; ++i) grid.push_back(std::pow(10.0, n == 1 ? a : a + (b - a) * i / (n - 1)));
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  return grid;
}

std::string trim_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

CommandResult cmd_sweep(const Experiment& ex, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (!ex.config.contains("sweep")) throw ConfigError("sweep command needs a sweep section");
  const json& sweep = ex.config["sweep"];
  const std::string axis = sweep["axis"].get<std::string>();
  const std::vector<double> grid = sweep_grid(sweep);
  std::vector<std::string> states =
      sweep.contains("states") ? sweep["states"].get<std::vector<std::string>>()
                               : std::vector<std::string>{ex.config.value("initial_state", json::object()).value("kind", std::string("phi_plus"))};
  std::vector<std::optional<double>> nms;
  if (ex.open && sweep.contains("n_m_values")) {
    for (double v : sweep["n_m_values"].get<std::vector<double>>()) nms.emplace_back(v);
  } else {
    nms.emplace_back(std::nullopt);
  }

  struct Combo {
    std::string state;
    std::optional<double> nm;
    std::string prefix;
  };
  std::vector<Combo> combos;
  for (const auto& s : states)
    for (const auto& nm : nms) combos.push_back({s, nm, s + (nm ? "_nm" + trim_number(*nm) : std::string())});

  // Resolve every point up front so config errors surface before any work.
  std::vector<std::vector<Experiment>> points(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (const auto& c : combos) {
      json cfg = ex.config;
      json& cell = cfg["array"]["cell"];
      const std::string fam = axis == "G_over_J" ? "G" : "kappa";
      for (const auto* suffix : {"_rad_s", "_over_2pi_hz", "_over_J"}) cell.erase(fam + suffix);
      cell[axis] = grid[g];
      cfg["initial_state"]["kind"] = c.state;
      cfg["initial_state"].erase("amplitudes");
      if (c.nm) cfg["open_system"]["n_m"] = *c.nm;
      points[g].push_back(resolve_experiment(cfg));
    }
  }

  struct Outcome {
    double raw = kNaN, corrected = kNaN, root = kNaN;
    double converged = kNaN;
    double trace_drift = kNaN;
    double min_eig = kNaN;
  };
  std::vector<std::vector<Outcome>> outcomes(grid.size(), std::vector<Outcome>(combos.size()));
  std::vector<std::string> status(grid.size(), "ok");
  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_unconverged{false}, any_failed{false};
  std::mutex status_mu;
  auto worker = [&] {
    for (std::size_t g = next++; g < grid.size(); g = next++) {
      for (std::size_t k = 0; k < combos.size(); ++k) {
        try {
          const Experiment& pe = points[g][k];
          const auto conv = run_convergence(pe, opts.force_dim);
          const auto run = run_transfer(pe, {pe.tau}, std::nullopt, std::nullopt, opts.force_dim);
          auto& o = outcomes[g][k];
          o.raw = run.samples.back().raw;
          o.corrected = run.samples.back().corrected;
          o.root = run.samples.back().root_corrected;
          o.trace_drift = run.max_trace_drift;
          o.min_eig = run.samples.back().min_eigenvalue;
          if (conv) {
            o.converged = conv->converged ? 1.0 : 0.0;
            if (!conv->converged) any_unconverged = true;
          }
        } catch (const std::exception& e) {
          any_failed = true;
          std::lock_guard lock(status_mu);
          status[g] = (status[g] == "ok" ? std::string() : status[g] + "; ") + combos[k].prefix + ": " + e.what();
        }
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(opts.threads, static_cast<int>(grid.size())));
  {
    std::vector<std::jthread> pool;
    for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
    worker();
  }

  CommandResult r;
  r.table.columns = {axis};
  for (const auto& c : combos) {
    for (const auto* s : {"_raw", "_corrected", "_root", "_converged", "_trace_drift", "_min_eigenvalue"})
      r.table.columns.push_back(c.prefix + s);
  }
  r.table.columns.push_back("status");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<Cell> row{grid[g]};
    for (const auto& o : outcomes[g]) {
      for (double v : {o.raw, o.corrected, o.root, o.converged, o.trace_drift, o.min_eig}) row.emplace_back(v);
    }
    row.emplace_back(status[g]);
    r.table.rows.push_back(std::move(row));
  }
  r.metadata = base_metadata("sweep", ex, opts);
  r.metadata["sweep"] = {{"axis", axis}, {"grid", grid}, {"states", states}};
  json nm_list = json::array();
  for (const auto& nm : nms)
    if (nm) nm_list.push_back(*nm);
  r.metadata["sweep"]["n_m_values"] = nm_list;
  r.metadata["route"] = open_route(ex);
  r.metadata["convergence_failures"] = any_unconverged.load();
  r.metadata["point_failures"] = any_failed.load();
  r.exit_code = any_unconverged ? kExitConvergence : any_failed ? kExitPhysics : kExitOk;
  r.summary = "swept " + std::to_string(grid.size()) + " points";
  finish(r, "sweep", ex, opts, start);
  return r;
}

CommandResult cmd_bidirectional(const Experiment& base, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (scheme_name(base) != "pst") throw ConfigError("bidirectional transfer needs the pst scheme");
  Experiment ex = base;
  if (!ex.counter_state) ex.counter_state = ex.sender_state;
  // The resolved cap covers one state; widen it for both ends.
  const int k = ex.sender_state.max_excitation() + ex.counter_state->max_excitation();
  const json tr = ex.config.value("truncation", json::object());
  if (!tr.contains("cap")) ex.cap = std::max(ex.cap, ex.array.kind == ModelKind::kRedSideband && !ex.open ? k : k + 3);
  if (!tr.contains("mode_dim")) ex.mode_dim = ex.array.kind == ModelKind::kRedSideband && !ex.open ? ex.cap + 1 : std::max(ex.cap, 2);

  const auto conv = run_convergence(ex, opts.force_dim);
  const auto run = run_transfer(ex, ex.sample_times, std::nullopt, std::nullopt, opts.force_dim);
  CommandResult r;
  r.table.columns = {"time_s", "forward_raw", "forward_corrected", "backward_raw", "backward_corrected", "trace",
                     "total_excitation"};
  for (const auto& s : run.samples)
    r.table.rows.push_back({s.time, s.raw, s.corrected, s.back_raw.value_or(kNaN), s.back_corrected.value_or(kNaN),
                            s.trace, s.total_excitation});
  r.metadata = base_metadata("bidirectional", ex, opts);
  r.metadata["interpretation"] =
      "mirror-symmetric simultaneous PST: sender state launched at the sender cell and counter state at the "
      "receiver cell at t = 0; forward fidelity is scored at the receiver, backward fidelity at the sender";
  r.metadata["route"] = run.route;
  r.metadata["hilbert_dim"] = run.dim;
  r.metadata["convergence"] = convergence_json(conv, run.route == "thermal_channel" ? "receiver_cap" : "global_cap");
  r.metadata["physicality"] = {{"max_trace_drift", run.max_trace_drift},
                               {"max_excitation_drift", run.max_excitation_drift}};
  r.exit_code = conv && !conv->converged ? kExitConvergence : kExitOk;
  r.summary = "forward " + fmt(run.samples.back().corrected) + ", backward " +
              fmt(run.samples.back().back_corrected.value_or(kNaN));
  finish(r, "bidirectional", ex, opts, start);
  return r;
}

CommandResult run_command(const std::string& command, const std::filesystem::path& config_path, const RunOptions& opts) {
  CommandResult r;
  try {
    const Experiment ex = load_experiment(config_path);
    if (command == "check") return cmd_check(ex, opts);
    if (command == "simulate") return cmd_simulate(ex, opts);
    if (command == "sweep") return cmd_sweep(ex, opts);
    if (command == "bidirectional") return cmd_bidirectional(ex, opts);
    throw ConfigError("unknown command " + command);
  } catch (const ConfigError& e) {
    r.exit_code = kExitConfig;
    r.summary = std::string("config error: ") + e.what();
  } catch (const DimensionLimitError& e) {
    r.exit_code = kExitConfig;
    r.summary = std::string("dimension limit: ") + e.what();
  } catch (const InvalidArgument& e) {
    r.exit_code = kExitConfig;
    r.summary = std::string("invalid input: ") + e.what();
  } catch (const InstabilityError& e) {
    r.exit_code = kExitPhysics;
    r.summary = std::string("instability: ") + e.what();
  } catch (const ConvergenceError& e) {
    r.exit_code = kExitConvergence;
    r.summary = std::string("convergence failure: ") + e.what();
  }
  return r;
}

}  // namespace optoqst::cli
