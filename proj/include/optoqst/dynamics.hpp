// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file dynamics.hpp
 * @brief Closed and Lindblad propagation, the single-excitation oracle,
 *        truncation convergence, and the exact thermal channel of
 *        number-conserving arrays.
 *
 * Dissipators use the standard form rate * (L rho L^dag - {L^dag L, rho}/2).
 * A bath term (k/2)(1 + n) D[a] with D[O] = 2 O rho O^dag - rho O^dag O -
 * O^dag O rho therefore enters as {a, k(1 + n)}.
 *
 * Density matrices are propagated in matrix form; the right-hand side is
 * X + X^dag with X = -i H_eff rho + (1/2) sum_k r_k L_k (L_k rho)^dag and
 * H_eff = H - (i/2) sum_k r_k L_k^dag L_k, so it is Hermitian for Hermitian
 * rho by construction.
 */

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optoqst/model.hpp"

namespace optoqst {

struct Dissipator {
  SparseOperator op;
  double rate = 0.0;
  std::string label;
};

/// {a_n, k(1+n_c)}, {a_n^dag, k n_c}, {b_n, g(1+n_m)}, {b_n^dag, g n_m} for
/// every cell; zero-rate terms are omitted.
std::vector<Dissipator> thermal_dissipators(const ArrayConfig& cfg, const SpacePtr& space);

enum class Method { kAuto, kEigen, kAdaptive };
std::string to_string(Method m);

struct IntegratorOptions {
  std::optional<double> rel_tol;  ///< default 1e-10 closed, 1e-8 open
  std::optional<double> abs_tol;  ///< default 1e-12 closed, 1e-10 open
  Method method = Method::kAuto;
  /// Propagate in the frame rotating at omega * N_tot. Requires H to commute
  /// with N_tot and every jump operator to change N_tot by a fixed amount.
  std::optional<double> frame_frequency;
  DimensionGuard guard;
  std::size_t max_steps = 50'000'000;
};

struct EvolutionSpec {
  SparseOperator hamiltonian;
  std::vector<Dissipator> dissipators;
  double t_final = 0.0;
  /// Reported times in [0, t_final], ascending; empty means {t_final}.
  std::vector<double> sample_times;
  IntegratorOptions options;

  /// Rates >= 0, positive tolerances, operators on the Hamiltonian's space.
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<QuantumState> states;
  Method method_used = Method::kAuto;
  std::size_t steps = 0;
  double max_norm_drift = 0.0;  ///< max |trace - 1| (open) or |<psi|psi> - 1| (closed)
  double rel_tol = 0.0;
  double abs_tol = 0.0;

  const QuantumState& final_state() const { return states.back(); }
};

/// psi(t) = exp(-i H t) psi0 at every sample time. The eigen-propagator is
/// used for dim < 2000 under kAuto, otherwise an adaptive RKF78 stepper.
Trajectory evolve_closed(const EvolutionSpec& spec, const QuantumState& psi0);
QuantumState evolve_closed(const SparseOperator& H, const QuantumState& psi0, double t, const IntegratorOptions& opts = {});

/// Lindblad propagation with trace monitoring. kEigen exponentiates the dense
/// Liouvillian and is limited to dim^2 <= 2000; kAuto picks it when allowed.
Trajectory evolve_open(const EvolutionSpec& spec, const QuantumState& rho0);

/// d rho / dt for the given generator (lab frame).
DenseMatrix lindblad_rhs(const QuantumState& rho, const EvolutionSpec& spec);

/// Smallest eigenvalue of a density matrix (of |psi><psi| for pure states).
double min_eigenvalue(const QuantumState& state);

/// The 2N x 2N single-particle Hamiltonian of a red-sideband array over
/// (a_1, b_1, ..., a_N, b_N).
DenseMatrix single_particle_hamiltonian(const ArrayConfig& cfg);

/// Amplitudes over the 2N single-excitation states after time t, starting
/// from `initial` (default: one photon in cell 1). Refuses linearized models.
Vector single_excitation_oracle(const ArrayConfig& cfg, double t, const std::optional<Vector>& initial = std::nullopt);

/// Amplitudes of a pure state on its single-excitation sector, ordered as
/// single_excitation_oracle.
Vector single_excitation_sector(const QuantumState& psi);

struct ConvergenceResult {
  std::vector<int> caps;
  std::vector<double> values;
  bool converged = false;
  std::optional<int> converged_at;  ///< first cap from which successive changes stay below tol
  double tolerance = 1e-4;
  double last_change = 0.0;
};

/// Evaluate `observable(cap)` on ascending caps. Throws InvalidArgument for
/// fewer than two caps; non-convergence is reported in the result.
ConvergenceResult convergence_run(const std::vector<int>& caps, const std::function<double(int)>& observable,
                                  double tol = 1e-4);

/// c(t) = T c(0) + noise for a number-conserving array with linear thermal
/// baths; Q_ij = <noise_i^dag noise_j> is the normally ordered thermal noise.
struct LinearModeDynamics {
  DenseMatrix T;
  DenseMatrix Q;
};
LinearModeDynamics linear_mode_dynamics(const ArrayConfig& cfg, double t);

struct ChannelOptions {
  int receiver_cap = 12;
  IntegratorOptions integrator;
};

struct ChannelResult {
  QuantumState receiver;  ///< two-mode state of the receiver cell (lab frame)
  double loss_trace_drift = 0.0;
  double noise_trace_drift = 0.0;
  double min_eigenvalue = 0.0;
};

/// Receiver state of a red-sideband array with thermal baths, computed as a
/// pure-loss stage on the full array followed by the additive thermal noise
/// Q restricted to the receiver. Both stages are Lindblad evolutions; the
/// loss stage is exact at the initial state's excitation number and the noise
/// stage is truncated at `receiver_cap`.
ChannelResult thermal_channel_receiver_state(const ArrayConfig& cfg, const QuantumState& initial, int receiver_cell,
                                             double t, const ChannelOptions& opts = {});

}  // namespace optoqst
