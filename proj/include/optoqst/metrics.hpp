// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file metrics.hpp
 * @brief Receiver-state extraction, local phase amendment and transfer
 *        fidelity.
 *
 * Fidelity is the squared overlap F = <psi|rho|psi> for a pure target. The
 * Uhlmann (root) form sqrt(F) is available separately.
 */

#pragma once

#include "optoqst/model.hpp"

namespace optoqst {

/// Two-mode reduced state (a_r, b_r) of `receiver_cell`.
QuantumState receiver_state(const QuantumState& state, int receiver_cell);

/// Per-excitation phase picked up by a mirror-symmetric PST chain of N
/// sites at its transfer time, (N-1) pi / 2.
double pst_chain_phase(int num_cells);

/// Apply exp(+i tau H_cell) with H_cell the receiver cell Hamiltonian
/// (equal to omega_A A^dag A + omega_B B^dag B up to a constant), followed by
/// exp(+i chain_phase N_R). The red-sideband builder is used for kRedSideband.
QuantumState phase_correct(const QuantumState& rho_R, const CellParams& p, double tau,
                           ModelKind kind = ModelKind::kRedSideband, double chain_phase = 0.0);

/// <target|rho|target> with target normalized; clamped to [0, 1].
double transfer_fidelity(const QuantumState& rho_R, const Vector& target);

/// sqrt(transfer_fidelity)
double root_fidelity(const QuantumState& rho_R, const Vector& target);

struct FidelityResult {
  double raw_fidelity = 0.0;
  double corrected_fidelity = 0.0;
  double phi_A = 0.0;  ///< phase used on the first mode (or A polariton)
  double phi_B = 0.0;
  double time = 0.0;
};

/// Analytic amendment: raw fidelity at tau and fidelity after phase_correct.
FidelityResult corrected_transfer_fidelity(const QuantumState& rho_R, const Vector& target, const CellParams& p,
                                           double tau, ModelKind kind = ModelKind::kRedSideband,
                                           double chain_phase = 0.0);

/// Maximize F over exp(i(phi_a n_a + phi_b n_b)) on a 64 x 64 grid with local
/// refinement to 1e-6 rad. phi_A/phi_B hold the maximizing (phi_a, phi_b) in
/// [0, 2 pi).
FidelityResult max_phase_fidelity(const QuantumState& rho_R, const Vector& target);

/// Same search over exp(i(phi_A N_A + phi_B N_B)) with the red-sideband
/// polaritons A = (a + b)/sqrt(2), B = (a - b)/sqrt(2). This family contains
/// the analytic red-sideband correction, so the result bounds it from above.
/// Exact when the receiver space holds every state of each excitation number
/// present (per-mode dimension above the cap).
FidelityResult max_polariton_phase_fidelity(const QuantumState& rho_R, const Vector& target);

}  // namespace optoqst
