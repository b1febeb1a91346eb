// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file model.hpp
 * @brief Parameters and Hamiltonian builders for a one-dimensional
 *        optomechanical array.
 *
 * Units: hbar = 1, angular frequencies in rad/s. Modes are laid out
 * (a_1, b_1, a_2, b_2, ...), with a_n the optical mode and b_n the mechanical
 * mode of cell n (0-based cell indices in code).
 */

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "optoqst/fock.hpp"

namespace optoqst {

struct CellParams {
  double omega_m = 1.0;   ///< mechanical frequency
  double delta_p = -1.0;  ///< pump detuning omega_p - omega_r
  double G = 0.0;         ///< effective optomechanical coupling
  std::optional<double> g;      ///< single-photon coupling
  std::optional<double> alpha;  ///< intracavity amplitude
  double kappa = 0.0;
  double gamma = 0.0;
  double n_c = 0.0;
  double n_m = 0.0;

  /// Throws InvalidArgument on omega_m <= 0, negative rates or occupations,
  /// or G != alpha * g when both are given.
  void validate() const;
};

enum class ModelKind { kLinearized, kRedSideband };

std::string to_string(ModelKind kind);

struct ArrayConfig {
  std::vector<CellParams> cells;
  std::vector<double> hops;  ///< J_1..J_{N-1}
  ModelKind kind = ModelKind::kRedSideband;

  std::size_t size() const noexcept { return cells.size(); }
  /// N >= 2, hops.size() == N-1, J_n >= 0, cells valid, red-sideband
  /// resonance |delta_p + omega_m| <= 1e-6 omega_m.
  void validate() const;
};

/// Build an N-cell array with identical cells.
ArrayConfig uniform_array(const CellParams& cell, std::vector<double> hops, ModelKind kind);

inline int optical_mode(int cell) { return 2 * cell; }
inline int mechanical_mode(int cell) { return 2 * cell + 1; }

/// Space for N cells with per-mode dimension `mode_dim` and an optional cap.
SpacePtr array_space(std::size_t num_cells, int mode_dim, std::optional<int> cap);

SparseOperator build_cell_hamiltonian_linearized(const ArrayConfig& cfg, const SpacePtr& space, int cell);
SparseOperator build_cell_hamiltonian_red(const ArrayConfig& cfg, const SpacePtr& space, int cell);
SparseOperator build_hopping(const ArrayConfig& cfg, const SpacePtr& space);

struct DimensionGuard {
  std::size_t pure_limit = 20000;
  std::size_t density_limit = 5000;
  bool force = false;
};

enum class StateUse { kPure, kDensity };

/// Throws DimensionLimitError when the space exceeds the guard for `use`.
void check_dimension(const SpacePtr& space, StateUse use, const DimensionGuard& guard);

/// Sum of cell Hamiltonians (per cfg.kind) and hopping.
SparseOperator build_array_hamiltonian(const ArrayConfig& cfg, const SpacePtr& space, StateUse use = StateUse::kPure,
                                       const DimensionGuard& guard = {});

/// Two-mode initial state of a single cell in |n_a, n_b> notation.
struct StateSpec {
  enum class Kind { kVacuum, kPhiPlus, kPhiPlusTwo, kCustom };
  Kind kind = Kind::kPhiPlus;
  /// For kCustom: amplitudes over (n_a, n_b) pairs; normalized on use.
  std::vector<std::pair<std::pair<int, int>, cplx>> amplitudes;

  static StateSpec vacuum() { return {Kind::kVacuum, {}}; }
  /// (|1,0> + |0,1>)/sqrt(2)
  static StateSpec phi_plus() { return {Kind::kPhiPlus, {}}; }
  /// (|2,0> + |0,2>)/sqrt(2)
  static StateSpec Phi_plus() { return {Kind::kPhiPlusTwo, {}}; }
  static StateSpec custom(std::vector<std::pair<std::pair<int, int>, cplx>> amps) { return {Kind::kCustom, std::move(amps)}; }

  /// Normalized (n_a, n_b) -> amplitude list.
  std::vector<std::pair<std::pair<int, int>, cplx>> terms() const;
  int max_excitation() const;
  std::string name() const;
};

/// Sender state on `sender_cell` with every other cell in vacuum.
QuantumState initial_sender_state(const SpacePtr& space, const StateSpec& spec, int sender_cell = 0);

/// Product of per-cell states; cells not listed are in vacuum.
QuantumState product_cell_state(const SpacePtr& space, const std::vector<std::pair<int, StateSpec>>& cell_states);

/// The two-mode target vector of `spec` over a two-mode space.
Vector two_mode_vector(const SpacePtr& two_mode_space, const StateSpec& spec);

}  // namespace optoqst
