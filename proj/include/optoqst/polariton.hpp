// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file polariton.hpp
 * @brief Normal modes (polaritons) of a linearized optomechanical cell, the
 *        effective polariton-chain couplings, and regime checks.
 *
 * A polariton annihilator is written A = x a + y b + z a^dag + w b^dag with
 * [A, H] = Omega A and |x|^2 + |y|^2 - |z|^2 - |w|^2 = 1. The closed-form
 * coefficient formulas as printed in the literature are evaluated alongside
 * (PrintedCoefficients) together with their eigen-equation residual; the
 * coefficients used downstream come from the 4x4 commutator matrix.
 */

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "optoqst/model.hpp"

namespace optoqst {

struct PolaritonFrequencies {
  double omega_minus = 0.0;
  double omega_plus = 0.0;
};

/// Closed-form normal-mode frequencies. Requires delta_p < 0. Throws
/// InstabilityError(cell) when the inner radicand is negative or
/// Omega_-^2 <= 0.
PolaritonFrequencies polariton_frequencies(const CellParams& p, int cell = 0);

/// Normal-mode frequencies from the classical 4x4 dynamical matrix in
/// quadrature form. Throws InstabilityError when an eigenvalue has a real
/// part above 1e-9 of the frequency scale.
PolaritonFrequencies symplectic_oracle(const CellParams& p, int cell = 0);

struct BogoliubovMode {
  double omega = 0.0;
  std::array<double, 4> coeff{};  ///< (x, y, z, w) for (a, b, a^dag, b^dag)
  double x() const { return coeff[0]; }
  double y() const { return coeff[1]; }
  double z() const { return coeff[2]; }
  double w() const { return coeff[3]; }
};

/// Delta_1..Delta_4 and 1/N^2 evaluated at one frequency, as printed.
struct PrintedCoefficients {
  std::array<double, 4> delta{};
  double inv_norm_sq = 0.0;
  /// ||(M - Omega) v|| / (Omega ||v||) for v = (Delta_3, Delta_4, Delta_1,
  /// Delta_2); NaN when v = 0.
  double residual = 0.0;
};

struct BogoliubovCoefficients {
  BogoliubovMode A;  ///< lower branch, Omega_-
  BogoliubovMode B;  ///< upper branch, Omega_+
  PrintedCoefficients printed_minus;
  PrintedCoefficients printed_plus;
  bool degenerate = false;  ///< G = 0 and |delta_p| = omega_m
  double residual = 0.0;    ///< max eigen-equation residual of A and B
};

/// The 4x4 matrix M with [A, H] = Omega A  <=>  M (x, y, z, w)^T = Omega (x, y, z, w)^T.
Eigen::Matrix4d commutator_matrix(const CellParams& p);

/// Throws InstabilityError when a branch is not normalizable.
BogoliubovCoefficients bogoliubov_coefficients(const CellParams& p, int cell = 0);

/// Red-sideband polaritons A = (a + b)/sqrt(2), B = (a - b)/sqrt(2) with
/// frequencies omega_m -/+ G.
BogoliubovCoefficients red_sideband_coefficients(const CellParams& p);

struct BondCouplings {
  double lambda = 0.0;  ///< A_n^dag A_{n+1}
  double zeta = 0.0;    ///< B_n^dag B_{n+1}
};

/// Beam-splitter part of J (a_n^dag a_{n+1} + h.c.) in the polariton basis.
BondCouplings effective_couplings(const CellParams& p_n, const CellParams& p_np1, double J, int cell = 0);

/// Same quantity obtained by numerically inverting each cell's 4x4
/// Bogoliubov matrix and reading the coefficients of A_n^dag A_{n+1} and
/// B_n^dag B_{n+1}. Also returns the largest neglected coefficient.
struct BondOracle {
  BondCouplings couplings;
  double max_neglected = 0.0;
};
BondOracle bond_transformation_oracle(const CellParams& p_n, const CellParams& p_np1, double J);

struct RwaReport {
  bool ok = true;
  double lhs = 0.0;    ///< min over bonds of min(Omega_-, Omega_+, |Omega_+ - Omega_-|)
  double rhs = 0.0;    ///< max over bonds of sqrt(<N_tot>) (lambda + zeta)
  double ratio = 0.0;  ///< min over bonds of the per-bond ratio; +inf when rhs = 0
  double margin = 10.0;
  int worst_bond = -1;
};

/// Red-sideband configs use the exact red values (omega_m -/+ G, lambda =
/// zeta = J_n/2); linearized configs use the general decomposition.
RwaReport check_rwa(const ArrayConfig& cfg, const QuantumState& state, double margin = 10.0);
/// As above with the total excitation expectation given directly.
RwaReport check_rwa(const ArrayConfig& cfg, double total_excitation, double margin = 10.0);

/// 0.5 sqrt(omega_m^2 + (gamma^2 + kappa^2)/4)
double stability_bound(const CellParams& p);
/// G < stability_bound(p), strictly.
bool check_stability(const CellParams& p);

struct PolaritonDecomposition {
  std::vector<PolaritonFrequencies> frequencies;
  std::vector<BogoliubovCoefficients> coefficients;
  std::vector<BondCouplings> bonds;
};

PolaritonDecomposition decompose(const ArrayConfig& cfg);

}  // namespace optoqst
