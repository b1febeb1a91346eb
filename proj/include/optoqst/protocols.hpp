// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file protocols.hpp
 * @brief Hopping profiles and transfer times for the three transfer schemes.
 *
 * In the red-sideband regime a photon hop J_n(a_n^dag a_{n+1} + h.c.) splits
 * into polariton-chain hops of strength J_n/2 on each of the A and B chains.
 * HopConvention::kPolaritonChain (the default) treats scheme parameters as
 * polariton-chain couplings and emits photon hops of twice that strength, so
 * the stated transfer times hold for the simulated array.
 * HopConvention::kAsPrinted emits the scheme parameters directly as photon
 * hops; for PST it uses J_n = (J/sqrt(2)) sqrt(n(N-n)), whose polariton
 * chains transfer at tau = sqrt(2) pi / J.
 */

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace optoqst {

enum class Scheme { kPst, kEigenmode, kTunneling };
enum class HopConvention { kPolaritonChain, kAsPrinted };

std::string to_string(Scheme s);
std::string to_string(HopConvention c);

struct TimeCompatibility {
  bool ok = false;
  double ratio = 0.0;  ///< max(tau_A, tau_B) / min(tau_A, tau_B)
};

/// ok iff the ratio is within tol (relative) of an odd integer.
TimeCompatibility check_time_compatibility(double tau_A, double tau_B, double tol = 1e-9);

struct TransferPlan {
  Scheme scheme = Scheme::kPst;
  HopConvention convention = HopConvention::kPolaritonChain;
  std::vector<double> hops;  ///< photon hops J_1..J_{N-1}
  double tau_A = 0.0;
  double tau_B = 0.0;
  double J = 0.0;
  std::optional<double> lambda;
  std::optional<double> delta;
  /// Mechanical detuning added to the first and last cells (tunneling scheme).
  double endpoint_detuning = 0.0;
  TimeCompatibility compatibility;
  std::vector<std::string> warnings;

  std::size_t num_cells() const noexcept { return hops.size() + 1; }
  double tau() const noexcept { return std::max(tau_A, tau_B); }
};

/// Mirror-symmetric Krawtchouk profile; tau_A = tau_B = pi/J under the
/// polariton-chain convention.
TransferPlan pst_profile(int N, double J, HopConvention convention = HopConvention::kPolaritonChain);

/// Weak end bonds lambda, uniform interior J; N odd and >= 3.
/// tau = (pi/lambda) sqrt(2(N+1)). Margin lambda <= J/margin is a warning.
TransferPlan eigenmode_profile(int N, double lambda, double J, HopConvention convention = HopConvention::kPolaritonChain,
                               double margin = 10.0);

/// Weak end bonds lambda, interior J, end cells detuned by +delta;
/// tau = N pi delta / (2 lambda^2). Margins lambda <= delta/margin and
/// delta <= J/margin are warnings.
TransferPlan tunneling_profile(int N, double lambda, double delta, double J,
                               HopConvention convention = HopConvention::kPolaritonChain, double margin = 10.0);

}  // namespace optoqst
