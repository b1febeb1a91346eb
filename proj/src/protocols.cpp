// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "optoqst/error.hpp"

namespace optoqst {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kPst:
      return "pst";
    case Scheme::kEigenmode:
      return "eigenmode";
    case Scheme::kTunneling:
      return "tunneling";
  }
  return "pst";
}

std::string to_string(HopConvention c) {
  return c == HopConvention::kPolaritonChain ? "polariton_chain" : "as_printed";
}

TimeCompatibility check_time_compatibility(double tau_A, double tau_B, double tol) {
  if (!(tau_A > 0.0) || !(tau_B > 0.0)) throw InvalidArgument("transfer times must be positive");
  TimeCompatibility c;
  c.ratio = std::max(tau_A, tau_B) / std::min(tau_A, tau_B);
  const double odd = 2.0 * std::round((c.ratio - 1.0) / 2.0) + 1.0;
  c.ok = std::abs(c.ratio - odd) <= tol * odd;
  return c;
}

namespace {

double hop_scale(HopConvention c) { return c == HopConvention::kPolaritonChain ? 2.0 : 1.0; }

void finish(TransferPlan& plan) {
  plan.compatibility = check_time_compatibility(plan.tau_A, plan.tau_B);
}

}  // namespace

TransferPlan pst_profile(int N, double J, HopConvention convention) {
  if (N < 2) throw InvalidArgument("PST profile needs N >= 2");
  if (!(J > 0.0)) throw InvalidArgument("PST profile needs J > 0");
  TransferPlan plan;
  plan.scheme = Scheme::kPst;
  plan.convention = convention;
  plan.J = J;
  const double pi = std::numbers::pi;
  const double prefactor = convention == HopConvention::kPolaritonChain ? J : J / std::numbers::sqrt2;
  for (int n = 1; n < N; ++n) plan.hops.push_back(prefactor * std::sqrt(double(n) * double(N - n)));
  // Polariton chains carry hops/2 = (J_eff/2) sqrt(n(N-n)), which transfer at pi/J_eff.
  const double j_eff = convention == HopConvention::kPolaritonChain ? J : J / std::numbers::sqrt2;
  plan.tau_A = plan.tau_B = pi / j_eff;
  finish(plan);
  return plan;
}

TransferPlan eigenmode_profile(int N, double lambda, double J, HopConvention convention, double margin) {
  if (N < 3 || N % 2 == 0) throw InvalidArgument("eigenmode-mediated transfer needs an odd N >= 3");
  if (!(lambda > 0.0) || !(J > 0.0)) throw InvalidArgument("eigenmode profile needs lambda > 0 and J > 0");
  TransferPlan plan;
  plan.scheme = Scheme::kEigenmode;
  plan.convention = convention;
  plan.J = J;
  plan.lambda = lambda;
  const double s = hop_scale(convention);
  plan.hops.assign(static_cast<std::size_t>(N - 1), s * J);
  plan.hops.front() = plan.hops.back() = s * lambda;
  plan.tau_A = plan.tau_B = (std::numbers::pi / lambda) * std::sqrt(2.0 * (N + 1));
  if (lambda * margin > J) plan.warnings.push_back("lambda << J margin violated");
  finish(plan);
  return plan;
}

TransferPlan tunneling_profile(int N, double lambda, double delta, double J, HopConvention convention, double margin) {
  if (N < 2) throw InvalidArgument("tunneling profile needs N >= 2");
  if (!(lambda > 0.0) || !(J > 0.0)) throw InvalidArgument("tunneling profile needs lambda > 0 and J > 0");
  if (!(delta > 0.0)) throw InvalidArgument("tunneling profile needs an endpoint detuning delta > 0");
  TransferPlan plan;
  plan.scheme = Scheme::kTunneling;
  plan.convention = convention;
  plan.J = J;
  plan.lambda = lambda;
  plan.delta = delta;
  plan.endpoint_detuning = delta;
  const double s = hop_scale(convention);
  plan.hops.assign(static_cast<std::size_t>(N - 1), s * J);
  plan.hops.front() = plan.hops.back() = s * lambda;
  plan.tau_A = plan.tau_B = N * std::numbers::pi * delta / (2.0 * lambda * lambda);
  if (lambda * margin > delta) plan.warnings.push_back("lambda << delta margin violated");
  if (delta * margin > J) plan.warnings.push_back("delta << J margin violated");
  finish(plan);
  return plan;
}

}  // namespace optoqst
