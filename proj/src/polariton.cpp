// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/polariton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "optoqst/error.hpp"

namespace optoqst {

PolaritonFrequencies polariton_frequencies(const CellParams& p, int cell) {
  if (!(p.delta_p < 0.0)) throw InvalidArgument("polariton frequencies require delta_p < 0");
  if (!(p.omega_m > 0.0)) throw InvalidArgument("omega_m must be positive");
  const double d2 = p.delta_p * p.delta_p, w2 = p.omega_m * p.omega_m;
  const double radicand = (d2 - w2) * (d2 - w2) - 16.0 * p.G * p.G * p.delta_p * p.omega_m;
  if (radicand < 0.0)
    throw InstabilityError("cell " + std::to_string(cell + 1) + ": complex normal-mode frequencies", cell);
  const double root = std::sqrt(radicand);
  // For delta_p < 0 the radicand is >= (d2 - w2)^2, so Omega_+^2 >= Omega_-^2
  // and only Omega_-^2 can turn negative.
  const double plus_sq = 0.5 * (d2 + w2) + 0.5 * root;
  // Omega_-^2 = (d2 w2 - 4 G^2 |delta_p| omega_m) / Omega_+^2 avoids
  // cancellation when Omega_- is small.
  const double minus_sq = (d2 * w2 - 4.0 * p.G * p.G * std::abs(p.delta_p) * p.omega_m) / plus_sq;
  if (!(minus_sq > 0.0))
    throw InstabilityError("cell " + std::to_string(cell + 1) + ": Omega_-^2 = " + std::to_string(minus_sq) +
                               " <= 0 (unstable)",
                           cell);
  return {std::sqrt(minus_sq), std::sqrt(plus_sq)};
}

PolaritonFrequencies symplectic_oracle(const CellParams& p, int cell) {
  // z = (x_a, p_a, x_b, p_b), a = (x + i p)/sqrt(2); H = z^T Hq z / 2.
  Eigen::Matrix4d hq = Eigen::Matrix4d::Zero();
  hq(0, 0) = hq(1, 1) = -p.delta_p;
  hq(2, 2) = hq(3, 3) = p.omega_m;
  hq(0, 2) = hq(2, 0) = -2.0 * p.G;
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega(0, 1) = omega(2, 3) = 1.0;
  omega(1, 0) = omega(3, 2) = -1.0;
  Eigen::EigenSolver<Eigen::Matrix4d> es(omega * hq, false);
  const auto ev = es.eigenvalues();
  const double scale = std::max({std::abs(p.delta_p), p.omega_m, std::abs(p.G), 1e-300});
  std::vector<double> freqs;
  for (int k = 0; k < 4; ++k) {
    if (std::abs(ev(k).real()) > 1e-9 * scale) {
      throw InstabilityError("cell " + std::to_string(cell + 1) + ": dynamical-matrix eigenvalue (" +
                                 std::to_string(ev(k).real()) + ", " + std::to_string(ev(k).imag()) +
                                 ") has a nonzero real part",
                             cell);
    }
    if (ev(k).imag() >= 0.0) freqs.push_back(ev(k).imag());
  }
  // A zero mode shows up as a pair of (numerically) real-axis eigenvalues.
  if (freqs.size() != 2) {
    freqs.clear();
    for (int k = 0; k < 4; ++k) freqs.push_back(std::abs(ev(k).imag()));
    std::sort(freqs.begin(), freqs.end());
    freqs = {freqs[0], freqs[2]};
  }
  std::sort(freqs.begin(), freqs.end());
  if (!(freqs[0] > 1e-12 * scale))
    throw InstabilityError("cell " + std::to_string(cell + 1) + ": zero-frequency normal mode", cell);
  return {freqs[0], freqs[1]};
}

Eigen::Matrix4d commutator_matrix(const CellParams& p) {
  const double D = p.delta_p, w = p.omega_m, G = p.G;
  Eigen::Matrix4d m;
  m << -D, -G, 0, G,  //
      -G, w, G, 0,    //
      0, -G, D, G,    //
      -G, 0, G, -w;
  return m;
}

namespace {

double relative_residual(const Eigen::Matrix4d& m, const Eigen::Vector4d& v, double omega) {
  const double n = v.norm();
  if (n == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * v - omega * v).norm() / (std::abs(omega) * n);
}

PrintedCoefficients printed_at(const CellParams& p, double omega, const Eigen::Matrix4d& m) {
  const double ad = std::abs(p.delta_p), w = p.omega_m, G = p.G;
  PrintedCoefficients pc;
  pc.delta[0] = 2.0 * G * G * w - (omega - w) * (omega - ad) * (omega + w);
  pc.delta[1] = G * (omega - ad) * (omega - w);
  pc.delta[2] = 2.0 * G * G * w;
  pc.delta[3] = G * (omega - ad) * (omega + w);
  pc.inv_norm_sq = pc.delta[2] * pc.delta[2] + pc.delta[3] * pc.delta[3] - pc.delta[0] * pc.delta[0] -
                   pc.delta[1] * pc.delta[1];
  Eigen::Vector4d v(pc.delta[2], pc.delta[3], pc.delta[0], pc.delta[1]);
  pc.residual = relative_residual(m, v, omega);
  return pc;
}

BogoliubovMode solve_branch(const Eigen::Matrix4d& m, double omega, int cell, const char* label) {
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(m - omega * Eigen::Matrix4d::Identity(), Eigen::ComputeFullV);
  Eigen::Vector4d v = svd.matrixV().col(3);
  const double sympl = v(0) * v(0) + v(1) * v(1) - v(2) * v(2) - v(3) * v(3);
  if (!(sympl > 1e-14))
    throw InstabilityError(std::string("cell ") + std::to_string(cell + 1) + ": " + label +
                               " polariton is not normalizable (1/N^2 <= 0)",
                           cell);
  v /= std::sqrt(sympl);
  const double lead = std::abs(v(0)) >= 1e-14 ? v(0) : v(1);
  if (lead < 0.0) v = -v;
  BogoliubovMode mode;
  mode.omega = omega;
  for (int k = 0; k < 4; ++k) mode.coeff[k] = v(k);
  return mode;
}

}  // namespace

BogoliubovCoefficients bogoliubov_coefficients(const CellParams& p, int cell) {
  const auto f = polariton_frequencies(p, cell);
  const Eigen::Matrix4d m = commutator_matrix(p);
  BogoliubovCoefficients out;
  out.printed_minus = printed_at(p, f.omega_minus, m);
  out.printed_plus = printed_at(p, f.omega_plus, m);
  const double scale = std::max(std::abs(p.delta_p), p.omega_m);
  out.degenerate = p.G == 0.0 && std::abs(f.omega_plus - f.omega_minus) <= 1e-12 * scale;
  if (p.G == 0.0) {
    // Decoupled oscillators: the lower frequency belongs to whichever bare
    // mode is slower; identity identification when degenerate.
    const bool optical_lower = std::abs(p.delta_p) <= p.omega_m;
    out.A.omega = f.omega_minus;
    out.B.omega = f.omega_plus;
    out.A.coeff = optical_lower ? std::array<double, 4>{1, 0, 0, 0} : std::array<double, 4>{0, 1, 0, 0};
    out.B.coeff = optical_lower ? std::array<double, 4>{0, 1, 0, 0} : std::array<double, 4>{1, 0, 0, 0};
  } else {
    out.A = solve_branch(m, f.omega_minus, cell, "lower");
    out.B = solve_branch(m, f.omega_plus, cell, "upper");
  }
  auto vec = [](const BogoliubovMode& b) { return Eigen::Vector4d(b.coeff[0], b.coeff[1], b.coeff[2], b.coeff[3]); };
  out.residual = std::max(relative_residual(m, vec(out.A), out.A.omega), relative_residual(m, vec(out.B), out.B.omega));
  return out;
}

BogoliubovCoefficients red_sideband_coefficients(const CellParams& p) {
  const double r = 1.0 / std::sqrt(2.0);
  BogoliubovCoefficients out;
  out.A.omega = p.omega_m - p.G;
  out.B.omega = p.omega_m + p.G;
  out.A.coeff = {r, r, 0, 0};
  out.B.coeff = {r, -r, 0, 0};
  out.degenerate = p.G == 0.0;
  out.printed_minus.residual = out.printed_plus.residual = std::numeric_limits<double>::quiet_NaN();
  return out;
}

BondCouplings effective_couplings(const CellParams& p_n, const CellParams& p_np1, double J, int cell) {
  if (J == 0.0) return {0.0, 0.0};
  const auto bn = bogoliubov_coefficients(p_n, cell);
  const auto bm = bogoliubov_coefficients(p_np1, cell + 1);
  // a = sum_k (x_k A_k - z_k A_k^dag) for real coefficients.
  BondCouplings c;
  c.lambda = J * (bn.A.x() * bm.A.x() + bn.A.z() * bm.A.z());
  c.zeta = J * (bn.B.x() * bm.B.x() + bn.B.z() * bm.B.z());
  return c;
}

BondOracle bond_transformation_oracle(const CellParams& p_n, const CellParams& p_np1, double J) {
  auto inverse_row = [](const CellParams& p) {
    const auto bc = bogoliubov_coefficients(p);
    const auto& A = bc.A.coeff;
    const auto& B = bc.B.coeff;
    Eigen::Matrix4d t;
    t << A[0], A[1], A[2], A[3],  //
        B[0], B[1], B[2], B[3],   //
        A[2], A[3], A[0], A[1],   //
        B[2], B[3], B[0], B[1];
    // a = row 0 of T^{-1} applied to (A, B, A^dag, B^dag).
    Eigen::Vector4d row = t.inverse().row(0).transpose();
    return row;
  };
  const Eigen::Vector4d c = inverse_row(p_n);
  const Eigen::Vector4d d = inverse_row(p_np1);
  auto dagger = [](const Eigen::Vector4d& v) { return Eigen::Vector4d(v(2), v(3), v(0), v(1)); };
  // a_n^dag a_{n+1} + a_{n+1}^dag a_n = sum_{kl} K_kl X_k Y_l with X, Y in
  // (A, B, A^dag, B^dag) of cells n and n+1.
  const Eigen::Matrix4d k = J * (dagger(c) * d.transpose() + c * dagger(d).transpose());
  BondOracle out;
  out.couplings.lambda = k(2, 0);
  out.couplings.zeta = k(3, 1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const bool kept = (i == 2 && j == 0) || (i == 3 && j == 1) || (i == 0 && j == 2) || (i == 1 && j == 3);
      if (!kept) out.max_neglected = std::max(out.max_neglected, std::abs(k(i, j)));
    }
  return out;
}

// ---------------------------------------------------------------------------

double stability_bound(const CellParams& p) {
  return 0.5 * std::sqrt(p.omega_m * p.omega_m + 0.25 * (p.gamma * p.gamma + p.kappa * p.kappa));
}

bool check_stability(const CellParams& p) { return p.G < stability_bound(p); }

PolaritonDecomposition decompose(const ArrayConfig& cfg) {
  PolaritonDecomposition d;
  const bool red = cfg.kind == ModelKind::kRedSideband;
  for (std::size_t n = 0; n < cfg.size(); ++n) {
    const auto& p = cfg.cells[n];
    if (red) {
      auto bc = red_sideband_coefficients(p);
      d.frequencies.push_back({bc.A.omega, bc.B.omega});
      d.coefficients.push_back(bc);
    } else {
      const int c = static_cast<int>(n);
      d.frequencies.push_back(polariton_frequencies(p, c));
      d.coefficients.push_back(bogoliubov_coefficients(p, c));
    }
  }
  for (std::size_t n = 0; n + 1 < cfg.size(); ++n) {
    if (red) {
      d.bonds.push_back({0.5 * cfg.hops[n], 0.5 * cfg.hops[n]});
    } else {
      d.bonds.push_back(effective_couplings(cfg.cells[n], cfg.cells[n + 1], cfg.hops[n], static_cast<int>(n)));
    }
  }
  return d;
}

RwaReport check_rwa(const ArrayConfig& cfg, double total_excitation, double margin) {
  const auto d = decompose(cfg);
  RwaReport r;
  r.margin = margin;
  r.ratio = std::numeric_limits<double>::infinity();
  r.lhs = std::numeric_limits<double>::infinity();
  const double amp = std::sqrt(std::max(total_excitation, 0.0));
  for (std::size_t n = 0; n + 1 < cfg.size(); ++n) {
    double lhs = std::numeric_limits<double>::infinity();
    for (std::size_t c : {n, n + 1}) {
      const auto& f = d.frequencies[c];
      lhs = std::min({lhs, f.omega_minus, f.omega_plus, std::abs(f.omega_plus - f.omega_minus)});
    }
    const double rhs = amp * (std::abs(d.bonds[n].lambda) + std::abs(d.bonds[n].zeta));
    r.lhs = std::min(r.lhs, lhs);
    r.rhs = std::max(r.rhs, rhs);
    const double ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    if (ratio < r.ratio) {
      r.ratio = ratio;
      r.worst_bond = static_cast<int>(n);
    }
  }
  r.ok = r.ratio >= margin;
  return r;
}

RwaReport check_rwa(const ArrayConfig& cfg, const QuantumState& state, double margin) {
  const double ntot = state.expectation(total_number_operator(state.space())).real();
  return check_rwa(cfg, ntot, margin);
}

}  // namespace optoqst
