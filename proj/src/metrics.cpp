// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "optoqst/error.hpp"
#include "optoqst/polariton.hpp"

namespace optoqst {

QuantumState receiver_state(const QuantumState& state, int receiver_cell) {
  const int keep[2] = {optical_mode(receiver_cell), mechanical_mode(receiver_cell)};
  return partial_trace(state, keep);
}

double pst_chain_phase(int num_cells) { return 0.5 * std::numbers::pi * (num_cells - 1); }

QuantumState phase_correct(const QuantumState& rho_R, const CellParams& p, double tau, ModelKind kind,
                           double chain_phase) {
  const auto& space = rho_R.space();
  if (space->num_modes() != 2) throw InvalidArgument("phase_correct needs a two-mode receiver state");
  SparseOperator h = zero_operator(space);
  {
    const auto b = annihilation(space, 1);
    const auto ad = creation(space, 0), bd = creation(space, 1);
    if (kind == ModelKind::kRedSideband) {
      SparseOperator x = ad * b;
      h = cplx(p.omega_m) * (number_operator(space, 0) + number_operator(space, 1)) - cplx(p.G) * (x + x.adjoint());
    } else {
      SparseOperator x = ad * b + ad * bd;
      h = cplx(-p.delta_p) * number_operator(space, 0) + cplx(p.omega_m) * number_operator(space, 1) -
          cplx(p.G) * (x + x.adjoint());
    }
  }
  DenseMatrix gen = tau * h.dense();
  if (chain_phase != 0.0) gen += chain_phase * total_number_operator(space).dense();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gen);
  Vector phases(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(kI * es.eigenvalues()(k));
  const DenseMatrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  if (rho_R.is_pure()) return QuantumState::pure_unchecked(space, u * rho_R.amplitudes());
  DenseMatrix r = u * rho_R.rho() * u.adjoint();
  r = 0.5 * (r + r.adjoint()).eval();
  return QuantumState::mixed_unchecked(space, std::move(r));
}

double transfer_fidelity(const QuantumState& rho_R, const Vector& target) {
  if (static_cast<std::size_t>(target.size()) != rho_R.dim())
    throw InvalidArgument("target dimension does not match the receiver space");
  const double n2 = target.squaredNorm();
  if (!(n2 > 0.0)) throw InvalidArgument("target state has zero norm");
  double f = 0.0;
  if (rho_R.is_pure()) {
    f = std::norm(target.dot(rho_R.amplitudes())) / n2;
  } else {
    f = target.dot(rho_R.rho() * target).real() / n2;
  }
  return std::clamp(f, 0.0, 1.0);
}

double root_fidelity(const QuantumState& rho_R, const Vector& target) {
  return std::sqrt(transfer_fidelity(rho_R, target));
}

FidelityResult corrected_transfer_fidelity(const QuantumState& rho_R, const Vector& target, const CellParams& p,
                                           double tau, ModelKind kind, double chain_phase) {
  FidelityResult r;
  r.time = tau;
  r.raw_fidelity = transfer_fidelity(rho_R, target);
  r.corrected_fidelity = transfer_fidelity(phase_correct(rho_R, p, tau, kind, chain_phase), target);
  double wa = p.omega_m - p.G, wb = p.omega_m + p.G;
  if (kind == ModelKind::kLinearized) {
    const auto f = polariton_frequencies(p);
    wa = f.omega_minus;
    wb = f.omega_plus;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  r.phi_A = std::fmod(wa * tau + chain_phase, two_pi);
  r.phi_B = std::fmod(wb * tau + chain_phase, two_pi);
  return r;
}

namespace {

using Labels = std::vector<std::pair<int, int>>;

// Maximize F(phi) = sum_ij conj(t_i) t_j rho_ij exp(i phi . (n_i - n_j)) over
// the target support, where n_i are the integer labels of basis vector i.
FidelityResult maximize_phases(const DenseMatrix& rho, const Vector& t, const Labels& labels, double raw) {
  struct Term {
    cplx c;
    int da, db;
  };
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (std::abs(t(i)) > 1e-14) support.push_back(i);
  std::vector<Term> terms;
  for (auto i : support)
    for (auto j : support) {
      const auto& ni = labels[static_cast<std::size_t>(i)];
      const auto& nj = labels[static_cast<std::size_t>(j)];
      terms.push_back({std::conj(t(i)) * t(j) * rho(i, j), ni.first - nj.first, ni.second - nj.second});
    }
  auto fid = [&](double pa, double pb) {
    cplx s = 0.0;
    for (const auto& term : terms) s += term.c * std::exp(kI * (pa * term.da + pb * term.db));
    return s.real();
  };

  const double two_pi = 2.0 * std::numbers::pi;
  constexpr int kGrid = 64;
  double best = -1.0, ba = 0.0, bb = 0.0;
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j) {
      const double pa = two_pi * i / kGrid, pb = two_pi * j / kGrid;
      const double f = fid(pa, pb);
      if (f > best) {
        best = f;
        ba = pa;
        bb = pb;
      }
    }
  // Compass search with step halving.
  for (double step = two_pi / kGrid; step > 1e-7;) {
    bool moved = false;
    for (auto [da, db] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const double f = fid(ba + da * step, bb + db * step);
      if (f > best) {
        best = f;
        ba += da * step;
        bb += db * step;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  FidelityResult r;
  r.raw_fidelity = raw;
  r.corrected_fidelity = std::clamp(std::max(best, raw), 0.0, 1.0);
  if (raw >= best) ba = bb = 0.0;
  r.phi_A = std::fmod(std::fmod(ba, two_pi) + two_pi, two_pi);
  r.phi_B = std::fmod(std::fmod(bb, two_pi) + two_pi, two_pi);
  return r;
}

void check_two_mode(const QuantumState& rho_R, const Vector& target) {
  if (rho_R.space()->num_modes() != 2) throw InvalidArgument("phase maximization needs a two-mode state");
  if (static_cast<std::size_t>(target.size()) != rho_R.dim())
    throw InvalidArgument("target dimension does not match the receiver space");
}

}  // namespace

FidelityResult max_phase_fidelity(const QuantumState& rho_R, const Vector& target) {
  check_two_mode(rho_R, target);
  const auto& space = *rho_R.space();
  Labels labels;
  for (std::size_t i = 0; i < space.dim(); ++i) labels.emplace_back(space.occupation(i)[0], space.occupation(i)[1]);
  return maximize_phases(rho_R.density_matrix(), target / target.norm(), labels, transfer_fidelity(rho_R, target));
}

FidelityResult max_polariton_phase_fidelity(const QuantumState& rho_R, const Vector& target) {
  check_two_mode(rho_R, target);
  const auto& space = rho_R.space();
  const auto n = number_operator(space, 0) + number_operator(space, 1);
  SparseOperator x = creation(space, 0) * annihilation(space, 1);
  x += x.adjoint();
  const DenseMatrix na = 0.5 * (n + x).dense(), nb = 0.5 * (n - x).dense();
  // Common eigenbasis of N_A and N_B; the irrational weight separates labels.
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(na + std::numbers::sqrt2 * nb);
  const DenseMatrix& w = es.eigenvectors();
  Labels labels;
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    const Vector v = w.col(k);
    labels.emplace_back(static_cast<int>(std::lround(v.dot(na * v).real())),
                        static_cast<int>(std::lround(v.dot(nb * v).real())));
  }
  const DenseMatrix rho = w.adjoint() * rho_R.density_matrix() * w;
  const Vector t = w.adjoint() * (target / target.norm());
  return maximize_phases(rho, t, labels, transfer_fidelity(rho_R, target));
}

}  // namespace optoqst
