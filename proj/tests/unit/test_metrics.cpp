// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "optoqst/dynamics.hpp"
#include "optoqst/metrics.hpp"
#include "optoqst/protocols.hpp"
#include "support.hpp"

using namespace optoqst;
using optoqst::testing::max_abs;

namespace {

CellParams red_cell(double w, double G) {
  CellParams p;
  p.omega_m = w;
  p.delta_p = -w;
  p.G = G;
  return p;
}

SpacePtr two_mode(int cap = 2) { return make_space({cap + 1, cap + 1}, cap); }

Vector basis_vector(const SpacePtr& s, const Occupation& n) {
  Vector v = Vector::Zero(Eigen::Index(s->dim()));
  v(Eigen::Index(s->index_of(n))) = 1.0;
  return v;
}

std::vector<double> eigenvalues(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

// Closed four-cell PST run; returns the final array state.
QuantumState closed_pst(double G_over_J, const StateSpec& spec) {
  const double J = 1.0;
  auto cfg = uniform_array(red_cell(4000.0, G_over_J * J), pst_profile(4, J).hops, ModelKind::kRedSideband);
  const int k = spec.max_excitation();
  auto s = array_space(4, k + 1, k);
  return evolve_closed(build_array_hamiltonian(cfg, s), initial_sender_state(s, spec), M_PI / J);
}

}  // namespace

TEST_CASE("transfer fidelity") {
  auto s = two_mode();
  const Vector phi = two_mode_vector(s, StateSpec::phi_plus());
  CHECK(transfer_fidelity(QuantumState::pure(s, phi), phi) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(transfer_fidelity(QuantumState::pure(s, basis_vector(s, {2, 0})), phi) == 0.0);
  DenseMatrix rho = DenseMatrix::Zero(Eigen::Index(s->dim()), Eigen::Index(s->dim()));
  rho(Eigen::Index(s->index_of({1, 0})), Eigen::Index(s->index_of({1, 0}))) = 0.5;
  rho(Eigen::Index(s->index_of({0, 1})), Eigen::Index(s->index_of({0, 1}))) = 0.5;
  CHECK(transfer_fidelity(QuantumState::mixed(s, rho), phi) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(root_fidelity(QuantumState::mixed(s, rho), phi) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  SUBCASE("linear in rho and blind to the target's global phase") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto r1 = optoqst::testing::random_mixed(s), r2 = optoqst::testing::random_mixed(s);
      const Vector t = optoqst::testing::random_vector(s->dim());
      const double w = optoqst::testing::uniform(0, 1);
      const auto mix = QuantumState::mixed(s, w * r1.rho() + (1 - w) * r2.rho());
      CHECK(transfer_fidelity(mix, t) ==
            doctest::Approx(w * transfer_fidelity(r1, t) + (1 - w) * transfer_fidelity(r2, t)).epsilon(1e-12));
      CHECK(transfer_fidelity(r1, std::exp(cplx(0, 1.234)) * t) == doctest::Approx(transfer_fidelity(r1, t)).epsilon(1e-13));
    }
  }
}

TEST_CASE("phase correction") {
  auto s = two_mode();
  const auto rho = optoqst::testing::random_mixed(s);
  const CellParams p = red_cell(3.0, 1.0);  // omega_A = 2, omega_B = 4
  CHECK(max_abs(phase_correct(rho, p, 0.0).rho() - rho.rho()) < 1e-14);
  CHECK(max_abs(phase_correct(rho, p, M_PI).rho() - rho.rho()) < 1e-12);
  CHECK(max_abs(phase_correct(rho, p, 0.0, ModelKind::kRedSideband, 2 * M_PI).rho() - rho.rho()) < 1e-12);
  SUBCASE("unitary: spectrum is preserved") {
    for (double tau : {0.3, 1.7, 11.0}) {
      const auto c = phase_correct(rho, p, tau, ModelKind::kRedSideband, 0.4);
      const auto e0 = eigenvalues(rho.rho()), e1 = eigenvalues(c.rho());
      for (std::size_t i = 0; i < e0.size(); ++i) CHECK(std::abs(e0[i] - e1[i]) < 1e-12);
    }
  }
  SUBCASE("undoes free evolution of the receiver cell") {
    auto cfg = uniform_array(p, {0.0}, ModelKind::kRedSideband);
    auto sa = array_space(2, 3, 2);
    const Vector t2 = two_mode_vector(s, StateSpec::Phi_plus());
    const auto psi0 = product_cell_state(sa, {{1, StateSpec::Phi_plus()}});
    const double tau = 0.77;
    const auto psi = evolve_closed(build_array_hamiltonian(cfg, sa), psi0, tau);
    const auto r = receiver_state(psi, 1);
    CHECK(transfer_fidelity(r, t2) < 0.99);
    CHECK(transfer_fidelity(phase_correct(r, p, tau), t2) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("receiver state") {
  SUBCASE("vacuum before transfer") {
    auto s = array_space(4, 2, 1);
    const auto r = receiver_state(initial_sender_state(s, StateSpec::phi_plus()), 3);
    CHECK(r.rho()(0, 0).real() == doctest::Approx(1.0));
    CHECK(std::abs(r.trace() - 1.0) < 1e-14);
  }
  SUBCASE("dephased input gives a diagonal receiver state") {
    auto s = array_space(3, 3, 2);
    const auto rho = optoqst::testing::random_mixed(s);
    const DenseMatrix diag = rho.rho().diagonal().asDiagonal();
    const auto r = receiver_state(QuantumState::mixed(s, diag), 2);
    CHECK(max_abs(r.rho() - DenseMatrix(r.rho().diagonal().asDiagonal())) < 1e-15);
  }
  SUBCASE("near-ideal closed transfer is pure and correctable") {
    const auto psi = closed_pst(2000.0, StateSpec::phi_plus());
    const auto r = receiver_state(psi, 3);
    CHECK(r.purity() >= 1 - 1e-6);
    const auto f = corrected_transfer_fidelity(r, two_mode_vector(r.space(), StateSpec::phi_plus()), red_cell(4000.0, 2000.0),
                                               M_PI, ModelKind::kRedSideband, pst_chain_phase(4));
    CHECK(f.corrected_fidelity >= 1 - 1e-6);
  }
}

TEST_CASE("corrected and maximized fidelities on closed PST runs") {
  for (const auto& spec : {StateSpec::phi_plus(), StateSpec::Phi_plus()}) {
    for (double g : {5.0, 24.7, 25.0, 200.0}) {
      const auto r = receiver_state(closed_pst(g, spec), 3);
      const Vector target = two_mode_vector(r.space(), spec);
      const auto f = corrected_transfer_fidelity(r, target, red_cell(4000.0, g), M_PI);
      const auto m = max_phase_fidelity(r, target);
      const auto mp = max_polariton_phase_fidelity(r, target);
      // The analytic correction is exact up to O((J/G)^2) leakage.
      if (g >= 200.0) CHECK(f.corrected_fidelity >= f.raw_fidelity - 1e-12);
      CHECK(m.corrected_fidelity >= f.raw_fidelity - 1e-12);
      CHECK(mp.corrected_fidelity >= f.corrected_fidelity - 1e-9);
      CHECK(mp.corrected_fidelity >= f.raw_fidelity - 1e-12);
    }
  }
  SUBCASE("bare local phases cannot undo a polariton-relative phase") {
    const auto r = receiver_state(closed_pst(24.7, StateSpec::Phi_plus()), 3);
    const Vector target = two_mode_vector(r.space(), StateSpec::Phi_plus());
    const auto f = corrected_transfer_fidelity(r, target, red_cell(4000.0, 24.7), M_PI);
    CHECK(max_phase_fidelity(r, target).corrected_fidelity < f.corrected_fidelity);
  }
  SUBCASE("two-excitation state picks up a correctable relative phase") {
    const auto r = receiver_state(closed_pst(24.7, StateSpec::Phi_plus()), 3);
    const Vector target = two_mode_vector(r.space(), StateSpec::Phi_plus());
    const auto f = corrected_transfer_fidelity(r, target, red_cell(4000.0, 24.7), M_PI);
    CHECK(f.corrected_fidelity > f.raw_fidelity + 0.1);
    CHECK(f.corrected_fidelity > 0.95);
  }
}

TEST_CASE("maximum over local phases") {
  auto s = two_mode();
  // Superposition with a vacuum component fixes both phases.
  Vector t = Vector::Zero(Eigen::Index(s->dim()));
  t(Eigen::Index(s->index_of({0, 0}))) = 1.0;
  t(Eigen::Index(s->index_of({1, 0}))) = 1.0;
  t(Eigen::Index(s->index_of({0, 1}))) = 1.0;
  t.normalize();
  const double pa = 1.1, pb = 4.0;
  Vector rotated = t;
  for (std::size_t i = 0; i < s->dim(); ++i) {
    const auto& n = s->occupation(i);
    rotated(Eigen::Index(i)) *= std::exp(cplx(0, pa * n[0] + pb * n[1]));
  }
  const auto m = max_phase_fidelity(QuantumState::pure(s, rotated), t);
  CHECK(m.corrected_fidelity == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m.raw_fidelity < 0.9);
  // The maximizer undoes the rotation.
  CHECK(std::abs(std::remainder(m.phi_A + pa, 2 * M_PI)) < 1e-4);
  CHECK(std::abs(std::remainder(m.phi_B + pb, 2 * M_PI)) < 1e-4);

  SUBCASE("polariton phases are recovered the same way") {
    // Rotate in the polariton number basis: A = (a+b)/sqrt2, B = (a-b)/sqrt2.
    // The target needs weight on both A and B to fix both phases.
    t(Eigen::Index(s->index_of({0, 1}))) = 2.0;
    t.normalize();
    const auto n = number_operator(s, 0) + number_operator(s, 1);
    SparseOperator x = creation(s, 0) * annihilation(s, 1);
    x += x.adjoint();
    const DenseMatrix gen = 0.5 * pa * (n + x).dense() + 0.5 * pb * (n - x).dense();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gen);
    Vector ph(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::exp(cplx(0, es.eigenvalues()(k)));
    const Vector rot = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint() * t;
    const auto mp = max_polariton_phase_fidelity(QuantumState::pure(s, rot), t);
    CHECK(mp.corrected_fidelity == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(std::remainder(mp.phi_A + pa, 2 * M_PI)) < 1e-4);
    CHECK(std::abs(std::remainder(mp.phi_B + pb, 2 * M_PI)) < 1e-4);
  }
  SUBCASE("diagonal states are phase-insensitive") {
    const auto rho = optoqst::testing::random_mixed(s);
    const auto d = QuantumState::mixed(s, DenseMatrix(rho.rho().diagonal().asDiagonal()));
    const auto md = max_phase_fidelity(d, t);
    CHECK(md.corrected_fidelity == doctest::Approx(md.raw_fidelity).epsilon(1e-12));
    CHECK(md.raw_fidelity == doctest::Approx(transfer_fidelity(d, t)).epsilon(1e-14));
  }
  SUBCASE("never below the raw fidelity") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto rho = optoqst::testing::random_mixed(s);
      CHECK(max_phase_fidelity(rho, t).corrected_fidelity >= transfer_fidelity(rho, t) - 1e-14);
    }
  }
}

TEST_CASE("chain phase") {
  CHECK(pst_chain_phase(2) == doctest::Approx(M_PI / 2));
  CHECK(pst_chain_phase(4) == doctest::Approx(1.5 * M_PI));
}
