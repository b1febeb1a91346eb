// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/model.hpp"

#include <cmath>
#include <string>

#include "optoqst/error.hpp"

namespace optoqst {

void CellParams::validate() const {
  if (!(omega_m > 0.0)) throw InvalidArgument("omega_m must be positive");
  if (kappa < 0.0 || gamma < 0.0) throw InvalidArgument("decay rates must be non-negative");
  if (n_c < 0.0 || n_m < 0.0) throw InvalidArgument("bath occupations must be non-negative");
  if (g && alpha) {
    const double expect = *alpha * *g;
    if (std::abs(G - expect) > 1e-9 * std::max(std::abs(expect), std::abs(G)))
      throw InvalidArgument("G must equal alpha * g");
  }
}

std::string to_string(ModelKind kind) { return kind == ModelKind::kRedSideband ? "red_sideband" : "linearized"; }

void ArrayConfig::validate() const {
  if (cells.size() < 2) throw InvalidArgument("an array needs at least two cells");
  if (hops.size() + 1 != cells.size()) throw InvalidArgument("hops must have exactly N-1 entries");
  for (double j : hops)
    if (!(j >= 0.0)) throw InvalidArgument("hopping strengths must be non-negative");
  for (std::size_t n = 0; n < cells.size(); ++n) {
    cells[n].validate();
    if (kind == ModelKind::kRedSideband &&
        std::abs(cells[n].delta_p + cells[n].omega_m) > 1e-6 * cells[n].omega_m)
      throw InvalidArgument("red-sideband model requires delta_p = -omega_m (cell " + std::to_string(n + 1) + ")");
  }
}

ArrayConfig uniform_array(const CellParams& cell, std::vector<double> hops, ModelKind kind) {
  ArrayConfig cfg;
  cfg.cells.assign(hops.size() + 1, cell);
  cfg.hops = std::move(hops);
  cfg.kind = kind;
  return cfg;
}

SpacePtr array_space(std::size_t num_cells, int mode_dim, std::optional<int> cap) {
  return make_space(std::vector<int>(2 * num_cells, mode_dim), cap);
}

namespace {

void check_layout(const ArrayConfig& cfg, const SpacePtr& space) {
  if (space->num_modes() != 2 * cfg.size())
    throw InvalidArgument("space must hold 2N modes ordered (a1, b1, a2, b2, ...)");
}

void check_cell(const ArrayConfig& cfg, int cell) {
  if (cell < 0 || static_cast<std::size_t>(cell) >= cfg.size())
    throw InvalidArgument("cell index " + std::to_string(cell) + " out of range");
}

}  // namespace

SparseOperator build_cell_hamiltonian_linearized(const ArrayConfig& cfg, const SpacePtr& space, int cell) {
  check_layout(cfg, space);
  check_cell(cfg, cell);
  const auto& p = cfg.cells[cell];
  const int ma = optical_mode(cell), mb = mechanical_mode(cell);
  const auto a = annihilation(space, ma), b = annihilation(space, mb);
  const auto ad = creation(space, ma), bd = creation(space, mb);
  // (a + a^dag)(b + b^dag) = X + X^dag with X = a^dag b + a^dag b^dag.
  SparseOperator x = ad * b + ad * bd;
  SparseOperator h = cplx(-p.delta_p) * number_operator(space, ma) + cplx(p.omega_m) * number_operator(space, mb);
  h -= cplx(p.G) * (x + x.adjoint());
  return h;
}

SparseOperator build_cell_hamiltonian_red(const ArrayConfig& cfg, const SpacePtr& space, int cell) {
  check_layout(cfg, space);
  check_cell(cfg, cell);
  const auto& p = cfg.cells[cell];
  const int ma = optical_mode(cell), mb = mechanical_mode(cell);
  SparseOperator x = creation(space, ma) * annihilation(space, mb);
  SparseOperator h = cplx(p.omega_m) * (number_operator(space, ma) + number_operator(space, mb));
  h -= cplx(p.G) * (x + x.adjoint());
  return h;
}

SparseOperator build_hopping(const ArrayConfig& cfg, const SpacePtr& space) {
  check_layout(cfg, space);
  SparseOperator h = zero_operator(space);
  for (std::size_t n = 0; n + 1 < cfg.size(); ++n) {
    if (cfg.hops[n] == 0.0) continue;
    const int m1 = optical_mode(static_cast<int>(n)), m2 = optical_mode(static_cast<int>(n + 1));
    SparseOperator x = creation(space, m1) * annihilation(space, m2);
    h += cplx(cfg.hops[n]) * (x + x.adjoint());
  }
  return h;
}

void check_dimension(const SpacePtr& space, StateUse use, const DimensionGuard& guard) {
  const std::size_t limit = use == StateUse::kPure ? guard.pure_limit : guard.density_limit;
  if (!guard.force && space->dim() > limit)
    throw DimensionLimitError("Hilbert space dimension " + std::to_string(space->dim()) + " exceeds the limit " +
                              std::to_string(limit) + " (use force to override)");
}

SparseOperator build_array_hamiltonian(const ArrayConfig& cfg, const SpacePtr& space, StateUse use,
                                       const DimensionGuard& guard) {
  cfg.validate();
  check_layout(cfg, space);
  check_dimension(space, use, guard);
  SparseOperator h = build_hopping(cfg, space);
  for (std::size_t n = 0; n < cfg.size(); ++n) {
    const int c = static_cast<int>(n);
    h += cfg.kind == ModelKind::kRedSideband ? build_cell_hamiltonian_red(cfg, space, c)
                                             : build_cell_hamiltonian_linearized(cfg, space, c);
  }
  return h;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::pair<int, int>, cplx>> StateSpec::terms() const {
  const double r = 1.0 / std::sqrt(2.0);
  switch (kind) {
    case Kind::kVacuum:
      return {{{0, 0}, 1.0}};
    case Kind::kPhiPlus:
      return {{{1, 0}, r}, {{0, 1}, r}};
    case Kind::kPhiPlusTwo:
      return {{{2, 0}, r}, {{0, 2}, r}};
    case Kind::kCustom:
      break;
  }
  if (amplitudes.empty()) throw InvalidArgument("custom state needs at least one amplitude");
  double norm2 = 0.0;
  for (const auto& [occ, amp] : amplitudes) {
    if (occ.first < 0 || occ.second < 0) throw InvalidArgument("occupation numbers must be non-negative");
    norm2 += std::norm(amp);
  }
  if (!(norm2 > 0.0)) throw InvalidArgument("custom state has zero norm");
  auto out = amplitudes;
  for (auto& t : out) t.second /= std::sqrt(norm2);
  return out;
}

int StateSpec::max_excitation() const {
  int m = 0;
  for (const auto& [occ, amp] : terms())
    if (amp != cplx(0.0)) m = std::max(m, occ.first + occ.second);
  return m;
}

std::string StateSpec::name() const {
  switch (kind) {
    case Kind::kVacuum:
      return "vacuum";
    case Kind::kPhiPlus:
      return "phi_plus";
    case Kind::kPhiPlusTwo:
      return "Phi_plus";
    case Kind::kCustom:
      return "custom";
  }
  return "custom";
}

QuantumState product_cell_state(const SpacePtr& space, const std::vector<std::pair<int, StateSpec>>& cell_states) {
  if (space->num_modes() % 2 != 0) throw InvalidArgument("array space must have an even number of modes");
  const int ncells = static_cast<int>(space->num_modes() / 2);
  // Expand the product term by term.
  std::vector<std::pair<Occupation, cplx>> acc{{Occupation(space->num_modes(), 0), 1.0}};
  for (const auto& [cell, spec] : cell_states) {
    if (cell < 0 || cell >= ncells) throw InvalidArgument("cell index out of range in initial state");
    std::vector<std::pair<Occupation, cplx>> next;
    for (const auto& [occ, amp] : acc) {
      for (const auto& [nab, c] : spec.terms()) {
        Occupation o = occ;
        if (o[optical_mode(cell)] != 0 || o[mechanical_mode(cell)] != 0)
          throw InvalidArgument("cell listed twice in initial state");
        o[optical_mode(cell)] = nab.first;
        o[mechanical_mode(cell)] = nab.second;
        next.emplace_back(std::move(o), amp * c);
      }
    }
    acc = std::move(next);
  }
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(space->dim()));
  for (const auto& [occ, amp] : acc) {
    if (amp == cplx(0.0)) continue;
    auto idx = space->find(occ);
    if (!idx) throw InvalidArgument("initial state exceeds the truncation (increase mode dimension or cap)");
    psi(static_cast<Eigen::Index>(*idx)) += amp;
  }
  return QuantumState::pure(space, std::move(psi));
}

QuantumState initial_sender_state(const SpacePtr& space, const StateSpec& spec, int sender_cell) {
  return product_cell_state(space, {{sender_cell, spec}});
}

Vector two_mode_vector(const SpacePtr& two_mode_space, const StateSpec& spec) {
  if (two_mode_space->num_modes() != 2) throw InvalidArgument("two_mode_vector needs a two-mode space");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(two_mode_space->dim()));
  for (const auto& [nab, c] : spec.terms()) {
    auto idx = two_mode_space->find({nab.first, nab.second});
    if (!idx) throw InvalidArgument("target state exceeds the receiver truncation");
    v(static_cast<Eigen::Index>(*idx)) += c;
  }
  return v;
}

}  // namespace optoqst
