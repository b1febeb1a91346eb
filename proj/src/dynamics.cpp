// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "optoqst/error.hpp"

namespace optoqst {

namespace ode = boost::numeric::odeint;

namespace {

using RealState = Eigen::VectorXd;

constexpr std::size_t kEigenClosedLimit = 2000;
constexpr std::size_t kEigenOpenLimit = 2000;  // on dim^2

double max_abs(const SparseMatrix& m) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

std::vector<double> reporting_times(const EvolutionSpec& spec) {
  std::vector<double> t = spec.sample_times.empty() ? std::vector<double>{spec.t_final} : spec.sample_times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < 0.0 || t[i] > spec.t_final * (1.0 + 1e-12))
      throw InvalidArgument("sample times must lie in [0, t_final]");
    if (i > 0 && t[i] < t[i - 1]) throw InvalidArgument("sample times must be ascending");
  }
  return t;
}

// Number-change of a jump operator; nullopt when it mixes several changes.
std::optional<int> excitation_shift(const SparseOperator& op) {
  std::optional<int> shift;
  const auto& sp = *op.space();
  const auto& m = op.matrix();
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (it.value() == cplx(0.0)) continue;
      const int s = sp.total_excitation(static_cast<std::size_t>(it.row())) -
                    sp.total_excitation(static_cast<std::size_t>(it.col()));
      if (shift && *shift != s) return std::nullopt;
      shift = s;
    }
  return shift.value_or(0);
}

// Validate the rotating frame and return the shifted Hamiltonian.
SparseOperator frame_hamiltonian(const EvolutionSpec& spec) {
  const auto& h = spec.hamiltonian;
  if (!spec.options.frame_frequency) return h;
  const auto n = total_number_operator(h.space());
  const double scale = 1.0 + max_abs(h.matrix());
  if (commutator_max_abs(h, n) > 1e-10 * scale)
    throw InvalidArgument("rotating frame requires a Hamiltonian that conserves total excitation");
  for (const auto& d : spec.dissipators)
    if (!excitation_shift(d.op)) throw InvalidArgument("rotating frame requires jump operators with a fixed excitation shift");
  return h - cplx(*spec.options.frame_frequency) * n;
}

void rotate_back(Vector& psi, const HilbertSpace& space, double omega, double t) {
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    psi(i) *= std::exp(-kI * omega * double(space.total_excitation(static_cast<std::size_t>(i))) * t);
}

void rotate_back(DenseMatrix& rho, const HilbertSpace& space, double omega, double t) {
  const Eigen::Index d = rho.rows();
  Vector phase(d);
  for (Eigen::Index i = 0; i < d; ++i)
    phase(i) = std::exp(-kI * omega * double(space.total_excitation(static_cast<std::size_t>(i))) * t);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) rho(i, j) *= phase(i) * std::conj(phase(j));
}

template <class System, class Observer>
std::size_t integrate(System&& sys, RealState& x, const std::vector<double>& times, double rel, double abs,
                      Observer&& obs) {
  auto stepper = ode::make_controlled(abs, rel, ode::runge_kutta_fehlberg78<RealState, double, RealState, double,
                                                                             ode::vector_space_algebra>());
  const double span = times.back() - times.front();
  const double dt0 = span > 0.0 ? span / 1000.0 : 1.0;
  try {
    return ode::integrate_times(stepper, sys, x, times.begin(), times.end(), dt0, obs);
  } catch (const std::exception& e) {
    throw ConvergenceError(std::string("adaptive integrator failed: ") + e.what());
  }
}

// Full time list handed to odeint: starts at 0 and contains every sample.
std::vector<double> with_origin(const std::vector<double>& samples) {
  std::vector<double> t;
  if (samples.front() > 0.0) t.push_back(0.0);
  t.insert(t.end(), samples.begin(), samples.end());
  return t;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kAuto:
      return "auto";
    case Method::kEigen:
      return "eigen";
    case Method::kAdaptive:
      return "adaptive";
  }
  return "auto";
}

std::vector<Dissipator> thermal_dissipators(const ArrayConfig& cfg, const SpacePtr& space) {
  if (space->num_modes() != 2 * cfg.size()) throw InvalidArgument("space does not match the array layout");
  std::vector<Dissipator> out;
  auto add = [&](SparseOperator op, double rate, std::string label) {
    if (rate > 0.0) out.push_back({std::move(op), rate, std::move(label)});
  };
  for (std::size_t n = 0; n < cfg.size(); ++n) {
    const auto& p = cfg.cells[n];
    const int c = static_cast<int>(n);
    const std::string id = std::to_string(n + 1);
    add(annihilation(space, optical_mode(c)), p.kappa * (1.0 + p.n_c), "a" + id);
    add(creation(space, optical_mode(c)), p.kappa * p.n_c, "a" + id + "^dag");
    add(annihilation(space, mechanical_mode(c)), p.gamma * (1.0 + p.n_m), "b" + id);
    add(creation(space, mechanical_mode(c)), p.gamma * p.n_m, "b" + id + "^dag");
  }
  return out;
}

void EvolutionSpec::validate() const {
  if (!(t_final >= 0.0)) throw InvalidArgument("t_final must be non-negative");
  for (const auto& d : dissipators) {
    if (!(d.rate >= 0.0)) throw InvalidArgument("dissipator rates must be non-negative");
    if (!d.op.space()->same_as(*hamiltonian.space())) throw InvalidArgument("jump operator acts on a different space");
  }
  if (options.rel_tol && !(*options.rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
  if (options.abs_tol && !(*options.abs_tol > 0.0)) throw InvalidArgument("abs_tol must be positive");
}

// ---------------------------------------------------------------------------

Trajectory evolve_closed(const EvolutionSpec& spec, const QuantumState& psi0) {
  spec.validate();
  if (!psi0.is_pure()) throw InvalidArgument("evolve_closed needs a pure state");
  const auto& space = spec.hamiltonian.space();
  if (!psi0.space()->same_as(*space)) throw InvalidArgument("state and Hamiltonian live on different spaces");
  check_dimension(space, StateUse::kPure, spec.options.guard);
  if (!spec.hamiltonian.is_hermitian(1e-12 * (1.0 + max_abs(spec.hamiltonian.matrix()))))
    throw InvalidArgument("Hamiltonian is not Hermitian");

  const auto samples = reporting_times(spec);
  Trajectory traj;
  traj.rel_tol = spec.options.rel_tol.value_or(1e-10);
  traj.abs_tol = spec.options.abs_tol.value_or(1e-12);
  const std::size_t d = space->dim();
  Method method = spec.options.method;
  if (method == Method::kAuto) method = d < kEigenClosedLimit ? Method::kEigen : Method::kAdaptive;
  traj.method_used = method;

  auto record = [&](double t, Vector psi) {
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(psi.squaredNorm() - 1.0));
    traj.times.push_back(t);
    traj.states.push_back(QuantumState::pure_unchecked(space, std::move(psi)));
  };

  if (method == Method::kEigen) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(spec.hamiltonian.dense());
    if (es.info() != Eigen::Success) throw ConvergenceError("Hamiltonian diagonalization failed");
    const Vector c0 = es.eigenvectors().adjoint() * psi0.amplitudes();
    for (double t : samples) {
      Vector ct = c0;
      for (Eigen::Index k = 0; k < ct.size(); ++k) ct(k) *= std::exp(-kI * es.eigenvalues()(k) * t);
      record(t, es.eigenvectors() * ct);
    }
    return traj;
  }

  const SparseOperator h = frame_hamiltonian(spec);
  const SparseMatrix& hm = h.matrix();
  const auto n = static_cast<Eigen::Index>(d);
  RealState x(2 * n);
  Eigen::Map<Vector>(reinterpret_cast<cplx*>(x.data()), n) = psi0.amplitudes();
  auto sys = [&](const RealState& s, RealState& ds, double) {
    ds.resize(s.size());
    Eigen::Map<const Vector> psi(reinterpret_cast<const cplx*>(s.data()), n);
    Eigen::Map<Vector> out(reinterpret_cast<cplx*>(ds.data()), n);
    out.noalias() = hm * psi;
    out *= -kI;
  };
  const auto times = with_origin(samples);
  std::size_t next = 0;
  auto obs = [&](const RealState& s, double t) {
    if (next < samples.size() && t == samples[next]) {
      Vector psi = Eigen::Map<const Vector>(reinterpret_cast<const cplx*>(s.data()), n);
      if (spec.options.frame_frequency) rotate_back(psi, *space, *spec.options.frame_frequency, t);
      record(t, std::move(psi));
      ++next;
    }
  };
  traj.steps = integrate(sys, x, times, traj.rel_tol, traj.abs_tol, obs);
  if (traj.steps > spec.options.max_steps) throw ConvergenceError("closed evolution exceeded the step limit");
  return traj;
}

QuantumState evolve_closed(const SparseOperator& H, const QuantumState& psi0, double t, const IntegratorOptions& opts) {
  EvolutionSpec spec{H, {}, t, {t}, opts};
  return evolve_closed(spec, psi0).final_state();
}

// ---------------------------------------------------------------------------

namespace {

struct LindbladParts {
  SparseMatrix heff;               // H - (i/2) sum r L^dag L
  std::vector<SparseMatrix> jumps;  // sqrt(r) L
};

LindbladParts lindblad_parts(const SparseOperator& h, const std::vector<Dissipator>& dissipators) {
  LindbladParts parts;
  SparseMatrix heff = h.matrix();
  for (const auto& d : dissipators) {
    if (d.rate == 0.0) continue;
    SparseMatrix l = d.op.matrix() * cplx(std::sqrt(d.rate));
    SparseMatrix ldl = SparseMatrix(l.adjoint()) * l;
    heff = heff - cplx(0.0, 0.5) * ldl;
    parts.jumps.push_back(std::move(l));
  }
  heff.makeCompressed();
  parts.heff = std::move(heff);
  return parts;
}

// out = X + X^dag, X = -i Heff rho + (1/2) sum L (L rho)^dag.
void apply_rhs(const LindbladParts& p, const Eigen::Ref<const DenseMatrix>& rho, DenseMatrix& x, DenseMatrix& tmp,
               Eigen::Ref<DenseMatrix> out) {
  x.noalias() = p.heff * rho;
  x *= -kI;
  for (const auto& l : p.jumps) {
    tmp.noalias() = l * rho;
    x.noalias() += 0.5 * (l * tmp.adjoint());
  }
  out = x + x.adjoint();
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

}  // namespace

DenseMatrix lindblad_rhs(const QuantumState& rho, const EvolutionSpec& spec) {
  spec.validate();
  const auto parts = lindblad_parts(spec.hamiltonian, spec.dissipators);
  const DenseMatrix r = rho.density_matrix();
  DenseMatrix x(r.rows(), r.cols()), tmp(r.rows(), r.cols()), out(r.rows(), r.cols());
  apply_rhs(parts, r, x, tmp, out);
  return out;
}

Trajectory evolve_open(const EvolutionSpec& spec, const QuantumState& rho0) {
  spec.validate();
  const auto& space = spec.hamiltonian.space();
  if (!rho0.space()->same_as(*space)) throw InvalidArgument("state and Hamiltonian live on different spaces");
  check_dimension(space, StateUse::kDensity, spec.options.guard);
  if (!spec.hamiltonian.is_hermitian(1e-12 * (1.0 + max_abs(spec.hamiltonian.matrix()))))
    throw InvalidArgument("Hamiltonian is not Hermitian");

  const auto samples = reporting_times(spec);
  Trajectory traj;
  traj.rel_tol = spec.options.rel_tol.value_or(1e-8);
  traj.abs_tol = spec.options.abs_tol.value_or(1e-10);
  const auto n = static_cast<Eigen::Index>(space->dim());
  Method method = spec.options.method;
  const bool small = static_cast<std::size_t>(n * n) <= kEigenOpenLimit;
  if (method == Method::kAuto) method = small ? Method::kEigen : Method::kAdaptive;
  if (method == Method::kEigen && !small)
    throw InvalidArgument("dense Liouvillian propagator is limited to dim^2 <= 2000");
  traj.method_used = method;

  const DenseMatrix r0 = rho0.density_matrix();
  auto record = [&](double t, DenseMatrix r) {
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(r.trace() - cplx(1.0)));
    traj.times.push_back(t);
    traj.states.push_back(QuantumState::mixed_unchecked(space, std::move(r)));
  };

  if (method == Method::kEigen) {
    // vec(A rho B) = (B^T kron A) vec(rho), column-major vec.
    const DenseMatrix id = DenseMatrix::Identity(n, n);
    const DenseMatrix h = spec.hamiltonian.dense();
    DenseMatrix lv = -kI * (kron(id, h) - kron(h.transpose(), id));
    for (const auto& d : spec.dissipators) {
      const DenseMatrix l = d.op.dense();
      const DenseMatrix ldl = l.adjoint() * l;
      lv += d.rate * (kron(l.conjugate(), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id));
    }
    const Vector v0 = Eigen::Map<const Vector>(r0.data(), n * n);
    for (double t : samples) {
      const DenseMatrix prop = (lv * cplx(t)).exp();
      Vector vt = prop * v0;
      DenseMatrix rt = Eigen::Map<DenseMatrix>(vt.data(), n, n);
      rt = 0.5 * (rt + rt.adjoint()).eval();
      record(t, std::move(rt));
    }
    return traj;
  }

  const SparseOperator h = frame_hamiltonian(spec);
  const auto parts = lindblad_parts(h, spec.dissipators);
  RealState x(2 * n * n);
  Eigen::Map<DenseMatrix>(reinterpret_cast<cplx*>(x.data()), n, n) = r0;
  DenseMatrix xbuf(n, n), tmp(n, n);
  auto sys = [&](const RealState& s, RealState& ds, double) {
    ds.resize(s.size());
    Eigen::Map<const DenseMatrix> rho(reinterpret_cast<const cplx*>(s.data()), n, n);
    Eigen::Map<DenseMatrix> out(reinterpret_cast<cplx*>(ds.data()), n, n);
    apply_rhs(parts, rho, xbuf, tmp, out);
  };
  const auto times = with_origin(samples);
  std::size_t next = 0;
  auto obs = [&](const RealState& s, double t) {
    if (next < samples.size() && t == samples[next]) {
      DenseMatrix r = Eigen::Map<const DenseMatrix>(reinterpret_cast<const cplx*>(s.data()), n, n);
      if (spec.options.frame_frequency) rotate_back(r, *space, *spec.options.frame_frequency, t);
      record(t, std::move(r));
      ++next;
    }
  };
  traj.steps = integrate(sys, x, times, traj.rel_tol, traj.abs_tol, obs);
  if (traj.steps > spec.options.max_steps) throw ConvergenceError("open evolution exceeded the step limit");
  return traj;
}

double min_eigenvalue(const QuantumState& state) {
  const DenseMatrix r = state.density_matrix();
  const DenseMatrix herm = 0.5 * (r + r.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------

DenseMatrix single_particle_hamiltonian(const ArrayConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(2 * cfg.size());
  DenseMatrix h = DenseMatrix::Zero(n, n);
  for (std::size_t c = 0; c < cfg.size(); ++c) {
    const auto& p = cfg.cells[c];
    const int a = optical_mode(static_cast<int>(c)), b = mechanical_mode(static_cast<int>(c));
    h(a, a) = h(b, b) = p.omega_m;
    h(a, b) = h(b, a) = -p.G;
  }
  for (std::size_t c = 0; c + 1 < cfg.size(); ++c) {
    const int a1 = optical_mode(static_cast<int>(c)), a2 = optical_mode(static_cast<int>(c + 1));
    h(a1, a2) = h(a2, a1) = cfg.hops[c];
  }
  return h;
}

Vector single_excitation_oracle(const ArrayConfig& cfg, double t, const std::optional<Vector>& initial) {
  if (cfg.kind != ModelKind::kRedSideband)
    throw InvalidArgument("single-excitation oracle needs a number-conserving (red-sideband) model");
  cfg.validate();
  const DenseMatrix h = single_particle_hamiltonian(cfg);
  Vector psi0 = Vector::Zero(h.rows());
  if (initial) {
    if (initial->size() != h.rows()) throw InvalidArgument("initial amplitude vector must have 2N entries");
    psi0 = *initial;
  } else {
    psi0(0) = 1.0;
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h);
  Vector c = es.eigenvectors().adjoint() * psi0;
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(-kI * es.eigenvalues()(k) * t);
  return es.eigenvectors() * c;
}

Vector single_excitation_sector(const QuantumState& psi) {
  const auto& space = *psi.space();
  const auto modes = static_cast<Eigen::Index>(space.num_modes());
  Vector out = Vector::Zero(modes);
  for (Eigen::Index m = 0; m < modes; ++m) {
    Occupation occ(space.num_modes(), 0);
    occ[static_cast<std::size_t>(m)] = 1;
    if (auto idx = space.find(occ)) out(m) = psi.amplitudes()(static_cast<Eigen::Index>(*idx));
  }
  return out;
}

ConvergenceResult convergence_run(const std::vector<int>& caps, const std::function<double(int)>& observable,
                                  double tol) {
  if (caps.size() < 2) throw InvalidArgument("convergence_run needs at least two caps");
  for (std::size_t i = 1; i < caps.size(); ++i)
    if (caps[i] <= caps[i - 1]) throw InvalidArgument("caps must be strictly ascending");
  ConvergenceResult r;
  r.caps = caps;
  r.tolerance = tol;
  for (int c : caps) r.values.push_back(observable(c));
  r.last_change = std::abs(r.values.back() - r.values[r.values.size() - 2]);
  r.converged = r.last_change < tol;
  if (r.converged) {
    std::size_t k = r.values.size() - 1;
    while (k > 0 && std::abs(r.values[k] - r.values[k - 1]) < tol) --k;
    r.converged_at = caps[k];
  }
  return r;
}

// ---------------------------------------------------------------------------

LinearModeDynamics linear_mode_dynamics(const ArrayConfig& cfg, double t) {
  if (cfg.kind != ModelKind::kRedSideband) throw InvalidArgument("linear mode dynamics needs a red-sideband model");
  cfg.validate();
  const double w0 = cfg.cells.front().omega_m;
  const auto n = static_cast<Eigen::Index>(2 * cfg.size());
  // Work in the frame rotating at w0; Q is invariant and T picks up exp(-i w0 t).
  DenseMatrix a = -kI * (single_particle_hamiltonian(cfg) - w0 * DenseMatrix::Identity(n, n));
  DenseMatrix gain = DenseMatrix::Zero(n, n);
  for (std::size_t c = 0; c < cfg.size(); ++c) {
    const auto& p = cfg.cells[c];
    const int ia = optical_mode(static_cast<int>(c)), ib = mechanical_mode(static_cast<int>(c));
    a(ia, ia) -= 0.5 * p.kappa;
    a(ib, ib) -= 0.5 * p.gamma;
    gain(ia, ia) = p.kappa * p.n_c;
    gain(ib, ib) = p.gamma * p.n_m;
  }
  // Van Loan: exp([[A, R], [0, -A^dag]] t) has F12 F11^dag = int_0^t e^{As} R e^{A^dag s} ds.
  DenseMatrix c = DenseMatrix::Zero(2 * n, 2 * n);
  c.topLeftCorner(n, n) = a;
  c.topRightCorner(n, n) = gain;
  c.bottomRightCorner(n, n) = -a.adjoint();
  const DenseMatrix f = (c * cplx(t)).exp();
  LinearModeDynamics out;
  const DenseMatrix f11 = f.topLeftCorner(n, n);
  const DenseMatrix p = f.topRightCorner(n, n) * f11.adjoint();
  out.Q = (0.5 * (p + p.adjoint())).conjugate();
  out.T = std::exp(-kI * w0 * t) * f11;
  return out;
}

ChannelResult thermal_channel_receiver_state(const ArrayConfig& cfg, const QuantumState& initial, int receiver_cell,
                                             double t, const ChannelOptions& opts) {
  if (cfg.kind != ModelKind::kRedSideband) throw InvalidArgument("thermal channel needs a red-sideband model");
  cfg.validate();
  if (receiver_cell < 0 || static_cast<std::size_t>(receiver_cell) >= cfg.size())
    throw InvalidArgument("receiver cell out of range");
  const auto& src = *initial.space();
  if (src.num_modes() != 2 * cfg.size()) throw InvalidArgument("initial state does not match the array layout");

  // Loss stage: number-conserving H plus pure loss never raises the
  // excitation number, so the initial support's maximum is an exact cap.
  const DenseMatrix r0 = initial.density_matrix();
  int k0 = 0;
  for (std::size_t i = 0; i < src.dim(); ++i)
    if (std::abs(r0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))) > 0.0)
      k0 = std::max(k0, src.total_excitation(i));
  std::vector<int> dims(src.num_modes());
  for (std::size_t m = 0; m < dims.size(); ++m) dims[m] = std::min(src.mode_dims()[m], k0 + 1);
  for (auto& d : dims) d = std::max(d, 2);
  const SpacePtr loss_space = make_space(dims, k0);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> keep;
  for (std::size_t i = 0; i < src.dim(); ++i)
    if (src.total_excitation(i) <= k0)
      if (auto j = loss_space->find(src.occupation(i))) keep.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*j));
  const auto ld = static_cast<Eigen::Index>(loss_space->dim());
  DenseMatrix rl = DenseMatrix::Zero(ld, ld);
  for (const auto& [i, a] : keep)
    for (const auto& [j, b] : keep) rl(a, b) = r0(i, j);

  const SparseOperator h = build_array_hamiltonian(cfg, loss_space, StateUse::kDensity, opts.integrator.guard);
  std::vector<Dissipator> loss;
  for (std::size_t c = 0; c < cfg.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (cfg.cells[c].kappa > 0.0) loss.push_back({annihilation(loss_space, optical_mode(ci)), cfg.cells[c].kappa, "loss a"});
    if (cfg.cells[c].gamma > 0.0)
      loss.push_back({annihilation(loss_space, mechanical_mode(ci)), cfg.cells[c].gamma, "loss b"});
  }
  IntegratorOptions lopt = opts.integrator;
  lopt.frame_frequency = cfg.cells.front().omega_m;
  if (lopt.method == Method::kEigen) lopt.method = Method::kAuto;
  EvolutionSpec lspec{h, loss, t, {t}, lopt};
  // The dense-Liouvillian route does not use the frame; keep the adaptive
  // stepper whenever the frame is needed for step size.
  if (static_cast<std::size_t>(ld * ld) > kEigenOpenLimit) lspec.options.method = Method::kAdaptive;
  const auto ltraj = evolve_open(lspec, QuantumState::mixed_unchecked(loss_space, std::move(rl)));
  const int keep_modes[2] = {optical_mode(receiver_cell), mechanical_mode(receiver_cell)};
  const QuantumState reduced = partial_trace(ltraj.final_state(), keep_modes);

  // Noise stage: random displacement with <alpha_i^* alpha_j> = Q_RR,
  // generated by q_k (D[d_k] + D[d_k^dag]) for unit time.
  const int cap = std::max(opts.receiver_cap, k0);
  const SpacePtr rspace = make_space({cap + 1, cap + 1}, cap);
  QuantumState rstate = embed(reduced, rspace);
  const auto lin = linear_mode_dynamics(cfg, t);
  Eigen::Matrix2cd qrr;
  qrr << lin.Q(keep_modes[0], keep_modes[0]), lin.Q(keep_modes[0], keep_modes[1]), lin.Q(keep_modes[1], keep_modes[0]),
      lin.Q(keep_modes[1], keep_modes[1]);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(qrr.transpose().eval());
  std::vector<Dissipator> noise;
  const auto c0 = annihilation(rspace, 0), c1 = annihilation(rspace, 1);
  for (int k = 0; k < 2; ++k) {
    const double q = std::max(es.eigenvalues()(k), 0.0);
    if (q <= 0.0) continue;
    const SparseOperator dk = std::conj(es.eigenvectors()(0, k)) * c0 + std::conj(es.eigenvectors()(1, k)) * c1;
    noise.push_back({dk, q, "noise"});
    noise.push_back({dk.adjoint(), q, "noise^dag"});
  }
  ChannelResult out{rstate, ltraj.max_norm_drift, 0.0, 0.0};
  if (!noise.empty()) {
    IntegratorOptions nopt = opts.integrator;
    nopt.frame_frequency.reset();
    EvolutionSpec nspec{zero_operator(rspace), noise, 1.0, {1.0}, nopt};
    const auto ntraj = evolve_open(nspec, rstate);
    out.receiver = ntraj.final_state();
    out.noise_trace_drift = ntraj.max_norm_drift;
  }
  out.min_eigenvalue = min_eigenvalue(out.receiver);
  return out;
}

}  // namespace optoqst
