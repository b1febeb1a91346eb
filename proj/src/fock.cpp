// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/fock.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "optoqst/error.hpp"

namespace optoqst {

namespace {

using Triplet = Eigen::Triplet<cplx>;

// Enumerate occupation vectors in lexicographic order (mode 0 most significant).
void enumerate(const std::vector<int>& dims, std::optional<int> cap, std::size_t mode, int used, Occupation& current,
               std::vector<Occupation>& out) {
  if (mode == dims.size()) {
    out.push_back(current);
    return;
  }
  int top = dims[mode] - 1;
  if (cap) top = std::min(top, *cap - used);
  for (int n = 0; n <= top; ++n) {
    current[mode] = n;
    enumerate(dims, cap, mode + 1, used + n, current, out);
  }
  current[mode] = 0;
}

void require_same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a.get() != b.get() && !a->same_as(*b)) throw InvalidArgument("operators act on different Hilbert spaces");
}

void check_mode(const SpacePtr& space, int mode) {
  if (mode < 0 || static_cast<std::size_t>(mode) >= space->num_modes())
    throw InvalidArgument("mode index " + std::to_string(mode) + " out of range");
}

}  // namespace

std::size_t HilbertSpace::OccupationHash::operator()(const Occupation& n) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (int v : n) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

SpacePtr HilbertSpace::make(std::vector<int> mode_dims, std::optional<int> excitation_cap) {
  if (mode_dims.empty()) throw InvalidArgument("Hilbert space needs at least one mode");
  for (int d : mode_dims)
    if (d < 2) throw InvalidArgument("every mode dimension must be >= 2");
  if (excitation_cap && *excitation_cap < 0) throw InvalidArgument("excitation cap must be non-negative");

  std::shared_ptr<HilbertSpace> space(new HilbertSpace());
  space->mode_dims_ = std::move(mode_dims);
  space->cap_ = excitation_cap;
  Occupation current(space->mode_dims_.size(), 0);
  enumerate(space->mode_dims_, excitation_cap, 0, 0, current, space->basis_);
  space->totals_.reserve(space->basis_.size());
  space->index_.reserve(space->basis_.size());
  for (std::size_t i = 0; i < space->basis_.size(); ++i) {
    const auto& n = space->basis_[i];
    space->totals_.push_back(std::accumulate(n.begin(), n.end(), 0));
    space->index_.emplace(n, i);
  }
  if (excitation_cap && *excitation_cap == 0) space->warnings_.push_back(SpaceWarning::kTrivialSpace);
  return space;
}

bool HilbertSpace::admissible(const Occupation& n) const {
  if (n.size() != mode_dims_.size()) return false;
  int total = 0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (n[k] < 0 || n[k] >= mode_dims_[k]) return false;
    total += n[k];
  }
  return !cap_ || total <= *cap_;
}

std::optional<std::size_t> HilbertSpace::find(const Occupation& n) const {
  auto it = index_.find(n);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t HilbertSpace::index_of(const Occupation& n) const {
  auto idx = find(n);
  if (!idx) throw InvalidArgument("occupation vector is not in the truncated basis");
  return *idx;
}

bool HilbertSpace::same_as(const HilbertSpace& other) const noexcept {
  return mode_dims_ == other.mode_dims_ && cap_ == other.cap_;
}

// ---------------------------------------------------------------------------

SparseOperator::SparseOperator(SpacePtr space, SparseMatrix matrix) : space_(std::move(space)), matrix_(std::move(matrix)) {
  const auto d = static_cast<Eigen::Index>(space_->dim());
  if (matrix_.rows() != d || matrix_.cols() != d) throw InvalidArgument("operator dimension does not match its space");
  matrix_.makeCompressed();
}

SparseOperator SparseOperator::adjoint() const { return SparseOperator(space_, SparseMatrix(matrix_.adjoint())); }

double SparseOperator::hermiticity_error() const {
  SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

bool SparseOperator::is_hermitian(double tol) const { return hermiticity_error() <= tol; }

SparseOperator& SparseOperator::operator+=(const SparseOperator& rhs) {
  require_same_space(space_, rhs.space_);
  matrix_ = matrix_ + rhs.matrix_;
  return *this;
}

SparseOperator& SparseOperator::operator-=(const SparseOperator& rhs) {
  require_same_space(space_, rhs.space_);
  matrix_ = matrix_ - rhs.matrix_;
  return *this;
}

SparseOperator& SparseOperator::operator*=(cplx s) {
  matrix_ *= s;
  return *this;
}

SparseOperator operator*(const SparseOperator& lhs, const SparseOperator& rhs) {
  require_same_space(lhs.space_, rhs.space_);
  SparseMatrix product = (lhs.matrix_ * rhs.matrix_).pruned();
  return SparseOperator(lhs.space_, std::move(product));
}

SparseOperator annihilation(const SpacePtr& space, int mode) {
  check_mode(space, mode);
  std::vector<Triplet> entries;
  entries.reserve(space->dim());
  Occupation target;
  for (std::size_t j = 0; j < space->dim(); ++j) {
    const auto& n = space->occupation(j);
    if (n[mode] == 0) continue;
    target = n;
    --target[mode];
    // Lowering never leaves a capped basis, but keep the lookup uniform.
    if (auto i = space->find(target)) entries.emplace_back(static_cast<int>(*i), static_cast<int>(j), std::sqrt(double(n[mode])));
  }
  const auto d = static_cast<Eigen::Index>(space->dim());
  SparseMatrix m(d, d);
  m.setFromTriplets(entries.begin(), entries.end());
  return SparseOperator(space, std::move(m));
}

SparseOperator creation(const SpacePtr& space, int mode) { return annihilation(space, mode).adjoint(); }

SparseOperator number_operator(const SpacePtr& space, int mode) {
  check_mode(space, mode);
  const auto d = static_cast<Eigen::Index>(space->dim());
  SparseMatrix m(d, d);
  std::vector<Triplet> entries;
  for (std::size_t i = 0; i < space->dim(); ++i) {
    int n = space->occupation(i)[mode];
    if (n != 0) entries.emplace_back(static_cast<int>(i), static_cast<int>(i), double(n));
  }
  m.setFromTriplets(entries.begin(), entries.end());
  return SparseOperator(space, std::move(m));
}

SparseOperator total_number_operator(const SpacePtr& space) {
  const auto d = static_cast<Eigen::Index>(space->dim());
  SparseMatrix m(d, d);
  std::vector<Triplet> entries;
  for (std::size_t i = 0; i < space->dim(); ++i) {
    int n = space->total_excitation(i);
    if (n != 0) entries.emplace_back(static_cast<int>(i), static_cast<int>(i), double(n));
  }
  m.setFromTriplets(entries.begin(), entries.end());
  return SparseOperator(space, std::move(m));
}

SparseOperator identity_operator(const SpacePtr& space) {
  const auto d = static_cast<Eigen::Index>(space->dim());
  SparseMatrix m(d, d);
  m.setIdentity();
  return SparseOperator(space, std::move(m));
}

SparseOperator zero_operator(const SpacePtr& space) {
  const auto d = static_cast<Eigen::Index>(space->dim());
  return SparseOperator(space, SparseMatrix(d, d));
}

double commutator_max_abs(const SparseOperator& a, const SparseOperator& b) {
  SparseMatrix c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < c.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(c, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

// ---------------------------------------------------------------------------

QuantumState QuantumState::pure(SpacePtr space, Vector amplitudes) {
  if (static_cast<std::size_t>(amplitudes.size()) != space->dim())
    throw InvalidArgument("state vector length does not match the space dimension");
  if (std::abs(amplitudes.squaredNorm() - 1.0) > 1e-10) throw InvalidArgument("pure state is not normalized");
  return QuantumState(std::move(space), std::move(amplitudes));
}

QuantumState QuantumState::mixed(SpacePtr space, DenseMatrix rho) {
  const auto d = static_cast<Eigen::Index>(space->dim());
  if (rho.rows() != d || rho.cols() != d) throw InvalidArgument("density matrix dimension does not match the space");
  if (std::abs(rho.trace() - cplx(1.0)) > 1e-10) throw InvalidArgument("density matrix trace differs from 1");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("density matrix is not Hermitian");
  return QuantumState(std::move(space), std::move(rho));
}

QuantumState QuantumState::pure_unchecked(SpacePtr space, Vector amplitudes) {
  if (static_cast<std::size_t>(amplitudes.size()) != space->dim())
    throw InvalidArgument("state vector length does not match the space dimension");
  return QuantumState(std::move(space), std::move(amplitudes));
}

QuantumState QuantumState::mixed_unchecked(SpacePtr space, DenseMatrix rho) {
  const auto d = static_cast<Eigen::Index>(space->dim());
  if (rho.rows() != d || rho.cols() != d) throw InvalidArgument("density matrix dimension does not match the space");
  return QuantumState(std::move(space), std::move(rho));
}

const Vector& QuantumState::amplitudes() const {
  if (!is_pure()) throw InvalidArgument("state is mixed; no amplitude vector");
  return std::get<Vector>(data_);
}

const DenseMatrix& QuantumState::rho() const {
  if (is_pure()) throw InvalidArgument("state is pure; call density_matrix()");
  return std::get<DenseMatrix>(data_);
}

DenseMatrix QuantumState::density_matrix() const {
  if (is_pure()) {
    const auto& psi = std::get<Vector>(data_);
    return psi * psi.adjoint();
  }
  return std::get<DenseMatrix>(data_);
}

double QuantumState::trace() const {
  if (is_pure()) return std::get<Vector>(data_).squaredNorm();
  return std::get<DenseMatrix>(data_).trace().real();
}

cplx QuantumState::expectation(const SparseOperator& op) const {
  require_same_space(space_, op.space());
  if (is_pure()) {
    const auto& psi = std::get<Vector>(data_);
    return psi.dot(op.matrix() * psi);
  }
  const auto& rho = std::get<DenseMatrix>(data_);
  DenseMatrix prod = op.matrix() * rho;
  return prod.trace();
}

double QuantumState::purity() const {
  if (is_pure()) {
    double n = std::get<Vector>(data_).squaredNorm();
    return n * n;
  }
  const auto& rho = std::get<DenseMatrix>(data_);
  return rho.cwiseAbs2().sum();
}

// ---------------------------------------------------------------------------

QuantumState partial_trace(const QuantumState& state, std::span<const int> keep_modes) {
  const auto& space = state.space();
  if (keep_modes.empty()) throw InvalidArgument("partial_trace needs at least one kept mode");
  std::set<int> seen;
  for (int m : keep_modes) {
    check_mode(space, m);
    if (!seen.insert(m).second) throw InvalidArgument("duplicate mode index in partial_trace");
  }

  std::vector<int> env_modes;
  for (int m = 0; m < static_cast<int>(space->num_modes()); ++m)
    if (!seen.count(m)) env_modes.push_back(m);

  std::vector<int> kept_dims;
  for (int m : keep_modes) kept_dims.push_back(space->mode_dims()[m]);
  SpacePtr reduced = make_space(kept_dims, space->excitation_cap());

  // Group full-basis indices by environment occupation; ordered map keeps the
  // accumulation order deterministic.
  std::map<Occupation, std::vector<std::pair<std::size_t, std::size_t>>> groups;
  Occupation kept(keep_modes.size()), env(env_modes.size());
  for (std::size_t i = 0; i < space->dim(); ++i) {
    const auto& n = space->occupation(i);
    for (std::size_t k = 0; k < keep_modes.size(); ++k) kept[k] = n[keep_modes[k]];
    for (std::size_t k = 0; k < env_modes.size(); ++k) env[k] = n[env_modes[k]];
    groups[env].emplace_back(reduced->index_of(kept), i);
  }

  const auto rd = static_cast<Eigen::Index>(reduced->dim());
  DenseMatrix out = DenseMatrix::Zero(rd, rd);
  if (state.is_pure()) {
    const auto& psi = state.amplitudes();
    for (const auto& [e, members] : groups)
      for (const auto& [ri, fi] : members)
        for (const auto& [rj, fj] : members) out(ri, rj) += psi(fi) * std::conj(psi(fj));
  } else {
    const auto& rho = state.rho();
    for (const auto& [e, members] : groups)
      for (const auto& [ri, fi] : members)
        for (const auto& [rj, fj] : members) out(ri, rj) += rho(fi, fj);
  }
  // Remove rounding asymmetry so the output is Hermitian to the last bit.
  DenseMatrix herm = 0.5 * (out + out.adjoint());
  return QuantumState::mixed_unchecked(reduced, std::move(herm));
}

QuantumState embed(const QuantumState& state, const SpacePtr& target) {
  const auto& src = state.space();
  if (src->num_modes() != target->num_modes()) throw InvalidArgument("embed needs spaces with the same number of modes");
  std::vector<std::size_t> map(src->dim());
  for (std::size_t i = 0; i < src->dim(); ++i) {
    auto idx = target->find(src->occupation(i));
    if (!idx) throw InvalidArgument("target space does not contain the source basis");
    map[i] = *idx;
  }
  const auto td = static_cast<Eigen::Index>(target->dim());
  if (state.is_pure()) {
    Vector psi = Vector::Zero(td);
    for (std::size_t i = 0; i < map.size(); ++i) psi(map[i]) = state.amplitudes()(i);
    return QuantumState::pure_unchecked(target, std::move(psi));
  }
  DenseMatrix rho = DenseMatrix::Zero(td, td);
  const auto& r = state.rho();
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = 0; j < map.size(); ++j) rho(map[i], map[j]) = r(i, j);
  return QuantumState::mixed_unchecked(target, std::move(rho));
}

}  // namespace optoqst
