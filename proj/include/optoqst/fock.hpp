// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file fock.hpp
 * @brief Truncated multimode bosonic Hilbert spaces, ladder operators and
 *        states.
 *
 * A space is the set of occupation vectors n with 0 <= n_k < mode_dims[k] and,
 * optionally, sum_k n_k <= excitation_cap. Basis order is lexicographic over
 * occupation vectors, so index 0 is always the vacuum.
 *
 * Truncation is a hard projection: matrix elements whose target falls outside
 * the admissible basis are dropped, never renormalized. A consequence is that
 * operator products are not Hermitian-consistent in general (b a^dagger differs
 * from a^dagger b once a cap is set); builders should form creation-left
 * products and add X + X^dagger explicitly.
 */

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

#include "optoqst/types.hpp"

namespace optoqst {

using Occupation = std::vector<int>;

enum class SpaceWarning {
  kTrivialSpace,  ///< cap = 0, the space only holds the vacuum
};

class HilbertSpace;
using SpacePtr = std::shared_ptr<const HilbertSpace>;

class HilbertSpace {
 public:
  /// Enumerate the admissible basis. Throws InvalidArgument on an empty mode
  /// list, a mode dimension below 2 or a negative cap.
  static SpacePtr make(std::vector<int> mode_dims, std::optional<int> excitation_cap = std::nullopt);

  std::size_t dim() const noexcept { return basis_.size(); }
  std::size_t num_modes() const noexcept { return mode_dims_.size(); }
  const std::vector<int>& mode_dims() const noexcept { return mode_dims_; }
  std::optional<int> excitation_cap() const noexcept { return cap_; }
  const std::vector<Occupation>& basis() const noexcept { return basis_; }
  const Occupation& occupation(std::size_t index) const { return basis_.at(index); }
  const std::vector<SpaceWarning>& warnings() const noexcept { return warnings_; }

  /// Index of an occupation vector, or nullopt when it is not admissible.
  std::optional<std::size_t> find(const Occupation& n) const;
  /// Like find() but throws InvalidArgument for inadmissible vectors.
  std::size_t index_of(const Occupation& n) const;

  bool admissible(const Occupation& n) const;
  int total_excitation(std::size_t index) const { return totals_.at(index); }

  /// Same mode dimensions and cap.
  bool same_as(const HilbertSpace& other) const noexcept;

 private:
  HilbertSpace() = default;

  struct OccupationHash {
    std::size_t operator()(const Occupation& n) const noexcept;
  };

  std::vector<int> mode_dims_;
  std::optional<int> cap_;
  std::vector<Occupation> basis_;
  std::vector<int> totals_;
  std::unordered_map<Occupation, std::size_t, OccupationHash> index_;
  std::vector<SpaceWarning> warnings_;
};

inline SpacePtr make_space(std::vector<int> mode_dims, std::optional<int> excitation_cap = std::nullopt) {
  return HilbertSpace::make(std::move(mode_dims), excitation_cap);
}

/// Sparse complex operator bound to a space.
class SparseOperator {
 public:
  SparseOperator(SpacePtr space, SparseMatrix matrix);

  const SpacePtr& space() const noexcept { return space_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

  SparseOperator adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;
  /// Largest elementwise |A - A^dagger|.
  double hermiticity_error() const;
  DenseMatrix dense() const { return DenseMatrix(matrix_); }

  SparseOperator& operator+=(const SparseOperator& rhs);
  SparseOperator& operator-=(const SparseOperator& rhs);
  SparseOperator& operator*=(cplx s);

  friend SparseOperator operator+(SparseOperator lhs, const SparseOperator& rhs) { return lhs += rhs; }
  friend SparseOperator operator-(SparseOperator lhs, const SparseOperator& rhs) { return lhs -= rhs; }
  friend SparseOperator operator*(cplx s, SparseOperator op) { return op *= s; }
  friend SparseOperator operator*(SparseOperator op, cplx s) { return op *= s; }
  /// Matrix product within the truncated space (projected).
  friend SparseOperator operator*(const SparseOperator& lhs, const SparseOperator& rhs);

 private:
  SpacePtr space_;
  SparseMatrix matrix_;
};

SparseOperator annihilation(const SpacePtr& space, int mode);
SparseOperator creation(const SpacePtr& space, int mode);
SparseOperator number_operator(const SpacePtr& space, int mode);
SparseOperator total_number_operator(const SpacePtr& space);
SparseOperator identity_operator(const SpacePtr& space);
SparseOperator zero_operator(const SpacePtr& space);
/// Operator norm bound ||[A, B]|| measured as the largest absolute entry.
double commutator_max_abs(const SparseOperator& a, const SparseOperator& b);

/// Pure state vector or density matrix over a space.
class QuantumState {
 public:
  enum class Kind { kPure, kMixed };

  /// Validated constructors: pure requires unit norm within 1e-10; mixed
  /// requires unit trace within 1e-10 and Hermiticity within 1e-12.
  static QuantumState pure(SpacePtr space, Vector amplitudes);
  static QuantumState mixed(SpacePtr space, DenseMatrix rho);
  /// Unvalidated constructors for propagated states, whose drift is reported
  /// by the propagator instead.
  static QuantumState pure_unchecked(SpacePtr space, Vector amplitudes);
  static QuantumState mixed_unchecked(SpacePtr space, DenseMatrix rho);

  Kind kind() const noexcept { return std::holds_alternative<Vector>(data_) ? Kind::kPure : Kind::kMixed; }
  bool is_pure() const noexcept { return kind() == Kind::kPure; }
  const SpacePtr& space() const noexcept { return space_; }
  std::size_t dim() const noexcept { return space_->dim(); }

  const Vector& amplitudes() const;  ///< throws for mixed states
  DenseMatrix density_matrix() const;
  const DenseMatrix& rho() const;  ///< throws for pure states

  double trace() const;
  cplx expectation(const SparseOperator& op) const;
  double purity() const;

 private:
  QuantumState(SpacePtr space, std::variant<Vector, DenseMatrix> data) : space_(std::move(space)), data_(std::move(data)) {}

  SpacePtr space_;
  std::variant<Vector, DenseMatrix> data_;
};

/// Reduced density matrix on keep_modes (in the given order). For capped
/// spaces the reduced space carries the same cap over the kept modes.
QuantumState partial_trace(const QuantumState& state, std::span<const int> keep_modes);

/// Copy a state into a space that contains every occupation vector of the
/// source space (same number of modes).
QuantumState embed(const QuantumState& state, const SpacePtr& target);

}  // namespace optoqst
