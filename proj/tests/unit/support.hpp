// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the unit tests. Oracles here are built from dense
// Kronecker products and never call the library's operator builders.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "optoqst/fock.hpp"

namespace optoqst::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20260415);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Vector random_vector(std::size_t n) {
  std::normal_distribution<double> d;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = cplx(d(rng()), d(rng()));
  return v.normalized();
}

inline QuantumState random_pure(const SpacePtr& s) { return QuantumState::pure(s, random_vector(s->dim())); }

inline QuantumState random_mixed(const SpacePtr& s, int rank = 3) {
  const auto n = static_cast<Eigen::Index>(s->dim());
  DenseMatrix rho = DenseMatrix::Zero(n, n);
  for (int k = 0; k < rank; ++k) {
    const Vector v = random_vector(s->dim());
    rho += uniform(0.1, 1.0) * v * v.adjoint();
  }
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return QuantumState::mixed(s, rho);
}

/// Truncated single-mode lowering matrix of dimension d.
inline DenseMatrix lowering(int d) {
  DenseMatrix a = DenseMatrix::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

/// op on mode k of an uncapped product space, identity elsewhere.
inline DenseMatrix embed_dense(const std::vector<int>& dims, int k, const DenseMatrix& op) {
  DenseMatrix out = DenseMatrix::Identity(1, 1);
  for (int m = 0; m < static_cast<int>(dims.size()); ++m) {
    const DenseMatrix f = m == k ? op : DenseMatrix::Identity(dims[m], dims[m]);
    out = Eigen::kroneckerProduct(out, f).eval();
  }
  return out;
}

inline double max_abs(const DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace optoqst::testing
