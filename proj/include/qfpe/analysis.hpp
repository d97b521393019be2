// Copyright 2026 The qfpe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfpe/fock.hpp"

namespace qfpe {

/// U(1) phase e^{i phi N} or translation e^{-i b p / hbar}.
struct GroupElement {
  enum class Kind { Phase, Shift };
  Kind kind = Kind::Phase;
  double parameter = 0.0;

  static GroupElement phase(double phi) { return {Kind::Phase, phi}; }
  static GroupElement shift(double b) { return {Kind::Shift, b}; }
};

inline Matrix group_unitary(const GroupElement& g, const BasisOperators& ops) {
  if (!std::isfinite(g.parameter)) throw std::invalid_argument("group parameter must be finite");
  const int d = ops.dimension();
  if (g.kind == GroupElement::Kind::Phase) {
    if (!ops.basis.is_fock()) throw std::invalid_argument("phase covariance requires a Fock basis");
    Matrix u = Matrix::Zero(d, d);
    for (int n = 0; n < d; ++n) u(n, n) = std::exp(kI * g.parameter * static_cast<double>(n));
    return u;
  }
  const double hbar = ops.hbar();
  if (ops.basis.is_lattice()) {
    Matrix u = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) u(j, j) = std::exp(-kI * g.parameter * ops.p(j, j).real() / hbar);
    return u;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (ops.p + ops.p.adjoint()));
  Vector phases = (-kI * g.parameter / hbar * es.eigenvalues().cast<Complex>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

struct CovarianceReport {
  double max_equivariance_defect = 0.0;
  /// Translation tested on a truncated Fock basis, where the displacement leaks.
  bool approximate = false;
};

/// max over random Hermitian rho of |L[U rho U^dag] - U L[rho] U^dag|_max.
inline CovarianceReport check_covariance(const Superoperator& gen, const GroupElement& g,
                                         const BasisOperators& ops, int samples = 20,
                                         std::uint64_t seed = 0) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (!(gen.basis() == ops.basis)) throw std::invalid_argument("basis mismatch");
  const Matrix u = group_unitary(g, ops);
  std::mt19937_64 rng(seed);
  CovarianceReport rep;
  rep.approximate = g.kind == GroupElement::Kind::Shift && ops.basis.is_fock();
  for (int s = 0; s < samples; ++s) {
    const Matrix rho = random_hermitian(ops.dimension(), rng);
    const Matrix lhs = gen.apply(u * rho * u.adjoint());
    const Matrix rhs = u * gen.apply(rho) * u.adjoint();
    rep.max_equivariance_defect = std::max(rep.max_equivariance_defect, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return rep;
}

struct KernelElement {
  /// Hermitian part of the devectorized singular vector, trace-normalized when the trace is nonzero.
  Matrix op;
  double trace = 0.0;
  double min_eigenvalue = 0.0;
  bool is_state = false;
};

struct StationaryReport {
  int kernel_dimension = 0;
  /// Normalized by the largest singular value, ascending.
  std::vector<double> near_null_singular_values;
  std::vector<KernelElement> kernel;
  std::vector<Matrix> states;
};

inline StationaryReport stationary_states(const Superoperator& gen, double threshold = 1e-8,
                                          int tail = 8) {
  const int d = gen.dimension();
  const Matrix dense = gen.dense();
  Eigen::BDCSVD<Matrix> svd(dense, Eigen::ComputeFullV);
  const RealVector& sv = svd.singularValues();  // descending
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  StationaryReport rep;
  const Eigen::Index n = sv.size();
  for (Eigen::Index k = n - 1; k >= 0 && static_cast<int>(rep.near_null_singular_values.size()) < tail; --k) {
    rep.near_null_singular_values.push_back(smax > 0.0 ? sv(k) / smax : 0.0);
  }
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const double s = smax > 0.0 ? sv(k) / smax : 0.0;
    if (s >= threshold) break;
    ++rep.kernel_dimension;
    Matrix m = unvec(svd.matrixV().col(k), d);
    // Fix the global phase so the Hermitian part does not cancel.
    const Complex tr = m.trace();
    if (std::abs(tr) > 1e-12) {
      m /= tr;
    } else {
      Eigen::Index r = 0, c = 0;
      m.cwiseAbs().maxCoeff(&r, &c);
      m *= std::conj(m(r, c)) / std::abs(m(r, c));
    }
    KernelElement el;
    el.op = 0.5 * (m + m.adjoint());
    el.trace = el.op.trace().real();
    el.min_eigenvalue = min_hermitian_eigenvalue(el.op);
    el.is_state = std::abs(el.trace - 1.0) < 1e-10 && el.min_eigenvalue >= -1e-10;
    if (el.is_state) rep.states.push_back(el.op);
    rep.kernel.push_back(std::move(el));
  }
  return rep;
}

/// |L[e^{-beta H0}/Z]|_1
inline double verify_gibbs(const Superoperator& gen, const MatrixOperator& h0, double beta) {
  require_hermitian(h0.mat, "H0");
  return trace_norm(gen.apply(gibbs_state(h0.mat, beta)));
}

struct OrbitWitness {
  double stationary_residual = 0.0;
  double orbit_state_residual = 0.0;
  double equivariance_defect = 0.0;
  bool linearly_independent = false;
  Matrix orbit_state;
};

/// Checks that U_g rho0 U_g^dag is again stationary and whether it is a new
/// (linearly independent) stationary state.
inline OrbitWitness orbit_nonuniqueness_witness(const Superoperator& gen, const GroupElement& g,
                                                const BasisOperators& ops, const Matrix& rho0,
                                                int samples = 20, std::uint64_t seed = 0) {
  OrbitWitness w;
  w.stationary_residual = trace_norm(gen.apply(rho0));
  if (w.stationary_residual > 1e-8) {
    throw std::invalid_argument("rho0 is not stationary: |L[rho0]|_1 = " + std::to_string(w.stationary_residual));
  }
  w.equivariance_defect = check_covariance(gen, g, ops, samples, seed).max_equivariance_defect;
  if (w.equivariance_defect > 1e-10) {
    throw std::invalid_argument("generator is not covariant under g: defect = " +
                                std::to_string(w.equivariance_defect));
  }
  const Matrix u = group_unitary(g, ops);
  w.orbit_state = u * rho0 * u.adjoint();
  w.orbit_state_residual = trace_norm(gen.apply(w.orbit_state));
  const Vector v0 = vec(rho0);
  const Vector v1 = vec(w.orbit_state);
  const double n0 = v0.squaredNorm();
  const double n1 = v1.squaredNorm();
  const double overlap = std::norm(v0.dot(v1));
  // smallest eigenvalue of the normalized Gram matrix of {rho0, rho_g}
  w.linearly_independent = 1.0 - std::sqrt(overlap / (n0 * n1)) > 1e-8;
  return w;
}

}  // namespace qfpe
