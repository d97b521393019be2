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

#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

/// Finite-dimensional operator algebra shared by every module.
///
/// Vectorization convention: matrices are flattened by stacking columns,
/// vec(A X B) = (B^T kron A) vec(X). Every superoperator in the library acts
/// on vectors built this way.
namespace qfpe {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

inline constexpr Complex kI{0.0, 1.0};

/// Raised for numerical failures (tolerances not met, non-convergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FockBasis {
  int dimension = 2;
  bool operator==(const FockBasis&) const = default;
};

struct MomentumLattice {
  int half_width = 1;
  double spacing = 1.0;
  bool operator==(const MomentumLattice&) const = default;
};

/// Truncated Fock space or a uniform momentum lattice p_j = j * spacing,
/// j = -half_width..half_width (index j + half_width).
class BasisSpec {
 public:
  static BasisSpec fock(int dimension, double hbar = 1.0) {
    if (dimension < 2) throw std::invalid_argument("Fock dimension must be >= 2");
    if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
    return BasisSpec(FockBasis{dimension}, hbar);
  }

  static BasisSpec lattice(int half_width, double spacing, double hbar = 1.0) {
    if (half_width < 1) throw std::invalid_argument("lattice half-width must be >= 1");
    if (!(spacing > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
    if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
    return BasisSpec(MomentumLattice{half_width, spacing}, hbar);
  }

  int dimension() const {
    if (const auto* f = std::get_if<FockBasis>(&kind_)) return f->dimension;
    return 2 * std::get<MomentumLattice>(kind_).half_width + 1;
  }
  bool is_fock() const { return std::holds_alternative<FockBasis>(kind_); }
  bool is_lattice() const { return std::holds_alternative<MomentumLattice>(kind_); }
  const MomentumLattice& lattice_params() const { return std::get<MomentumLattice>(kind_); }
  double hbar() const { return hbar_; }

  /// Momentum eigenvalue of lattice site `index`.
  double momentum_at(int index) const {
    const auto& lat = lattice_params();
    return (index - lat.half_width) * lat.spacing;
  }

  bool operator==(const BasisSpec&) const = default;

 private:
  BasisSpec(std::variant<FockBasis, MomentumLattice> kind, double hbar)
      : kind_(kind), hbar_(hbar) {}

  std::variant<FockBasis, MomentumLattice> kind_;
  double hbar_ = 1.0;
};

struct MatrixOperator {
  BasisSpec basis;
  Matrix mat;
};

/// Ladder, quadrature, number and shift operators on one basis.
///
/// On a Fock basis `w_shift` is sum |n+1><n| (truncated). On a momentum
/// lattice `p` is diagonal, `w_shift` is the unit momentum shift
/// |p_j> -> |p_j + spacing>, `x` is the central difference i hbar d/dp, and
/// the ladder operators follow from x and p through the length `length`.
struct BasisOperators {
  BasisSpec basis;
  double length = 1.0;
  Matrix a, a_dag, x, p, n_op, w_shift;

  int dimension() const { return basis.dimension(); }
  double hbar() const { return basis.hbar(); }
};

inline BasisOperators build_basis_ops(const BasisSpec& basis, double length = 1.0) {
  if (!(length > 0.0)) throw std::invalid_argument("length l must be positive");
  const int d = basis.dimension();
  const double hbar = basis.hbar();
  BasisOperators ops{basis, length, {}, {}, {}, {}, {}, {}};
  ops.w_shift = Matrix::Zero(d, d);
  for (int n = 0; n + 1 < d; ++n) ops.w_shift(n + 1, n) = 1.0;

  if (basis.is_fock()) {
    ops.a = Matrix::Zero(d, d);
    for (int n = 1; n < d; ++n) ops.a(n - 1, n) = std::sqrt(static_cast<double>(n));
    ops.a_dag = ops.a.adjoint();
    ops.x = (length / std::sqrt(2.0)) * (ops.a + ops.a_dag);
    ops.p = (-kI * hbar / (std::sqrt(2.0) * length)) * (ops.a - ops.a_dag);
    ops.n_op = Matrix::Zero(d, d);
    for (int n = 0; n < d; ++n) ops.n_op(n, n) = static_cast<double>(n);
    return ops;
  }

  const double delta = basis.lattice_params().spacing;
  ops.p = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j) ops.p(j, j) = basis.momentum_at(j);
  ops.x = (kI * hbar / (2.0 * delta)) * (ops.w_shift.adjoint() - ops.w_shift);
  const double s = 1.0 / (length * std::sqrt(2.0));
  ops.a = s * (ops.x + (kI * length * length / hbar) * ops.p);
  ops.a_dag = ops.a.adjoint();
  ops.n_op = ops.a_dag * ops.a;
  return ops;
}

// ---------------------------------------------------------------------------
// vectorization helpers

inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, int d) {
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

namespace detail {

inline SparseMatrix sparse_identity(int d) {
  SparseMatrix id(d, d);
  id.setIdentity();
  return id;
}

inline SparseMatrix to_sparse(const Matrix& m) { return m.sparseView(); }

}  // namespace detail

/// rho -> A rho
inline SparseMatrix spre(const SparseMatrix& a) {
  return Eigen::kroneckerProduct(detail::sparse_identity(static_cast<int>(a.rows())), a).eval();
}

/// rho -> rho B
inline SparseMatrix spost(const SparseMatrix& b) {
  SparseMatrix bt = b.transpose();
  return Eigen::kroneckerProduct(bt, detail::sparse_identity(static_cast<int>(b.rows()))).eval();
}

/// rho -> A rho B
inline SparseMatrix sandwich(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix bt = b.transpose();
  return Eigen::kroneckerProduct(bt, a).eval();
}

/// rho -> [A, rho]
inline SparseMatrix scommutator(const SparseMatrix& a) { return spre(a) - spost(a); }

/// rho -> {A, rho}
inline SparseMatrix santicommutator(const SparseMatrix& a) { return spre(a) + spost(a); }

/// rho -> L rho L^dag - 1/2 {L^dag L, rho}, with L^dag L taken from the
/// realized (possibly truncated) jump operator.
inline SparseMatrix sdissipator(const SparseMatrix& jump) {
  SparseMatrix jd = jump.adjoint();
  SparseMatrix jdj = jd * jump;
  return sandwich(jump, jd) - 0.5 * santicommutator(jdj);
}

/// Linear map on column-stacked d x d matrices.
class Superoperator {
 public:
  Superoperator(BasisSpec basis, SparseMatrix mat) : basis_(basis), mat_(std::move(mat)) {
    const auto d2 = static_cast<Eigen::Index>(basis_.dimension()) * basis_.dimension();
    if (mat_.rows() != d2 || mat_.cols() != d2) {
      throw std::invalid_argument("superoperator size does not match basis dimension squared");
    }
    mat_.makeCompressed();
  }

  const BasisSpec& basis() const { return basis_; }
  const SparseMatrix& matrix() const { return mat_; }
  Matrix dense() const { return Matrix(mat_); }
  int dimension() const { return basis_.dimension(); }

  Matrix apply(const Matrix& rho) const {
    return unvec(mat_ * vec(rho), basis_.dimension());
  }

  /// Dense propagator e^{t L}; scaling and squaring with Pade approximants.
  Matrix exp(double t) const { return (t * dense()).exp(); }

  /// Upward population rate into the outermost basis state(s): for Fock
  /// bases the rate |L|_{(N-1,N-1),(N-2,N-2)}, for lattices the lost-flux
  /// fraction set by the builder.
  double boundary_weight = 0.0;
  std::vector<std::string> warnings;

 private:
  BasisSpec basis_;
  SparseMatrix mat_;
};

inline double max_abs_diff(const Superoperator& lhs, const Superoperator& rhs) {
  SparseMatrix diff = lhs.matrix() - rhs.matrix();
  double m = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

inline double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const Matrix& h, const char* what, double tol = 1e-12) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > tol * scale) {
    throw std::invalid_argument(std::string(what) + " is not Hermitian");
  }
}

inline void fill_fock_boundary_weight(Superoperator& s) {
  if (!s.basis().is_fock()) return;
  const int d = s.dimension();
  const int top = d - 1;
  const int below = d - 2;
  s.boundary_weight = std::abs(s.matrix().coeff(top + top * d, below + below * d));
}

/// One Lindblad jump term rate * D[op].
struct Jump {
  double rate = 0.0;
  MatrixOperator op;
};

/// rho -> -(i/hbar)[H, rho] + sum rate_i (L_i rho L_i^dag - 1/2 {L_i^dag L_i, rho}).
inline Superoperator lindblad_superoperator(const MatrixOperator& hamiltonian,
                                            std::span<const Jump> jumps) {
  const BasisSpec& basis = hamiltonian.basis;
  require_hermitian(hamiltonian.mat, "Hamiltonian");
  const double hbar = basis.hbar();
  SparseMatrix total = (-kI / hbar) * scommutator(detail::to_sparse(hamiltonian.mat));
  for (const auto& j : jumps) {
    if (!(j.op.basis == basis)) throw std::invalid_argument("jump operator basis mismatch");
    if (j.rate < 0.0) throw std::invalid_argument("negative jump rate");
    if (j.rate == 0.0) continue;
    total += j.rate * sdissipator(detail::to_sparse(j.op.mat));
  }
  Superoperator s(basis, std::move(total));
  fill_fock_boundary_weight(s);
  return s;
}

/// Choi matrix sum_{ij} |i><j| kron S(|i><j|), unnormalized.
inline Matrix choi_matrix(const Matrix& superop, int d) {
  if (superop.rows() != static_cast<Eigen::Index>(d) * d || superop.cols() != superop.rows()) {
    throw std::invalid_argument("superoperator does not act on d x d matrices");
  }
  Matrix choi(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) choi(i * d + a, j * d + b) = superop(a + b * d, i + j * d);
  return choi;
}

inline Matrix choi_matrix(const Superoperator& s) { return choi_matrix(s.dense(), s.dimension()); }

inline double min_hermitian_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Sum of singular values.
inline double trace_norm(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

/// f(H) through the spectral decomposition of a Hermitian matrix.
template <typename F>
Matrix hermitian_function(const Matrix& h, F&& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const auto& vals = es.eigenvalues();
  Vector fv(vals.size());
  for (Eigen::Index k = 0; k < vals.size(); ++k) fv(k) = f(vals(k));
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

/// Validated state: Hermitian, unit trace and positive within tolerances.
class DensityMatrix {
 public:
  static DensityMatrix from(MatrixOperator op, double herm_tol = 1e-12, double trace_tol = 1e-12,
                            double eig_tol = 1e-10) {
    const Matrix& m = op.mat;
    if (m.rows() != m.cols() || m.rows() != op.basis.dimension()) {
      throw std::invalid_argument("density matrix shape does not match basis");
    }
    if (hermiticity_defect(m) > herm_tol) throw std::invalid_argument("density matrix not Hermitian");
    if (std::abs(m.trace() - 1.0) > trace_tol) throw std::invalid_argument("density matrix trace != 1");
    if (min_hermitian_eigenvalue(m) < -eig_tol) {
      throw std::invalid_argument("density matrix has a negative eigenvalue");
    }
    return DensityMatrix(std::move(op));
  }

  const MatrixOperator& op() const { return op_; }
  const Matrix& mat() const { return op_.mat; }
  const BasisSpec& basis() const { return op_.basis; }

 private:
  explicit DensityMatrix(MatrixOperator op) : op_(std::move(op)) {}
  MatrixOperator op_;
};

/// e^{-beta H} / Z.
inline Matrix gibbs_state(const Matrix& h, double beta) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const RealVector& e = es.eigenvalues();
  const double emin = e.minCoeff();
  RealVector w = (-beta * (e.array() - emin)).exp();
  w /= w.sum();
  return es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

inline Matrix projector(int d, int n) {
  Matrix m = Matrix::Zero(d, d);
  m(n, n) = 1.0;
  return m;
}

inline Matrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) m(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (m + m.adjoint());
}

/// Random full-rank state from a Ginibre matrix.
inline Matrix random_density(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) m(i, j) = Complex(g(rng), g(rng));
  Matrix rho = m * m.adjoint();
  return rho / rho.trace();
}

/// Population of the outermost basis state(s): the top Fock level, or both
/// lattice edges.
inline double leakage(const Matrix& rho, const BasisSpec& basis) {
  const int d = basis.dimension();
  if (basis.is_fock()) return rho(d - 1, d - 1).real();
  return rho(0, 0).real() + rho(d - 1, d - 1).real();
}

}  // namespace qfpe
