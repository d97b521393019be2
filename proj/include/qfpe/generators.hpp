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
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfpe/coefficients.hpp"
#include "qfpe/fock.hpp"

namespace qfpe {

namespace detail {

inline void require_fock(const BasisOperators& ops, const char* what) {
  if (!ops.basis.is_fock()) throw std::invalid_argument(std::string(what) + " requires a Fock basis");
}

inline void require_operator_shape(const MatrixOperator& op, const BasisOperators& ops) {
  if (!(op.basis == ops.basis) || op.mat.rows() != ops.dimension() || op.mat.cols() != ops.dimension()) {
    throw std::invalid_argument("operator basis does not match the generator basis");
  }
}

inline SparseMatrix hamiltonian_part(const Matrix& h, double hbar) {
  require_hermitian(h, "Hamiltonian");
  return (-kI / hbar) * scommutator(to_sparse(h));
}

/// rho -> c (A rho A - 1/2 {rho, A^2}) + h.c.
inline SparseMatrix same_side_pair(const SparseMatrix& a, std::complex<double> c) {
  SparseMatrix ad = a.adjoint();
  SparseMatrix a2 = a * a;
  SparseMatrix ad2 = ad * ad;
  SparseMatrix term = sandwich(a, a) - 0.5 * santicommutator(a2);
  SparseMatrix conj_term = sandwich(ad, ad) - 0.5 * santicommutator(ad2);
  return c * term + std::conj(c) * conj_term;
}

/// Ladder-operator form shared by the (a, a^dag) builders:
///   -(i/hbar)[H0,.] - mu/2 [a^2 - a^dag^2, .] + w_down D[a] + w_up D[a^dag]
///   - (w_pair (a . a - 1/2{., a^2}) + h.c.)
inline Superoperator ladder_form(const BasisOperators& ops, const Matrix& h0, double mu,
                                 double w_down, double w_up, std::complex<double> w_pair) {
  const SparseMatrix a = to_sparse(ops.a);
  const SparseMatrix ad = to_sparse(ops.a_dag);
  SparseMatrix total = hamiltonian_part(h0, ops.hbar());
  SparseMatrix sq = a * a - SparseMatrix(ad * ad);
  total += (-0.5 * mu) * scommutator(sq);
  total += w_down * sdissipator(a);
  total += w_up * sdissipator(ad);
  total -= same_side_pair(a, w_pair);
  Superoperator s(ops.basis, std::move(total));
  fill_fock_boundary_weight(s);
  return s;
}

}  // namespace detail

/// p^2 / 2M on the given basis.
inline Matrix free_hamiltonian(const BasisOperators& ops, double mass) {
  return ops.p * ops.p / (2.0 * mass);
}

/// p^2/2M + M omega^2 x^2 / 2 built from the truncated quadratures.
inline Matrix oscillator_hamiltonian(const BasisOperators& ops, double mass, double omega) {
  return free_hamiltonian(ops, mass) + 0.5 * mass * omega * omega * ops.x * ops.x;
}

/// hbar omega (N + 1/2)
inline Matrix number_hamiltonian(const BasisOperators& ops, double omega) {
  const int d = ops.dimension();
  return ops.hbar() * omega * (ops.n_op + 0.5 * Matrix::Identity(d, d));
}

/// Nested-commutator form with all seven terms, D_xp = D_px.
inline Superoperator build_general_xp(const BilinearCoefficients& c, const MatrixOperator& h0,
                                      const BasisOperators& ops) {
  detail::require_operator_shape(h0, ops);
  const double hbar = ops.hbar();
  const SparseMatrix x = detail::to_sparse(ops.x);
  const SparseMatrix p = detail::to_sparse(ops.p);
  const SparseMatrix cx = scommutator(x);
  const SparseMatrix cp = scommutator(p);
  const SparseMatrix xp_sym = x * p + SparseMatrix(p * x);

  SparseMatrix total = detail::hamiltonian_part(h0.mat, hbar);
  total += (-kI / hbar * 0.5 * (c.mu - c.gamma)) * scommutator(xp_sym);
  total += (-kI / hbar * c.gamma) * SparseMatrix(cx * santicommutator(p));
  total += (-c.D_pp / (hbar * hbar)) * SparseMatrix(cx * cx);
  total += (-c.D_xx / (hbar * hbar)) * SparseMatrix(cp * cp);
  total += (c.D_px / (hbar * hbar)) * SparseMatrix(cx * cp + SparseMatrix(cp * cx));
  Superoperator s(ops.basis, std::move(total));
  fill_fock_boundary_weight(s);
  return s;
}

/// Lindblad form with H0 + (mu/2){x,p} and jumps V_i = alpha_i p + beta_i x
/// from the Gram factorization, each with weight 1/hbar.
inline Superoperator build_from_kraus(const BilinearCoefficients& c, const MatrixOperator& h0,
                                      const BasisOperators& ops) {
  detail::require_operator_shape(h0, ops);
  const KrausVectors kv = kraus_from_coefficients(c);
  Matrix h = h0.mat + 0.5 * c.mu * (ops.x * ops.p + ops.p * ops.x);
  std::vector<Jump> jumps;
  for (const auto& v : kv) {
    jumps.push_back({1.0 / ops.hbar(), {ops.basis, v.alpha * ops.p + v.beta * ops.x}});
  }
  return lindblad_superoperator({ops.basis, h}, jumps);
}

/// The same generator written through a, a^dag with length ops.length.
inline Superoperator build_aa_form(const BilinearCoefficients& c, const MatrixOperator& h0,
                                   const BasisOperators& ops) {
  detail::require_fock(ops, "ladder-operator form");
  detail::require_operator_shape(h0, ops);
  const double l2 = ops.length * ops.length;
  const double hbar = ops.hbar();
  const double sum = c.D_xx / l2 + c.D_pp * l2 / (hbar * hbar);
  const std::complex<double> pair(c.D_xx / l2 - c.D_pp * l2 / (hbar * hbar), -2.0 * c.D_px / hbar);
  return detail::ladder_form(ops, h0.mat, c.mu, sum + c.gamma, sum - c.gamma, pair);
}

/// Mean thermal occupation 1 / (e^{beta hbar omega} - 1).
inline double thermal_occupation(const ThermalContext& ctx, double hbar) {
  return 1.0 / std::expm1(ctx.beta * hbar * ctx.omega);
}

/// -(i/hbar)[hbar omega (N+1/2), .] + eta (N_beta + 1) D[a] + eta N_beta D[a^dag]
inline Superoperator build_quantum_optical(const ThermalContext& ctx, double eta,
                                           const BasisOperators& ops) {
  detail::require_fock(ops, "quantum optical generator");
  if (!(ctx.omega > 0.0)) throw std::invalid_argument("omega must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  const double nb = thermal_occupation(ctx, ops.hbar());
  const Jump jumps[] = {{eta * (nb + 1.0), {ops.basis, ops.a}}, {eta * nb, {ops.basis, ops.a_dag}}};
  return lindblad_superoperator({ops.basis, number_hamiltonian(ops, ctx.omega)}, jumps);
}

/// Phase diffusion -gamma_0 [N,[N,.]] plus m-photon exchange with weights
/// gamma_m (coth(beta hbar omega/2) +- 1)^m. gamma_m[k] is the rate for m = k+1.
inline Superoperator build_m_photon(const ThermalContext& ctx, double gamma_0,
                                    const std::vector<double>& gamma_m,
                                    const BasisOperators& ops) {
  detail::require_fock(ops, "m-photon generator");
  if (!(ctx.omega > 0.0)) throw std::invalid_argument("omega must be positive");
  if (gamma_0 < 0.0) throw std::invalid_argument("gamma_0 must be non-negative");
  for (double g : gamma_m) {
    if (g < 0.0) throw std::invalid_argument("m-photon rates must be non-negative");
  }
  const int d = ops.dimension();
  const double coth = 1.0 / std::tanh(0.5 * ctx.beta * ops.hbar() * ctx.omega);

  std::vector<std::string> warnings;
  const int m_max = static_cast<int>(gamma_m.size());
  if (4 * m_max > d) {
    warnings.push_back("m_max = " + std::to_string(m_max) + " exceeds N_t/4 = " +
                       std::to_string(d / 4) + "; truncation headroom is thin");
  }
  for (int k = 2; k < m_max; ++k) {
    if (gamma_m[k] > gamma_m[k - 1]) {
      warnings.push_back("gamma_" + std::to_string(k + 1) + " exceeds gamma_" + std::to_string(k) +
                         "; multi-photon rates should decrease");
    }
  }

  std::vector<Jump> jumps;
  jumps.push_back({2.0 * gamma_0, {ops.basis, ops.n_op}});
  Matrix am = Matrix::Identity(d, d);
  Matrix adm = Matrix::Identity(d, d);
  for (int m = 1; m <= m_max; ++m) {
    am = am * ops.a;
    adm = adm * ops.a_dag;
    const double g = gamma_m[m - 1];
    jumps.push_back({g * std::pow(coth + 1.0, m), {ops.basis, am}});
    jumps.push_back({g * std::pow(coth - 1.0, m), {ops.basis, adm}});
  }
  Superoperator s = lindblad_superoperator({ops.basis, number_hamiltonian(ops, ctx.omega)}, jumps);
  s.warnings = std::move(warnings);
  return s;
}

/// Tabulated functions of N for the shift-covariant form: A[m](n) for
/// n = 0..N_t-1 and the real Hamiltonian H(n).
struct HolevoShiftFunctions {
  std::map<int, std::vector<std::complex<double>>> A;
  std::vector<double> H;
};

/// -(i/hbar)[H(N),.] + D[A_0(N)] + sum_m D[W^dag^m A_{-m}(N)] + D[W^m A_m(N)]
inline Superoperator build_holevo_shift(const HolevoShiftFunctions& f, const BasisOperators& ops) {
  detail::require_fock(ops, "shift-covariant form");
  const int d = ops.dimension();
  if (static_cast<int>(f.H.size()) != d) throw std::invalid_argument("H(n) must have N_t entries");
  Matrix h = Matrix::Zero(d, d);
  for (int n = 0; n < d; ++n) h(n, n) = f.H[n];

  std::vector<Jump> jumps;
  for (const auto& [m, values] : f.A) {
    if (std::abs(m) >= d) throw std::invalid_argument("|m| must be smaller than N_t");
    if (static_cast<int>(values.size()) != d) throw std::invalid_argument("A_m(n) must have N_t entries");
    Matrix diag = Matrix::Zero(d, d);
    for (int n = 0; n < d; ++n) diag(n, n) = values[n];
    const Matrix step = m > 0 ? ops.w_shift : Matrix(ops.w_shift.adjoint());
    Matrix shift = Matrix::Identity(d, d);
    for (int k = 0; k < std::abs(m); ++k) shift = shift * step;
    jumps.push_back({1.0, {ops.basis, shift * diag}});
  }
  return lindblad_superoperator({ops.basis, h}, jumps);
}

/// A-functions that reproduce the quantum optical generator with eta = 2 gamma.
inline HolevoShiftFunctions qo_holevo_functions(const ThermalContext& ctx, double gamma, int dim,
                                                double hbar = 1.0) {
  const double x = ctx.beta * hbar * ctx.omega;
  const double g_beta = gamma * (1.0 / std::tanh(0.5 * x) - 1.0);
  HolevoShiftFunctions f;
  f.H.resize(dim);
  std::vector<std::complex<double>> up(dim), down(dim);
  for (int n = 0; n < dim; ++n) {
    f.H[n] = hbar * ctx.omega * (n + 0.5);
    up[n] = std::sqrt(g_beta) * std::sqrt(n + 1.0);
    down[n] = std::exp(0.5 * x) * std::sqrt(g_beta) * std::sqrt(static_cast<double>(n));
  }
  f.A[1] = std::move(up);
  f.A[-1] = std::move(down);
  return f;
}

/// A-functions of the m-photon generator; A_0 = sqrt(2 gamma_0) n.
inline HolevoShiftFunctions m_photon_holevo_functions(const ThermalContext& ctx, double gamma_0,
                                                      const std::vector<double>& gamma_m, int dim,
                                                      double hbar = 1.0) {
  const double x = ctx.beta * hbar * ctx.omega;
  const double cm1 = 1.0 / std::tanh(0.5 * x) - 1.0;
  HolevoShiftFunctions f;
  f.H.resize(dim);
  std::vector<std::complex<double>> a0(dim);
  for (int n = 0; n < dim; ++n) {
    f.H[n] = hbar * ctx.omega * (n + 0.5);
    a0[n] = std::sqrt(2.0 * gamma_0) * n;
  }
  f.A[0] = std::move(a0);
  for (int m = 1; m <= static_cast<int>(gamma_m.size()); ++m) {
    const double gm_beta = gamma_m[m - 1] * std::pow(cm1, m);
    std::vector<std::complex<double>> up(dim), down(dim);
    for (int n = 0; n < dim; ++n) {
      // (n+m)!/n! and n!/(n-m)!
      double rise = 1.0, fall = n >= m ? 1.0 : 0.0;
      for (int k = 1; k <= m; ++k) {
        rise *= n + k;
        if (n >= m) fall *= n - k + 1;
      }
      up[n] = std::sqrt(gm_beta * rise);
      down[n] = std::exp(0.5 * m * x) * std::sqrt(gm_beta * fall);
    }
    f.A[m] = std::move(up);
    f.A[-m] = std::move(down);
  }
  return f;
}

/// Optional real correction f(p) added to p^2/2M through p's spectral decomposition.
using MomentumFunction = std::function<double(double)>;

inline Matrix qbm_hamiltonian(const BasisOperators& ops, double mass,
                              const MomentumFunction& correction = {}) {
  Matrix h = free_hamiltonian(ops, mass);
  if (correction) h += hermitian_function(ops.p, correction);
  return 0.5 * (h + h.adjoint());
}

/// Translation-covariant QBM generator, nested-commutator form with
/// qbm_constrained coefficients.
inline Superoperator build_qbm(const ThermalContext& ctx, double gamma, double D_px,
                               const BasisOperators& ops, const MomentumFunction& correction = {}) {
  const BilinearCoefficients c = qbm_constrained(ctx, gamma, D_px, ops.hbar());
  return build_general_xp(c, {ops.basis, qbm_hamiltonian(ops, ctx.M, correction)}, ops);
}

/// The QBM generator in ladder form for an arbitrary length ops.length;
/// at ops.length = thermal wavelength the a-a block reduces to the D_px terms.
inline Superoperator build_qbm_ladder(const ThermalContext& ctx, double gamma, double D_px,
                                      const BasisOperators& ops,
                                      const MomentumFunction& correction = {}) {
  detail::require_fock(ops, "ladder-operator form");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const double hbar = ops.hbar();
  const double lam2 = ctx.beta * hbar * hbar / (4.0 * ctx.M);
  const double l2 = ops.length * ops.length;
  const double r = lam2 / l2;
  const double extra = (1.0 / gamma) * (2.0 / (hbar * hbar)) * r * D_px * D_px;
  const double w_down = 0.5 * gamma * (r + 1.0 / r + 2.0) + extra;
  const double w_up = 0.5 * gamma * (r + 1.0 / r - 2.0) + extra;
  const std::complex<double> pair =
      0.5 * gamma * (r - 1.0 / r) +
      2.0 * (D_px / hbar) * std::complex<double>((1.0 / gamma) * r * (D_px / hbar), -1.0);
  return detail::ladder_form(ops, qbm_hamiltonian(ops, ctx.M, correction), gamma, w_down, w_up, pair);
}

/// Kinetic QBM block: build_qbm with D_px = 0.
inline Superoperator build_kinetic_qbm(const ThermalContext& ctx, double gamma,
                                       const BasisOperators& ops) {
  return build_qbm(ctx, gamma, 0.0, ops);
}

}  // namespace qfpe
