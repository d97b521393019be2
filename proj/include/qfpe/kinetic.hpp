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
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qfpe/coefficients.hpp"
#include "qfpe/dynamics.hpp"
#include "qfpe/fock.hpp"
#include "qfpe/generators.hpp"

/// Collisional (linear Boltzmann) dynamics of a test particle in an ideal
/// Maxwell-Boltzmann gas, and its small-transfer Brownian limit.
namespace qfpe {

struct ConstantProfile {
  double t0 = 0.0;
};
struct GaussianProfile {
  double t0 = 0.0;
  double sigma = 1.0;
};
/// Piecewise-linear t(q) on strictly increasing nodes, zero outside.
struct TabulatedProfile {
  std::vector<double> q;
  std::vector<double> t;
};
using TMatrixProfile = std::variant<ConstantProfile, GaussianProfile, TabulatedProfile>;

inline double t_matrix(const TMatrixProfile& profile, double q) {
  if (const auto* c = std::get_if<ConstantProfile>(&profile)) return c->t0;
  if (const auto* g = std::get_if<GaussianProfile>(&profile)) {
    return g->t0 * std::exp(-0.5 * q * q / (g->sigma * g->sigma));
  }
  const auto& tab = std::get<TabulatedProfile>(profile);
  if (q < tab.q.front() || q > tab.q.back()) return 0.0;
  const auto it = std::upper_bound(tab.q.begin(), tab.q.end(), q);
  if (it == tab.q.end()) return tab.t.back();
  const auto k = static_cast<std::size_t>(it - tab.q.begin());
  const double w = (q - tab.q[k - 1]) / (tab.q[k] - tab.q[k - 1]);
  return (1.0 - w) * tab.t[k - 1] + w * tab.t[k];
}

struct GasModel {
  double m = 1.0;
  double z = 1.0;
  double n = 1.0;
  double beta = 1.0;
  TMatrixProfile t_matrix = ConstantProfile{1.0};

  void validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("gas mass m must be positive");
    if (!(z > 0.0)) throw std::invalid_argument("fugacity z must be positive");
    if (!(n > 0.0)) throw std::invalid_argument("number density n must be positive");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (const auto* g = std::get_if<GaussianProfile>(&t_matrix)) {
      if (!(g->sigma > 0.0)) throw std::invalid_argument("t-matrix sigma must be positive");
    }
    if (const auto* tab = std::get_if<TabulatedProfile>(&t_matrix)) {
      if (tab->q.size() < 2 || tab->q.size() != tab->t.size()) {
        throw std::invalid_argument("tabulated t-matrix needs >= 2 (q, t) rows");
      }
      for (std::size_t k = 0; k < tab->q.size(); ++k) {
        if (!std::isfinite(tab->q[k]) || !std::isfinite(tab->t[k]) || tab->q[k] < 0.0) {
          throw std::invalid_argument("tabulated t-matrix rows must be finite with q >= 0");
        }
        if (k > 0 && !(tab->q[k] > tab->q[k - 1])) {
          throw std::invalid_argument("tabulated t-matrix q must be strictly increasing");
        }
      }
    }
  }
};

/// Maxwell-Boltzmann dynamic structure factor
///   S(q, E) = (2 pi hbar)^-3 (2 pi m^2 / (n beta q)) z exp[-(beta/8m) (2mE + q^2)^2 / q^2].
inline double s_mb(double q, double energy, const GasModel& gas, double hbar = 1.0) {
  if (!(q > 0.0)) throw std::invalid_argument("s_mb requires q > 0");
  constexpr double pi = std::numbers::pi;
  const double h3 = std::pow(2.0 * pi * hbar, 3);
  const double pref = 2.0 * pi * gas.m * gas.m * gas.z / (gas.n * gas.beta * q) / h3;
  const double u = 2.0 * gas.m * energy + q * q;
  return pref * std::exp(-(gas.beta / (8.0 * gas.m)) * u * u / (q * q));
}

struct FrictionResult {
  double gamma = 0.0;
  double error = 0.0;
};

inline constexpr double kQuadratureTolerance = 1e-10;
inline constexpr unsigned kQuadratureDepth = 60;

/// gamma = (1/3) z pi^2 m^2 / (beta hbar) * 4 pi int_0^inf q^3 |t(q)|^2 e^{-beta q^2/8m} dq.
/// This is the three-dimensional coefficient; see lattice_friction_gamma for
/// the one-dimensional lattice counterpart.
inline FrictionResult friction_gamma(const GasModel& gas, double hbar = 1.0) {
  gas.validate();
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double a = gas.beta / (8.0 * gas.m);
  auto integrand = [&](double q) {
    const double t = t_matrix(gas.t_matrix, q);
    return q * q * q * t * t * std::exp(-a * q * q);
  };

  double integral = 0.0, error = 0.0, l1 = 0.0;
  auto integrate = [&](double lo, double hi) {
    double err = 0.0, seg_l1 = 0.0;
    integral += Quad::integrate(integrand, lo, hi, kQuadratureDepth, kQuadratureTolerance, &err, &seg_l1);
    error += err;
    l1 += seg_l1;
  };
  if (const auto* tab = std::get_if<TabulatedProfile>(&gas.t_matrix)) {
    for (std::size_t k = 0; k + 1 < tab->q.size(); ++k) integrate(tab->q[k], tab->q[k + 1]);
  } else {
    // split at the Gaussian scale so both pieces are smooth on their range
    const double s = 1.0 / std::sqrt(a);
    integrate(0.0, 4.0 * s);
    integrate(4.0 * s, std::numeric_limits<double>::infinity());
  }
  // the embedded Kronrod estimate is pessimistic; allow a factor 100 on it
  if (!std::isfinite(integral) || error > 100.0 * kQuadratureTolerance * l1) {
    throw NumericError("friction quadrature did not converge: estimated error " + std::to_string(error));
  }
  constexpr double pi = std::numbers::pi;
  const double pref = (1.0 / 3.0) * gas.z * pi * pi * gas.m * gas.m / (gas.beta * hbar) * 4.0 * pi;
  return {pref * integral, pref * error};
}

/// (D_xx, D_pp) = (beta hbar^2 gamma / 8M, 2 M gamma / beta).
inline std::pair<double, double> derived_diffusion(double gamma, const ThermalContext& ctx,
                                                   double hbar = 1.0) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  if (!(ctx.M > 0.0) || !(ctx.beta > 0.0)) throw std::invalid_argument("beta and M must be positive");
  return {ctx.beta * hbar * hbar * gamma / (8.0 * ctx.M), 2.0 * ctx.M * gamma / ctx.beta};
}

struct LatticeQLBESpec {
  BasisSpec grid = BasisSpec::lattice(20, 0.1);
  int K = 1;
  double M = 1.0;

  void validate() const {
    if (!grid.is_lattice()) throw std::invalid_argument("QLBE requires a momentum-lattice basis");
    if (K < 1) throw std::invalid_argument("transfer range K must be >= 1");
    if (K >= 2 * grid.lattice_params().half_width) throw std::invalid_argument("K must be < 2J");
    if (!(M > 0.0)) throw std::invalid_argument("test-particle mass M must be positive");
  }
};

/// Jump J_k = c_k Shift_k diag(sqrt S(|q|, E(q, p_j))) for q = k Delta.
struct CollisionChannel {
  int k = 0;
  /// c_k^2 S at every source site j (before truncation).
  std::vector<double> rate;
};

/// Operator-level QLBE: the collision channels plus the free Hamiltonian.
class QLBELattice {
 public:
  QLBELattice(const LatticeQLBESpec& spec, const GasModel& gas) : spec_(spec) {
    spec.validate();
    gas.validate();
    const BasisSpec& grid = spec.grid;
    const int d = grid.dimension();
    const double hbar = grid.hbar();
    const double delta = grid.lattice_params().spacing;
    constexpr double pi = std::numbers::pi;
    double total = 0.0, lost = 0.0;
    for (int k = -spec.K; k <= spec.K; ++k) {
      if (k == 0) continue;
      const double q = k * delta;
      const double tq = t_matrix(gas.t_matrix, std::abs(q));
      const double c2 = (2.0 * pi / hbar) * std::pow(2.0 * pi * hbar, 3) * gas.n * tq * tq * delta;
      CollisionChannel ch{k, std::vector<double>(d, 0.0)};
      for (int j = 0; j < d; ++j) {
        const double p = grid.momentum_at(j);
        const double e = ((p + q) * (p + q) - p * p) / (2.0 * spec.M);
        ch.rate[j] = c2 * s_mb(std::abs(q), e, gas, hbar);
        total += ch.rate[j];
        if (j + k < 0 || j + k >= d) lost += ch.rate[j];
      }
      channels_.push_back(std::move(ch));
    }
    boundary_weight_ = total > 0.0 ? lost / total : 0.0;
    h0_.resize(d);
    for (int j = 0; j < d; ++j) {
      const double p = grid.momentum_at(j);
      h0_[j] = p * p / (2.0 * spec.M);
    }
  }

  const LatticeQLBESpec& spec() const { return spec_; }
  const std::vector<CollisionChannel>& channels() const { return channels_; }
  /// Collision rate lost through the truncated edges over the total rate.
  double boundary_weight() const { return boundary_weight_; }

  /// L[rho] without forming the superoperator.
  Matrix apply(const Matrix& rho, bool include_hamiltonian = true) const {
    const int d = spec_.grid.dimension();
    const double hbar = spec_.grid.hbar();
    Matrix out = Matrix::Zero(d, d);
    if (include_hamiltonian) {
      for (int b = 0; b < d; ++b)
        for (int a = 0; a < d; ++a) out(a, b) = (-kI / hbar) * (h0_[a] - h0_[b]) * rho(a, b);
    }
    std::vector<double> loss(d), amp(d);
    for (const auto& ch : channels_) {
      for (int j = 0; j < d; ++j) {
        const bool kept = j + ch.k >= 0 && j + ch.k < d;
        loss[j] = kept ? ch.rate[j] : 0.0;
        amp[j] = kept ? std::sqrt(ch.rate[j]) : 0.0;
      }
      for (int b = 0; b < d; ++b) {
        for (int a = 0; a < d; ++a) {
          out(a, b) -= 0.5 * (loss[a] + loss[b]) * rho(a, b);
          if (amp[a] != 0.0 && amp[b] != 0.0) out(a + ch.k, b + ch.k) += amp[a] * amp[b] * rho(a, b);
        }
      }
    }
    return out;
  }

  Superoperator superoperator(bool include_hamiltonian = true) const {
    const int d = spec_.grid.dimension();
    const double hbar = spec_.grid.hbar();
    const long d2 = static_cast<long>(d) * d;
    std::vector<Complex> diag(d2, 0.0);
    if (include_hamiltonian) {
      for (int b = 0; b < d; ++b)
        for (int a = 0; a < d; ++a) diag[a + b * d] += (-kI / hbar) * (h0_[a] - h0_[b]);
    }
    std::vector<Eigen::Triplet<Complex>> trip;
    std::vector<double> loss(d), amp(d);
    for (const auto& ch : channels_) {
      for (int j = 0; j < d; ++j) {
        const bool kept = j + ch.k >= 0 && j + ch.k < d;
        loss[j] = kept ? ch.rate[j] : 0.0;
        amp[j] = kept ? std::sqrt(ch.rate[j]) : 0.0;
      }
      for (int b = 0; b < d; ++b) {
        for (int a = 0; a < d; ++a) {
          diag[a + b * d] -= 0.5 * (loss[a] + loss[b]);
          if (amp[a] != 0.0 && amp[b] != 0.0) {
            trip.emplace_back((a + ch.k) + (b + ch.k) * d, a + b * d, amp[a] * amp[b]);
          }
        }
      }
    }
    for (long i = 0; i < d2; ++i) {
      if (diag[i] != Complex(0.0)) trip.emplace_back(i, i, diag[i]);
    }
    SparseMatrix mat(d2, d2);
    mat.setFromTriplets(trip.begin(), trip.end());
    Superoperator s(spec_.grid, std::move(mat));
    s.boundary_weight = boundary_weight_;
    return s;
  }

  /// Diagonal e^{-beta p^2/2M}/Z on the grid.
  Matrix gibbs(double beta) const {
    const int d = spec_.grid.dimension();
    RealVector w(d);
    for (int j = 0; j < d; ++j) w(j) = std::exp(-beta * h0_[j]);
    w /= w.sum();
    return w.cast<Complex>().asDiagonal();
  }

 private:
  LatticeQLBESpec spec_;
  std::vector<CollisionChannel> channels_;
  std::vector<double> h0_;
  double boundary_weight_ = 0.0;
};

inline Superoperator build_qlbe_lattice(const LatticeQLBESpec& spec, const GasModel& gas) {
  return QLBELattice(spec, gas).superoperator();
}

/// One-dimensional friction of the lattice QLBE at small transfer:
///   gamma_1D = (beta / 4M)(1 + m/M) sum_q q^2 c_q^2 S(|q|, q^2/2M).
/// It replaces the angular-averaged three-dimensional friction_gamma, which
/// has no one-dimensional analogue on the grid.
inline double lattice_friction_gamma(const LatticeQLBESpec& spec, const GasModel& gas) {
  const QLBELattice lat(spec, gas);
  const int centre = spec.grid.lattice_params().half_width;
  const double delta = spec.grid.lattice_params().spacing;
  double sum = 0.0;
  for (const auto& ch : lat.channels()) {
    const double q = ch.k * delta;
    sum += q * q * ch.rate[centre];
  }
  return gas.beta / (4.0 * spec.M) * (1.0 + gas.m / spec.M) * sum;
}

struct BrownianLimitReport {
  double mass_ratio = 0.0;
  double gamma_1d = 0.0;
  double gamma_3d = 0.0;
  /// max over test states of |L_qlbe rho - L_qbm rho|_F / |L_qbm rho|_F.
  double relative_defect = 0.0;
  std::vector<double> state_defects;
  double boundary_weight = 0.0;
  bool out_of_regime = false;
};

namespace detail {

inline Matrix gaussian_packet(const BasisSpec& grid, double p0, double sigma) {
  const int d = grid.dimension();
  Vector psi(d);
  for (int j = 0; j < d; ++j) {
    const double u = (grid.momentum_at(j) - p0) / sigma;
    psi(j) = std::exp(-0.25 * u * u);
  }
  psi.normalize();
  return psi * psi.adjoint();
}

}  // namespace detail

/// Compares the QLBE lattice generator with the kinetic QBM generator (same
/// free Hamiltonian, gamma from lattice_friction_gamma) on Gaussian momentum
/// packets of thermal width. Mass ratios above 0.1 are flagged out-of-regime.
inline BrownianLimitReport brownian_limit_check(const LatticeQLBESpec& spec, const GasModel& gas) {
  spec.validate();
  gas.validate();
  const auto& lat = spec.grid.lattice_params();
  const double p_th = std::sqrt(spec.M / gas.beta);
  if (lat.spacing > 0.25 * p_th) {
    throw std::invalid_argument("lattice spacing does not resolve the thermal momentum sqrt(M/beta)");
  }
  if (lat.half_width * lat.spacing < 5.0 * p_th) {
    throw std::invalid_argument("lattice does not extend to 5 thermal momenta");
  }

  BrownianLimitReport rep;
  rep.mass_ratio = gas.m / spec.M;
  rep.out_of_regime = rep.mass_ratio > 0.1;
  const QLBELattice qlbe(spec, gas);
  rep.boundary_weight = qlbe.boundary_weight();
  rep.gamma_1d = lattice_friction_gamma(spec, gas);
  rep.gamma_3d = friction_gamma(gas, spec.grid.hbar()).gamma;

  ThermalContext ctx;
  ctx.beta = gas.beta;
  ctx.M = spec.M;
  ctx.l = thermal_wavelength(ctx, spec.grid.hbar());
  const BasisOperators ops = build_basis_ops(spec.grid, ctx.l);
  const Superoperator qbm = build_kinetic_qbm(ctx, rep.gamma_1d, ops);

  for (double p0 : {0.0, 0.5 * p_th}) {
    const Matrix rho = detail::gaussian_packet(spec.grid, p0, p_th);
    const Matrix ref = qbm.apply(rho);
    const double defect = (qlbe.apply(rho) - ref).norm() / ref.norm();
    rep.state_defects.push_back(defect);
    rep.relative_defect = std::max(rep.relative_defect, defect);
  }
  return rep;
}

/// Population rate matrix of the QLBE restricted to diagonal states:
/// W(j+k, j) = c_k^2 S, W(j, j) = -(kept outflow). Diagonal states stay
/// diagonal, so this is the exact classical reduction.
inline Eigen::MatrixXd qlbe_rate_matrix(const QLBELattice& qlbe) {
  const int d = qlbe.spec().grid.dimension();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
  for (const auto& ch : qlbe.channels()) {
    for (int j = 0; j < d; ++j) {
      if (j + ch.k < 0 || j + ch.k >= d) continue;
      w(j + ch.k, j) += ch.rate[j];
      w(j, j) -= ch.rate[j];
    }
  }
  return w;
}

/// Fitted decay rate of <p> under the QLBE lattice generator, started from the
/// Gibbs distribution displaced by one thermal momentum.
inline RelaxationFit qlbe_momentum_relaxation(const LatticeQLBESpec& spec, const GasModel& gas,
                                              double t_max, int samples = 60) {
  if (!(t_max > 0.0) || samples < 10) throw std::invalid_argument("need t_max > 0 and >= 10 samples");
  const QLBELattice qlbe(spec, gas);
  const Eigen::MatrixXd w = qlbe_rate_matrix(qlbe);
  const int d = spec.grid.dimension();
  const double p_th = std::sqrt(spec.M / gas.beta);
  RealVector pop(d), mom(d);
  for (int j = 0; j < d; ++j) {
    mom(j) = spec.grid.momentum_at(j);
    const double u = mom(j) - p_th;
    pop(j) = std::exp(-gas.beta * u * u / (2.0 * spec.M));
  }
  pop /= pop.sum();
  const Eigen::MatrixXd step = (w * (t_max / samples)).exp();
  std::vector<double> times, values;
  for (int k = 1; k <= samples; ++k) {
    pop = step * pop;
    times.push_back(t_max * k / samples);
    values.push_back(mom.dot(pop));
  }
  return fit_relaxation(times, values);
}

}  // namespace qfpe
