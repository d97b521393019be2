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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

/// Coefficient space of bilinear quantum Fokker-Planck generators
///
///   L = -(i/hbar)[H0,.] - (i/hbar)(mu-gamma)/2 [{x,p},.] - (i/hbar) gamma [x,{p,.}]
///       - D_pp/hbar^2 [x,[x,.]] - D_xx/hbar^2 [p,[p,.]]
///       + D_px/hbar^2 ([x,[p,.]] + [p,[x,.]])
///
/// together with the Lindblad-form parametrisation through jump operators
/// V_i = alpha_i p + beta_i x, each entering with weight 1/hbar.
namespace qfpe {

struct BilinearCoefficients {
  double D_xx = 0.0;
  double D_pp = 0.0;
  double D_px = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double hbar = 1.0;

  double norm_squared() const {
    return D_xx * D_xx + D_pp * D_pp + D_px * D_px + gamma * gamma + mu * mu;
  }
  /// Tolerance scale max(1, |c|^2).
  double scale() const { return std::max(1.0, norm_squared()); }
};

struct KrausPair {
  std::complex<double> alpha;
  std::complex<double> beta;
};

using KrausVectors = std::vector<KrausPair>;

struct ThermalContext {
  double beta = 1.0;
  double M = 1.0;
  double omega = 0.0;
  double l = 1.0;

  void validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
    if (!(omega >= 0.0)) throw std::invalid_argument("omega must be non-negative");
    if (!(l > 0.0)) throw std::invalid_argument("l must be positive");
  }
};

/// Signed outcome of a predicate. `margin` >= 0 means satisfied by that much.
struct Verdict {
  bool ok = true;
  std::string violated;
  double margin = 0.0;

  explicit operator bool() const { return ok; }
};

inline constexpr double kCoefficientTolerance = 1e-12;

/// [[D_xx, D_px + i hbar gamma/2], [D_px - i hbar gamma/2, D_pp]]
inline Eigen::Matrix2cd diffusion_matrix(const BilinearCoefficients& c) {
  const std::complex<double> off(c.D_px, 0.5 * c.hbar * c.gamma);
  Eigen::Matrix2cd d;
  d << c.D_xx, off, std::conj(off), c.D_pp;
  return d;
}

inline double diffusion_determinant(const BilinearCoefficients& c) {
  return c.D_xx * c.D_pp - c.D_px * c.D_px - 0.25 * c.gamma * c.gamma * c.hbar * c.hbar;
}

/// thermal wavelength sqrt(beta hbar^2 / 4M)
inline double thermal_wavelength(const ThermalContext& ctx, double hbar) {
  return std::sqrt(ctx.beta * hbar * hbar / (4.0 * ctx.M));
}

inline BilinearCoefficients coefficients_from_kraus(std::span<const KrausPair> kv, double mu,
                                                    double hbar) {
  if (kv.empty()) throw std::invalid_argument("at least one Kraus pair is required");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  double sa = 0.0, sb = 0.0;
  std::complex<double> cross = 0.0;
  for (const auto& v : kv) {
    if (!std::isfinite(std::abs(v.alpha)) || !std::isfinite(std::abs(v.beta))) {
      throw std::invalid_argument("Kraus vectors must be finite");
    }
    sa += std::norm(v.alpha);
    sb += std::norm(v.beta);
    cross += std::conj(v.alpha) * v.beta;
  }
  BilinearCoefficients c;
  c.hbar = hbar;
  c.mu = mu;
  c.D_xx = 0.5 * hbar * sa;
  c.D_pp = 0.5 * hbar * sb;
  c.D_px = -0.5 * hbar * cross.real();
  c.gamma = -cross.imag();
  return c;
}

inline Verdict is_completely_positive(const BilinearCoefficients& c) {
  const double tol = kCoefficientTolerance;
  const double scale = c.scale();
  if (c.D_xx < -tol) return {false, "D_xx >= 0", c.D_xx};
  if (c.D_pp < -tol) return {false, "D_pp >= 0", c.D_pp};
  const double det = diffusion_determinant(c);
  if (det < -tol * scale) return {false, "D_xx D_pp - D_px^2 >= gamma^2 hbar^2 / 4", det};
  return {true, "", std::min({c.D_xx, c.D_pp, det})};
}

/// Factorizes the diffusion matrix into at most two Kraus pairs; one pair
/// exactly when det D vanishes (rank-one Gram matrix).
inline KrausVectors kraus_from_coefficients(const BilinearCoefficients& c) {
  const Verdict cp = is_completely_positive(c);
  if (!cp) {
    throw std::invalid_argument("coefficients are not completely positive: violates " +
                                cp.violated);
  }
  // Gram matrix sum_i v_i v_i^dag with v_i = (alpha_i, beta_i).
  const double s = 2.0 / c.hbar;
  Eigen::Matrix2cd gram;
  const std::complex<double> off(-c.D_px, 0.5 * c.hbar * c.gamma);
  gram << c.D_xx, off, std::conj(off), c.D_pp;
  gram *= s;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(gram);
  const Eigen::Vector2d lam = es.eigenvalues();
  const double dnorm2 = diffusion_matrix(c).squaredNorm();
  const double det = diffusion_determinant(c);
  KrausVectors out;
  const bool rank_one = det <= 1e-14 * dnorm2 || lam(0) <= 1e-14 * std::abs(lam(1));
  for (int k = rank_one ? 1 : 0; k < 2; ++k) {
    const double w = std::sqrt(std::max(0.0, lam(k)));
    const Eigen::Vector2cd u = es.eigenvectors().col(k);
    out.push_back({w * u(0), w * u(1)});
  }
  return out;
}

inline Verdict is_shift_covariant(const BilinearCoefficients& c, double l) {
  const double tol = kCoefficientTolerance * c.scale();
  const double l4 = l * l * l * l;
  const double dx = c.D_xx - c.D_pp * l4 / (c.hbar * c.hbar);
  if (std::abs(dx) > tol) return {false, "D_xx = D_pp l^4 / hbar^2", -std::abs(dx)};
  if (std::abs(c.D_px) > tol) return {false, "D_px = 0", -std::abs(c.D_px)};
  if (std::abs(c.mu) > tol) return {false, "mu = 0", -std::abs(c.mu)};
  return {true, "", tol - std::max({std::abs(dx), std::abs(c.D_px), std::abs(c.mu)})};
}

inline Verdict is_translation_covariant(const BilinearCoefficients& c) {
  const double tol = kCoefficientTolerance * c.scale();
  const double d = std::abs(c.mu - c.gamma);
  if (d > tol) return {false, "mu = gamma", -d};
  return {true, "", tol - d};
}

/// Shift-covariant coefficients with e^{-beta H0} stationary, H0 = hbar omega (N + 1/2).
inline BilinearCoefficients qo_coefficients(const ThermalContext& ctx, double gamma,
                                            double hbar = 1.0) {
  ctx.validate();
  if (!(ctx.omega > 0.0)) throw std::invalid_argument("omega must be positive");
  const double x = 0.5 * ctx.beta * hbar * ctx.omega;
  const double coth = 1.0 / std::tanh(x);
  BilinearCoefficients c;
  c.hbar = hbar;
  c.gamma = gamma;
  c.mu = 0.0;
  c.D_px = 0.0;
  c.D_pp = hbar * hbar / (2.0 * ctx.l * ctx.l) * gamma * coth;
  c.D_xx = c.D_pp * std::pow(ctx.l, 4) / (hbar * hbar);
  return c;
}

/// Translation-covariant coefficients on the det D = 0 boundary with
/// e^{-beta p^2/2M} stationary.
inline BilinearCoefficients qbm_constrained(const ThermalContext& ctx, double gamma, double D_px,
                                            double hbar = 1.0) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(ctx.M > 0.0)) throw std::invalid_argument("M must be positive");
  if (!(ctx.beta > 0.0)) throw std::invalid_argument("beta must be positive");
  BilinearCoefficients c;
  c.hbar = hbar;
  c.gamma = gamma;
  c.mu = gamma;
  c.D_px = D_px;
  c.D_pp = gamma * 2.0 * ctx.M / ctx.beta;
  c.D_xx = gamma * ctx.beta * hbar * hbar / (8.0 * ctx.M) +
           ctx.beta * D_px * D_px / (2.0 * gamma * ctx.M);
  return c;
}

}  // namespace qfpe
