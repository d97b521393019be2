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
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "qfpe/coefficients.hpp"
#include "qfpe/fock.hpp"

namespace qfpe {

struct MomentState {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var_xx = 0.0;
  double var_pp = 0.0;
  double cov_xp = 0.0;

  /// var_xx var_pp - cov_xp^2 - hbar^2/4
  double uncertainty_margin(double hbar) const {
    return var_xx * var_pp - cov_xp * cov_xp - 0.25 * hbar * hbar;
  }
};

inline double expectation(const Matrix& rho, const Matrix& op) { return (rho * op).trace().real(); }

inline MomentState moments_of(const Matrix& rho, const BasisOperators& ops) {
  MomentState m;
  m.mean_x = expectation(rho, ops.x);
  m.mean_p = expectation(rho, ops.p);
  m.var_xx = expectation(rho, ops.x * ops.x) - m.mean_x * m.mean_x;
  m.var_pp = expectation(rho, ops.p * ops.p) - m.mean_p * m.mean_p;
  m.cov_xp = 0.5 * expectation(rho, ops.x * ops.p + ops.p * ops.x) - m.mean_x * m.mean_p;
  return m;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Matrix> states;
  std::vector<double> leakage;
  std::vector<double> min_eigenvalue;
  std::vector<double> trace_error;
  /// Largest |negative eigenvalue| seen (0 when every state is positive).
  double max_positivity_violation = 0.0;
  std::string method;
};

enum class Integrator { Auto, Exponential, RungeKutta };

struct PropagateOptions {
  Integrator method = Integrator::Auto;
  double rtol = 1e-10;
  double atol = 1e-13;
  /// Largest superoperator dimension d^2 handled by the dense exponential.
  int dense_limit = 900;
  double trace_tol = 1e-10;
  double positivity_tol = 1e-8;
};

namespace detail {

inline void propagate_exponential(const Superoperator& gen, const Vector& v0,
                                  const std::vector<double>& times, std::vector<Vector>& out) {
  // steps equal up to rounding share one propagator
  std::vector<std::pair<double, Matrix>> cache;
  Vector v = v0;
  double t_prev = 0.0;
  for (double t : times) {
    const double dt = t - t_prev;
    if (dt > 0.0) {
      auto it = std::find_if(cache.begin(), cache.end(),
                             [&](const auto& e) { return std::abs(e.first - dt) <= 1e-13 * dt; });
      if (it == cache.end()) {
        cache.emplace_back(dt, gen.exp(dt));
        it = cache.end() - 1;
      }
      v = it->second * v;
    }
    out.push_back(v);
    t_prev = t;
  }
}

inline void propagate_runge_kutta(const Superoperator& gen, const Vector& v0,
                                  const std::vector<double>& times, double atol, double rtol,
                                  std::vector<Vector>& out) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<Complex>;
  const SparseMatrix& l = gen.matrix();
  const auto n = static_cast<Eigen::Index>(v0.size());
  auto rhs = [&](const State& x, State& dxdt, double) {
    Eigen::Map<const Vector> xv(x.data(), n);
    Eigen::Map<Vector> dv(dxdt.data(), n);
    dv.noalias() = l * xv;
  };
  State x(v0.data(), v0.data() + n);
  std::vector<double> grid;
  grid.reserve(times.size() + 1);
  const bool prepend_zero = times.front() > 0.0;
  if (prepend_zero) grid.push_back(0.0);
  grid.insert(grid.end(), times.begin(), times.end());
  if (grid.size() == 1) {
    out.push_back(v0);
    return;
  }
  bool skip = prepend_zero;
  auto observer = [&](const State& s, double) {
    if (skip) {
      skip = false;
      return;
    }
    out.push_back(Eigen::Map<const Vector>(s.data(), n));
  };
  const double dt0 = std::max(1e-6, (grid[1] - grid[0]) * 1e-3);
  odeint::integrate_times(odeint::make_dense_output(atol, rtol, odeint::runge_kutta_dopri5<State>()), rhs, x,
                          grid.begin(), grid.end(), dt0, observer);
}

struct StateDiagnostics {
  double worst_trace_error = 0.0;
  double worst_min_eigenvalue = std::numeric_limits<double>::infinity();
  double worst_time = 0.0;
};

}  // namespace detail

/// rho(t) = e^{t L}[rho0] on an increasing time grid starting at t >= 0.
inline Trajectory propagate(const Superoperator& gen, const DensityMatrix& rho0,
                            const std::vector<double>& times, const PropagateOptions& opt = {}) {
  if (!(rho0.basis() == gen.basis())) throw std::invalid_argument("initial state basis mismatch");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw std::invalid_argument("times must be non-negative and strictly increasing");
    }
  }
  Trajectory traj;
  traj.times = times;
  if (times.empty()) return traj;

  const int d = gen.dimension();
  const Vector v0 = vec(rho0.mat());
  const long d2 = static_cast<long>(d) * d;
  bool use_exp = opt.method == Integrator::Exponential ||
                 (opt.method == Integrator::Auto && d2 <= opt.dense_limit);

  auto run = [&](bool exponential, double rtol) {
    std::vector<Vector> raw;
    raw.reserve(times.size());
    if (exponential) {
      detail::propagate_exponential(gen, v0, times, raw);
    } else {
      detail::propagate_runge_kutta(gen, v0, times, std::min(opt.atol, rtol), rtol, raw);
    }
    return raw;
  };

  auto diagnose = [&](const std::vector<Vector>& raw, detail::StateDiagnostics& diag) {
    bool ok = true;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      const Matrix m = unvec(raw[k], d);
      const double terr = std::abs(m.trace() - 1.0);
      const double emin = min_hermitian_eigenvalue(m);
      if (terr > diag.worst_trace_error) diag.worst_trace_error = terr;
      if (emin < diag.worst_min_eigenvalue) {
        diag.worst_min_eigenvalue = emin;
        diag.worst_time = times[k];
      }
      if (terr > opt.trace_tol || emin < -opt.positivity_tol) ok = false;
    }
    return ok;
  };

  std::vector<Vector> raw = run(use_exp, opt.rtol);
  detail::StateDiagnostics diag;
  traj.method = use_exp ? "exponential" : "runge-kutta";
  if (!diagnose(raw, diag)) {
    // refine once with a tighter embedded Runge-Kutta integration
    raw = run(false, opt.rtol * 1e-2);
    detail::StateDiagnostics refined;
    traj.method = "runge-kutta (refined)";
    if (!diagnose(raw, refined)) {
      std::ostringstream msg;
      msg << "propagation failed tolerance checks: worst |tr-1| = " << refined.worst_trace_error
          << ", worst min eigenvalue = " << refined.worst_min_eigenvalue << " at t = " << refined.worst_time;
      throw NumericError(msg.str());
    }
  }

  for (std::size_t k = 0; k < raw.size(); ++k) {
    Matrix m = unvec(raw[k], d);
    traj.trace_error.push_back(std::abs(m.trace() - 1.0));
    m = 0.5 * (m + m.adjoint());
    const double emin = min_hermitian_eigenvalue(m);
    traj.min_eigenvalue.push_back(emin);
    traj.max_positivity_violation = std::max(traj.max_positivity_violation, -emin);
    traj.leakage.push_back(leakage(m, gen.basis()));
    traj.states.push_back(std::move(m));
  }
  return traj;
}

struct FreeParticle {
  double M = 1.0;
};
struct Oscillator {
  double M = 1.0;
  double omega = 1.0;
};
using QuadraticHamiltonian = std::variant<FreeParticle, Oscillator>;

/// Closed first/second moment equations of the nested-commutator generator.
///
/// Raw moments y = (<x>, <p>, <x^2>, <p^2>, <{x,p}>) obey y' = A y + b with
///   <x>'     = <p>/M + (mu - gamma) <x>
///   <p>'     = -M w^2 <x> - (mu + gamma) <p>
///   <x^2>'   = <{x,p}>/M + 2 (mu - gamma) <x^2> + 2 D_xx
///   <p^2>'   = -M w^2 <{x,p}> - 2 (mu + gamma) <p^2> + 2 D_pp
///   <{x,p}>' = 2 <p^2>/M - 2 M w^2 <x^2> - 2 gamma <{x,p}> + 4 D_px
inline std::vector<MomentState> moment_flow(const BilinearCoefficients& c, const QuadraticHamiltonian& h0,
                                            const MomentState& m0, const std::vector<double>& times) {
  double mass = 1.0, omega = 0.0;
  if (const auto* f = std::get_if<FreeParticle>(&h0)) {
    mass = f->M;
  } else {
    const auto& o = std::get<Oscillator>(h0);
    mass = o.M;
    omega = o.omega;
  }
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  const double k = mass * omega * omega;
  Eigen::Matrix<double, 6, 6> aug = Eigen::Matrix<double, 6, 6>::Zero();
  aug(0, 0) = c.mu - c.gamma;
  aug(0, 1) = 1.0 / mass;
  aug(1, 0) = -k;
  aug(1, 1) = -(c.mu + c.gamma);
  aug(2, 2) = 2.0 * (c.mu - c.gamma);
  aug(2, 4) = 1.0 / mass;
  aug(2, 5) = 2.0 * c.D_xx;
  aug(3, 3) = -2.0 * (c.mu + c.gamma);
  aug(3, 4) = -k;
  aug(3, 5) = 2.0 * c.D_pp;
  aug(4, 2) = -2.0 * k;
  aug(4, 3) = 2.0 / mass;
  aug(4, 4) = -2.0 * c.gamma;
  aug(4, 5) = 4.0 * c.D_px;

  Eigen::Matrix<double, 6, 1> y0;
  y0 << m0.mean_x, m0.mean_p, m0.var_xx + m0.mean_x * m0.mean_x, m0.var_pp + m0.mean_p * m0.mean_p,
      2.0 * (m0.cov_xp + m0.mean_x * m0.mean_p), 1.0;

  std::vector<MomentState> out;
  out.reserve(times.size());
  for (double t : times) {
    const Eigen::Matrix<double, 6, 6> prop = (t * aug).exp();
    const Eigen::Matrix<double, 6, 1> y = prop * y0;
    MomentState m;
    m.mean_x = y(0);
    m.mean_p = y(1);
    m.var_xx = y(2) - y(0) * y(0);
    m.var_pp = y(3) - y(1) * y(1);
    m.cov_xp = 0.5 * y(4) - y(0) * y(1);
    out.push_back(m);
  }
  return out;
}

struct RelaxationFit {
  double rate = 0.0;
  double asymptote = 0.0;
  double amplitude = 0.0;
  /// Root-mean-square fit residual.
  double residual = 0.0;
  /// Signal is constant: no rate can be extracted.
  bool degenerate = false;
  /// Residual above 1e-3 of the signal range, or fewer than two e-foldings covered.
  bool flagged = false;
  std::string note;
};

/// Least-squares fit of A e^{-r t} + B; the linear parameters are projected
/// out and r is found by a log-spaced scan followed by Brent refinement.
inline RelaxationFit fit_relaxation(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) throw std::invalid_argument("times and values differ in length");
  if (times.size() < 10) throw std::invalid_argument("relaxation fit needs at least 10 samples");
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::Map<const RealVector> t(times.data(), n);
  Eigen::Map<const RealVector> y(values.data(), n);

  RelaxationFit fit;
  const double range = y.maxCoeff() - y.minCoeff();
  const double span = t.maxCoeff() - t.minCoeff();
  if (range <= 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff()) || !(span > 0.0)) {
    fit.degenerate = true;
    fit.flagged = true;
    fit.asymptote = y.mean();
    fit.note = "constant signal";
    return fit;
  }

  auto solve_linear = [&](double r, double& amp, double& asym) {
    Eigen::MatrixXd design(n, 2);
    design.col(0) = (-r * (t.array() - t(0))).exp().matrix();
    design.col(1).setOnes();
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
    amp = coef(0);
    asym = coef(1);
    return (design * coef - y).squaredNorm();
  };
  auto objective = [&](double log_r) {
    double amp = 0.0, asym = 0.0;
    return solve_linear(std::exp(log_r), amp, asym);
  };

  const double lo = std::log(1e-4 / span);
  const double hi = std::log(1e4 / span);
  constexpr int kScan = 400;
  double best_u = lo, best_f = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kScan; ++k) {
    const double u = lo + (hi - lo) * k / kScan;
    const double f = objective(u);
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
  }
  const double step = (hi - lo) / kScan;
  const auto [u_opt, f_opt] = boost::math::tools::brent_find_minima(
      objective, std::max(lo, best_u - step), std::min(hi, best_u + step), 60);

  fit.rate = std::exp(u_opt);
  double amp = 0.0, asym = 0.0;
  const double ss = solve_linear(fit.rate, amp, asym);
  fit.amplitude = amp * std::exp(fit.rate * t(0));
  fit.asymptote = asym;
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  (void)f_opt;
  if (fit.residual > 1e-3 * range) {
    fit.flagged = true;
    fit.note = "non-exponential residual";
  } else if (fit.rate * span < 2.0) {
    fit.flagged = true;
    fit.note = "fewer than two e-foldings sampled";
  }
  return fit;
}

inline RelaxationFit fit_relaxation(const Trajectory& traj, const Matrix& observable) {
  std::vector<double> values;
  values.reserve(traj.states.size());
  for (const auto& s : traj.states) values.push_back(expectation(s, observable));
  return fit_relaxation(traj.times, values);
}

}  // namespace qfpe
