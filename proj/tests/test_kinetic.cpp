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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qfpe/analysis.hpp"
#include "qfpe/io.hpp"
#include "qfpe/kinetic.hpp"
#include "test_util.hpp"

namespace qfpe {
namespace {

constexpr double kPi = std::numbers::pi;

GasModel constant_gas(double m, double z, double beta, double t0) {
  GasModel gas;
  gas.m = m;
  gas.z = z;
  gas.beta = beta;
  gas.t_matrix = ConstantProfile{t0};
  return gas;
}

/// gamma for a constant t-matrix: (128 pi^3 / 3) z m^4 t0^2 / (beta^3 hbar).
double constant_gamma(const GasModel& gas, double t0, double hbar = 1.0) {
  return 128.0 * kPi * kPi * kPi / 3.0 * gas.z * std::pow(gas.m, 4) * t0 * t0 / (std::pow(gas.beta, 3) * hbar);
}

// ---------------------------------------------------------------------------
// structure factor

TEST(StructureFactor, PrefactorAtRecoilEnergy) {
  const auto gas = constant_gas(0.3, 0.7, 1.4, 1.0);
  const double q = 0.9;
  const double expect = 2.0 * kPi * gas.m * gas.m * gas.z / (gas.n * gas.beta * q) / std::pow(2.0 * kPi, 3);
  EXPECT_NEAR(s_mb(q, -q * q / (2.0 * gas.m), gas), expect, 1e-15 * expect);
}

TEST(StructureFactor, DetailedBalance) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.05, 3.0), e(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const auto gas = constant_gas(u(rng), u(rng), u(rng), 1.0);
    const double q = u(rng), en = e(rng), hbar = 0.5 + 0.5 * u(rng);
    const double lhs = s_mb(q, en, gas, hbar);
    const double rhs = std::exp(-gas.beta * en) * s_mb(q, -en, gas, hbar);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(lhs, rhs)) << "sample " << k;
  }
}

TEST(StructureFactor, PeaksAtRecoilAndRejectsZeroTransfer) {
  const auto gas = constant_gas(1.0, 1.0, 1.0, 1.0);
  const double q = 1.2, e0 = -q * q / 2.0;
  EXPECT_GT(s_mb(q, e0, gas), s_mb(q, e0 + 0.3, gas));
  EXPECT_GT(s_mb(q, e0 + 0.3, gas), s_mb(q, e0 + 0.6, gas));
  EXPECT_GT(s_mb(q, e0, gas), s_mb(q, e0 - 0.3, gas));
  EXPECT_THROW(s_mb(0.0, 0.1, gas), std::invalid_argument);
  EXPECT_THROW(s_mb(-1.0, 0.1, gas), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// friction coefficient

TEST(Friction, ConstantProfileClosedForm) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int k = 0; k < 10; ++k) {
    const double t0 = u(rng);
    const auto gas = constant_gas(u(rng), u(rng), u(rng), t0);
    const double expect = constant_gamma(gas, t0);
    EXPECT_NEAR(friction_gamma(gas).gamma, expect, 1e-8 * expect) << "set " << k;
  }
}

TEST(Friction, Scaling) {
  const auto gas = constant_gas(0.4, 0.9, 1.3, 0.8);
  const double g = friction_gamma(gas).gamma;
  auto doubled_t = gas;
  doubled_t.t_matrix = ConstantProfile{1.6};
  EXPECT_NEAR(friction_gamma(doubled_t).gamma, 4.0 * g, 1e-10 * g);
  auto doubled_beta = gas;
  doubled_beta.beta = 2.6;
  EXPECT_NEAR(friction_gamma(doubled_beta).gamma, g / 8.0, 1e-10 * g);
  EXPECT_NEAR(friction_gamma(gas, 2.0).gamma, g / 2.0, 1e-10 * g);
}

TEST(Friction, GaussianProfile) {
  auto gas = constant_gas(0.1, 0.5, 2.0, 1.0);
  const double a = gas.beta / (8.0 * gas.m);
  for (double sigma : {0.5, 3.0}) {
    gas.t_matrix = GaussianProfile{1.0, sigma};
    const double b = a + 1.0 / (sigma * sigma);
    const double expect = constant_gamma(gas, 1.0) * a * a / (b * b);
    EXPECT_NEAR(friction_gamma(gas).gamma, expect, 1e-8 * expect);
  }
  gas.t_matrix = GaussianProfile{1.0, 1e4};
  EXPECT_NEAR(friction_gamma(gas).gamma, constant_gamma(gas, 1.0), 1e-6 * constant_gamma(gas, 1.0));
}

TEST(Friction, TabulatedProfileMatchesConstant) {
  auto gas = constant_gas(0.2, 1.0, 1.0, 0.7);
  const double expect = friction_gamma(gas).gamma;
  TabulatedProfile tab;
  for (int k = 0; k <= 40; ++k) {
    tab.q.push_back(0.5 * k);
    tab.t.push_back(0.7);
  }
  gas.t_matrix = tab;
  // the table stops at q = 20, where the weight q^3 e^{-beta q^2/8m} is ~ 1e-105
  EXPECT_NEAR(friction_gamma(gas).gamma, expect, 1e-8 * expect);
}

TEST(Friction, ZeroCouplingAndValidation) {
  auto gas = constant_gas(0.2, 1.0, 1.0, 0.0);
  EXPECT_EQ(friction_gamma(gas).gamma, 0.0);
  gas.beta = -1.0;
  EXPECT_THROW(friction_gamma(gas), std::invalid_argument);
  gas.beta = 1.0;
  gas.t_matrix = TabulatedProfile{{0.0, 1.0, 0.5}, {1.0, 1.0, 1.0}};
  EXPECT_THROW(friction_gamma(gas), std::invalid_argument);
  EXPECT_THROW(friction_gamma(constant_gas(0.2, 1.0, 1.0, 1.0), 0.0), std::invalid_argument);
}

TEST(Friction, DerivedDiffusion) {
  ThermalContext ctx;
  ctx.beta = 2.0;
  ctx.M = 1.0;
  const auto [dxx, dpp] = derived_diffusion(0.5, ctx);
  EXPECT_DOUBLE_EQ(dxx, 0.125);
  EXPECT_DOUBLE_EQ(dpp, 0.5);
  ctx.beta = 1.0;
  ctx.M = 2.0;
  const auto [dxx2, dpp2] = derived_diffusion(0.5, ctx);
  EXPECT_DOUBLE_EQ(dxx2, 1.0 / 32.0);
  EXPECT_DOUBLE_EQ(dpp2, 2.0);
  EXPECT_THROW(derived_diffusion(-0.1, ctx), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// QLBE lattice

LatticeQLBESpec small_lattice() { return {BasisSpec::lattice(10, 0.2), 6, 1.0}; }

TEST(QlbeLattice, TracePreservingAndHermitian) {
  const auto gen = build_qlbe_lattice(small_lattice(), constant_gas(0.1, 0.8, 1.0, 0.5));
  const int d = gen.dimension();
  for (int s = 0; s < 5; ++s) {
    const Matrix out = gen.apply(testing::random_state(d, 40 + s));
    EXPECT_LT(std::abs(out.trace()), 1e-13);
    EXPECT_LT(hermiticity_defect(out), 1e-13);
  }
}

TEST(QlbeLattice, TranslationCovariantOverRandomShifts) {
  const auto spec = small_lattice();
  const auto gen = build_qlbe_lattice(spec, constant_gas(0.1, 0.8, 1.0, 0.5));
  const auto ops = build_basis_ops(spec.grid);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> b(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Matrix u = group_unitary(GroupElement::shift(b(rng)), ops);
    const Matrix rho = testing::random_state(ops.dimension(), 70 + k);
    EXPECT_LE(testing::max_abs(gen.apply(u * rho * u.adjoint()) - u * gen.apply(rho) * u.adjoint()), 1e-12);
  }
}

TEST(QlbeLattice, GibbsIsStationary) {
  const auto spec = small_lattice();
  const auto gas = constant_gas(0.1, 0.8, 1.3, 0.5);
  const QLBELattice q(spec, gas);
  const Matrix g = q.gibbs(gas.beta);
  EXPECT_NEAR(g.trace().real(), 1.0, 1e-14);
  EXPECT_LE(testing::max_abs(q.apply(g)), 1e-14);
}

TEST(QlbeLattice, RatesObeyDetailedBalance) {
  // rate(j -> j+k) e^{-beta E_j} = rate(j+k -> j) e^{-beta E_{j+k}} for three transfers
  const auto spec = small_lattice();
  const auto gas = constant_gas(0.1, 0.8, 1.3, 0.5);
  const QLBELattice q(spec, gas);
  auto energy = [&](int j) {
    const double p = spec.grid.momentum_at(j);
    return p * p / (2.0 * spec.M);
  };
  auto channel = [&](int k) -> const CollisionChannel& {
    for (const auto& ch : q.channels()) {
      if (ch.k == k) return ch;
    }
    throw std::logic_error("missing channel");
  };
  for (int k : {1, 3, 6}) {
    for (int j : {2, 8, 12}) {
      const double fwd = channel(k).rate[j] * std::exp(-gas.beta * energy(j));
      const double bwd = channel(-k).rate[j + k] * std::exp(-gas.beta * energy(j + k));
      EXPECT_NEAR(fwd, bwd, 1e-12 * fwd) << "k " << k << " j " << j;
    }
  }
}

TEST(QlbeLattice, ValidatesSpec) {
  const auto gas = constant_gas(0.1, 0.8, 1.0, 0.5);
  EXPECT_THROW(build_qlbe_lattice({BasisSpec::lattice(5, 0.2), 10, 1.0}, gas), std::invalid_argument);
  EXPECT_THROW(build_qlbe_lattice({BasisSpec::lattice(5, 0.2), 0, 1.0}, gas), std::invalid_argument);
  EXPECT_THROW(build_qlbe_lattice({BasisSpec::fock(5), 2, 1.0}, gas), std::invalid_argument);
  EXPECT_THROW(build_qlbe_lattice({BasisSpec::lattice(5, 0.2), 2, -1.0}, gas), std::invalid_argument);
}

TEST(QlbeLattice, ShortTimeMapIsCompletelyPositive) {
  const LatticeQLBESpec spec{BasisSpec::lattice(20, 0.2), 8, 1.0};
  const auto gen = build_qlbe_lattice(spec, constant_gas(0.1, 0.8, 1.0, 0.5));
  EXPECT_GE(min_hermitian_eigenvalue(choi_matrix(gen.exp(1e-3), gen.dimension())), -1e-10);
}

// ---------------------------------------------------------------------------
// Brownian limit

LatticeQLBESpec brownian_lattice() { return {BasisSpec::lattice(50, 0.1), 20, 1.0}; }

TEST(BrownianLimit, DefectShrinksWithMassRatio) {
  double previous = std::numeric_limits<double>::infinity();
  for (double m : {1.0, 0.1, 0.05, 0.02}) {
    const auto rep = brownian_limit_check(brownian_lattice(), constant_gas(m, 1.0, 1.0, 1.0));
    EXPECT_LT(rep.relative_defect, previous) << "m/M " << m;
    EXPECT_EQ(rep.out_of_regime, m > 0.1);
    previous = rep.relative_defect;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(BrownianLimit, RejectsUnresolvedLattices) {
  const auto gas = constant_gas(0.05, 1.0, 1.0, 1.0);
  EXPECT_THROW(brownian_limit_check({BasisSpec::lattice(50, 0.5), 4, 1.0}, gas), std::invalid_argument);
  EXPECT_THROW(brownian_limit_check({BasisSpec::lattice(20, 0.1), 4, 1.0}, gas), std::invalid_argument);
}

TEST(BrownianLimit, MomentumRelaxationMatchesFriction) {
  const auto spec = brownian_lattice();
  const auto gas = constant_gas(0.05, 1.0, 1.0, 1.0);
  const double g1 = lattice_friction_gamma(spec, gas);
  const auto fit = qlbe_momentum_relaxation(spec, gas, 2.5 / (2.0 * g1));
  EXPECT_NEAR(fit.rate / (2.0 * g1), 1.0, 0.2);
}

// ---------------------------------------------------------------------------
// tabulated profile files

TEST(ProfileCsv, LoadsWithHeaderAndRejectsGarbage) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto good = (dir / "qfpe_profile_good.csv").string();
  const auto bad = (dir / "qfpe_profile_bad.csv").string();
  std::ofstream(good) << "q,t\n0.0,1.0\n0.5,0.8\n1.0,0.25\n";
  std::ofstream(bad) << "q,t\n0.0,1.0\nhello,0.8\n";
  const auto tab = io::load_profile_csv(good, "gas.t_matrix.params.file");
  ASSERT_EQ(tab.q.size(), 3u);
  EXPECT_DOUBLE_EQ(tab.t[2], 0.25);
  EXPECT_DOUBLE_EQ(t_matrix(tab, 0.25), 0.9);
  EXPECT_EQ(t_matrix(tab, 2.0), 0.0);
  EXPECT_THROW(io::load_profile_csv(bad, "f"), io::ConfigError);
  EXPECT_THROW(io::load_profile_csv((dir / "qfpe_missing.csv").string(), "f"), io::ConfigError);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

}  // namespace
}  // namespace qfpe
