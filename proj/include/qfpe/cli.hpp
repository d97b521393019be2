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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "qfpe/analysis.hpp"
#include "qfpe/dynamics.hpp"
#include "qfpe/generator_spec.hpp"
#include "qfpe/io.hpp"
#include "qfpe/kinetic.hpp"

namespace qfpe::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;
/// Largest dimension for which dense kernel analysis is attempted.
inline constexpr int kDenseAnalysisLimit = 40;

using io::ConfigError;
using io::Json;

struct CliOptions {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> fock_dim;
  std::optional<std::pair<int, double>> lattice;
  std::optional<double> tol;
};

struct CommandOutput {
  int exit_code = kExitOk;
  Json report;
  /// Trajectory CSV (evolve only).
  std::string csv;
};

/// Config after flag overrides, plus the values every command needs.
struct RunContext {
  Json config;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  int samples = 20;
  std::string hash;
};

inline std::pair<int, double> parse_lattice_flag(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("--lattice", "expected J,DELTA");
  try {
    std::size_t used = 0;
    const int j = std::stoi(s.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument("J");
    const std::string rest = s.substr(comma + 1);
    const double delta = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("DELTA");
    return {j, delta};
  } catch (const std::exception&) {
    throw ConfigError("--lattice", "expected J,DELTA with integer J and real DELTA");
  }
}

inline RunContext make_context(const CliOptions& opt) {
  RunContext rc;
  rc.config = opt.config_path ? io::read_json_file(*opt.config_path) : Json::object();
  if (!rc.config.is_object()) throw ConfigError("config", "expected a JSON object");
  if (opt.fock_dim) rc.config["basis"] = Json{{"kind", "fock"}, {"dim", *opt.fock_dim}};
  if (opt.lattice) rc.config["basis"] = Json{{"kind", "lattice"}, {"J", opt.lattice->first}, {"delta", opt.lattice->second}};
  if (opt.seed) rc.config["seed"] = *opt.seed;
  if (opt.tol) rc.config["tol"] = *opt.tol;
  if (rc.config.contains("seed")) {
    const Json& s = rc.config.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    rc.seed = s.get<std::uint64_t>();
  }
  rc.tol = io::get_number(rc.config, "tol", "config", 1e-10);
  if (!(rc.tol > 0.0)) throw ConfigError("tol", "must be positive");
  rc.samples = io::get_int(rc.config, "samples", "config", 20);
  if (rc.samples < 1) throw ConfigError("samples", "must be >= 1");
  rc.hash = io::config_hash(rc.config);
  return rc;
}

inline Json stamp(const RunContext& rc, const std::string& command) {
  return Json{{"tool", "qfpe"}, {"version", kVersion}, {"seed", rc.seed}, {"config_hash", rc.hash}, {"command", command}};
}

inline GeneratorSpec load_generator(const RunContext& rc) {
  return io::generator_from_json(rc.config);
}

inline GeneratorSpec load_generator_with_basis(const RunContext& rc) {
  GeneratorSpec spec = load_generator(rc);
  if (!spec.basis) throw ConfigError("basis", "a basis is required (config basis block, --fock-dim or --lattice)");
  return spec;
}

inline Superoperator build_or_config_error(const GeneratorSpec& spec) {
  return io::guarded("generator", [&] { return build_generator(spec); });
}

/// Group draws shared by check and covariance so both see the same elements.
inline std::vector<GroupElement> draw_group_elements(GroupElement::Kind kind, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ (kind == GroupElement::Kind::Phase ? 0x9e3779b97f4a7c15ULL : 0xc2b2ae3d27d4eb4fULL));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  std::vector<GroupElement> out;
  for (int k = 0; k < draws; ++k) {
    out.push_back(kind == GroupElement::Kind::Phase ? GroupElement::phase(phase(rng)) : GroupElement::shift(shift(rng)));
  }
  return out;
}

struct DefectSummary {
  double max_defect = 0.0;
  bool approximate = false;
  std::vector<double> parameters;
};

inline DefectSummary covariance_defect(const Superoperator& gen, const BasisOperators& ops, GroupElement::Kind kind,
                                       int draws, int samples, std::uint64_t seed) {
  DefectSummary s;
  int k = 0;
  for (const auto& g : draw_group_elements(kind, draws, seed)) {
    const auto rep = check_covariance(gen, g, ops, samples, seed + static_cast<std::uint64_t>(k++));
    s.max_defect = std::max(s.max_defect, rep.max_equivariance_defect);
    s.approximate = rep.approximate;
    s.parameters.push_back(g.parameter);
  }
  return s;
}

inline Json to_json(const DefectSummary& s) {
  return Json{{"max_defect", s.max_defect}, {"approximate", s.approximate}, {"parameters", s.parameters}};
}

inline const char* kind_name(GroupElement::Kind k) {
  return k == GroupElement::Kind::Phase ? "shift_covariance" : "translation_covariance";
}

/// Exact numerical symmetry tests: phase on Fock bases, translation on lattices.
inline bool exact_on(GroupElement::Kind kind, const BasisSpec& basis) {
  return kind == GroupElement::Kind::Phase ? basis.is_fock() : basis.is_lattice();
}

inline Json stationary_json(const StationaryReport& rep, const BasisSpec& basis) {
  Json states = Json::array();
  for (const auto& s : rep.states) {
    states.push_back({{"trace", s.trace().real()},
                      {"min_eigenvalue", min_hermitian_eigenvalue(s)},
                      {"purity", (s * s).trace().real()},
                      {"leakage", leakage(s, basis)}});
  }
  return Json{{"kernel_dimension", rep.kernel_dimension},
              {"near_null_singular_values", rep.near_null_singular_values},
              {"states", states}};
}

// ---------------------------------------------------------------------------

inline CommandOutput cmd_check(const RunContext& rc) {
  CommandOutput out;
  out.report = stamp(rc, "check");
  const GeneratorSpec spec = load_generator(rc);
  out.report["family"] = family_name(spec.family);
  Json violations = Json::array();
  const auto expected = spec.expected_symmetry();

  const auto c = io::guarded("generator", [&] { return spec.bilinear(); });
  if (c) {
    const Verdict cp = is_completely_positive(*c);
    const Verdict shift = is_shift_covariant(*c, spec.ctx.l);
    const Verdict trans = is_translation_covariant(*c);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(diffusion_matrix(*c), Eigen::EigenvaluesOnly);
    out.report["coefficients"] = io::to_json(*c);
    out.report["cp"] = io::to_json(cp);
    out.report["det_D"] = diffusion_determinant(*c);
    out.report["shift_covariant"] = io::to_json(shift);
    out.report["translation_covariant"] = io::to_json(trans);
    out.report["diffusion_eigenvalues"] = {es.eigenvalues()(0), es.eigenvalues()(1)};
    if (!cp) violations.push_back("cp");
    if (expected == GroupElement::Kind::Phase && !shift) violations.push_back("shift_covariant");
    if (expected == GroupElement::Kind::Shift && !trans) violations.push_back("translation_covariant");
  } else {
    out.report["coefficients"] = nullptr;
  }

  if (spec.basis) {
    const Superoperator gen = build_or_config_error(spec);
    const BasisOperators ops = spec_operators(spec);
    out.report["basis"] = io::to_json(*spec.basis);
    out.report["warnings"] = gen.warnings;
    out.report["boundary_weight"] = gen.boundary_weight;
    Json numeric;
    for (auto kind : {GroupElement::Kind::Phase, GroupElement::Kind::Shift}) {
      if (kind == GroupElement::Kind::Phase && !spec.basis->is_fock()) continue;
      const DefectSummary d = covariance_defect(gen, ops, kind, 3, rc.samples, rc.seed);
      numeric[kind_name(kind)] = to_json(d);
      if (expected == kind && exact_on(kind, *spec.basis) && d.max_defect > rc.tol) {
        violations.push_back(std::string("numerical_") + kind_name(kind));
      }
    }
    if (spec.basis->dimension() <= kDenseAnalysisLimit) {
      numeric["stationary"] = stationary_json(stationary_states(gen), *spec.basis);
    } else {
      numeric["stationary"] = "skipped: dimension above dense analysis limit";
    }
    out.report["numerical"] = numeric;
  }
  out.report["violations"] = violations;
  out.exit_code = violations.empty() ? kExitOk : kExitViolation;
  return out;
}

namespace detail {

inline Matrix coherent_state(const BasisOperators& ops, Complex alpha) {
  // D(alpha) = exp(i K) with K = -i (alpha a^dag - alpha* a) Hermitian
  const Matrix k = -kI * (alpha * ops.a_dag - std::conj(alpha) * ops.a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (k + k.adjoint()));
  const Vector phases = (kI * es.eigenvalues().cast<Complex>()).array().exp();
  const Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  Vector vac = Vector::Zero(ops.dimension());
  if (ops.basis.is_fock()) {
    vac(0) = 1.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> n(ops.n_op);
    vac = n.eigenvectors().col(0);
  }
  Vector psi = u * vac;
  psi.normalize();
  return psi * psi.adjoint();
}

inline Matrix initial_state(const Json& j, const GeneratorSpec& spec, const BasisOperators& ops) {
  const std::string path = "evolve.initial";
  const std::string kind = io::get_string(j, "kind", path, "ground");
  const int d = ops.dimension();
  if (kind == "ground") return coherent_state(ops, 0.0);
  if (kind == "fock") {
    if (!ops.basis.is_fock()) throw ConfigError(path + ".kind", "fock initial state needs a Fock basis");
    const int n = io::get_int(j, "n", path, 0);
    if (n < 0 || n >= d) throw ConfigError(path + ".n", "outside the basis");
    return projector(d, n);
  }
  if (kind == "coherent") {
    return coherent_state(ops, Complex(io::get_number(j, "re", path, 0.0), io::get_number(j, "im", path, 0.0)));
  }
  if (kind == "gaussian") {
    // coherent state centred at (x0, p0) for the basis length l
    const double x0 = io::get_number(j, "x0", path, 0.0);
    const double p0 = io::get_number(j, "p0", path, 0.0);
    const double l = ops.length;
    return coherent_state(ops, Complex(x0 / l, p0 * l / ops.hbar()) / std::sqrt(2.0));
  }
  if (kind == "thermal") {
    const double beta = io::get_number(j, "beta", path, spec.ctx.beta);
    return gibbs_state(family_hamiltonian(spec, ops), beta);
  }
  throw ConfigError(path + ".kind", "expected ground, fock, coherent, gaussian or thermal");
}

inline Matrix observable(const std::string& name, const GeneratorSpec& spec, const BasisOperators& ops) {
  if (name == "N") return ops.n_op;
  if (name == "x") return ops.x;
  if (name == "p") return ops.p;
  if (name == "x2") return ops.x * ops.x;
  if (name == "p2") return ops.p * ops.p;
  if (name == "H") return family_hamiltonian(spec, ops);
  throw ConfigError("evolve.observables", "unknown observable '" + name + "' (expected N, x, p, x2, p2, H)");
}

}  // namespace detail

inline CommandOutput cmd_evolve(const RunContext& rc) {
  CommandOutput out;
  out.report = stamp(rc, "evolve");
  const GeneratorSpec spec = load_generator_with_basis(rc);
  const Json ev = rc.config.value("evolve", Json::object());
  const std::string path = "evolve";

  std::vector<double> times;
  if (ev.contains("times")) {
    try {
      times = ev.at("times").get<std::vector<double>>();
    } catch (const Json::exception&) {
      throw ConfigError(path + ".times", "expected an array of numbers");
    }
  } else {
    const double t_max = io::get_number(ev, "t_max", path, 0.0);
    const int steps = io::get_int(ev, "steps", path, 0);
    if (t_max < 0.0 || steps < 0) throw ConfigError(path, "t_max and steps must be non-negative");
    if (t_max > 0.0 && steps > 0) {
      for (int k = 0; k <= steps; ++k) times.push_back(t_max * k / steps);
    }
  }
  PropagateOptions popt;
  const std::string method = io::get_string(ev, "method", path, "auto");
  if (method == "exponential") popt.method = Integrator::Exponential;
  else if (method == "runge_kutta") popt.method = Integrator::RungeKutta;
  else if (method != "auto") throw ConfigError(path + ".method", "expected auto, exponential or runge_kutta");

  const BasisOperators ops = spec_operators(spec);
  std::vector<std::string> names;
  if (ev.contains("observables")) {
    try {
      names = ev.at("observables").get<std::vector<std::string>>();
    } catch (const Json::exception&) {
      throw ConfigError(path + ".observables", "expected an array of strings");
    }
  } else if (spec.basis->is_fock()) {
    names = {"N", "x", "p", "x2", "p2"};
  } else {
    names = {"p", "p2", "x"};
  }
  std::vector<Matrix> obs;
  for (const auto& n : names) obs.push_back(detail::observable(n, spec, ops));
  const std::string primary = io::get_string(ev, "fit", path, spec.basis->is_fock() ? "N" : "p");
  const Matrix primary_op = detail::observable(primary, spec, ops);

  const Superoperator gen = build_or_config_error(spec);
  const Matrix rho0 = detail::initial_state(ev.value("initial", Json::object()), spec, ops);
  const DensityMatrix state = io::guarded(path + ".initial", [&] {
    return DensityMatrix::from({*spec.basis, 0.5 * (rho0 + rho0.adjoint())}, 1e-12, 1e-10, 1e-10);
  });

  std::vector<std::string> header{"time"};
  header.insert(header.end(), names.begin(), names.end());
  header.push_back("leakage");
  header.push_back("min_eigenvalue");
  io::CsvWriter csv(header);

  Json summary;
  summary["samples"] = times.size();
  summary["warnings"] = gen.warnings;
  try {
    const Trajectory traj = propagate(gen, state, times, popt);
    summary["method"] = traj.method;
    double max_leak = 0.0;
    std::vector<double> primary_values;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      std::vector<double> row{traj.times[k]};
      for (const auto& o : obs) row.push_back(expectation(traj.states[k], o));
      row.push_back(traj.leakage[k]);
      row.push_back(traj.min_eigenvalue[k]);
      csv.row(row);
      max_leak = std::max(max_leak, traj.leakage[k]);
      primary_values.push_back(expectation(traj.states[k], primary_op));
    }
    summary["max_leakage"] = max_leak;
    summary["max_positivity_violation"] = traj.max_positivity_violation;
    if (primary_values.size() >= 10) {
      const RelaxationFit fit = fit_relaxation(traj.times, primary_values);
      summary["fit_observable"] = primary;
      summary["fit"] = io::to_json(fit);
      summary["rate"] = fit.rate;
    } else {
      summary["rate"] = nullptr;
    }
    if (!traj.states.empty()) {
      const Matrix& last = traj.states.back();
      Json fin;
      for (std::size_t k = 0; k < names.size(); ++k) fin[names[k]] = expectation(last, obs[k]);
      fin["moments"] = io::to_json(moments_of(last, ops));
      fin["kinetic_energy"] = expectation(last, ops.p * ops.p) / (2.0 * spec.ctx.M);
      summary["final"] = fin;
    } else {
      summary["final"] = nullptr;
    }
  } catch (const NumericError& e) {
    summary["error"] = e.what();
    out.exit_code = kExitViolation;
  }
  out.report["summary"] = summary;
  out.csv = csv.str();
  return out;
}

inline CommandOutput cmd_steady(const RunContext& rc) {
  CommandOutput out;
  out.report = stamp(rc, "steady");
  const GeneratorSpec spec = load_generator_with_basis(rc);
  if (spec.basis->dimension() > kDenseAnalysisLimit) {
    throw ConfigError("basis", "dimension above the dense analysis limit of " + std::to_string(kDenseAnalysisLimit));
  }
  const Superoperator gen = build_or_config_error(spec);
  const BasisOperators ops = spec_operators(spec);
  const double threshold = io::get_number(rc.config, "kernel_threshold", "config", 1e-8);
  const StationaryReport rep = stationary_states(gen, threshold);
  Json st = stationary_json(rep, *spec.basis);
  const Matrix h = family_hamiltonian(spec, ops);
  st["gibbs_residual"] = verify_gibbs(gen, {*spec.basis, h}, spec.ctx.beta);
  if (!rep.states.empty()) st["gibbs_distance"] = trace_norm(rep.states.front() - gibbs_state(h, spec.ctx.beta));
  out.report["stationary"] = st;
  out.exit_code = rep.kernel_dimension > 0 ? kExitOk : kExitViolation;
  return out;
}

inline CommandOutput cmd_covariance(const RunContext& rc) {
  CommandOutput out;
  out.report = stamp(rc, "covariance");
  const GeneratorSpec spec = load_generator_with_basis(rc);
  const Superoperator gen = build_or_config_error(spec);
  const BasisOperators ops = spec_operators(spec);
  const int draws = io::get_int(rc.config, "draws", "config", 20);
  if (draws < 1) throw ConfigError("draws", "must be >= 1");
  const auto expected = spec.expected_symmetry();
  Json violations = Json::array();
  for (auto kind : {GroupElement::Kind::Phase, GroupElement::Kind::Shift}) {
    if (kind == GroupElement::Kind::Phase && !spec.basis->is_fock()) continue;
    const DefectSummary d = covariance_defect(gen, ops, kind, draws, 1, rc.seed);
    out.report[kind_name(kind)] = to_json(d);
    if (expected == kind && exact_on(kind, *spec.basis) && d.max_defect > rc.tol) violations.push_back(kind_name(kind));
  }
  out.report["expected"] = expected ? Json(kind_name(*expected)) : Json(nullptr);
  out.report["violations"] = violations;
  out.exit_code = violations.empty() ? kExitOk : kExitViolation;
  return out;
}

inline GasModel gas_from_config(const Json& config) {
  if (config.contains("gas")) return io::gas_from_json(config.at("gas"), "gas");
  if (config.contains("generator") && config.at("generator").contains("gas")) {
    return io::gas_from_json(config.at("generator").at("gas"), "generator.gas");
  }
  throw ConfigError("gas", "missing gas block");
}

inline CommandOutput cmd_gamma(const RunContext& rc) {
  CommandOutput out;
  out.report = stamp(rc, "gamma");
  const GasModel gas = gas_from_config(rc.config);
  const double hbar = io::get_number(rc.config, "hbar", "config", 1.0);
  ThermalContext ctx;
  ctx.beta = gas.beta;
  ctx.M = io::get_number(rc.config, "M", "config", 1.0);
  if (rc.config.contains("generator")) {
    ctx.M = io::get_number(rc.config.at("generator").value("context", Json::object()), "M", "generator.context", ctx.M);
  }
  if (!(ctx.M > 0.0) || !(hbar > 0.0)) throw ConfigError("M", "M and hbar must be positive");
  out.report["gas"] = io::to_json(gas);
  try {
    const FrictionResult fr = friction_gamma(gas, hbar);
    const auto [dxx, dpp] = derived_diffusion(fr.gamma, ctx, hbar);
    out.report["gamma"] = fr.gamma;
    out.report["quadrature_error"] = fr.error;
    out.report["D_xx"] = dxx;
    out.report["D_pp"] = dpp;
    out.report["M"] = ctx.M;
  } catch (const NumericError& e) {
    out.report["error"] = e.what();
    out.exit_code = kExitViolation;
  }
  return out;
}

inline CommandOutput cmd_qlbe(const RunContext& rc) {
  CommandOutput out;
  out.report = stamp(rc, "qlbe");
  const GeneratorSpec spec = load_generator_with_basis(rc);
  if (spec.family != Family::QLBE) throw ConfigError("generator.family", "qlbe command needs family qlbe");
  const LatticeQLBESpec lspec{*spec.basis, spec.qlbe_K, spec.ctx.M};
  const QLBELattice qlbe = io::guarded("generator", [&] { return QLBELattice(lspec, *spec.gas); });
  const int d = spec.basis->dimension();

  std::mt19937_64 rng(rc.seed);
  double trace_defect = 0.0, shift_defect = 0.0;
  const BasisOperators ops = spec_operators(spec);
  for (const auto& g : draw_group_elements(GroupElement::Kind::Shift, rc.samples, rc.seed)) {
    const Matrix rho = random_hermitian(d, rng);
    const Matrix u = group_unitary(g, ops);
    const Matrix lr = qlbe.apply(rho);
    trace_defect = std::max(trace_defect, std::abs(lr.trace()) / std::max(1.0, lr.cwiseAbs().maxCoeff()));
    shift_defect = std::max(shift_defect, (qlbe.apply(u * rho * u.adjoint()) - u * lr * u.adjoint()).cwiseAbs().maxCoeff());
  }
  out.report["basis"] = io::to_json(*spec.basis);
  out.report["gas"] = io::to_json(*spec.gas);
  out.report["K"] = spec.qlbe_K;
  out.report["M"] = spec.ctx.M;
  out.report["boundary_weight"] = qlbe.boundary_weight();
  out.report["trace_defect"] = trace_defect;
  out.report["translation_defect"] = shift_defect;
  out.report["gibbs_residual"] = trace_norm(qlbe.apply(qlbe.gibbs(spec.gas->beta)));
  const double g1 = lattice_friction_gamma(lspec, *spec.gas);
  out.report["gamma_1d"] = g1;
  try {
    const FrictionResult fr = friction_gamma(*spec.gas, spec.hbar());
    out.report["gamma_3d"] = fr.gamma;
  } catch (const NumericError& e) {
    out.report["gamma_3d"] = nullptr;
  }
  try {
    const BrownianLimitReport br = brownian_limit_check(lspec, *spec.gas);
    out.report["brownian"] = {{"mass_ratio", br.mass_ratio},
                              {"relative_defect", br.relative_defect},
                              {"state_defects", br.state_defects},
                              {"out_of_regime", br.out_of_regime}};
  } catch (const std::invalid_argument& e) {
    out.report["brownian"] = {{"skipped", e.what()}};
  }
  if (g1 > 0.0) {
    const RelaxationFit fit = qlbe_momentum_relaxation(lspec, *spec.gas, 3.0 / (2.0 * g1));
    out.report["momentum_relaxation"] = io::to_json(fit);
    out.report["momentum_relaxation"]["ratio_to_2gamma_1d"] = fit.rate / (2.0 * g1);
  }
  Json violations = Json::array();
  if (trace_defect > 1e-12) violations.push_back("trace_preservation");
  if (shift_defect > std::min(rc.tol, 1e-12)) violations.push_back("translation_covariance");
  out.report["violations"] = violations;
  out.exit_code = violations.empty() ? kExitOk : kExitViolation;
  return out;
}

inline CommandOutput run_command(const CliOptions& opt) {
  const RunContext rc = make_context(opt);
  if (opt.command == "check") return cmd_check(rc);
  if (opt.command == "evolve") return cmd_evolve(rc);
  if (opt.command == "steady") return cmd_steady(rc);
  if (opt.command == "covariance") return cmd_covariance(rc);
  if (opt.command == "gamma") return cmd_gamma(rc);
  if (opt.command == "qlbe") return cmd_qlbe(rc);
  throw ConfigError("command", "unknown command '" + opt.command + "'");
}

inline std::filesystem::path csv_path_for(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension(".csv");
  return p;
}

/// Full command-line entry point; returns the process exit code.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qfpe: quantum Fokker-Planck generator toolkit"};
  app.set_version_flag("--version", kVersion);
  CliOptions opt;
  std::string config, out_path, lattice;
  std::uint64_t seed = 0;
  int fock_dim = 0;
  double tol = 0.0;
  app.add_option("command", opt.command, "check | evolve | steady | covariance | gamma | qlbe")
      ->required()
      ->check(CLI::IsMember({"check", "evolve", "steady", "covariance", "gamma", "qlbe"}));
  auto* o_config = app.add_option("--config", config, "JSON configuration file");
  auto* o_out = app.add_option("--out", out_path, "report path (evolve also writes the CSV next to it)");
  auto* o_seed = app.add_option("--seed", seed, "seed for every randomized sample");
  auto* o_fock = app.add_option("--fock-dim", fock_dim, "override the basis with a Fock basis of this dimension");
  auto* o_lat = app.add_option("--lattice", lattice, "override the basis with a momentum lattice J,DELTA");
  auto* o_tol = app.add_option("--tol", tol, "numerical symmetry tolerance");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*o_config) opt.config_path = config;
    if (*o_out) opt.out_path = out_path;
    if (*o_seed) opt.seed = seed;
    if (*o_fock) opt.fock_dim = fock_dim;
    if (*o_lat) opt.lattice = parse_lattice_flag(lattice);
    if (*o_tol) opt.tol = tol;
    const CommandOutput res = run_command(opt);
    const std::string text = res.report.dump(2) + "\n";
    if (opt.out_path) {
      std::ofstream f(*opt.out_path, std::ios::binary);
      if (!f) throw ConfigError("--out", "cannot write '" + *opt.out_path + "'");
      f << text;
      if (opt.command == "evolve") {
        std::ofstream c(csv_path_for(*opt.out_path), std::ios::binary);
        if (!c) throw ConfigError("--out", "cannot write the trajectory CSV");
        c << res.csv;
      }
    } else {
      out << text;
    }
    if (res.exit_code != kExitOk) err << "qfpe " << opt.command << ": property violation or numeric failure\n";
    return res.exit_code;
  } catch (const ConfigError& e) {
    err << "qfpe: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& e) {
    err << "qfpe: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "qfpe: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "qfpe: numeric failure: " << e.what() << "\n";
    return kExitViolation;
  }
}

}  // namespace qfpe::cli
