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

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qfpe/generator_spec.hpp"

/// JSON configuration blocks, CSV output and report stamping.
namespace qfpe::io {

using Json = nlohmann::json;

/// Invalid or missing configuration; `field` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Shortest form that still carries 17 significant digits, '.' decimal,
/// independent of the locale.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical (key-sorted, compact) dump.
inline std::string config_hash(const Json& config) {
  char buf[17];
  const auto h = fnv1a64(config.dump());
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::invalid_argument("CSV row width mismatch");
    for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << format_double(values[k]);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::size_t columns_;
  std::ostringstream out_;
};

// ---------------------------------------------------------------------------
// field readers

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "." + key, "missing required field");
  return *it;
}

inline double get_number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

inline double get_number(const Json& obj, const std::string& key, const std::string& path, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get_number(obj, key, path);
}

inline int get_int(const Json& obj, const std::string& key, const std::string& path, int fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
  return v.get<int>();
}

inline std::string get_string(const Json& obj, const std::string& key, const std::string& path,
                              const std::string& fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

template <typename F>
auto guarded(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

// ---------------------------------------------------------------------------
// blocks

inline BilinearCoefficients coefficients_from_json(const Json& j, const std::string& path) {
  BilinearCoefficients c;
  c.D_xx = get_number(j, "D_xx", path, 0.0);
  c.D_pp = get_number(j, "D_pp", path, 0.0);
  c.D_px = get_number(j, "D_px", path, 0.0);
  c.gamma = get_number(j, "gamma", path, 0.0);
  c.mu = get_number(j, "mu", path, 0.0);
  c.hbar = get_number(j, "hbar", path, 1.0);
  if (!(c.hbar > 0.0)) throw ConfigError(path + ".hbar", "must be positive");
  return c;
}

inline Json to_json(const BilinearCoefficients& c) {
  return Json{{"D_xx", c.D_xx}, {"D_pp", c.D_pp}, {"D_px", c.D_px},
              {"gamma", c.gamma}, {"mu", c.mu},     {"hbar", c.hbar}};
}

inline ThermalContext context_from_json(const Json& j, const std::string& path) {
  ThermalContext ctx;
  ctx.beta = get_number(j, "beta", path, 1.0);
  ctx.M = get_number(j, "M", path, 1.0);
  ctx.omega = get_number(j, "omega", path, 1.0);
  ctx.l = get_number(j, "l", path, 1.0);
  guarded(path, [&] {
    ctx.validate();
    return 0;
  });
  return ctx;
}

inline Json to_json(const ThermalContext& ctx) {
  return Json{{"beta", ctx.beta}, {"M", ctx.M}, {"omega", ctx.omega}, {"l", ctx.l}};
}

/// Two-column (q, t) CSV; '#' comments and a non-numeric header line are skipped.
inline TabulatedProfile load_profile_csv(const std::string& file, const std::string& path) {
  std::ifstream in(file);
  if (!in) throw ConfigError(path, "cannot open tabulated profile '" + file + "'");
  TabulatedProfile tab;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path, "profile rows need two comma-separated columns");
    double q = 0.0, t = 0.0;
    const auto r1 = std::from_chars(line.data(), line.data() + comma, q);
    std::string rest = line.substr(comma + 1);
    while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ')) rest.pop_back();
    const auto r2 = std::from_chars(rest.data(), rest.data() + rest.size(), t);
    if (r1.ec != std::errc() || r2.ec != std::errc()) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError(path, "malformed profile row '" + line + "'");
    }
    first = false;
    tab.q.push_back(q);
    tab.t.push_back(t);
  }
  return tab;
}

inline GasModel gas_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  GasModel gas;
  gas.m = get_number(j, "m", path);
  gas.z = get_number(j, "z", path);
  gas.n = get_number(j, "n", path);
  gas.beta = get_number(j, "beta", path);
  const std::string tp = path + ".t_matrix";
  const Json& tm = require(j, "t_matrix", path);
  const std::string kind = get_string(tm, "kind", tp, "");
  const Json params = tm.contains("params") ? tm.at("params") : Json::object();
  const std::string pp = tp + ".params";
  if (kind == "constant") {
    gas.t_matrix = ConstantProfile{get_number(params, "t0", pp)};
  } else if (kind == "gaussian") {
    gas.t_matrix = GaussianProfile{get_number(params, "t0", pp), get_number(params, "sigma", pp)};
  } else if (kind == "tabulated") {
    if (params.contains("file")) {
      gas.t_matrix = load_profile_csv(get_string(params, "file", pp, ""), pp + ".file");
    } else {
      TabulatedProfile tab;
      try {
        tab.q = require(params, "q", pp).get<std::vector<double>>();
        tab.t = require(params, "t", pp).get<std::vector<double>>();
      } catch (const Json::exception&) {
        throw ConfigError(pp, "q and t must be arrays of numbers");
      }
      gas.t_matrix = std::move(tab);
    }
  } else {
    throw ConfigError(tp + ".kind", "expected one of constant, gaussian, tabulated");
  }
  guarded(path, [&] {
    gas.validate();
    return 0;
  });
  return gas;
}

inline Json to_json(const GasModel& gas) {
  Json tm;
  if (const auto* c = std::get_if<ConstantProfile>(&gas.t_matrix)) {
    tm = {{"kind", "constant"}, {"params", {{"t0", c->t0}}}};
  } else if (const auto* g = std::get_if<GaussianProfile>(&gas.t_matrix)) {
    tm = {{"kind", "gaussian"}, {"params", {{"t0", g->t0}, {"sigma", g->sigma}}}};
  } else {
    const auto& tab = std::get<TabulatedProfile>(gas.t_matrix);
    tm = {{"kind", "tabulated"}, {"params", {{"q", tab.q}, {"t", tab.t}}}};
  }
  return Json{{"m", gas.m}, {"z", gas.z}, {"n", gas.n}, {"beta", gas.beta}, {"t_matrix", tm}};
}

inline BasisSpec basis_from_json(const Json& j, const std::string& path, double hbar) {
  const std::string kind = get_string(j, "kind", path, "");
  return guarded(path, [&] {
    if (kind == "fock") return BasisSpec::fock(get_int(j, "dim", path, 0), hbar);
    if (kind == "lattice") {
      return BasisSpec::lattice(get_int(j, "J", path, 0), get_number(j, "delta", path), hbar);
    }
    throw ConfigError(path + ".kind", "expected fock or lattice");
  });
}

inline Json to_json(const BasisSpec& b) {
  if (b.is_fock()) return Json{{"kind", "fock"}, {"dim", b.dimension()}, {"hbar", b.hbar()}};
  return Json{{"kind", "lattice"},
              {"J", b.lattice_params().half_width},
              {"delta", b.lattice_params().spacing},
              {"hbar", b.hbar()}};
}

inline Family family_from_string(const std::string& s, const std::string& path) {
  for (Family f : {Family::GeneralXP, Family::AAForm, Family::QuantumOptical, Family::MPhoton, Family::QBM,
                   Family::KineticQBM, Family::QLBE}) {
    if (s == family_name(f)) return f;
  }
  throw ConfigError(path, "unknown family '" + s +
                              "' (expected general_xp, aa_form, quantum_optical, m_photon, qbm, kinetic_qbm, qlbe)");
}

inline HamiltonianKind hamiltonian_from_string(const std::string& s, const std::string& path) {
  if (s == "zero") return HamiltonianKind::Zero;
  if (s == "free") return HamiltonianKind::Free;
  if (s == "oscillator") return HamiltonianKind::Oscillator;
  if (s == "number") return HamiltonianKind::Number;
  throw ConfigError(path, "expected zero, free, oscillator or number");
}

inline bool is_flat_coefficients(const Json& j) {
  return j.is_object() && !j.contains("generator") &&
         (j.contains("D_xx") || j.contains("D_pp") || j.contains("D_px") || j.contains("gamma") || j.contains("mu"));
}

/// Reads {"generator": {...}, "basis": {...}}; a flat coefficient object
/// (keys D_xx, D_pp, D_px, gamma, mu, hbar, beta, M, omega, l) is read as a
/// general_xp generator without basis.
inline GeneratorSpec generator_from_json(const Json& root) {
  GeneratorSpec spec;
  if (!root.is_object()) throw ConfigError("config", "expected a JSON object");
  if (is_flat_coefficients(root)) {
    spec.family = Family::GeneralXP;
    spec.coefficients = coefficients_from_json(root, "config");
    spec.ctx = context_from_json(root, "config");
    if (root.contains("basis")) spec.basis = basis_from_json(root.at("basis"), "basis", spec.coefficients.hbar);
    return spec;
  }
  const Json& g = require(root, "generator", "config");
  const std::string path = "generator";
  spec.family = family_from_string(get_string(g, "family", path, ""), path + ".family");
  const double hbar = get_number(g, "hbar", path, 1.0);
  if (!(hbar > 0.0)) throw ConfigError(path + ".hbar", "must be positive");
  spec.ctx = context_from_json(g.value("context", Json::object()), path + ".context");
  spec.h0 = hamiltonian_from_string(get_string(g, "h0", path, "free"), path + ".h0");

  switch (spec.family) {
    case Family::GeneralXP:
    case Family::AAForm:
      spec.coefficients = coefficients_from_json(require(g, "coefficients", path), path + ".coefficients");
      break;
    case Family::QuantumOptical:
      spec.eta = get_number(g, "eta", path);
      if (!(spec.eta > 0.0)) throw ConfigError(path + ".eta", "must be positive");
      break;
    case Family::MPhoton: {
      spec.gamma_0 = get_number(g, "gamma_0", path, 0.0);
      const Json& gm = require(g, "gamma_m", path);
      if (!gm.is_array() || gm.empty()) throw ConfigError(path + ".gamma_m", "expected a non-empty array");
      for (const auto& v : gm) {
        if (!v.is_number()) throw ConfigError(path + ".gamma_m", "expected numbers");
        spec.gamma_m.push_back(v.get<double>());
      }
      break;
    }
    case Family::QBM:
      spec.gamma = get_number(g, "gamma", path);
      spec.D_px = get_number(g, "D_px", path, 0.0);
      break;
    case Family::KineticQBM:
      if (g.contains("gamma")) spec.gamma = get_number(g, "gamma", path);
      if (g.contains("gas")) spec.gas = gas_from_json(g.at("gas"), path + ".gas");
      if (!spec.gamma && !spec.gas) throw ConfigError(path + ".gamma", "kinetic_qbm needs gamma or gas");
      break;
    case Family::QLBE:
      spec.gas = gas_from_json(require(g, "gas", path), path + ".gas");
      spec.qlbe_K = get_int(g, "K", path, 1);
      break;
  }
  spec.coefficients.hbar = hbar;
  if (root.contains("basis")) spec.basis = basis_from_json(root.at("basis"), "basis", hbar);
  if (spec.family == Family::QLBE && spec.basis && !spec.basis->is_lattice()) {
    throw ConfigError("basis.kind", "qlbe requires a lattice basis");
  }
  return spec;
}

inline Json to_json(const Verdict& v) {
  return Json{{"ok", v.ok}, {"violated", v.violated}, {"margin", v.margin}};
}

inline Json to_json(const MomentState& m) {
  return Json{{"mean_x", m.mean_x}, {"mean_p", m.mean_p}, {"var_xx", m.var_xx},
              {"var_pp", m.var_pp}, {"cov_xp", m.cov_xp}};
}

inline Json to_json(const RelaxationFit& f) {
  return Json{{"rate", f.rate},         {"asymptote", f.asymptote}, {"amplitude", f.amplitude},
              {"residual", f.residual}, {"degenerate", f.degenerate}, {"flagged", f.flagged},
              {"note", f.note}};
}

inline Json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("--config", "cannot open '" + file + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace qfpe::io
