#pragma once

// Experiment configuration: a sectioned key = value text format.
//
//   [model]
//   sides = 12,12
//   flux = 1/3
//
// Every key has a default; unknown sections and keys are rejected with their
// dotted path. serialize() writes every key, and parse(serialize(c)) == c.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kubo/dynamics.hpp"
#include "kubo/model.hpp"

namespace kubo {

struct ModelBlock {
  int dimension = 2;
  std::array<int, 2> sides{12, 12};
  Boundary boundary = Boundary::torus;
  FluxSpec flux{1, 3};
  double disorder = 0.0;
  std::uint64_t base_seed = 1;
  int realizations = 1;

  bool operator==(const ModelBlock& o) const {
    return dimension == o.dimension && sides == o.sides && boundary == o.boundary && flux.p == o.flux.p &&
           flux.q == o.flux.q && disorder == o.disorder && base_seed == o.base_seed &&
           realizations == o.realizations;
  }
};

struct StateBlock {
  enum class Kind { projection, fermi_dirac };
  Kind kind = Kind::projection;
  double beta = 20.0;
  std::optional<double> fermi_energy;  // empty = auto
  char assumption = 'b';

  bool operator==(const StateBlock&) const = default;
};

struct DriveBlock {
  std::vector<double> etas{1.0, 0.5, 0.25, 0.125};
  double field = 1e-3;
  int field_axis = 1;  // 1-based
  double step = 0.02;
  StepMethod method = StepMethod::ode_rk4;
  std::optional<double> s_min;  // empty = log(truncation_tolerance) / eta
  double truncation_tolerance = 1e-12;
  bool finite_difference = false;
  double quadrature_panel = 1.0;

  bool operator==(const DriveBlock&) const = default;
};

struct RunBlock {
  std::string experiment = "hall";
  std::string output = "out";
  std::map<std::string, double> tolerances;  // overrides of the threshold table

  bool operator==(const RunBlock&) const = default;
};

struct ExperimentConfig {
  ModelBlock model;
  StateBlock state;
  DriveBlock drive;
  RunBlock run;

  bool operator==(const ExperimentConfig&) const = default;

  LatticeConfig lattice() const { return {model.dimension, model.sides, model.boundary}; }
  DisorderSpec disorder() const { return {model.disorder, model.base_seed}; }

  TimeGrid grid(double eta) const {
    TimeGrid g = TimeGrid::for_drive(DriveProtocol{eta, {0, 0}}, drive.step, drive.method, drive.truncation_tolerance);
    if (drive.s_min) g.s_min = *drive.s_min;
    return g;
  }

  void validate() const;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"hall",          "kubo-sweep",    "dynamics-check",
                                              "equilibrium",   "funcalc-check", "algebra-check"};
  return names;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double parse_double(const std::string& path, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end || v.empty())
    throw ConfigError(path + ": expected a number, got '" + v + "'");
  return x;
}

template <class I>
I parse_int(const std::string& path, const std::string& v) {
  I x{};
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end || v.empty())
    throw ConfigError(path + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& path, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(path + ": expected true|false, got '" + v + "'");
}

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  lattice().validate();
  model.flux.validate();
  if (model.disorder < 0) throw ConfigError("model.disorder: must be non-negative");
  if (model.realizations < 1) throw ConfigError("model.realizations: must be at least 1");
  LatticeModel::clean(lattice(), model.flux);  // commensurability
  if (state.kind == StateBlock::Kind::fermi_dirac && !(state.beta > 0 && std::isfinite(state.beta)))
    throw ConfigError("state.beta: must be finite and positive");
  if (state.assumption != 'a' && state.assumption != 'b') throw ConfigError("state.assumption: expected a|b");
  // A sharp Fermi projection is g(H) h(H) with h the (non-smooth) step: form (b) only.
  if (state.kind == StateBlock::Kind::projection && state.assumption == 'a')
    throw ConfigError("state.assumption: a Fermi projection is not a smooth function of H; use assumption = b");
  if (drive.etas.empty()) throw ConfigError("drive.etas: at least one eta required");
  for (double e : drive.etas)
    if (!(e > 0)) throw ConfigError("drive.etas: every eta must be positive");
  if (drive.field_axis < 1 || drive.field_axis > model.dimension)
    throw ConfigError("drive.field_axis: must be between 1 and the dimension");
  if (!(drive.step > 0)) throw ConfigError("drive.step: must be positive");
  if (!(drive.truncation_tolerance > 0 && drive.truncation_tolerance < 1))
    throw ConfigError("drive.truncation_tolerance: must lie in (0, 1)");
  if (drive.s_min)
    for (double e : drive.etas)
      if (std::exp(e * *drive.s_min) > drive.truncation_tolerance * (1 + 1e-9))
        throw ConfigError("drive.s_min: e^{eta s_min} exceeds truncation_tolerance for eta = " +
                          detail::format_double(e));
  if (!(drive.quadrature_panel > 0)) throw ConfigError("drive.quadrature_panel: must be positive");
  bool known = false;
  for (const auto& n : experiment_names()) known |= n == run.experiment;
  if (!known) throw ConfigError("run.experiment: unknown experiment '" + run.experiment + "'");
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "state" && section != "drive" && section != "run")
        throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string v = detail::trim(line.substr(eq + 1));
    const std::string path = section + "." + key;

    if (section == "model") {
      if (key == "dimension") c.model.dimension = detail::parse_int<int>(path, v);
      else if (key == "sides") {
        const auto parts = detail::split(v, ',');
        if (parts.empty() || parts.size() > 2) throw ConfigError(path + ": expected L1 or L1,L2");
        c.model.sides[0] = detail::parse_int<int>(path, parts[0]);
        c.model.sides[1] = parts.size() == 2 ? detail::parse_int<int>(path, parts[1]) : 1;
      } else if (key == "boundary") {
        try {
          c.model.boundary = boundary_from_string(v);
        } catch (const ConfigError& e) {
          throw ConfigError(path + ": " + e.what());
        }
      } else if (key == "flux") {
        const auto parts = detail::split(v, '/');
        if (parts.size() != 2) throw ConfigError(path + ": expected p/q");
        c.model.flux = {detail::parse_int<long>(path, parts[0]), detail::parse_int<long>(path, parts[1])};
      } else if (key == "disorder") c.model.disorder = detail::parse_double(path, v);
      else if (key == "base_seed") c.model.base_seed = detail::parse_int<std::uint64_t>(path, v);
      else if (key == "realizations") c.model.realizations = detail::parse_int<int>(path, v);
      else throw ConfigError("unknown key " + path);
    } else if (section == "state") {
      if (key == "kind") {
        if (v == "projection") c.state.kind = StateBlock::Kind::projection;
        else if (v == "fermi_dirac") c.state.kind = StateBlock::Kind::fermi_dirac;
        else throw ConfigError(path + ": expected projection|fermi_dirac");
      } else if (key == "beta") c.state.beta = detail::parse_double(path, v);
      else if (key == "fermi_energy") {
        if (v == "auto") c.state.fermi_energy.reset();
        else c.state.fermi_energy = detail::parse_double(path, v);
      } else if (key == "assumption") {
        if (v != "a" && v != "b") throw ConfigError(path + ": expected a|b");
        c.state.assumption = v[0];
      } else throw ConfigError("unknown key " + path);
    } else if (section == "drive") {
      if (key == "etas") {
        c.drive.etas.clear();
        for (const auto& p : detail::split(v, ',')) c.drive.etas.push_back(detail::parse_double(path, p));
      } else if (key == "field") c.drive.field = detail::parse_double(path, v);
      else if (key == "field_axis") c.drive.field_axis = detail::parse_int<int>(path, v);
      else if (key == "step") c.drive.step = detail::parse_double(path, v);
      else if (key == "method") {
        try {
          c.drive.method = step_method_from_string(v);
        } catch (const ConfigError& e) {
          throw ConfigError(path + ": " + e.what());
        }
      } else if (key == "s_min") {
        if (v == "auto") c.drive.s_min.reset();
        else c.drive.s_min = detail::parse_double(path, v);
      } else if (key == "truncation_tolerance") c.drive.truncation_tolerance = detail::parse_double(path, v);
      else if (key == "finite_difference") c.drive.finite_difference = detail::parse_bool(path, v);
      else if (key == "quadrature_panel") c.drive.quadrature_panel = detail::parse_double(path, v);
      else throw ConfigError("unknown key " + path);
    } else {
      if (key == "experiment") c.run.experiment = v;
      else if (key == "output") c.run.output = v;
      else if (key.rfind("tolerance.", 0) == 0) c.run.tolerances[key.substr(10)] = detail::parse_double(path, v);
      else throw ConfigError("unknown key " + path);
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize(const ExperimentConfig& c) {
  using detail::format_double;
  std::ostringstream o;
  o << "[model]\n"
    << "dimension = " << c.model.dimension << "\n"
    << "sides = " << c.model.sides[0] << "," << c.model.sides[1] << "\n"
    << "boundary = " << to_string(c.model.boundary) << "\n"
    << "flux = " << c.model.flux.p << "/" << c.model.flux.q << "\n"
    << "disorder = " << format_double(c.model.disorder) << "\n"
    << "base_seed = " << c.model.base_seed << "\n"
    << "realizations = " << c.model.realizations << "\n\n";
  o << "[state]\n"
    << "kind = " << (c.state.kind == StateBlock::Kind::projection ? "projection" : "fermi_dirac") << "\n"
    << "beta = " << format_double(c.state.beta) << "\n"
    << "fermi_energy = " << (c.state.fermi_energy ? format_double(*c.state.fermi_energy) : "auto") << "\n"
    << "assumption = " << c.state.assumption << "\n\n";
  o << "[drive]\n" << "etas = ";
  for (std::size_t i = 0; i < c.drive.etas.size(); ++i) o << (i ? "," : "") << format_double(c.drive.etas[i]);
  o << "\n"
    << "field = " << format_double(c.drive.field) << "\n"
    << "field_axis = " << c.drive.field_axis << "\n"
    << "step = " << format_double(c.drive.step) << "\n"
    << "method = " << to_string(c.drive.method) << "\n"
    << "s_min = " << (c.drive.s_min ? format_double(*c.drive.s_min) : "auto") << "\n"
    << "truncation_tolerance = " << format_double(c.drive.truncation_tolerance) << "\n"
    << "finite_difference = " << (c.drive.finite_difference ? "true" : "false") << "\n"
    << "quadrature_panel = " << format_double(c.drive.quadrature_panel) << "\n\n";
  o << "[run]\n"
    << "experiment = " << c.run.experiment << "\n"
    << "output = " << c.run.output << "\n";
  for (const auto& [k, v] : c.run.tolerances) o << "tolerance." << k << " = " << format_double(v) << "\n";
  return o.str();
}

}  // namespace kubo
