#pragma once

// Experiment suites over disorder ensembles, deterministic parallel execution,
// CSV/JSON outputs and the run manifest.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <concepts>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kubo/chern.hpp"
#include "kubo/config.hpp"
#include "kubo/dynamics.hpp"
#include "kubo/funcalc.hpp"
#include "kubo/model.hpp"
#include "kubo/opspace.hpp"
#include "kubo/response.hpp"
#include "kubo/thresholds.hpp"

namespace kubo {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr int kSummarySchemaVersion = 1;

// ---------------------------------------------------------------------------
// Statistics

struct EnsembleStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
  bool stderr_applicable = false;  // false for a single realization
};

namespace detail {

/// Neumaier compensated sum; the result does not depend on the order of the terms to ~1e-16 relative.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) c_ += (sum_ - t) + x;
    else c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace detail

/// Weighted mean and standard error. Empty weights mean equal weights.
inline EnsembleStats ensemble_average(const std::vector<double>& values, std::vector<double> weights = {}) {
  const std::size_t n = values.size();
  if (n == 0) throw DomainError("ensemble_average: need at least one value");
  if (weights.empty()) weights.assign(n, 1.0);
  if (weights.size() != n) throw DomainError("ensemble_average: weights and values differ in length");
  detail::CompensatedSum wsum;
  for (double w : weights) {
    if (w < 0) throw DomainError("ensemble_average: negative weight");
    wsum.add(w);
  }
  const double total = wsum.value();
  if (!(total > 0)) throw DomainError("ensemble_average: weights sum to zero");
  detail::CompensatedSum m;
  for (std::size_t i = 0; i < n; ++i) m.add(weights[i] / total * values[i]);
  EnsembleStats s;
  s.mean = m.value();
  s.count = n;
  if (n < 2) return s;
  detail::CompensatedSum v;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i] / total;
    v.add(w * w * (values[i] - s.mean) * (values[i] - s.mean));
  }
  s.stderr_ = std::sqrt(v.value() * static_cast<double>(n) / static_cast<double>(n - 1));
  s.stderr_applicable = true;
  return s;
}

// ---------------------------------------------------------------------------
// Parallel cells

template <class R>
struct CellOutcome {
  std::optional<R> value;
  std::string error;
};

/// Runs f(0..n-1) on `threads` workers. Results are stored by index, so output
/// order never depends on scheduling. Library errors are captured per cell.
template <class R>
std::vector<CellOutcome<R>> run_cells(std::size_t n, int threads, const std::function<R(std::size_t)>& f) {
  std::vector<CellOutcome<R>> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i].value = f(i);
      } catch (const Error& e) {
        out[i].error = e.what();
      }
    }
  };
  const int t = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (t == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (int i = 0; i < t; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

// ---------------------------------------------------------------------------
// Tables and checks

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  template <class... T>
  void add(const T&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    if (r.size() != columns.size()) throw DomainError("table row has the wrong number of cells");
    rows.push_back(std::move(r));
  }

  std::string to_csv() const {
    std::ostringstream o;
    for (std::size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << columns[i];
    o << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
      o << "\n";
    }
    return o.str();
  }

 private:
  static std::string cell(double x) { return detail::format_double(x); }
  template <std::integral I>
  static std::string cell(I x) { return std::to_string(x); }
  static std::string cell(const std::string& x) { return x; }
  static std::string cell(const char* x) { return x; }
  static std::string cell(bool x) { return x ? "true" : "false"; }
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  std::string relation;  // "<", "<=", ">=", ...
  bool passed = false;
};

inline CheckResult check_below(const std::string& name, double value, double limit) {
  return {name, value, limit, "<", value < limit};
}
inline CheckResult check_at_least(const std::string& name, double value, double limit) {
  return {name, value, limit, ">=", value >= limit};
}

struct SuiteResult {
  std::string experiment;
  std::map<std::string, Table> tables;  // file stem -> table
  nlohmann::json results = nlohmann::json::object();
  std::vector<CheckResult> checks;
  std::vector<std::string> cell_errors;

  bool all_passed() const {
    return cell_errors.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
};

// ---------------------------------------------------------------------------
// Shared setup

/// Midpoint of the lowest gap of the clean spectrum whose width is at least half the widest gap.
inline double auto_fermi_energy(const LatticeConfig& lattice, const FluxSpec& flux) {
  const SpectralData sd = diagonalize(build_hamiltonian(LatticeModel::clean(lattice, flux)));
  const RealVector& e = sd.eigenvalues;
  double widest = 0.0;
  for (Index i = 1; i < e.size(); ++i) widest = std::max(widest, e(i) - e(i - 1));
  if (widest < 1e-6) throw ConfigError("state.fermi_energy: the clean spectrum has no gap; set it explicitly");
  for (Index i = 1; i < e.size(); ++i)
    if (e(i) - e(i - 1) >= 0.5 * widest) return 0.5 * (e(i) + e(i - 1));
  return 0.0;
}

inline double fermi_energy_of(const ExperimentConfig& c) {
  return c.state.fermi_energy ? *c.state.fermi_energy : auto_fermi_energy(c.lattice(), c.model.flux);
}

inline EquilibriumState state_of(const ExperimentConfig& c, double fermi_energy) {
  return c.state.kind == StateBlock::Kind::projection ? EquilibriumState::projection(fermi_energy)
                                                      : EquilibriumState::thermal(c.state.beta, fermi_energy);
}

inline LatticeModel realization(const ExperimentConfig& c, std::size_t index) {
  return LatticeModel::disordered(c.lattice(), c.model.flux, c.disorder(), static_cast<std::int64_t>(index));
}

inline std::vector<std::uint64_t> realization_seeds(const ExperimentConfig& c) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < c.model.realizations; ++i)
    s.push_back(realization_seed(c.model.base_seed, static_cast<std::uint64_t>(i)));
  return s;
}

namespace detail {

template <class R>
std::vector<R> collect(const std::vector<CellOutcome<R>>& cells, SuiteResult& res, const std::string& label) {
  std::vector<R> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].value) out.push_back(*cells[i].value);
    else res.cell_errors.push_back(label + " cell " + std::to_string(i) + ": " + cells[i].error);
  }
  return out;
}

inline nlohmann::json stats_json(const EnsembleStats& s) {
  nlohmann::json j{{"mean", s.mean}, {"n", s.count}};
  if (s.stderr_applicable) j["stderr"] = s.stderr_;
  else j["stderr"] = nullptr;
  return j;
}

/// Uniform entries in [-1, 1] + i[-1, 1] from a counter-based stream.
inline Matrix random_matrix(Index n, std::uint64_t seed) {
  Matrix m(n, n);
  std::uint64_t k = 0;
  auto uni = [&] {
    const std::uint64_t bits = splitmix64(seed + (k++) * 0x9E3779B97F4A7C15ULL);
    return 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
  };
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const double re = uni();
      m(i, j) = Complex(re, uni());
    }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Suites

inline SuiteResult suite_hall(const ExperimentConfig& c, int threads, const ThresholdSet& th) {
  if (c.model.dimension != 2) throw ConfigError("hall: needs model.dimension = 2");
  if (c.state.kind != StateBlock::Kind::projection) throw ConfigError("hall: needs state.kind = projection");
  SuiteResult res{"hall"};
  const double ef = fermi_energy_of(c);
  const auto seeds = realization_seeds(c);

  struct Row {
    std::size_t index;
    StredaResult streda;
    LocalizationReport loc;
  };
  auto cells = run_cells<Row>(seeds.size(), threads, [&](std::size_t i) {
    const LatticeModel m = realization(c, i);
    const CovariantOperator p = fermi_projection(diagonalize(build_hamiltonian(m)), ef);
    return Row{i, sigma_streda(p), localization_diagnostic(p)};
  });
  const auto rows = detail::collect(cells, res, "hall");

  // Bulk oracle: the number of filled magnetic subbands follows from the clean count below E_F.
  std::optional<double> chern;
  const SpectralData clean = diagonalize(build_hamiltonian(LatticeModel::clean(c.lattice(), c.model.flux)));
  long below = 0;
  for (Index i = 0; i < clean.size(); ++i) below += clean.eigenvalues(i) <= ef;
  const double per_band = static_cast<double>(clean.size()) / static_cast<double>(c.model.flux.q);
  const double bands = static_cast<double>(below) / per_band;
  if (c.model.flux.p != 0 && std::abs(bands - std::round(bands)) < 1e-12 && bands >= 1 && bands < c.model.flux.q)
    chern = fhs_chern_number(c.model.flux.p, c.model.flux.q, static_cast<int>(std::lround(bands)));

  Table raw{{"realization", "seed", "sigma_11", "sigma_12", "sigma_21", "sigma_22", "hall_scaled", "hall_imag",
             "localization_rate", "commutator_norm2_1", "commutator_norm2_2", "chern_oracle"}};
  std::vector<double> hall;
  double antisym = 0.0;
  for (const auto& r : rows) {
    const auto& s = r.streda.sigma;
    raw.add(r.index, seeds[r.index], s(0, 0).real(), s(0, 1).real(), s(1, 0).real(), s(1, 1).real(),
            r.streda.hall_scaled, r.streda.hall_imaginary, r.loc.decay.rate, r.loc.commutator_norm2[0],
            r.loc.commutator_norm2[1], chern ? detail::format_double(*chern) : std::string("nan"));
    hall.push_back(r.streda.hall_scaled);
    antisym = std::max({antisym, std::abs(s(0, 1) + s(1, 0)), std::abs(s(0, 0)), std::abs(s(1, 1))});
  }
  res.tables["hall_raw"] = raw;
  if (hall.empty()) return res;

  const EnsembleStats st = ensemble_average(hall);
  const double integer = chern ? std::abs(std::round(*chern)) : std::round(std::abs(st.mean));
  Table summary{{"fermi_energy", "n_realizations", "hall_mean", "hall_stderr", "nearest_integer", "sign",
                 "chern_oracle"}};
  summary.add(ef, st.count, st.mean, st.stderr_, integer, st.mean < 0 ? -1 : 1,
              chern ? detail::format_double(*chern) : std::string("nan"));
  res.tables["hall_summary"] = summary;
  res.results = {{"fermi_energy", ef}, {"hall_scaled", detail::stats_json(st)}, {"integer", integer},
                 {"sign", st.mean < 0 ? -1 : 1}, {"chern_oracle", chern ? nlohmann::json(*chern) : nlohmann::json()}};

  const std::string key = c.model.disorder == 0.0 ? "hall.clean_integer_distance" : "hall.ensemble_integer_distance";
  res.checks.push_back(check_below(key, std::abs(std::abs(st.mean) - integer), th[key]));
  res.results["max_antisymmetry_defect"] = antisym;
  // The minimal-image commutator is exactly anti-Hermitian only on the open box.
  if (c.model.boundary == Boundary::open)
    res.checks.push_back(check_below("algebra.antisymmetry", antisym, th["algebra.antisymmetry"]));
  return res;
}

inline SuiteResult suite_kubo_sweep(const ExperimentConfig& c, int threads, const ThresholdSet& th) {
  SuiteResult res{"kubo-sweep"};
  const double ef = fermi_energy_of(c);
  const EquilibriumState zeta = state_of(c, ef);
  const bool projection = c.state.kind == StateBlock::Kind::projection;
  const std::size_t nr = static_cast<std::size_t>(c.model.realizations);
  const std::size_t ne = c.drive.etas.size();
  const int d = c.model.dimension;

  struct Cell {
    std::size_t r, e;
    ConductivityTensor res, kubo, streda;
    std::optional<ConductivityTensor> fd;
  };
  auto cells = run_cells<Cell>(nr * ne, threads, [&](std::size_t i) {
    const std::size_t r = i / ne, e = i % ne;
    const double eta = c.drive.etas[e];
    const LatticeModel m = realization(c, r);
    Cell out{r, e, sigma_resolvent(m, zeta, eta),
             sigma_kubo_integral(m, zeta, eta, {c.drive.quadrature_panel, c.drive.truncation_tolerance}),
             projection ? sigma_streda(m, ef).sigma : ConductivityTensor::Zero(d, d), std::nullopt};
    if (c.drive.finite_difference) out.fd = sigma_finite_difference(m, zeta, eta, c.drive.field, c.grid(eta));
    return out;
  });
  const auto rows = detail::collect(cells, res, "kubo-sweep");

  Table raw{{"realization", "eta", "j", "k", "sigma_fd_re", "sigma_fd_im", "sigma_kubo_re", "sigma_kubo_im",
             "sigma_res_re", "sigma_res_im", "streda_re", "streda_im"}};
  double kubo_gap = 0.0, fd_gap = 0.0;
  for (const auto& r : rows) {
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const Complex fd = r.fd ? (*r.fd)(j, k) : Complex(NAN, NAN);
        raw.add(r.r, c.drive.etas[r.e], j + 1, k + 1, fd.real(), fd.imag(), r.kubo(j, k).real(), r.kubo(j, k).imag(),
                r.res(j, k).real(), r.res(j, k).imag(), r.streda(j, k).real(), r.streda(j, k).imag());
      }
    kubo_gap = std::max(kubo_gap, max_abs_difference(r.kubo, r.res));
    if (r.fd) fd_gap = std::max(fd_gap, max_abs_difference(*r.fd, r.res));
  }
  res.tables["kubo_sweep_raw"] = raw;

  Table summary{{"eta", "j", "k", "sigma_fd_re", "sigma_fd_im", "sigma_kubo_re", "sigma_kubo_im", "sigma_res_re",
                 "sigma_res_im", "streda_re", "streda_im", "n_realizations", "stderr"}};
  std::vector<double> gaps;
  nlohmann::json sweep = nlohmann::json::array();
  for (std::size_t e = 0; e < ne; ++e) {
    double gap = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        std::vector<double> v[10];
        for (const auto& r : rows) {
          if (r.e != e) continue;
          const Complex fd = r.fd ? (*r.fd)(j, k) : Complex(NAN, NAN);
          const Complex vals[5] = {fd, r.kubo(j, k), r.res(j, k), r.streda(j, k), 0.0};
          for (int q = 0; q < 4; ++q) {
            v[2 * q].push_back(vals[q].real());
            v[2 * q + 1].push_back(vals[q].imag());
          }
        }
        if (v[0].empty()) continue;
        double mean[8];
        for (int q = 0; q < 8; ++q) mean[q] = ensemble_average(v[q]).mean;
        const EnsembleStats res_stats = ensemble_average(v[4]);
        summary.add(c.drive.etas[e], j + 1, k + 1, mean[0], mean[1], mean[2], mean[3], mean[4], mean[5], mean[6],
                    mean[7], v[4].size(), res_stats.stderr_);
        gap = std::max(gap, std::hypot(mean[4] - mean[6], mean[5] - mean[7]));
      }
    gaps.push_back(gap);
    sweep.push_back({{"eta", c.drive.etas[e]}, {"streda_gap", gap}});
  }
  res.tables["kubo_sweep_summary"] = summary;
  res.results = {{"fermi_energy", ef},
                 {"sweep", sweep},
                 {"max_kubo_vs_resolvent", kubo_gap},
                 {"max_fd_vs_resolvent", c.drive.finite_difference ? nlohmann::json(fd_gap) : nlohmann::json()}};

  res.checks.push_back(check_below("kubo.integral_vs_resolvent", kubo_gap, th["kubo.integral_vs_resolvent"]));
  if (c.drive.finite_difference)
    res.checks.push_back(check_below("kubo.fd_vs_resolvent", fd_gap, th["kubo.fd_vs_resolvent"]));
  if (projection && !gaps.empty()) {
    bool decreasing = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) decreasing &= c.drive.etas[i] < c.drive.etas[i - 1] && gaps[i] < gaps[i - 1];
    res.checks.push_back({"eta.strictly_decreasing", decreasing ? 1.0 : 0.0, 1.0, "==", decreasing});
    res.checks.push_back(check_below("eta.final_streda_gap", gaps.back(), th["eta.final_streda_gap"]));
  }
  return res;
}

inline SuiteResult suite_dynamics(const ExperimentConfig& c, int threads, const ThresholdSet& th) {
  SuiteResult res{"dynamics-check"};
  const double ef = fermi_energy_of(c);
  const EquilibriumState zeta = state_of(c, ef);
  const double eta = c.drive.etas.front();
  DriveProtocol drive{eta, {0.0, 0.0}};
  drive.field[static_cast<std::size_t>(c.drive.field_axis - 1)] = c.drive.field;
  const TimeGrid grid = c.grid(eta);
  const double s0 = std::max(grid.s_min, -5.0);

  struct Row {
    std::size_t r;
    double duh_vs_ode, drift_duh, drift_ode, proj_duh, proj_ode, mineig_duh, mineig_ode, trace_shift;
    double unitarity, cocycle, cocycle_tol, weight_norm, weight_bound, duhamel, gauge;
  };
  auto cells = run_cells<Row>(static_cast<std::size_t>(c.model.realizations), threads, [&](std::size_t i) {
    const LatticeModel m = realization(c, i);
    Row row{i};
    const CovariantOperator z0 = zeta.evaluate(diagonalize(build_hamiltonian(m)));
    const double z2 = norms(z0).norm2;
    const DensityMatrix a = evolve_density_duhamel(m, drive, zeta, 0.0, grid);
    const DensityMatrix b = evolve_density_ode(m, drive, zeta, 0.0, grid);
    const auto da = density_diagnostics(a.rho), db = density_diagnostics(b.rho);
    row.duh_vs_ode = norms(a.rho - b.rho).norm2;
    row.drift_duh = std::abs(da.norms.norm2 - z2);
    row.drift_ode = std::abs(db.norms.norm2 - z2);
    row.proj_duh = da.projection_defect;
    row.proj_ode = db.projection_defect;
    row.mineig_duh = da.min_eigenvalue;
    row.mineig_ode = db.min_eigenvalue;
    row.trace_shift = std::abs(da.trace - trace_per_unit_volume(z0));

    const Propagator u = propagate(m, drive, 0.0, s0, grid);
    row.unitarity = u.unitarity_defect();
    const double mid = 0.5 * s0;
    const Matrix split = propagate(m, drive, 0.0, mid, grid).u.matrix() * propagate(m, drive, mid, s0, grid).u.matrix();
    row.cocycle = (split - u.u.matrix()).norm();
    TimeGrid half = grid;
    half.step *= 0.5;
    row.cocycle_tol = std::max(1e-12, th["propagator.cocycle_factor"] *
                                          (propagate(m, drive, 0.0, s0, half).u.matrix() - u.u.matrix()).norm());
    const WeightCheck w = propagator_weight_check(m, drive, 0.0, s0, grid);
    row.weight_norm = w.weighted_norm;
    row.weight_bound = w.bound;
    Vector psi = Vector::Zero(m.shape().site_count());
    psi(0) = 1.0;
    row.duhamel = duhamel_residual(m, drive, 0.0, s0, psi, grid).residual;
    row.gauge = m.config.boundary == Boundary::open ? gauge_equivalence_check(m, drive, psi, 0.0, grid) : NAN;
    return row;
  });
  const auto rows = detail::collect(cells, res, "dynamics-check");
  Table raw{{"realization", "duhamel_vs_ode", "norm2_drift_duhamel", "norm2_drift_ode", "projection_defect_duhamel",
             "projection_defect_ode", "min_eigenvalue_duhamel", "min_eigenvalue_ode", "trace_shift", "unitarity",
             "cocycle", "cocycle_tolerance", "weighted_norm", "weight_bound", "duhamel_residual",
             "gauge_discrepancy"}};
  Row worst{};
  worst.mineig_duh = worst.mineig_ode = INFINITY;
  bool weight_ok = true, cocycle_ok = true;
  for (const auto& r : rows) {
    raw.add(r.r, r.duh_vs_ode, r.drift_duh, r.drift_ode, r.proj_duh, r.proj_ode, r.mineig_duh, r.mineig_ode,
            r.trace_shift, r.unitarity, r.cocycle, r.cocycle_tol, r.weight_norm, r.weight_bound, r.duhamel, r.gauge);
    worst.duh_vs_ode = std::max(worst.duh_vs_ode, r.duh_vs_ode);
    worst.drift_duh = std::max({worst.drift_duh, r.drift_duh, r.drift_ode});
    worst.proj_duh = std::max({worst.proj_duh, r.proj_duh, r.proj_ode});
    worst.mineig_duh = std::min({worst.mineig_duh, r.mineig_duh, r.mineig_ode});
    worst.unitarity = std::max(worst.unitarity, r.unitarity);
    worst.duhamel = std::max(worst.duhamel, r.duhamel);
    worst.gauge = std::isnan(r.gauge) ? worst.gauge : std::max(worst.gauge, r.gauge);
    weight_ok &= r.weight_norm <= r.weight_bound * (1.0 + th["propagator.weight_margin"]);
    cocycle_ok &= r.cocycle < r.cocycle_tol;
  }
  res.tables["dynamics_raw"] = raw;
  res.results = {{"eta", eta},
                 {"field", c.drive.field},
                 {"max_duhamel_vs_ode", worst.duh_vs_ode},
                 {"max_norm2_drift", worst.drift_duh},
                 {"max_projection_defect", worst.proj_duh},
                 {"min_eigenvalue", worst.mineig_duh},
                 {"max_unitarity_defect", worst.unitarity},
                 {"max_duhamel_residual", worst.duhamel}};
  if (rows.empty()) return res;
  Table summary{{"quantity", "worst"}};
  for (const auto& [k, v] : res.results.items()) summary.add(k, v.get<double>());
  res.tables["dynamics_summary"] = summary;

  res.checks.push_back(check_below("liouville.duhamel_vs_ode", worst.duh_vs_ode, th["liouville.duhamel_vs_ode"]));
  res.checks.push_back(check_below("liouville.norm_drift", worst.drift_duh, th["liouville.norm_drift"]));
  if (c.state.kind == StateBlock::Kind::projection)
    res.checks.push_back(
        check_below("liouville.projection_defect", worst.proj_duh, th["liouville.projection_defect"]));
  res.checks.push_back(check_at_least("liouville.min_eigenvalue", worst.mineig_duh, th["liouville.min_eigenvalue"]));
  res.checks.push_back(check_below("propagator.unitarity", worst.unitarity, th["propagator.unitarity"]));
  res.checks.push_back({"propagator.cocycle", cocycle_ok ? 1.0 : 0.0, 1.0, "==", cocycle_ok});
  res.checks.push_back({"propagator.weight_margin", weight_ok ? 1.0 : 0.0, 1.0, "==", weight_ok});
  res.checks.push_back(check_below("duhamel.residual", worst.duhamel, th["duhamel.residual"]));
  if (c.model.boundary == Boundary::open) {
    res.results["max_gauge_discrepancy"] = worst.gauge;
    res.checks.push_back(check_below("gauge.discrepancy", worst.gauge, th["gauge.discrepancy"]));
  }
  return res;
}

inline SuiteResult suite_equilibrium(const ExperimentConfig& c, int threads, const ThresholdSet& th) {
  SuiteResult res{"equilibrium"};
  const double ef = fermi_energy_of(c);
  const EquilibriumState zeta = state_of(c, ef);
  const int d = c.model.dimension;
  auto cells = run_cells<CurrentResult>(static_cast<std::size_t>(c.model.realizations), threads,
                                        [&](std::size_t i) { return equilibrium_current(realization(c, i), zeta); });
  const auto rows = detail::collect(cells, res, "equilibrium");
  Table raw{{"realization", "axis", "current", "imaginary_residue"}};
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < d; ++j) raw.add(r, j + 1, rows[r].current(j), rows[r].imaginary_residue);
  res.tables["equilibrium_raw"] = raw;
  Table summary{{"axis", "mean", "stderr", "n_realizations"}};
  nlohmann::json axes = nlohmann::json::array();
  for (int j = 0; j < d && !rows.empty(); ++j) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.current(j));
    const EnsembleStats s = ensemble_average(v);
    summary.add(j + 1, s.mean, s.stderr_, s.count);
    axes.push_back(detail::stats_json(s));
    const std::string name = "equilibrium.axis" + std::to_string(j + 1);
    if (c.model.disorder == 0.0 || !s.stderr_applicable) {
      double worst = 0.0;
      for (double x : v) worst = std::max(worst, std::abs(x));
      res.checks.push_back(check_below(name + ".clean_current", worst, th["equilibrium.clean_current"]));
    } else {
      res.checks.push_back({name + ".stderr_multiple", std::abs(s.mean) / s.stderr_,
                            th["equilibrium.stderr_multiple"], "<=",
                            std::abs(s.mean) <= th["equilibrium.stderr_multiple"] * s.stderr_});
    }
  }
  res.tables["equilibrium_summary"] = summary;
  res.results = {{"fermi_energy", ef}, {"current", axes}};
  return res;
}

/// Grid schedule for the Helffer-Sjostrand convergence study (cells per axis).
inline const std::vector<int>& hs_schedule() {
  static const std::vector<int> s{48, 96, 192, 384};
  return s;
}

struct HSStudy {
  std::vector<int> grid;
  std::vector<double> error;
  std::vector<double> absolute_sum;
};

/// ||hs_apply - apply_spectral|| (operator norm) for a Gaussian, along hs_schedule().
inline HSStudy hs_convergence(const CovariantOperator& h, int order = 5, double width = 1.0) {
  const SpectralData sd = diagonalize(h);
  const SmoothFunction f = gaussian(0.0, width, order + 2);
  const CovariantOperator exact = apply_spectral(sd, f);
  const double lo = sd.eigenvalues(0), hi = sd.eigenvalues(sd.size() - 1);
  HSStudy out;
  for (int n : hs_schedule()) {
    const HSQuadrature q = HSQuadrature::covering(lo, hi, 8.0 * width, order, n, n);
    const HSResult r = hs_apply(h, f, q);
    out.grid.push_back(n);
    out.error.push_back(norms(r.value - exact).norminf);
    out.absolute_sum.push_back(r.absolute_sum);
  }
  return out;
}

/// Every consecutive error ratio is at least `gain`, unless the finer error is already below `floor`.
inline bool refinement_gains_hold(const std::vector<double>& err, double gain, double floor) {
  for (std::size_t i = 1; i < err.size(); ++i)
    if (err[i] > floor && err[i - 1] / err[i] < gain) return false;
  return true;
}

inline SuiteResult suite_funcalc(const ExperimentConfig& c, int threads, const ThresholdSet& th) {
  SuiteResult res{"funcalc-check"};
  struct Row {
    HSStudy hs;
    CombesThomasReport ct;
  };
  auto cells = run_cells<Row>(static_cast<std::size_t>(c.model.realizations), threads, [&](std::size_t i) {
    const CovariantOperator h = build_hamiltonian(realization(c, i));
    return Row{hs_convergence(h), combes_thomas_probe(h, Complex(0.0, 3.0))};
  });
  const auto rows = detail::collect(cells, res, "funcalc-check");
  Table raw{{"realization", "grid", "hs_error", "absolute_sum", "combes_thomas_rate", "combes_thomas_r2"}};
  double final_error = 0.0;
  bool gains = true, ct_positive = true;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t l = 0; l < rows[r].hs.grid.size(); ++l)
      raw.add(r, rows[r].hs.grid[l], rows[r].hs.error[l], rows[r].hs.absolute_sum[l], rows[r].ct.decay.rate,
              rows[r].ct.decay.r_squared);
    final_error = std::max(final_error, rows[r].hs.error.back());
    gains &= refinement_gains_hold(rows[r].hs.error, th["hs.refinement_gain"], th["hs.floor"]);
    ct_positive &= rows[r].ct.decay.rate > 0;
  }
  res.tables["funcalc_raw"] = raw;
  Table summary{{"quantity", "value"}};
  summary.add("max_final_hs_error", final_error);
  summary.add("refinement_gains_hold", gains);
  summary.add("combes_thomas_rates_positive", ct_positive);
  res.tables["funcalc_summary"] = summary;
  res.results = {{"max_final_hs_error", final_error}, {"refinement_gains_hold", gains},
                 {"combes_thomas_rates_positive", ct_positive}};
  res.checks.push_back(check_below("hs.error", final_error, th["hs.error"]));
  res.checks.push_back({"hs.refinement_gain", gains ? 1.0 : 0.0, 1.0, "==", gains});
  res.checks.push_back({"combes_thomas.rate_positive", ct_positive ? 1.0 : 0.0, 1.0, "==", ct_positive});
  return res;
}

/// Trace and product identities on seeded random operators; each entry is a relative defect.
inline std::map<std::string, double> algebra_identities(const LatticeShape& shape, std::uint64_t seed) {
  const Index n = shape.site_count();
  const CovariantOperator a(detail::random_matrix(n, seed), shape);
  const CovariantOperator b(detail::random_matrix(n, seed + 1), shape);
  const CovariantOperator cc(detail::random_matrix(n, seed + 2), shape);
  const Matrix hm = detail::random_matrix(n, seed + 3);
  const CovariantOperator h(0.5 * (hm + hm.adjoint()), shape);
  const double s = norms(a).norminf * norms(b).norminf * norms(cc).norminf;
  auto rel = [&](double x) { return x / std::max(1.0, s); };

  std::map<std::string, double> out;
  out["centrality"] = rel(std::abs(trace_per_unit_volume(prod_diamond(a, b)) -
                                   trace_per_unit_volume(prod_diamond(b, a))));
  out["mixed_centrality"] = rel(std::abs(trace_per_unit_volume(prod_left(cc, a)) -
                                         trace_per_unit_volume(prod_right(a, cc))));
  out["trace_inner_product"] = rel(std::abs(trace_per_unit_volume(prod_diamond(a, b)) - hs_inner(dagger(a), b)));
  out["commutator_shuffle"] = rel(std::abs(trace_per_unit_volume(prod_diamond(comm_odot(cc, a), b)) -
                                           trace_per_unit_volume(prod_left(cc, comm_diamond(a, b)))));
  out["holder"] = rel(std::max(0.0, norms(prod_diamond(a, b)).norm1 - norms(a).norm2 * norms(b).norm2));
  out["dagger_isometry"] = rel(std::abs(norms(dagger(a)).norm1 - norms(a).norm1));
  out["dagger_antiunitary"] = rel(std::abs(hs_inner(a, b) - hs_inner(dagger(b), dagger(a))));
  out["associativity"] = rel(distance(prod_right(prod_left(b, a), cc), prod_left(b, prod_right(a, cc))) /
                             static_cast<double>(n));
  out["product_dagger"] = rel(distance(dagger(prod_right(prod_left(b, a), cc)),
                                       prod_right(prod_left(dagger(cc), dagger(a)), dagger(b))) /
                              static_cast<double>(n));
  out["ddagger_commutator"] =
      rel(distance(comm_ddagger(h, a), CovariantOperator(h.matrix() * a.matrix() - a.matrix() * h.matrix(), shape)) /
          static_cast<double>(n));
  out["trace_bound"] = rel(std::max(0.0, std::abs(trace_per_unit_volume(a)) - norms(a).norm1));
  return out;
}

inline SuiteResult suite_algebra(const ExperimentConfig& c, int threads, const ThresholdSet& th) {
  SuiteResult res{"algebra-check"};
  const double ef = fermi_energy_of(c);
  const LatticeConfig lattice = c.lattice();
  struct Row {
    std::map<std::string, double> identities;
    double triple = 0.0, antisym = 0.0, time_reversal = 0.0, structural = 0.0;
  };
  auto cells = run_cells<Row>(static_cast<std::size_t>(c.model.realizations), threads, [&](std::size_t i) {
    const LatticeModel m = realization(c, i);
    Row row{algebra_identities(m.shape(), realization_seed(c.model.base_seed ^ 0xA16EB7A5ULL, i))};
    const SpectralData sd = diagonalize(build_hamiltonian(m));
    const CovariantOperator p = fermi_projection(sd, ef);
    for (int a = 0; a < m.shape().dimension; ++a) {
      row.triple = std::max(row.triple, triple_commutator_check(p, a).operator_norm);
      row.structural = std::max(row.structural, structural_identity_check(m, ef, a));
    }
    const ConductivityTensor s = sigma_streda(p).sigma;
    for (int j = 0; j < s.rows(); ++j)
      for (int k = 0; k < s.cols(); ++k) row.antisym = std::max(row.antisym, std::abs(s(j, k) + s(k, j)) / (j == k ? 2 : 1));
    // Same disorder, no magnetic field: real Hamiltonian.
    LatticeModel real = m;
    real.flux = {0, 1};
    const double ef0 = auto_fermi_energy(lattice, {0, 1});
    const EquilibriumState z0 = EquilibriumState::projection(ef0);
    try {
      row.time_reversal = sigma_streda(real, ef0).sigma.cwiseAbs().maxCoeff();
      const ConductivityTensor r = sigma_resolvent(real, z0, c.drive.etas.front());
      for (int j = 0; j < r.rows(); ++j)
        for (int k = 0; k < j; ++k) row.time_reversal = std::max(row.time_reversal, std::abs(r(j, k) - r(k, j)));
    } catch (const DegenerateFermiLevel&) {
      row.time_reversal = 0.0;  // disorder closed the clean gap; nothing to test
    }
    return row;
  });
  const auto rows = detail::collect(cells, res, "algebra-check");
  Table raw{{"realization", "identity", "value"}};
  std::map<std::string, double> worst;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto all = rows[r].identities;
    all["triple_commutator"] = rows[r].triple;
    all["structural_identity"] = rows[r].structural;
    all["streda_antisymmetry"] = rows[r].antisym;
    all["time_reversal"] = rows[r].time_reversal;
    for (const auto& [k, v] : all) {
      raw.add(r, k, v);
      worst[k] = std::max(worst[k], v);
    }
  }
  res.tables["algebra_raw"] = raw;
  Table summary{{"identity", "worst"}};
  for (const auto& [k, v] : worst) {
    summary.add(k, v);
    res.results[k] = v;
  }
  res.tables["algebra_summary"] = summary;
  if (rows.empty()) return res;

  for (const auto& [k, v] : rows.front().identities) res.checks.push_back(check_below("algebra." + k, worst[k], th["algebra.identity"]));
  // Position commutators are exact only on the open box; on the torus these are reported, not checked.
  if (c.model.boundary == Boundary::open) {
    res.checks.push_back(check_below("algebra.antisymmetry", worst["streda_antisymmetry"], th["algebra.antisymmetry"]));
    res.checks.push_back(check_below("algebra.time_reversal", worst["time_reversal"], th["algebra.time_reversal"]));
    res.checks.push_back(check_below("algebra.triple_open", worst["triple_commutator"], th["algebra.triple_open"]));
    res.checks.push_back(check_below("algebra.structural_identity", worst["structural_identity"], th["algebra.structural"]));
  }
  return res;
}

inline SuiteResult run_suite(const ExperimentConfig& c, int threads = 1) {
  c.validate();
  const ThresholdSet th(c.run.tolerances);
  const std::string& e = c.run.experiment;
  if (e == "hall") return suite_hall(c, threads, th);
  if (e == "kubo-sweep") return suite_kubo_sweep(c, threads, th);
  if (e == "dynamics-check") return suite_dynamics(c, threads, th);
  if (e == "equilibrium") return suite_equilibrium(c, threads, th);
  if (e == "funcalc-check") return suite_funcalc(c, threads, th);
  if (e == "algebra-check") return suite_algebra(c, threads, th);
  throw ConfigError("run.experiment: unknown experiment '" + e + "'");
}

// ---------------------------------------------------------------------------
// Outputs

/// 64-bit FNV-1a, used for config hashes and the output inventory.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream o;
  o << std::hex;
  o.width(16);
  o.fill('0');
  o << x;
  return o.str();
}

struct OutputFile {
  std::string name;
  std::size_t bytes = 0;
  std::string fnv1a;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string code_version = kCodeVersion;
  std::vector<std::uint64_t> seeds;
  std::string started;
  std::string finished;
  int threads = 1;
  std::vector<OutputFile> outputs;
  bool checks_passed = false;
  std::size_t cell_errors = 0;

  nlohmann::json to_json() const {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : outputs) files.push_back({{"file", f.name}, {"bytes", f.bytes}, {"fnv1a", f.fnv1a}});
    return {{"experiment", experiment}, {"config_hash", config_hash}, {"code_version", code_version},
            {"seeds", seeds},           {"started", started},         {"finished", finished},
            {"threads", threads},       {"outputs", files},           {"checks_passed", checks_passed},
            {"cell_errors", cell_errors}};
  }
};

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Summary JSON: schema-versioned, free of timestamps so reruns are byte-identical.
inline nlohmann::json summary_json(const ExperimentConfig& c, const SuiteResult& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& k : r.checks)
    checks.push_back({{"name", k.name}, {"value", k.value}, {"limit", k.limit}, {"relation", k.relation},
                      {"passed", k.passed}});
  return {{"schema_version", kSummarySchemaVersion},
          {"experiment", r.experiment},
          {"config_hash", hex64(fnv1a(serialize(c)))},
          {"n_realizations", c.model.realizations},
          {"results", r.results},
          {"checks", checks},
          {"cell_errors", r.cell_errors},
          {"passed", r.all_passed()}};
}

/// Runs the configured experiment and writes config echo, CSV tables, the JSON
/// summary and the manifest into `out_dir`.
inline RunManifest run_experiment(const ExperimentConfig& c, const std::string& out_dir, int threads = 1,
                                  SuiteResult* result = nullptr) {
  RunManifest man;
  man.started = utc_now();
  man.experiment = c.run.experiment;
  man.config_hash = hex64(fnv1a(serialize(c)));
  man.seeds = realization_seeds(c);
  man.threads = threads;
  const SuiteResult r = run_suite(c, threads);

  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::binary);
    f << body;
    if (!f) throw Error("cannot write " + name);
    man.outputs.push_back({name, body.size(), hex64(fnv1a(body))});
  };
  write("config.ini", serialize(c));
  for (const auto& [stem, table] : r.tables) write(stem + ".csv", table.to_csv());
  std::string stem = r.experiment;
  std::replace(stem.begin(), stem.end(), '-', '_');
  write(stem + "_summary.json", summary_json(c, r).dump(2) + "\n");

  man.checks_passed = r.all_passed();
  man.cell_errors = r.cell_errors.size();
  man.finished = utc_now();
  std::ofstream mf(std::filesystem::path(out_dir) / "manifest.json");
  mf << man.to_json().dump(2) << "\n";
  if (result) *result = r;
  return man;
}

}  // namespace kubo
