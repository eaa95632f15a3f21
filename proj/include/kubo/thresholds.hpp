#pragma once

// Pass/fail thresholds, in one place. The CLI's --check mode, the acceptance
// test and the README all read from this table.

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "kubo/core.hpp"

namespace kubo {

struct Threshold {
  std::string_view key;
  double value;
  std::string_view meaning;
};

inline constexpr std::array kThresholds{
    Threshold{"hall.clean_integer_distance", 0.02, "| |2 pi sigma_12| - nearest integer |, clean gapped torus"},
    Threshold{"hall.ensemble_integer_distance", 0.05, "same, ensemble mean over disorder"},
    Threshold{"kubo.integral_vs_resolvent", 1e-6, "max |sigma_kubo - sigma_resolvent|"},
    Threshold{"kubo.fd_vs_resolvent", 1e-3, "max |sigma_fd - sigma_resolvent|"},
    Threshold{"eta.final_streda_gap", 0.05, "max |sigma(eta) - sigma_streda| at the smallest eta"},
    Threshold{"liouville.duhamel_vs_ode", 1e-6, "|||rho_duhamel - rho_ode|||_2"},
    Threshold{"liouville.norm_drift", 1e-8, "| |||rho(t)|||_2 - |||zeta|||_2 |"},
    Threshold{"liouville.projection_defect", 1e-8, "||rho^2 - rho|| for a Fermi projection"},
    Threshold{"liouville.min_eigenvalue", -1e-10, "lower bound on the spectrum of rho"},
    Threshold{"gauge.discrepancy", 1e-8, "||G(t)* psi_vec - psi_scal||"},
    Threshold{"duhamel.residual", 1e-8, "Duhamel identity residual"},
    Threshold{"equilibrium.clean_current", 1e-8, "|T(D_j f(H))|, clean torus"},
    Threshold{"equilibrium.stderr_multiple", 3.0, "|ensemble mean| in units of its standard error"},
    Threshold{"hs.error", 1e-4, "||hs_apply - apply_spectral|| on the finest grid"},
    Threshold{"hs.refinement_gain", 2.0, "minimum error ratio per grid halving above the floor"},
    Threshold{"hs.floor", 1e-10, "error below which refinement gains are not required"},
    Threshold{"algebra.triple_open", 1e-12, "||[P,[P,[x,P]]] - [x,P]||, open box"},
    Threshold{"algebra.antisymmetry", 1e-10, "|sigma_jk + sigma_kj| and |sigma_jj|"},
    Threshold{"algebra.time_reversal", 1e-10, "max |sigma| for a real Hamiltonian"},
    Threshold{"algebra.structural", 1e-10, "||[P, v_j] f(H) + [H, i[x_j, P]] f(H)||, open box"},
    Threshold{"algebra.identity", 1e-12, "trace and product identities on random operators"},
    Threshold{"propagator.unitarity", 1e-10, "||U*U - I||"},
    Threshold{"propagator.cocycle_factor", 10.0, "cocycle defect in units of the method's step-halving change"},
    Threshold{"propagator.weight_margin", 1e-6, "relative slack in the weighted-norm bound"},
    Threshold{"propagator.order_ratio_min", 1.6, "error ratio per halving, first-order method, lower"},
    Threshold{"propagator.order_ratio_max", 2.5, "error ratio per halving, first-order method, upper"},
};

/// Looks up a threshold by key. Throws ConfigError for unknown keys.
inline double threshold(std::string_view key) {
  for (const auto& t : kThresholds)
    if (t.key == key) return t.value;
  throw ConfigError("unknown threshold '" + std::string(key) + "'");
}

/// Threshold table with per-run overrides applied; overrides of unknown keys are rejected.
class ThresholdSet {
 public:
  ThresholdSet() = default;
  explicit ThresholdSet(const std::map<std::string, double>& overrides) : overrides_(overrides) {
    for (const auto& [k, v] : overrides_) threshold(k);
  }

  double operator[](std::string_view key) const {
    const auto it = overrides_.find(std::string(key));
    return it != overrides_.end() ? it->second : threshold(key);
  }

 private:
  std::map<std::string, double> overrides_;
};

}  // namespace kubo
