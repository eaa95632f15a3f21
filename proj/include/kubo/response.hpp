#pragma once

// Linear response: net current, the conductivity tensor by resolvent, time
// integral and finite differences, the Liouvillian, and the Kubo-Streda form.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "kubo/dynamics.hpp"
#include "kubo/funcalc.hpp"
#include "kubo/opspace.hpp"

namespace kubo {

/// The Liouvillian B -> [H, B], acting as (E_m - E_n) B_mn in the eigenbasis of H.
class LiouvillianRep {
 public:
  explicit LiouvillianRep(SpectralData sd) : sd_(std::move(sd)) {
    const double width = sd_.size() ? sd_.eigenvalues(sd_.size() - 1) - sd_.eigenvalues(0) : 0.0;
    kernel_tolerance_ = 1e-9 * std::max(width, 1.0);
  }

  const SpectralData& spectrum() const { return sd_; }
  double kernel_tolerance() const { return kernel_tolerance_; }

  double frequency(Index m, Index n) const { return sd_.eigenvalues(m) - sd_.eigenvalues(n); }

  /// Entrywise action in the eigenbasis: (to eigenbasis) -> multiply -> (back).
  template <class F>
  CovariantOperator map_entries(const CovariantOperator& b, F&& factor) const {
    Matrix e = sd_.to_eigenbasis(b.matrix());
    for (Index n = 0; n < e.cols(); ++n)
      for (Index m = 0; m < e.rows(); ++m) e(m, n) *= factor(m, n);
    return {sd_.from_eigenbasis(e), b.shape()};
  }

  CovariantOperator apply(const CovariantOperator& b) const {
    return map_entries(b, [&](Index m, Index n) { return Complex(frequency(m, n)); });
  }

  /// exp(-i t L) B = U0(t) B U0(-t).
  CovariantOperator evolve(double t, const CovariantOperator& b) const {
    return map_entries(b, [&](Index m, Index n) { return std::polar(1.0, -t * frequency(m, n)); });
  }

 private:
  SpectralData sd_;
  double kernel_tolerance_ = 1e-9;
};

/// (iL + eta)^(-1) B.
inline CovariantOperator liouvillian_resolvent(const LiouvillianRep& l, double eta, const CovariantOperator& b) {
  if (!(eta > 0)) throw DomainError("liouvillian_resolvent: eta must be positive");
  return l.map_entries(b, [&](Index m, Index n) { return 1.0 / Complex(eta, l.frequency(m, n)); });
}

/// Orthogonal projection onto (Ker L)^perp: eigenbasis entries with |E_m - E_n| < tol are dropped.
inline CovariantOperator kernel_projection(const LiouvillianRep& l, const CovariantOperator& b, double tol = -1.0) {
  if (tol < 0) tol = l.kernel_tolerance();
  if (!(tol > 0)) throw DomainError("kernel_projection: tolerance must be positive");
  return l.map_entries(b, [&](Index m, Index n) { return std::abs(l.frequency(m, n)) < tol ? 0.0 : 1.0; });
}

/// i [x_k, zeta] with the minimal-image displacement.
inline CovariantOperator current_source(const CovariantOperator& zeta, int axis) {
  return kI * position_commutator(zeta, axis);
}

/// Conductivity tensor; entry (j, k) is the response of the current along j to a field along k.
using ConductivityTensor = Eigen::MatrixXcd;

namespace detail {

struct ResponseSetup {
  SpectralData sd;
  CovariantOperator zeta;
  std::vector<Matrix> velocity_eig;  // V* v_j V
  std::vector<Matrix> source_eig;    // V* i[x_k, zeta] V
};

inline ResponseSetup response_setup(const LatticeModel& model, const EquilibriumState& zeta_spec) {
  ResponseSetup s{diagonalize(build_hamiltonian(model)), CovariantOperator{}, {}, {}};
  s.zeta = zeta_spec.evaluate(s.sd);
  for (int a = 0; a < model.shape().dimension; ++a) {
    s.velocity_eig.push_back(s.sd.to_eigenbasis(velocity_operator(model, a).matrix()));
    s.source_eig.push_back(s.sd.to_eigenbasis(current_source(s.zeta, a).matrix()));
  }
  return s;
}

}  // namespace detail

/// sigma_jk(eta) = -T{ v_j (iL + eta)^(-1) (i [x_k, zeta]) }.
inline ConductivityTensor sigma_resolvent(const LatticeModel& model, const EquilibriumState& zeta_spec, double eta) {
  if (!(eta > 0)) throw DomainError("sigma_resolvent: eta must be positive");
  const auto s = detail::response_setup(model, zeta_spec);
  const int d = model.shape().dimension;
  const Index n = s.sd.size();
  ConductivityTensor sigma(d, d);
  for (int k = 0; k < d; ++k) {
    Matrix r = s.source_eig[static_cast<std::size_t>(k)];
    for (Index b = 0; b < n; ++b)
      for (Index a = 0; a < n; ++a) r(a, b) /= Complex(eta, s.sd.eigenvalues(a) - s.sd.eigenvalues(b));
    for (int j = 0; j < d; ++j)
      sigma(j, k) = -(s.velocity_eig[static_cast<std::size_t>(j)].transpose().cwiseProduct(r)).sum() /
                    static_cast<double>(n);
  }
  return sigma;
}

/// Composite Gauss-Legendre rule on [s_min, 0] for the time-domain Kubo formula.
struct KuboQuadrature {
  double panel_length = 1.0;
  double truncation_tolerance = 1e-12;

  KuboQuadrature refined() const { return {panel_length / 2, truncation_tolerance}; }
};

/// sigma_jk(eta) = -T{ int_{s_min}^0 e^{eta r} v_j U0(-r)(i[x_k, zeta]) dr }.
inline ConductivityTensor sigma_kubo_integral(const LatticeModel& model, const EquilibriumState& zeta_spec, double eta,
                                              const KuboQuadrature& quad = {}) {
  if (!(eta > 0)) throw DomainError("sigma_kubo_integral: eta must be positive");
  if (!(quad.panel_length > 0)) throw ConfigError("panel length must be positive");
  using rule = boost::math::quadrature::gauss<double, 20>;
  const auto s = detail::response_setup(model, zeta_spec);
  const int d = model.shape().dimension;
  const Index n = s.sd.size();
  const double s_min = std::log(quad.truncation_tolerance) / eta;
  const int panels = static_cast<int>(std::ceil(-s_min / quad.panel_length - 1e-9));
  const double len = -s_min / panels;

  // Collect nodes and weights (including e^{eta r}) once.
  std::vector<double> nodes, weights;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  for (int p = 0; p < panels; ++p) {
    const double a = s_min + p * len, mid = a + 0.5 * len, half = 0.5 * len;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int sign : {1, -1}) {
        if (x[i] == 0.0 && sign < 0) continue;
        const double r = mid + sign * half * x[i];
        nodes.push_back(r);
        weights.push_back(half * w[i] * std::exp(eta * r));
      }
    }
  }

  // kernel_ab = int e^{eta r} e^{i r (E_a - E_b)} dr, shared by every (j, k)
  Matrix kernel(n, n);
  for (Index b = 0; b < n; ++b)
    for (Index a = 0; a < n; ++a) {
      const double omega = s.sd.eigenvalues(a) - s.sd.eigenvalues(b);
      Complex acc = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) acc += weights[q] * std::polar(1.0, nodes[q] * omega);
      kernel(a, b) = acc;
    }
  ConductivityTensor sigma(d, d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      sigma(j, k) = -(s.velocity_eig[static_cast<std::size_t>(j)].transpose().cwiseProduct(
                          s.source_eig[static_cast<std::size_t>(k)]).cwiseProduct(kernel)).sum() /
                    static_cast<double>(n);
  return sigma;
}

enum class DensityRoute { ode, duhamel };

struct CurrentResult {
  RealVector current;
  double imaginary_residue = 0.0;
};

/// J_j = T(v_j(0) rho(0)) - T(v_j zeta), with v(0) the velocity of H(0).
inline CurrentResult net_current(const LatticeModel& model, const DriveProtocol& drive,
                                 const EquilibriumState& zeta_spec, const TimeGrid& grid,
                                 DensityRoute route = DensityRoute::ode) {
  const int d = model.shape().dimension;
  CurrentResult out{RealVector::Zero(d), 0.0};
  if (drive.is_zero()) return out;
  const CovariantOperator zeta = zeta_spec.evaluate(diagonalize(build_hamiltonian(model)));
  const DensityMatrix rho = route == DensityRoute::ode ? evolve_density_ode(model, drive, zeta_spec, 0.0, grid)
                                                       : evolve_density_duhamel(model, drive, zeta_spec, 0.0, grid);
  const FieldVector f0 = drive.shift_at(0.0);
  for (int j = 0; j < d; ++j) {
    const Complex jj = trace_per_unit_volume(prod_left(velocity_operator(model, j, f0), rho.rho)) -
                       trace_per_unit_volume(prod_left(velocity_operator(model, j), zeta));
    out.current(j) = jj.real();
    out.imaginary_residue = std::max(out.imaginary_residue, std::abs(jj.imag()));
  }
  return out;
}

/// T(D_j zeta) with D_j = v_j / 2; vanishes at equilibrium.
inline CurrentResult equilibrium_current(const LatticeModel& model, const EquilibriumState& zeta_spec) {
  const int d = model.shape().dimension;
  const CovariantOperator zeta = zeta_spec.evaluate(diagonalize(build_hamiltonian(model)));
  CurrentResult out{RealVector::Zero(d), 0.0};
  for (int j = 0; j < d; ++j) {
    const Complex c = 0.5 * trace_per_unit_volume(prod_left(velocity_operator(model, j), zeta));
    out.current(j) = c.real();
    out.imaginary_residue = std::max(out.imaginary_residue, std::abs(c.imag()));
  }
  return out;
}

/// Central difference (J(+delta e_k) - J(-delta e_k)) / (2 delta) with full dynamics per evaluation.
inline ConductivityTensor sigma_finite_difference(const LatticeModel& model, const EquilibriumState& zeta_spec,
                                                  double eta, double delta, const TimeGrid& grid,
                                                  DensityRoute route = DensityRoute::ode) {
  if (!(delta > 0)) throw DomainError("sigma_finite_difference: delta must be positive");
  const int d = model.shape().dimension;
  ConductivityTensor sigma = ConductivityTensor::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    DriveProtocol plus{eta, {0.0, 0.0}}, minus{eta, {0.0, 0.0}};
    plus.field[static_cast<std::size_t>(k)] = delta;
    minus.field[static_cast<std::size_t>(k)] = -delta;
    const RealVector jp = net_current(model, plus, zeta_spec, grid, route).current;
    const RealVector jm = net_current(model, minus, zeta_spec, grid, route).current;
    for (int j = 0; j < d; ++j) sigma(j, k) = (jp(j) - jm(j)) / (2.0 * delta);
  }
  return sigma;
}

/// Richardson combination (4 sigma(delta/2) - sigma(delta)) / 3, cancelling the delta^2 term.
inline ConductivityTensor sigma_finite_difference_richardson(const LatticeModel& model,
                                                             const EquilibriumState& zeta_spec, double eta,
                                                             double delta, const TimeGrid& grid,
                                                             DensityRoute route = DensityRoute::ode) {
  const ConductivityTensor coarse = sigma_finite_difference(model, zeta_spec, eta, delta, grid, route);
  const ConductivityTensor fine = sigma_finite_difference(model, zeta_spec, eta, 0.5 * delta, grid, route);
  return (4.0 * fine - coarse) / 3.0;
}

struct StredaResult {
  ConductivityTensor sigma;  // -i T{P [[x_j, P], [x_k, P]]}
  double hall_scaled = 0.0;  // -2 pi i T{P [[x_1, P], [x_2, P]]} (2D only)
  double hall_imaginary = 0.0;
};

inline StredaResult sigma_streda(const CovariantOperator& p) {
  const int d = p.shape().dimension;
  std::vector<CovariantOperator> c;
  for (int a = 0; a < d; ++a) c.push_back(position_commutator(p, a));
  StredaResult out{ConductivityTensor::Zero(d, d)};
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      const CovariantOperator inner = comm_diamond(c[static_cast<std::size_t>(j)], c[static_cast<std::size_t>(k)]);
      out.sigma(j, k) = -kI * trace_per_unit_volume(prod_left(p, inner));
    }
  if (d == 2) {
    const Complex scaled = 2.0 * kPi * out.sigma(0, 1);
    out.hall_scaled = scaled.real();
    out.hall_imaginary = scaled.imag();
  }
  return out;
}

inline StredaResult sigma_streda(const LatticeModel& model, double fermi_energy) {
  return sigma_streda(fermi_projection(diagonalize(build_hamiltonian(model)), fermi_energy));
}

/// ||[P, [P, [x_k, P]]] - [x_k, P]|| in operator norm and in |||.|||_2.
struct TripleCommutator {
  double operator_norm = 0.0;
  double norm2 = 0.0;
};

inline TripleCommutator triple_commutator_check(const CovariantOperator& p, int axis) {
  const CovariantOperator c = position_commutator(p, axis);
  const CovariantOperator lhs = comm_odot(p, comm_odot(p, c));
  const OperatorNorms n = norms(lhs - c);
  return {n.norminf, n.norm2};
}

/// sigma_jk(eta) for zeta = P through <<i (L + i eta)^(-1) L [P, i[x_j, P]], i[x_k, P]>>.
inline ConductivityTensor sigma_liouvillian_form(const LatticeModel& model, double fermi_energy, double eta) {
  const LiouvillianRep l(diagonalize(build_hamiltonian(model)));
  const CovariantOperator p = fermi_projection(l.spectrum(), fermi_energy);
  const int d = model.shape().dimension;
  ConductivityTensor sigma(d, d);
  for (int j = 0; j < d; ++j) {
    const CovariantOperator a = comm_odot(p, current_source(p, j));
    const CovariantOperator la = l.apply(a);
    // (L + i eta)^(-1) = -i (iL - eta)^(-1) ... applied entrywise
    const CovariantOperator res =
        l.map_entries(la, [&](Index m, Index n) { return kI / Complex(l.frequency(m, n), eta); });
    for (int k = 0; k < d; ++k) sigma(j, k) = hs_inner(res, current_source(p, k));
  }
  return sigma;
}

/// || [P, v_j] f(H) + [H, i[x_j, P]]_dagger f(H) || (operator norm), with f a smooth
/// window equal to 1 on the spectrum. Vanishes exactly on the open box.
inline double structural_identity_check(const LatticeModel& model, double fermi_energy, int axis) {
  const CovariantOperator h = build_hamiltonian(model);
  const SpectralData sd = diagonalize(h);
  const CovariantOperator p = fermi_projection(sd, fermi_energy);
  const double lo = sd.eigenvalues(0) - 2.0, hi = sd.eigenvalues(sd.size() - 1) + 2.0;
  const CovariantOperator f = apply_spectral(sd, smooth_window(lo, hi, 20.0));
  const CovariantOperator lhs = prod_right(comm_odot(p, velocity_operator(model, axis)), f);
  const CovariantOperator rhs = prod_right(comm_ddagger(h, current_source(p, axis)), f);
  return norms(lhs + rhs).norminf;
}

/// One point of an eta sweep.
struct ResponseReport {
  double eta = 0.0;
  std::optional<ConductivityTensor> sigma_fd;
  std::optional<ConductivityTensor> sigma_kubo;
  ConductivityTensor sigma_resolvent;
  ConductivityTensor sigma_streda;
  double streda_gap = 0.0;  // max_jk |sigma_resolvent - sigma_streda|
};

inline double max_abs_difference(const ConductivityTensor& a, const ConductivityTensor& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// sigma_resolvent along a descending list of eta, compared with the Kubo-Streda tensor.
inline std::vector<ResponseReport> eta_sweep(const LatticeModel& model, double fermi_energy,
                                             const std::vector<double>& etas) {
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0)) throw DomainError("eta_sweep: eta must be positive");
    if (i && !(etas[i] < etas[i - 1])) throw DomainError("eta_sweep: etas must be strictly descending");
  }
  const auto zeta = EquilibriumState::projection(fermi_energy);
  const ConductivityTensor streda = sigma_streda(model, fermi_energy).sigma;
  std::vector<ResponseReport> out;
  for (double eta : etas) {
    ResponseReport r;
    r.eta = eta;
    r.sigma_resolvent = sigma_resolvent(model, zeta, eta);
    r.sigma_streda = streda;
    r.streda_gap = max_abs_difference(r.sigma_resolvent, streda);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace kubo
