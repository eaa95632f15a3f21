#pragma once

// Adiabatically switched uniform field in the vector-potential gauge, unitary
// propagators, the Duhamel identity and the driven density matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include "kubo/funcalc.hpp"
#include "kubo/model.hpp"
#include "kubo/opspace.hpp"

namespace kubo {

using FieldVector = std::array<double, 2>;

/// E(t) = e^{eta t_-} E and its primitive F(t) = (e^{eta t_-}/eta + t_+) E.
struct DriveProtocol {
  double eta = 1.0;
  FieldVector field{0.0, 0.0};

  void validate() const {
    if (!(eta > 0) || !std::isfinite(eta)) throw DomainError("drive: eta must be finite and positive");
  }

  double envelope(double t) const { return std::exp(eta * std::min(t, 0.0)); }

  FieldVector field_at(double t) const {
    const double e = envelope(t);
    return {e * field[0], e * field[1]};
  }

  FieldVector shift_at(double t) const {
    const double a = envelope(t) / eta + std::max(t, 0.0);
    return {a * field[0], a * field[1]};
  }

  bool is_zero() const { return field[0] == 0.0 && field[1] == 0.0; }
};

enum class StepMethod { riemann_product, ode_rk4, magnus2 };

inline std::string to_string(StepMethod m) {
  switch (m) {
    case StepMethod::riemann_product: return "riemann_product";
    case StepMethod::ode_rk4: return "ode_rk4";
    case StepMethod::magnus2: return "magnus2";
  }
  return "?";
}

inline StepMethod step_method_from_string(const std::string& s) {
  if (s == "riemann_product") return StepMethod::riemann_product;
  if (s == "ode_rk4") return StepMethod::ode_rk4;
  if (s == "magnus2") return StepMethod::magnus2;
  throw ConfigError("unknown method '" + s + "' (expected riemann_product|ode_rk4|magnus2)");
}

/// Time discretization. s_min truncates -infinity; the nominal step is shrunk so
/// that every interval is an integer number of equal steps.
struct TimeGrid {
  double s_min = -30.0;
  double step = 0.05;
  StepMethod method = StepMethod::ode_rk4;
  double truncation_tolerance = 1e-12;

  /// s_min = log(tolerance) / eta, so that e^{eta s_min} = tolerance.
  static TimeGrid for_drive(const DriveProtocol& drive, double step, StepMethod method = StepMethod::ode_rk4,
                            double tolerance = 1e-12) {
    drive.validate();
    return {std::log(tolerance) / drive.eta, step, method, tolerance};
  }

  void validate(const DriveProtocol& drive) const {
    if (!(step > 0)) throw ConfigError("time step must be positive");
    if (!(std::exp(drive.eta * s_min) <= truncation_tolerance * (1.0 + 1e-9)))
      throw ConfigError("s_min = " + std::to_string(s_min) + " violates the truncation tolerance " +
                        std::to_string(truncation_tolerance) + " at eta = " + std::to_string(drive.eta));
  }

  /// Number of equal steps covering [a, b], rounded up to a multiple of `multiple`.
  int steps_between(double a, double b, int multiple = 1) const {
    const double len = std::abs(b - a);
    if (len == 0.0) return 0;
    int n = static_cast<int>(std::ceil(len / step - 1e-9));
    n = std::max(n, 1);
    if (n % multiple) n += multiple - n % multiple;
    return n;
  }
};

/// Row-sum bound on ||H||; invariant under the bond phases of the drive.
inline double gershgorin_norm(const CovariantOperator& h) { return h.matrix().cwiseAbs().rowwise().sum().maxCoeff(); }

inline void check_step(double h, double norm_bound) {
  if (!(std::abs(h) * norm_bound < 0.5))
    throw StepSizeError("time step " + std::to_string(std::abs(h)) + " violates h*||H|| < 0.5 with ||H|| <= " +
                        std::to_string(norm_bound));
}

/// H(t)_mn = e^{i F(t).(x_m - x_n)} H_mn, bond by bond (wrap bonds included).
inline CovariantOperator hamiltonian_at(const LatticeModel& model, const DriveProtocol& drive, double t) {
  return build_hamiltonian(model, drive.shift_at(t));
}

/// G(t) = diag(e^{i F(t).x}) with integer site coordinates.
inline CovariantOperator gauge_operator(const LatticeModel& model, const DriveProtocol& drive, double t) {
  const LatticeShape shape = model.shape();
  const FieldVector f = drive.shift_at(t);
  const Index n = shape.site_count();
  Matrix g = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const Site x = shape.site(i);
    g(i, i) = std::polar(1.0, f[0] * x[0] + f[1] * x[1]);
  }
  return {std::move(g), shape};
}

/// -i H(t) by way of dH/dF_j = -v_j(F): H'(t) = -sum_j E_j(t) v_j(F(t)).
inline CovariantOperator hamiltonian_derivative(const LatticeModel& model, const DriveProtocol& drive, double t) {
  const FieldVector e = drive.field_at(t);
  const FieldVector f = drive.shift_at(t);
  CovariantOperator out = CovariantOperator::zero(model.shape());
  for (int axis = 0; axis < model.shape().dimension; ++axis)
    if (e[axis] != 0.0) out -= Complex(e[axis]) * velocity_operator(model, axis, f);
  return out;
}

struct Propagator {
  CovariantOperator u;
  double t = 0.0;
  double s = 0.0;
  StepMethod method = StepMethod::ode_rk4;
  int steps = 0;

  double unitarity_defect() const {
    return (u.matrix().adjoint() * u.matrix() - Matrix::Identity(u.size(), u.size())).norm();
  }
};

namespace detail {

/// exp(-i h A) for Hermitian A.
inline Matrix unitary_exp(const Matrix& a, double h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  Vector phases(es.eigenvalues().size());
  for (Index i = 0; i < phases.size(); ++i) phases(i) = std::polar(1.0, -h * es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// Time-dependent generator: either the vector-potential H(t) or H + E(t).X.
struct Generator {
  const LatticeModel* model;
  const DriveProtocol* drive;
  std::vector<Bond> bond_list;
  bool scalar_gauge = false;
  Eigen::SparseMatrix<Complex> static_h;
  std::vector<std::array<double, 2>> coords;

  Generator(const LatticeModel& m, const DriveProtocol& d, bool scalar = false)
      : model(&m), drive(&d), bond_list(bonds(m)), scalar_gauge(scalar) {
    m.validate();
    static_h = sparse_hamiltonian(m, bond_list, {0.0, 0.0});
    const LatticeShape shape = m.shape();
    for (Index i = 0; i < shape.site_count(); ++i) {
      const Site x = shape.site(i);
      coords.push_back({static_cast<double>(x[0]), static_cast<double>(x[1])});
    }
  }

  Eigen::SparseMatrix<Complex> sparse(double t) const {
    if (!scalar_gauge) return sparse_hamiltonian(*model, bond_list, drive->shift_at(t));
    Eigen::SparseMatrix<Complex> h = static_h;
    const FieldVector e = drive->field_at(t);
    for (std::size_t i = 0; i < coords.size(); ++i)
      h.coeffRef(static_cast<Index>(i), static_cast<Index>(i)) += e[0] * coords[i][0] + e[1] * coords[i][1];
    return h;
  }

  Matrix dense(double t) const { return Matrix(sparse(t)); }

  /// Bound on sup_t ||generator(t)|| used by the stability guard.
  double norm_bound(double t_lo, double t_hi) const {
    double b = 0.0;
    for (Index c = 0; c < static_h.outerSize(); ++c) {
      double row = 0.0;
      for (Eigen::SparseMatrix<Complex>::InnerIterator it(static_h, c); it; ++it) row += std::abs(it.value());
      b = std::max(b, row);
    }
    if (scalar_gauge) {
      const double e = std::max(drive->envelope(t_lo), drive->envelope(t_hi));
      double xmax = 0.0;
      for (const auto& x : coords) xmax = std::max(xmax, std::abs(drive->field[0] * x[0] + drive->field[1] * x[1]));
      b += e * xmax;
    }
    return b;
  }
};

/// One step of i dX/dt = H(t) X from r to r + h (X a state vector or a matrix of columns).
template <class M>
void step_state(const Generator& gen, StepMethod method, double r, double h, M& x) {
  switch (method) {
    case StepMethod::riemann_product:
      x = (unitary_exp(gen.dense(r), h) * x).eval();
      return;
    case StepMethod::magnus2:
      x = (unitary_exp(gen.dense(r + 0.5 * h), h) * x).eval();
      return;
    case StepMethod::ode_rk4: {
      const auto h0 = gen.sparse(r);
      const auto hm = gen.sparse(r + 0.5 * h);
      const auto h1 = gen.sparse(r + h);
      const Complex mi(0.0, -1.0);
      const M k1 = mi * (h0 * x);
      const M k2 = mi * (hm * (x + (0.5 * h) * k1));
      const M k3 = mi * (hm * (x + (0.5 * h) * k2));
      const M k4 = mi * (h1 * (x + h * k3));
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      return;
    }
  }
}

/// One step of i d rho/dt = [H(t), rho] from r to r + h.
inline void step_density(const Generator& gen, StepMethod method, double r, double h, Matrix& rho) {
  switch (method) {
    case StepMethod::riemann_product:
    case StepMethod::magnus2: {
      const Matrix u = unitary_exp(gen.dense(method == StepMethod::magnus2 ? r + 0.5 * h : r), h);
      rho = (u * rho * u.adjoint()).eval();
      return;
    }
    case StepMethod::ode_rk4: {
      const auto h0 = gen.sparse(r);
      const auto hm = gen.sparse(r + 0.5 * h);
      const auto h1 = gen.sparse(r + h);
      const Complex mi(0.0, -1.0);
      auto lv = [&](const Eigen::SparseMatrix<Complex>& hh, const Matrix& a) -> Matrix {
        Matrix ha = hh * a;
        return mi * (ha - ha.adjoint());  // [H, a] with a Hermitian
      };
      const Matrix k1 = lv(h0, rho);
      const Matrix k2 = lv(hm, rho + (0.5 * h) * k1);
      const Matrix k3 = lv(hm, rho + (0.5 * h) * k2);
      const Matrix k4 = lv(h1, rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      return;
    }
  }
}

inline std::vector<double> simpson_weights(int n, double h) {
  std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
  if (n == 0) return w;
  for (int k = 0; k <= n; ++k) w[static_cast<std::size_t>(k)] = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
  for (double& x : w) x *= h / 3.0;
  return w;
}

}  // namespace detail

/// U(t, s) solving i d_t U = H(t) U. For t < s the product methods return the
/// adjoint of the forward product on the same grid; RK4 integrates backwards.
inline Propagator propagate(const LatticeModel& model, const DriveProtocol& drive, double t, double s,
                            const TimeGrid& grid) {
  drive.validate();
  detail::Generator gen(model, drive);
  const Index n = model.shape().site_count();
  const int steps = grid.steps_between(s, t);
  Propagator out{CovariantOperator::identity(model.shape()), t, s, grid.method, steps};
  if (steps == 0) return out;
  const double h = (t - s) / steps;
  check_step(h, gen.norm_bound(std::min(s, t), std::max(s, t)));

  if (t < s && grid.method != StepMethod::ode_rk4) {
    Propagator fwd = propagate(model, drive, s, t, grid);
    out.u = dagger(fwd.u);
    return out;
  }
  Matrix u = Matrix::Identity(n, n);
  for (int k = 0; k < steps; ++k) detail::step_state(gen, grid.method, s + k * h, h, u);
  out.u = CovariantOperator(std::move(u), model.shape());
  return out;
}

struct DuhamelResidual {
  double residual = 0.0;
  double quadrature_estimate = 0.0;  // |Simpson(h) - Simpson(2h)| of the integral term
  int steps = 0;
};

/// || U(t,s) psi - U0(t-s) psi - i int_s^t U0(t-r) dH(r) U(r,s) psi dr ||, dH(r) = -(H(r) - H).
inline DuhamelResidual duhamel_residual(const LatticeModel& model, const DriveProtocol& drive, double t, double s,
                                        const Vector& psi, const TimeGrid& grid) {
  if (s > t) throw DomainError("duhamel_residual: requires s <= t");
  drive.validate();
  detail::Generator gen(model, drive);
  const CovariantOperator h_static = build_hamiltonian(model);
  const SpectralData sd = diagonalize(h_static);
  auto free_evolve = [&](double tau, const Vector& x) -> Vector {
    Vector c = sd.eigenvectors.adjoint() * x;
    for (Index i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, -tau * sd.eigenvalues(i));
    return sd.eigenvectors * c;
  };

  const int n = grid.steps_between(s, t, 4);
  DuhamelResidual out;
  out.steps = n;
  if (n == 0) return out;
  const double h = (t - s) / n;
  check_step(h, gen.norm_bound(s, t));

  const auto w = detail::simpson_weights(n, h);
  const auto w2 = detail::simpson_weights(n / 2, 2 * h);
  Vector integral = Vector::Zero(psi.size());
  Vector integral_coarse = Vector::Zero(psi.size());
  Vector state = psi;
  for (int k = 0; k <= n; ++k) {
    const double r = s + k * h;
    const Matrix dh = -(gen.dense(r) - h_static.matrix());
    const Vector g = free_evolve(t - r, dh * state);
    integral += w[static_cast<std::size_t>(k)] * g;
    if (k % 2 == 0) integral_coarse += w2[static_cast<std::size_t>(k / 2)] * g;
    if (k < n) detail::step_state(gen, grid.method, r, h, state);
  }
  out.residual = (state - free_evolve(t - s, psi) - kI * integral).norm();
  out.quadrature_estimate = (integral - integral_coarse).norm();
  return out;
}

struct DensityMatrix {
  enum class Provenance { duhamel_integral, ode_liouville, conjugation };
  CovariantOperator rho;
  Provenance provenance = Provenance::ode_liouville;
  double time = 0.0;
};

inline std::string to_string(DensityMatrix::Provenance p) {
  switch (p) {
    case DensityMatrix::Provenance::duhamel_integral: return "duhamel_integral";
    case DensityMatrix::Provenance::ode_liouville: return "ode_liouville";
    case DensityMatrix::Provenance::conjugation: return "conjugation";
  }
  return "?";
}

/// Invariants of a density matrix that the evolution must preserve.
struct DensityDiagnostics {
  OperatorNorms norms;
  double min_eigenvalue = 0.0;
  double projection_defect = 0.0;  // ||rho^2 - rho|| (operator norm)
  double hermiticity_defect = 0.0;
  Complex trace = 0.0;
};

inline DensityDiagnostics density_diagnostics(const CovariantOperator& rho) {
  DensityDiagnostics d;
  d.norms = norms(rho);
  d.hermiticity_defect = (rho.matrix() - rho.matrix().adjoint()).norm();
  const Matrix sym = 0.5 * (rho.matrix() + rho.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  const Matrix defect = rho.matrix() * rho.matrix() - rho.matrix();
  d.projection_defect = Eigen::JacobiSVD<Matrix>(defect).singularValues()(0);
  d.trace = trace_per_unit_volume(rho);
  return d;
}

/// rho(t) = zeta(t) - i int_{s_min}^t e^{eta r_-} U(t,r) [E.x, zeta(r)] U(r,t) dr with zeta(r) = f(H(r)).
/// W(r) = U(r, s_min) is marched on the grid and the integrand W(r)* [..] W(r) accumulated by Simpson.
inline DensityMatrix evolve_density_duhamel(const LatticeModel& model, const DriveProtocol& drive,
                                            const EquilibriumState& zeta_spec, double t, const TimeGrid& grid) {
  drive.validate();
  grid.validate(drive);
  const LatticeShape shape = model.shape();
  auto zeta_at = [&](double r) { return zeta_spec.evaluate(diagonalize(hamiltonian_at(model, drive, r))); };
  if (drive.is_zero()) return {zeta_at(t), DensityMatrix::Provenance::duhamel_integral, t};
  if (t < grid.s_min) throw DomainError("evolve_density_duhamel: t precedes s_min");
  const int n = grid.steps_between(grid.s_min, t, 2);
  if (n == 0) return {zeta_at(t), DensityMatrix::Provenance::duhamel_integral, t};

  // d zeta(r)/dr. On the open box this is i e^{eta r}[E.x, zeta(r)]; on the torus the
  // minimal-image position breaks that identity, so take the divided-difference form
  // of f(H(r))' instead, which is what keeps rho(t) a projection there.
  const bool torus = model.config.boundary == Boundary::torus;
  detail::Generator gen(model, drive);
  Eigen::MatrixXd ex = Eigen::MatrixXd::Zero(shape.site_count(), shape.site_count());
  for (int axis = 0; axis < shape.dimension; ++axis)
    if (drive.field[axis] != 0.0) ex += drive.field[axis] * displacement_matrix(shape, axis);
  auto zeta_and_rate = [&](double r) -> std::pair<Matrix, Matrix> {
    const SpectralData sd = diagonalize(hamiltonian_at(model, drive, r));
    Matrix z = zeta_spec.evaluate(sd).matrix();
    if (!torus) {
      Matrix dz = (kI * drive.envelope(r)) * ex.cast<Complex>().cwiseProduct(z);
      return {std::move(z), std::move(dz)};
    }
    Matrix d = sd.eigenvectors.adjoint() * hamiltonian_derivative(model, drive, r).matrix() * sd.eigenvectors;
    for (Index i = 0; i < d.rows(); ++i)
      for (Index j = 0; j < d.cols(); ++j)
        d(i, j) *= zeta_spec.divided_difference(sd.eigenvalues[i], sd.eigenvalues[j]);
    return {std::move(z), sd.from_eigenbasis(d)};
  };

  const double h = (t - grid.s_min) / n;
  check_step(h, gen.norm_bound(grid.s_min, t));
  const auto w = detail::simpson_weights(n, h);

  const Index dim = shape.site_count();
  Matrix u = Matrix::Identity(dim, dim);
  Matrix integral = Matrix::Zero(dim, dim);
  Matrix zeta_t;
  for (int k = 0; k <= n; ++k) {
    const double r = grid.s_min + k * h;
    auto [z, dz] = zeta_and_rate(r);
    integral += w[static_cast<std::size_t>(k)] * (u.adjoint() * dz * u);
    if (k < n) detail::step_state(gen, grid.method, r, h, u);
    else zeta_t = std::move(z);
  }
  Matrix rho = zeta_t - u * integral * u.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return {CovariantOperator(std::move(rho), shape), DensityMatrix::Provenance::duhamel_integral, t};
}

/// Direct integration of i d rho/dt = [H(t), rho] from zeta(s_min) = f(H(s_min)).
inline DensityMatrix evolve_density_ode(const LatticeModel& model, const DriveProtocol& drive,
                                        const EquilibriumState& zeta_spec, double t, const TimeGrid& grid) {
  drive.validate();
  grid.validate(drive);
  if (drive.is_zero())
    return {zeta_spec.evaluate(diagonalize(build_hamiltonian(model))), DensityMatrix::Provenance::ode_liouville, t};
  if (t < grid.s_min) throw DomainError("evolve_density_ode: t precedes s_min");
  detail::Generator gen(model, drive);
  Matrix rho = zeta_spec.evaluate(diagonalize(hamiltonian_at(model, drive, grid.s_min))).matrix();
  const int n = grid.steps_between(grid.s_min, t);
  if (n == 0) return {CovariantOperator(std::move(rho), model.shape()), DensityMatrix::Provenance::ode_liouville, t};
  const double h = (t - grid.s_min) / n;
  check_step(h, gen.norm_bound(grid.s_min, t));
  for (int k = 0; k < n; ++k) detail::step_density(gen, grid.method, grid.s_min + k * h, h, rho);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return {CovariantOperator(std::move(rho), model.shape()), DensityMatrix::Provenance::ode_liouville, t};
}

/// rho(t) = U(t,s) rho(s) U(s,t).
inline DensityMatrix conjugate_density(const Propagator& u, const DensityMatrix& rho_s) {
  return {CovariantOperator(u.u.matrix() * rho_s.rho.matrix() * u.u.matrix().adjoint(), rho_s.rho.shape()),
          DensityMatrix::Provenance::conjugation, u.t};
}

/// Evolves psi under the vector-potential H(t) and G(s_min)* psi under H + E(t).X
/// with the same integrator and returns ||G(t)* psi(t) - phi(t)||. Open boundary only.
inline double gauge_equivalence_check(const LatticeModel& model, const DriveProtocol& drive, const Vector& psi0,
                                      double t, const TimeGrid& grid) {
  if (model.config.boundary != Boundary::open)
    throw UnsupportedOperation("gauge equivalence needs the open box: the scalar potential E.x is not periodic");
  drive.validate();
  grid.validate(drive);
  detail::Generator vec(model, drive, false);
  detail::Generator sca(model, drive, true);
  const int n = grid.steps_between(grid.s_min, t);
  const double h = (t - grid.s_min) / n;
  check_step(h, std::max(vec.norm_bound(grid.s_min, t), sca.norm_bound(grid.s_min, t)));
  Vector psi = psi0;
  Vector phi = gauge_operator(model, drive, grid.s_min).matrix().adjoint() * psi0;
  for (int k = 0; k < n; ++k) {
    const double r = grid.s_min + k * h;
    detail::step_state(vec, grid.method, r, h, psi);
    detail::step_state(sca, grid.method, r, h, phi);
  }
  return (gauge_operator(model, drive, t).matrix().adjoint() * psi - phi).norm();
}

struct WeightCheck {
  double gamma = 1.0;
  double weighted_norm = 0.0;  // ||(H(t)+g) U(t,s) (H(s)+g)^-1||
  double bound = 1.0;          // exp int_s^t ||H'(r) (H(r)+g)^-1|| dr

  bool holds(double margin = 1e-6) const { return weighted_norm <= bound * (1.0 + margin); }
};

/// Weighted propagator estimate. gamma = max(1, 1 - min_r lambda_min(H(r))) over the grid points.
inline WeightCheck propagator_weight_check(const LatticeModel& model, const DriveProtocol& drive, double t, double s,
                                           const TimeGrid& grid) {
  if (s > t) throw DomainError("propagator_weight_check: requires s <= t");
  const int n = grid.steps_between(s, t, 2);
  const double h = n ? (t - s) / n : 0.0;
  std::vector<Matrix> hs;
  double lam_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    hs.push_back(hamiltonian_at(model, drive, s + k * h).matrix());
    Eigen::SelfAdjointEigenSolver<Matrix> es(hs.back(), Eigen::EigenvaluesOnly);
    lam_min = std::min(lam_min, es.eigenvalues()(0));
  }
  WeightCheck out;
  out.gamma = std::max(1.0, 1.0 - lam_min);
  const Index dim = model.shape().site_count();
  const Matrix id = Matrix::Identity(dim, dim);
  auto op_norm = [](const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); };

  const Propagator u = propagate(model, drive, t, s, grid);
  const Matrix lhs = (hs.back() + out.gamma * id) * u.u.matrix() * (hs.front() + out.gamma * id).inverse();
  out.weighted_norm = op_norm(lhs);

  if (n == 0) return out;
  const auto w = detail::simpson_weights(n, h);
  double integral = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double r = s + k * h;
    const Matrix c = hamiltonian_derivative(model, drive, r).matrix() *
                     (hs[static_cast<std::size_t>(k)] + out.gamma * id).inverse();
    integral += w[static_cast<std::size_t>(k)] * op_norm(c);
  }
  out.bound = std::exp(integral);
  return out;
}

}  // namespace kubo
