#pragma once

// Functions of Hermitian operators: exact spectral calculus (the reference),
// the Helffer-Sjostrand contour representation, Fermi projections, position
// commutators and locality diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kubo/operator.hpp"

namespace kubo {

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian operator.
struct SpectralData {
  RealVector eigenvalues;
  Matrix eigenvectors;
  LatticeShape shape;

  Index size() const { return eigenvalues.size(); }

  /// V * diag(values) * V^*.
  CovariantOperator compose(const RealVector& values) const {
    return {eigenvectors * values.asDiagonal() * eigenvectors.adjoint(), shape};
  }
  CovariantOperator compose(const Vector& values) const {
    return {eigenvectors * values.asDiagonal() * eigenvectors.adjoint(), shape};
  }

  /// A -> V^* A V.
  Matrix to_eigenbasis(const Matrix& a) const { return eigenvectors.adjoint() * a * eigenvectors; }
  /// A -> V A V^*.
  Matrix from_eigenbasis(const Matrix& a) const { return eigenvectors * a * eigenvectors.adjoint(); }
};

inline SpectralData diagonalize(const CovariantOperator& h) {
  if (!h.is_hermitian(1e-10)) throw DomainError("diagonalize: operator is not Hermitian");
  const Matrix sym = 0.5 * (h.matrix() + h.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw AccuracyError("Hermitian eigensolver failed", 1.0);
  return {es.eigenvalues(), es.eigenvectors(), h.shape()};
}

/// f(H) = V diag(f(E)) V^* for any Borel rule f: double -> double (or complex).
template <class F>
CovariantOperator apply_spectral(const SpectralData& h, F&& f) {
  using R = decltype(f(0.0));
  if constexpr (std::is_convertible_v<R, double>) {
    RealVector v(h.size());
    for (Index i = 0; i < h.size(); ++i) v(i) = f(h.eigenvalues(i));
    return h.compose(v);
  } else {
    Vector v(h.size());
    for (Index i = 0; i < h.size(); ++i) v(i) = f(h.eigenvalues(i));
    return h.compose(v);
  }
}

inline constexpr double kFermiDegeneracyTolerance = 1e-9;

/// P = chi_(-inf, E_F](H). E_F within 1e-9 of an eigenvalue is an error.
inline CovariantOperator fermi_projection(const SpectralData& h, double fermi_energy) {
  const RealVector& e = h.eigenvalues;
  for (Index i = 0; i < e.size(); ++i) {
    if (std::abs(e(i) - fermi_energy) < kFermiDegeneracyTolerance) {
      Index lo = i, hi = i;
      while (lo > 0 && std::abs(e(lo) - fermi_energy) < kFermiDegeneracyTolerance) --lo;
      while (hi + 1 < e.size() && std::abs(e(hi) - fermi_energy) < kFermiDegeneracyTolerance) ++hi;
      const double below = std::abs(e(lo) - fermi_energy) < kFermiDegeneracyTolerance
                               ? -std::numeric_limits<double>::infinity()
                               : e(lo);
      const double above = std::abs(e(hi) - fermi_energy) < kFermiDegeneracyTolerance
                               ? std::numeric_limits<double>::infinity()
                               : e(hi);
      throw DegenerateFermiLevel(fermi_energy, below, above);
    }
  }
  return apply_spectral(h, [fermi_energy](double x) { return x <= fermi_energy ? 1.0 : 0.0; });
}

inline double fermi_dirac_value(double energy, double beta, double fermi_energy) {
  const double a = beta * (energy - fermi_energy);
  if (a > 0) {
    const double e = std::exp(-a);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(a));
}

/// 1 / (1 + exp(beta (H - E_F))) for finite beta > 0.
inline CovariantOperator fermi_dirac(const SpectralData& h, double beta, double fermi_energy) {
  if (!(beta > 0) || !std::isfinite(beta)) throw DomainError("fermi_dirac: beta must be finite and positive");
  return apply_spectral(h, [&](double x) { return fermi_dirac_value(x, beta, fermi_energy); });
}

/// Initial equilibrium state zeta = f(H): either a Fermi projection or a
/// Fermi-Dirac distribution at finite inverse temperature.
struct EquilibriumState {
  enum class Kind { projection, fermi_dirac };
  Kind kind = Kind::projection;
  double fermi_energy = 0.0;
  double beta = std::numeric_limits<double>::infinity();

  static EquilibriumState projection(double fermi_energy) { return {Kind::projection, fermi_energy}; }
  static EquilibriumState thermal(double beta, double fermi_energy) { return {Kind::fermi_dirac, fermi_energy, beta}; }

  CovariantOperator evaluate(const SpectralData& h) const {
    return kind == Kind::projection ? fermi_projection(h, fermi_energy) : fermi_dirac(h, beta, fermi_energy);
  }
  double value(double energy) const {
    if (kind == Kind::projection) return energy <= fermi_energy ? 1.0 : 0.0;
    return fermi_dirac_value(energy, beta, fermi_energy);
  }

  /// (f(a) - f(b)) / (a - b), with f'(a) on the diagonal. The projection is flat
  /// away from E_F, which never coincides with an eigenvalue.
  double divided_difference(double a, double b) const {
    if (std::abs(a - b) > 1e-7 * std::max(1.0, std::abs(a))) return (value(a) - value(b)) / (a - b);
    if (kind == Kind::projection) return 0.0;
    const double f = fermi_dirac_value(0.5 * (a + b), beta, fermi_energy);
    return -beta * f * (1.0 - f);
  }
};

// ---------------------------------------------------------------------------
// Smooth functions with derivatives

/// A real function with closed-form derivatives up to max_order.
struct SmoothFunction {
  std::string name;
  int max_order = 0;
  std::function<double(double, int)> derivative;  // (x, r) -> f^(r)(x)

  double operator()(double x) const { return derivative(x, 0); }
};

namespace detail {

/// Probabilists' Hermite polynomial He_n(u).
inline double hermite_he(int n, double u) {
  double h0 = 1.0, h1 = u;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = u * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Coefficients of Q_r(s) with d^r/dy^r sigma(y) = Q_r(sigma(y)), sigma the logistic function.
inline std::vector<std::vector<double>> logistic_polynomials(int max_order) {
  std::vector<std::vector<double>> q{{0.0, 1.0}};
  for (int r = 0; r < max_order; ++r) {
    const auto& p = q.back();
    // d/dy P(s) = P'(s) s (1 - s)
    std::vector<double> dp(p.size() > 1 ? p.size() - 1 : 1, 0.0);
    for (std::size_t k = 1; k < p.size(); ++k) dp[k - 1] = static_cast<double>(k) * p[k];
    std::vector<double> next(dp.size() + 2, 0.0);
    for (std::size_t k = 0; k < dp.size(); ++k) {
      next[k + 1] += dp[k];
      next[k + 2] -= dp[k];
    }
    q.push_back(std::move(next));
  }
  return q;
}

inline double logistic(double y) { return y >= 0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y)); }

inline double polyval(const std::vector<double>& c, double s) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
  return acc;
}

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace detail

/// exp(-(x - center)^2 / (2 width^2)).
inline SmoothFunction gaussian(double center = 0.0, double width = 1.0, int max_order = 12) {
  return {"gaussian", max_order, [=](double x, int r) {
            const double u = (x - center) / width;
            const double sign = (r % 2 == 0) ? 1.0 : -1.0;
            return sign * std::pow(width, -r) * detail::hermite_he(r, u) * std::exp(-0.5 * u * u);
          }};
}

/// Smooth indicator of [a, b]: sigma(s (x - a)) * sigma(-s (x - b)), decaying exponentially outside.
inline SmoothFunction smooth_window(double a, double b, double steepness, int max_order = 12) {
  auto q = detail::logistic_polynomials(max_order);
  return {"smooth_window", max_order, [=](double x, int r) {
            const double sa = detail::logistic(steepness * (x - a));
            const double sb = detail::logistic(-steepness * (x - b));
            double acc = 0.0;
            for (int k = 0; k <= r; ++k) {
              const double da = std::pow(steepness, k) * detail::polyval(q[static_cast<std::size_t>(k)], sa);
              const double db = std::pow(-steepness, r - k) * detail::polyval(q[static_cast<std::size_t>(r - k)], sb);
              acc += detail::binomial(r, k) * da * db;
            }
            return acc;
          }};
}

/// |||f|||_m = sum_{r<=m} int |f^(r)(u)| <u>^(r-1) du, by adaptive Gauss-Kronrod on the real line.
inline double hs_norm(const SmoothFunction& f, int m, double tolerance = 1e-12) {
  if (m < 0 || m > f.max_order) throw DomainError("hs_norm: derivative order not available");
  double total = 0.0;
  for (int r = 0; r <= m; ++r) {
    auto integrand = [&](double u) {
      const double bracket = std::sqrt(1.0 + u * u);
      return std::abs(f.derivative(u, r)) * std::pow(bracket, r - 1);
    };
    double err = 0.0;
    double l1 = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -inf, inf, 25, tolerance, &err, &l1);
    if (!std::isfinite(value) || err > std::max(1e3 * tolerance, 1e-8) * std::max(1.0, l1))
      throw AccuracyError("hs_norm: quadrature did not converge for derivative order " + std::to_string(r), err);
    total += value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Helffer-Sjostrand

/// Tensor midpoint grid on [x_min, x_max] x [-y_max, y_max] with the band
/// |Im z| < y_min removed. y_min is one cell height.
struct HSQuadrature {
  int order = 5;  // m
  double x_min = -1.0;
  double x_max = 1.0;
  double y_max = 1.0;
  int nx = 64;
  int ny = 64;

  double hx() const { return (x_max - x_min) / nx; }
  double hy() const { return y_max / ny; }
  double y_min() const { return hy(); }

  /// Grid covering [lo - margin, hi + margin] and the support |y| <= 2<x> of the cutoff.
  static HSQuadrature covering(double lo, double hi, double margin, int order, int nx, int ny) {
    HSQuadrature q;
    q.order = order;
    q.x_min = lo - margin;
    q.x_max = hi + margin;
    const double xm = std::max(std::abs(q.x_min), std::abs(q.x_max));
    q.y_max = 2.0 * std::sqrt(1.0 + xm * xm);
    q.nx = nx;
    q.ny = ny;
    return q;
  }

  HSQuadrature refined() const {
    HSQuadrature q = *this;
    q.nx *= 2;
    q.ny *= 2;
    return q;
  }
};

namespace detail {

inline double bump_g(double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; }

/// Plateau cutoff: 1 on [-1, 1], 0 outside [-2, 2], C-infinity in between.
inline double plateau(double t) {
  const double s = std::abs(t) - 1.0;
  if (s <= 0) return 1.0;
  if (s >= 1) return 0.0;
  const double a = bump_g(1.0 - s), b = bump_g(s);
  return a / (a + b);
}

inline double plateau_derivative(double t) {
  const double s = std::abs(t) - 1.0;
  if (s <= 0 || s >= 1) return 0.0;
  const double a = bump_g(1.0 - s), b = bump_g(s);
  const double da = -a / ((1.0 - s) * (1.0 - s));  // d/ds g(1 - s)
  const double db = b / (s * s);
  const double d = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
  return t > 0 ? d : -d;
}

}  // namespace detail

/// Almost-analytic extension f~(x + iy) = sum_{r<=m} f^(r)(x) (iy)^r / r! * chi(y / <x>).
inline Complex almost_analytic_extension(const SmoothFunction& f, int m, Complex z) {
  const double x = z.real(), y = z.imag();
  Complex s = 0.0, iy_pow = 1.0;
  double fact = 1.0;
  for (int r = 0; r <= m; ++r) {
    if (r > 0) {
      iy_pow *= Complex(0.0, y);
      fact *= r;
    }
    s += f.derivative(x, r) * iy_pow / fact;
  }
  return s * detail::plateau(y / std::sqrt(1.0 + x * x));
}

/// d_zbar f~ with d_zbar = d_x + i d_y, in closed form.
inline Complex almost_analytic_dbar(const SmoothFunction& f, int m, Complex z) {
  const double x = z.real(), y = z.imag();
  const double bracket = std::sqrt(1.0 + x * x);
  const double tau = y / bracket;
  Complex s = 0.0, iy_pow = 1.0;
  double fact = 1.0;
  for (int r = 0; r <= m; ++r) {
    if (r > 0) {
      iy_pow *= Complex(0.0, y);
      fact *= r;
    }
    s += f.derivative(x, r) * iy_pow / fact;
  }
  const Complex top = f.derivative(x, m + 1) * iy_pow / fact;  // f^(m+1) (iy)^m / m!
  const Complex dtau(-y * x / (bracket * bracket * bracket), 1.0 / bracket);
  return detail::plateau(tau) * top + s * detail::plateau_derivative(tau) * dtau;
}

struct HSResult {
  CovariantOperator value;
  double absolute_sum = 0.0;  // sum |d f~| / |Im z| over the grid
  std::size_t evaluated_points = 0;
};

/// f(H) = int d f~(z) (z - H)^(-1), d f~ = -(1/2pi) d_zbar f~ dx dy, on the tensor grid.
/// H is reduced once to real tridiagonal form; each resolvent is an O(N^2) solve.
inline HSResult hs_apply(const CovariantOperator& h, const SmoothFunction& f, const HSQuadrature& quad) {
  if (quad.order < 2) throw DomainError("hs_apply: extension order m must be at least 2");
  if (quad.order + 1 > f.max_order) throw DomainError("hs_apply: f needs derivatives up to order m + 1");
  if (!h.is_hermitian(1e-10)) throw DomainError("hs_apply: operator is not Hermitian");

  Eigen::Tridiagonalization<Matrix> tri(h.matrix());
  const RealVector diag = tri.diagonal();
  const RealVector sub = tri.subDiagonal();
  const Index n = diag.size();

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Index i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(sub(i - 1)) : 0.0) + (i + 1 < n ? std::abs(sub(i)) : 0.0);
    lo = std::min(lo, diag(i) - r);
    hi = std::max(hi, diag(i) + r);
  }
  if (lo < quad.x_min || hi > quad.x_max)
    throw CoverageError("hs_apply: spectrum bound [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        "] not inside grid [" + std::to_string(quad.x_min) + ", " + std::to_string(quad.x_max) + "]");

  const double hx = quad.hx(), hy = quad.hy();
  const double cell = hx * hy;

  // Contributions at z and conj(z) are complex conjugates of each other since T is real,
  // so only Im z > 0 is visited and twice the real part is accumulated.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXcd inv(n, n);
  Eigen::VectorXcd pivot(n);
  double abs_sum = 0.0;
  std::size_t points = 0;

  for (int i = 0; i < quad.nx; ++i) {
    const double x = quad.x_min + (i + 0.5) * hx;
    Eigen::MatrixXd column_acc = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < quad.ny; ++j) {
      const double y = (j + 0.5) * hy;
      if (y < quad.y_min()) continue;
      const Complex z(x, y);
      const Complex w = -(1.0 / (2.0 * kPi)) * almost_analytic_dbar(f, quad.order, z) * cell;
      if (w == Complex{}) continue;
      abs_sum += 2.0 * std::abs(w) / y;
      ++points;

      // (z - T)^(-1) column by column: Thomas elimination, pivots have Im >= y > 0.
      pivot(0) = z - diag(0);
      for (Index k = 1; k < n; ++k) pivot(k) = z - diag(k) - sub(k - 1) * sub(k - 1) / pivot(k - 1);
      for (Index c = 0; c < n; ++c) {
        // forward: solve L y = e_c, L unit lower with multipliers -sub/pivot
        Eigen::VectorXcd col = Eigen::VectorXcd::Zero(n);
        col(c) = 1.0;
        for (Index k = c + 1; k < n; ++k) col(k) = sub(k - 1) / pivot(k - 1) * col(k - 1);
        // back: U x = y with U diag pivot, superdiag -sub
        col(n - 1) /= pivot(n - 1);
        for (Index k = n - 2; k >= 0; --k) col(k) = (col(k) + sub(k) * col(k + 1)) / pivot(k);
        inv.col(c) = col;
      }
      column_acc += 2.0 * (w * inv).real();
    }
    acc += column_acc;
  }

  const Matrix q = tri.matrixQ();
  Matrix value = q * acc.cast<Complex>() * q.adjoint();
  return {CovariantOperator(std::move(value), h.shape()), abs_sum, points};
}

// ---------------------------------------------------------------------------
// Position commutators and locality

/// ([x_axis, A])_mn = displacement(m, n, axis) A_mn (minimal image on the torus).
inline CovariantOperator position_commutator(const CovariantOperator& a, int axis) {
  const LatticeShape& shape = a.shape();
  if (axis < 0 || axis >= shape.dimension) throw DomainError("axis out of range");
  Matrix out(a.size(), a.size());
  for (Index n = 0; n < a.size(); ++n)
    for (Index m = 0; m < a.size(); ++m) out(m, n) = displacement(shape, m, n, axis) * a.matrix()(m, n);
  return {std::move(out), shape};
}

/// Least-squares fit log(amplitude) = intercept - rate * distance over the
/// per-distance maximum of the off-diagonal amplitudes.
struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool exact_locality = false;  // no off-diagonal amplitude above the floor
  std::vector<std::pair<double, double>> profile;  // (distance, max amplitude)
};

inline double site_distance(const LatticeShape& shape, Index m, Index n) {
  double s = 0.0;
  for (int axis = 0; axis < shape.dimension; ++axis) {
    const double d = displacement(shape, m, n, axis);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Fit of |A_xy| against |x - y|. Amplitudes below rel_floor * max are dropped as roundoff.
inline DecayFit fit_decay(const CovariantOperator& a, double rel_floor = 1e-13) {
  const LatticeShape& shape = a.shape();
  std::map<long long, std::pair<double, double>> by_distance;  // key: distance * 1e6
  double max_amp = 0.0;
  for (Index n = 0; n < a.size(); ++n)
    for (Index m = 0; m < a.size(); ++m) {
      const double amp = std::abs(a.matrix()(m, n));
      max_amp = std::max(max_amp, amp);
      if (m == n) continue;
      const double d = site_distance(shape, m, n);
      if (d == 0.0) continue;
      auto& slot = by_distance[std::llround(d * 1e6)];
      slot.first = d;
      slot.second = std::max(slot.second, amp);
    }
  DecayFit fit;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [key, v] : by_distance) {
    fit.profile.push_back(v);
    if (v.second > rel_floor * max_amp && v.second > 0) pts.emplace_back(v.first, std::log(v.second));
  }
  if (pts.empty()) {
    fit.exact_locality = true;
    fit.rate = std::numeric_limits<double>::infinity();
    fit.r_squared = 1.0;
    return fit;
  }
  if (pts.size() < 2) {
    fit.rate = std::numeric_limits<double>::quiet_NaN();
    fit.r_squared = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(pts.size());
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / k;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / k;
  for (const auto& [x, y] : pts) {
    ss_res += (y - icpt - slope * x) * (y - icpt - slope * x);
    ss_tot += (y - mean) * (y - mean);
  }
  fit.rate = -slope;
  fit.intercept = icpt;
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

struct LocalizationReport {
  std::vector<double> commutator_norm2;  // |||[x_k, P]|||_2 per axis
  DecayFit decay;

  bool localized() const { return decay.exact_locality || decay.rate > 0; }
};

inline LocalizationReport localization_diagnostic(const CovariantOperator& p) {
  LocalizationReport rep;
  const double n = static_cast<double>(p.size());
  for (int axis = 0; axis < p.shape().dimension; ++axis)
    rep.commutator_norm2.push_back(std::sqrt(position_commutator(p, axis).matrix().squaredNorm() / n));
  rep.decay = fit_decay(p);
  return rep;
}

struct CombesThomasReport {
  DecayFit decay;
  double rcond = 0.0;
  bool conditioning_warning = false;
};

/// Decay of |(H - z)^(-1)_xy| with |x - y| for Im z != 0.
inline CombesThomasReport combes_thomas_probe(const CovariantOperator& h, Complex z) {
  if (z.imag() == 0.0) throw DomainError("combes_thomas_probe: z must be off the real axis");
  const Index n = h.size();
  Matrix shifted = h.matrix() - z * Matrix::Identity(n, n);
  Eigen::PartialPivLU<Matrix> lu(shifted);
  CombesThomasReport rep;
  rep.rcond = lu.rcond();
  rep.conditioning_warning = !(rep.rcond > 1e-12);
  rep.decay = fit_decay(CovariantOperator(lu.inverse(), h.shape()));
  return rep;
}

}  // namespace kubo
