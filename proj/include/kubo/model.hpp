#pragma once

// Disordered magnetic tight-binding lattices: Hamiltonians in Landau gauge,
// magnetic translations, disorder shifts and velocity operators.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Sparse>

#include "kubo/core.hpp"
#include "kubo/operator.hpp"

namespace kubo {

struct LatticeConfig {
  int dimension = 1;
  std::array<int, 2> sides{4, 1};
  Boundary boundary = Boundary::torus;

  LatticeShape shape() const {
    LatticeShape s;
    s.dimension = dimension;
    s.sides = {sides[0], dimension == 1 ? 1 : sides[1]};
    s.boundary = boundary;
    return s;
  }

  int site_count() const { return shape().site_count(); }

  void validate() const {
    if (dimension != 1 && dimension != 2) throw ConfigError("dimension must be 1 or 2");
    for (int a = 0; a < dimension; ++a)
      if (sides[a] < 1) throw ConfigError("lattice sides must be positive");
    if (site_count() < 2) throw ConfigError("lattice must have at least 2 sites");
  }
};

/// Rational flux p/q per plaquette in the Landau gauge: hops along +axis 2
/// starting at x1 carry the phase exp(i 2 pi (p/q) x1).
struct FluxSpec {
  long p = 0;
  long q = 1;

  double phi() const { return static_cast<double>(p) / static_cast<double>(q); }

  void validate() const {
    if (q <= 0) throw ConfigError("flux denominator must be positive");
    if (p != 0 && std::gcd(p, q) != 1) throw ConfigError("flux p/q must be in lowest terms");
    if (p == 0 && q != 1) throw ConfigError("zero flux must be written 0/1");
  }
};

/// i.i.d. uniform on-site disorder on [-W/2, W/2].
struct DisorderSpec {
  double strength = 0.0;
  std::uint64_t base_seed = 0;
};

/// SplitMix64 finalizer; used to derive per-realization seeds and as the site stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of realization `index`, independent of the order in which realizations are drawn.
inline std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(base_seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Per-site potential of one disorder realization. Deterministic in (spec, index).
inline std::vector<double> sample_disorder(const DisorderSpec& spec, int site_count, std::int64_t index) {
  if (index < 0) throw DomainError("realization index must be non-negative");
  if (spec.strength < 0) throw ConfigError("disorder strength must be non-negative");
  std::vector<double> v(static_cast<std::size_t>(site_count), 0.0);
  if (spec.strength == 0.0) return v;
  const std::uint64_t seed = realization_seed(spec.base_seed, static_cast<std::uint64_t>(index));
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::uint64_t bits = splitmix64(seed + k * 0x9E3779B97F4A7C15ULL);
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
    v[k] = spec.strength * (u - 0.5);
  }
  return v;
}

struct LatticeModel {
  LatticeConfig config;
  FluxSpec flux;
  std::vector<double> potential;
  double hopping = -1.0;  // fixed at -1; tests set 0 to isolate the potential

  LatticeShape shape() const { return config.shape(); }

  /// Checks lattice, flux and commensurability. Throws ConfigError.
  void validate() const {
    config.validate();
    flux.validate();
    if (static_cast<int>(potential.size()) != config.site_count())
      throw ConfigError("potential has wrong length");
    if (flux.p != 0 && config.dimension == 1) throw ConfigError("a 1D chain cannot carry flux");
    if (flux.p != 0 && config.boundary == Boundary::torus && config.sides[0] % flux.q != 0)
      throw ConfigError("flux " + std::to_string(flux.p) + "/" + std::to_string(flux.q) +
                        " is not commensurate with L1 = " + std::to_string(config.sides[0]) +
                        " on the torus (q must divide L1)");
  }

  static LatticeModel clean(const LatticeConfig& config, FluxSpec flux = {}) {
    LatticeModel m{config, flux, std::vector<double>(config.site_count(), 0.0)};
    m.validate();
    return m;
  }

  static LatticeModel disordered(const LatticeConfig& config, FluxSpec flux, const DisorderSpec& disorder,
                                 std::int64_t realization) {
    LatticeModel m{config, flux, sample_disorder(disorder, config.site_count(), realization)};
    m.validate();
    return m;
  }
};

/// One nearest-neighbour bond n -> m = n + e_axis (possibly wrapping), with
/// H_mn = amplitude and physical displacement x_m - x_n = +1 along `axis`.
struct Bond {
  Index m;
  Index n;
  int axis;
  Complex amplitude;
};

inline std::vector<Bond> bonds(const LatticeModel& model) {
  const LatticeShape shape = model.shape();
  const bool torus = shape.boundary == Boundary::torus;
  const double phi = model.flux.phi();
  std::vector<Bond> out;
  for (Index n = 0; n < shape.site_count(); ++n) {
    const Site x = shape.site(n);
    for (int axis = 0; axis < shape.dimension; ++axis) {
      const int L = shape.sides[axis];
      if (L < 2) continue;
      if (x[axis] + 1 >= L && !torus) continue;
      Site y = x;
      y[axis] = (x[axis] + 1) % L;
      Complex t = model.hopping;
      if (axis == 1) t *= std::polar(1.0, 2.0 * kPi * phi * x[0]);
      out.push_back({shape.index(y), n, axis, t});
    }
  }
  return out;
}

/// Phase exp(i F.(x_m - x_n)) picked up by a bond under a uniform vector-potential shift F.
inline Complex bond_shift_phase(const Bond& b, const std::array<double, 2>& shift) {
  return std::polar(1.0, shift[b.axis]);
}

/// H = sum over bonds of (t e^{i F.delta} |m><n| + h.c.) + diag(potential).
/// F = 0 gives the undriven Hamiltonian.
inline CovariantOperator build_hamiltonian(const LatticeModel& model, const std::array<double, 2>& shift = {0.0, 0.0}) {
  model.validate();
  const LatticeShape shape = model.shape();
  const Index n = shape.site_count();
  Matrix h = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) h(i, i) = model.potential[static_cast<std::size_t>(i)];
  for (const Bond& b : bonds(model)) {
    const Complex t = b.amplitude * bond_shift_phase(b, shift);
    h(b.m, b.n) += t;
    h(b.n, b.m) += std::conj(t);
  }
  return CovariantOperator(std::move(h), shape);
}

/// Sparse assembly of the same Hamiltonian, for time stepping.
inline Eigen::SparseMatrix<Complex> sparse_hamiltonian(const LatticeModel& model, const std::vector<Bond>& bond_list,
                                                       const std::array<double, 2>& shift) {
  const Index n = model.shape().site_count();
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(bond_list.size() * 2 + static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, model.potential[static_cast<std::size_t>(i)]);
  for (const Bond& b : bond_list) {
    const Complex t = b.amplitude * bond_shift_phase(b, shift);
    trip.emplace_back(b.m, b.n, t);
    trip.emplace_back(b.n, b.m, std::conj(t));
  }
  Eigen::SparseMatrix<Complex> h(n, n);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

/// Velocity v = i[H, x_axis] built bond by bond: v_mn = -i (x_m - x_n) H_mn with the
/// physical bond displacement, wrap bonds included. Zero diagonal, Hermitian.
inline CovariantOperator velocity_operator(const LatticeModel& model, int axis,
                                           const std::array<double, 2>& shift = {0.0, 0.0}) {
  const LatticeShape shape = model.shape();
  if (axis < 0 || axis >= shape.dimension) throw DomainError("axis out of range");
  const Index n = shape.site_count();
  Matrix v = Matrix::Zero(n, n);
  for (const Bond& b : bonds(model)) {
    if (b.axis != axis) continue;
    const Complex t = b.amplitude * bond_shift_phase(b, shift);
    const Complex vmn = -kI * t;
    v(b.m, b.n) += vmn;
    v(b.n, b.m) += std::conj(vmn);
  }
  return CovariantOperator(std::move(v), shape);
}

/// Diagonal matrix of site coordinates x_axis in [0, L). Exact position operator on the open box.
inline CovariantOperator position_operator(const LatticeShape& shape, int axis) {
  const Index n = shape.site_count();
  Matrix x = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) x(i, i) = shape.site(i)[axis];
  return CovariantOperator(std::move(x), shape);
}

inline double displacement(const LatticeModel& model, Index m, Index n, int axis) {
  return displacement(model.shape(), m, n, axis);
}

/// Lattice vector; the second component is ignored in 1D.
using LatticeVector = std::array<int, 2>;

namespace detail {
inline int mod(int a, int L) { return ((a % L) + L) % L; }

inline void require_torus(const LatticeModel& model, const char* what) {
  if (model.config.boundary != Boundary::torus)
    throw UnsupportedOperation(std::string(what) + " requires torus boundary conditions");
}
}  // namespace detail

/// Magnetic translation (U(a) psi)(x) = exp(i 2 pi phi a1 x2) psi(x - a) on the torus.
/// U(a) H_omega U(a)* = H_{tau(a) omega} with the Landau-gauge hopping phases.
inline CovariantOperator magnetic_translation(const LatticeModel& model, const LatticeVector& a) {
  detail::require_torus(model, "magnetic translation");
  const LatticeShape shape = model.shape();
  const double phi = model.flux.phi();
  if (model.flux.p != 0) {
    const long wrap = static_cast<long>(a[0]) * model.flux.p * shape.sides[1];
    if (wrap % model.flux.q != 0)
      throw ConfigError("magnetic translation by a1 = " + std::to_string(a[0]) +
                        " is not compatible with L2 on this torus (phi * a1 * L2 must be an integer)");
  }
  const Index n = shape.site_count();
  Matrix u = Matrix::Zero(n, n);
  for (Index src = 0; src < n; ++src) {
    const Site x = shape.site(src);
    Site y = x;
    for (int axis = 0; axis < shape.dimension; ++axis) y[axis] = detail::mod(x[axis] + a[axis], shape.sides[axis]);
    const double theta = shape.dimension == 2 ? 2.0 * kPi * phi * a[0] * y[1] : 0.0;
    u(shape.index(y), src) = std::polar(1.0, theta);
  }
  return CovariantOperator(std::move(u), shape);
}

/// tau(a) omega: potential v'(x) = v(x - a mod L).
inline LatticeModel shift_disorder(const LatticeModel& model, const LatticeVector& a) {
  detail::require_torus(model, "disorder shift");
  const LatticeShape shape = model.shape();
  LatticeModel out = model;
  for (Index src = 0; src < shape.site_count(); ++src) {
    const Site x = shape.site(src);
    Site y = x;
    for (int axis = 0; axis < shape.dimension; ++axis) y[axis] = detail::mod(x[axis] + a[axis], shape.sides[axis]);
    out.potential[static_cast<std::size_t>(shape.index(y))] = model.potential[static_cast<std::size_t>(src)];
  }
  return out;
}

}  // namespace kubo
