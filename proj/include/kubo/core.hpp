#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kubo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid lattice, flux, drive or harness configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for the given geometry (e.g. magnetic translation on an open box).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Two operators living on different lattices were combined.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (eta <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Fermi level sits on an eigenvalue. Carries the surrounding gap edges.
class DegenerateFermiLevel : public Error {
 public:
  DegenerateFermiLevel(double fermi_energy, double below, double above)
      : Error("Fermi level " + std::to_string(fermi_energy) +
              " is degenerate with the spectrum; nearest gap edges are " +
              std::to_string(below) + " and " + std::to_string(above)),
        fermi_energy_(fermi_energy),
        below_(below),
        above_(above) {}

  double fermi_energy() const { return fermi_energy_; }
  double gap_below() const { return below_; }
  double gap_above() const { return above_; }

 private:
  double fermi_energy_;
  double below_;
  double above_;
};

/// Numerical procedure did not reach the requested accuracy.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// Time step violates the stability guard h * ||H|| < 0.5.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Helffer-Sjostrand grid does not cover the spectrum.
class CoverageError : public Error {
 public:
  using Error::Error;
};

enum class Boundary { torus, open };

inline std::string to_string(Boundary b) { return b == Boundary::torus ? "torus" : "open"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "torus") return Boundary::torus;
  if (s == "open") return Boundary::open;
  throw ConfigError("unknown boundary '" + s + "' (expected torus|open)");
}

/// Site coordinates on a d <= 2 lattice; unused axes are 0.
using Site = std::array<int, 2>;

/// The index set of a lattice: dimension, side lengths and boundary condition.
/// Sites are numbered x1 + L1 * x2.
struct LatticeShape {
  int dimension = 1;
  std::array<int, 2> sides{2, 1};
  Boundary boundary = Boundary::torus;

  int site_count() const { return dimension == 1 ? sides[0] : sides[0] * sides[1]; }

  Site site(Index i) const {
    return {static_cast<int>(i % sides[0]), dimension == 1 ? 0 : static_cast<int>(i / sides[0])};
  }

  Index index(const Site& s) const {
    return static_cast<Index>(s[0]) + static_cast<Index>(sides[0]) * (dimension == 1 ? 0 : s[1]);
  }

  bool operator==(const LatticeShape&) const = default;
};

/// Signed coordinate difference x_m - x_n along an axis. Minimal image on the torus,
/// folded into [-L/2, L/2); plain difference on the open box.
inline double displacement(const LatticeShape& shape, Index m, Index n, int axis) {
  const int a = shape.site(m)[axis];
  const int b = shape.site(n)[axis];
  if (shape.boundary == Boundary::open) return a - b;
  const int L = shape.sides[axis];
  const int half = L / 2;
  int d = ((a - b + half) % L + L) % L - half;
  return d;
}

/// Dense matrix of displacements D_mn = displacement(m, n, axis); [x, A] = D .* A.
inline Eigen::MatrixXd displacement_matrix(const LatticeShape& shape, int axis) {
  const Index n = shape.site_count();
  Eigen::MatrixXd d(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) d(i, j) = displacement(shape, i, j, axis);
  return d;
}

}  // namespace kubo
