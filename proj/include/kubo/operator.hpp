#pragma once

#include <utility>

#include "kubo/core.hpp"

namespace kubo {

/// Complex matrix indexed by the sites of a lattice. The finite-volume stand-in
/// for a measurable covariant operator; every binary operation checks that both
/// operands live on the same lattice shape.
class CovariantOperator {
 public:
  CovariantOperator() = default;

  CovariantOperator(Matrix m, LatticeShape shape) : m_(std::move(m)), shape_(shape) {
    if (m_.rows() != m_.cols() || m_.rows() != shape_.site_count())
      throw ShapeMismatch("operator matrix is " + std::to_string(m_.rows()) + "x" +
                          std::to_string(m_.cols()) + " but the lattice has " +
                          std::to_string(shape_.site_count()) + " sites");
  }

  /// Builds an operator and verifies ||A - A*|| <= 1e-12 ||A||.
  static CovariantOperator hermitian(Matrix m, LatticeShape shape) {
    CovariantOperator a(std::move(m), shape);
    if (!a.is_hermitian()) throw DomainError("operator flagged Hermitian is not Hermitian");
    return a;
  }

  static CovariantOperator identity(LatticeShape shape) {
    const Index n = shape.site_count();
    return {Matrix::Identity(n, n), shape};
  }

  static CovariantOperator zero(LatticeShape shape) {
    const Index n = shape.site_count();
    return {Matrix::Zero(n, n), shape};
  }

  const Matrix& matrix() const { return m_; }
  Matrix& matrix() { return m_; }
  const LatticeShape& shape() const { return shape_; }
  Index size() const { return m_.rows(); }

  bool is_hermitian(double rel_tol = 1e-12) const {
    const double scale = m_.norm();
    return (m_ - m_.adjoint()).norm() <= rel_tol * (scale > 0 ? scale : 1.0);
  }

  CovariantOperator& operator+=(const CovariantOperator& o) {
    require_same_shape(o);
    m_ += o.m_;
    return *this;
  }
  CovariantOperator& operator-=(const CovariantOperator& o) {
    require_same_shape(o);
    m_ -= o.m_;
    return *this;
  }
  CovariantOperator& operator*=(Complex c) {
    m_ *= c;
    return *this;
  }

  void require_same_shape(const CovariantOperator& o) const {
    if (!(shape_ == o.shape_))
      throw ShapeMismatch("operators live on different lattices");
  }

 private:
  Matrix m_;
  LatticeShape shape_;
};

inline CovariantOperator operator+(CovariantOperator a, const CovariantOperator& b) { return a += b; }
inline CovariantOperator operator-(CovariantOperator a, const CovariantOperator& b) { return a -= b; }
inline CovariantOperator operator*(Complex c, CovariantOperator a) { return a *= c; }
inline CovariantOperator operator*(CovariantOperator a, Complex c) { return a *= c; }

/// Frobenius distance, mostly for tests and diagnostics.
inline double distance(const CovariantOperator& a, const CovariantOperator& b) {
  a.require_same_shape(b);
  return (a.matrix() - b.matrix()).norm();
}

}  // namespace kubo
