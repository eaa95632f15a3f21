#pragma once

// Finite-volume trace per unit volume, the K1/K2/Kinf norms, the K2 inner
// product, conjugation and the module products and generalized commutators.
// At finite volume the three spaces coincide as sets; each product keeps its
// own entry point so identities can be checked in the form they are stated.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "kubo/operator.hpp"

namespace kubo {

/// A finite weighted family omega -> A_omega. Weights sum to one.
class EnsembleOperator {
 public:
  using Member = std::pair<CovariantOperator, double>;

  EnsembleOperator(CovariantOperator single) { members_.emplace_back(std::move(single), 1.0); }

  explicit EnsembleOperator(std::vector<Member> members) : members_(std::move(members)) {
    if (members_.empty()) throw DomainError("ensemble must have at least one realization");
    double total = 0.0;
    for (const auto& [op, w] : members_) {
      if (w < 0) throw DomainError("ensemble weights must be non-negative");
      members_.front().first.require_same_shape(op);
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("ensemble weights must sum to 1");
  }

  /// Equal weights over the given realizations.
  static EnsembleOperator uniform(std::vector<CovariantOperator> ops) {
    const double w = 1.0 / static_cast<double>(ops.size());
    std::vector<Member> members;
    members.reserve(ops.size());
    for (auto& op : ops) members.emplace_back(std::move(op), w);
    return EnsembleOperator(std::move(members));
  }

  const std::vector<Member>& members() const { return members_; }
  const LatticeShape& shape() const { return members_.front().first.shape(); }

 private:
  std::vector<Member> members_;
};

struct OperatorNorms {
  double norm1 = 0.0;
  double norm2 = 0.0;
  double norminf = 0.0;
};

/// T(A) = sum_omega w_omega (1/N) tr A_omega.
inline Complex trace_per_unit_volume(const EnsembleOperator& a) {
  Complex t = 0.0;
  for (const auto& [op, w] : a.members()) t += w * op.matrix().trace() / static_cast<double>(op.size());
  return t;
}

inline Complex trace_per_unit_volume(const CovariantOperator& a) {
  return a.matrix().trace() / static_cast<double>(a.size());
}

/// <<A, B>> = (1/N) tr(A* B).
inline Complex hs_inner(const CovariantOperator& a, const CovariantOperator& b) {
  a.require_same_shape(b);
  return a.matrix().conjugate().cwiseProduct(b.matrix()).sum() / static_cast<double>(a.size());
}

inline Complex hs_inner(const EnsembleOperator& a, const EnsembleOperator& b) {
  if (a.members().size() != b.members().size()) throw ShapeMismatch("ensembles have different sizes");
  Complex t = 0.0;
  for (std::size_t i = 0; i < a.members().size(); ++i)
    t += a.members()[i].second * hs_inner(a.members()[i].first, b.members()[i].first);
  return t;
}

/// norm1 = (1/N) tr|A| from singular values, norm2 = sqrt((1/N) tr A*A), norminf = largest singular value.
inline OperatorNorms norms(const CovariantOperator& a) {
  const Eigen::BDCSVD<Matrix> svd(a.matrix());
  const RealVector& s = svd.singularValues();
  const double n = static_cast<double>(a.size());
  return {s.sum() / n, std::sqrt(s.squaredNorm() / n), s.size() ? s.maxCoeff() : 0.0};
}

inline OperatorNorms norms(const EnsembleOperator& a) {
  OperatorNorms out;
  double sq = 0.0;
  for (const auto& [op, w] : a.members()) {
    const OperatorNorms n = norms(op);
    out.norm1 += w * n.norm1;
    sq += w * n.norm2 * n.norm2;
    out.norminf = std::max(out.norminf, n.norminf);
  }
  out.norm2 = std::sqrt(sq);
  return out;
}

/// A^double-dagger: conjugate transpose.
inline CovariantOperator dagger(const CovariantOperator& a) { return {a.matrix().adjoint(), a.shape()}; }

namespace detail {
inline void require_finite(const CovariantOperator& a, const char* what) {
  if (!a.matrix().allFinite()) throw DomainError(std::string(what) + ": operand has non-finite entries");
}
}  // namespace detail

/// B (.)_L A for B in Kinf, A in K2 or K1.
inline CovariantOperator prod_left(const CovariantOperator& b, const CovariantOperator& a) {
  b.require_same_shape(a);
  detail::require_finite(b, "left multiplier");
  return {b.matrix() * a.matrix(), a.shape()};
}

/// A (.)_R B = (B* (.)_L A^dagger)^dagger for A in K2 or K1, B in Kinf.
inline CovariantOperator prod_right(const CovariantOperator& a, const CovariantOperator& b) {
  a.require_same_shape(b);
  detail::require_finite(b, "right multiplier");
  return dagger(prod_left(dagger(b), dagger(a)));
}

/// A <> B for A, B in K2; lands in the closure of K1.
inline CovariantOperator prod_diamond(const CovariantOperator& a, const CovariantOperator& b) {
  a.require_same_shape(b);
  detail::require_finite(a, "diamond operand");
  detail::require_finite(b, "diamond operand");
  return {a.matrix() * b.matrix(), a.shape()};
}

/// [B, A]_(.) = B (.)_L A - A (.)_R B.
inline CovariantOperator comm_odot(const CovariantOperator& b, const CovariantOperator& a) {
  return prod_left(b, a) - prod_right(a, b);
}

/// [A, B]_<> = A <> B - B <> A.
inline CovariantOperator comm_diamond(const CovariantOperator& a, const CovariantOperator& b) {
  return prod_diamond(a, b) - prod_diamond(b, a);
}

/// [H, A]_dagger = H A - (H A^dagger)^dagger.
inline CovariantOperator comm_ddagger(const CovariantOperator& h, const CovariantOperator& a) {
  h.require_same_shape(a);
  return CovariantOperator(h.matrix() * a.matrix(), a.shape()) -
         dagger(CovariantOperator(h.matrix() * a.matrix().adjoint(), a.shape()));
}

}  // namespace kubo
