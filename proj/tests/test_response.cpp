#include <gtest/gtest.h>

#include "kubo/chern.hpp"
#include "kubo/response.hpp"
#include "test_util.hpp"

using namespace kubo;
using testing_util::op;

namespace {

LatticeModel hofstadter(int L, Boundary b = Boundary::torus, double w = 0.0, std::int64_t r = 0) {
  return LatticeModel::disordered({2, {L, L}, b}, {1, 3}, {w, 7}, r);
}

double gap_below(const LatticeModel& m, Index k) {
  const auto sd = diagonalize(build_hamiltonian(m));
  return 0.5 * (sd.eigenvalues(k - 1) + sd.eigenvalues(k));
}

// Largest gap among the lowest `count` levels of the spectrum; a clean level count
// avoids the degeneracies of symmetric lattices.
double widest_gap_level(const LatticeModel& m) {
  const auto sd = diagonalize(build_hamiltonian(m));
  Index best = 1;
  for (Index i = 1; i < sd.size(); ++i)
    if (sd.eigenvalues(i) - sd.eigenvalues(i - 1) > sd.eigenvalues(best) - sd.eigenvalues(best - 1)) best = i;
  return 0.5 * (sd.eigenvalues(best - 1) + sd.eigenvalues(best));
}

// sigma_jk = -T{v_j (iL+eta)^{-1} i[x_k, zeta]} assembled with dense matrices, no eigenbasis shortcuts:
// (iL + eta)^{-1} B = int_0^inf e^{-eta t} e^{-iHt} B e^{iHt} dt, evaluated through the Sylvester equation
// i(H X - X H) + eta X = B solved column by column in the site basis.
Matrix sylvester_sigma(const LatticeModel& m, const Matrix& zeta, double eta) {
  const Matrix h = build_hamiltonian(m).matrix();
  const Index n = h.rows();
  const int d = m.shape().dimension;
  Matrix sigma(d, d);
  // Kronecker form: (I (x) iH - i H^T (x) I + eta) vec X = vec B
  Matrix big = Matrix::Zero(n * n, n * n);
  for (Index b = 0; b < n; ++b)
    for (Index a = 0; a < n; ++a) {
      const Index row = a + n * b;
      big(row, row) += eta;
      for (Index c = 0; c < n; ++c) {
        big(row, c + n * b) += kI * h(a, c);
        big(row, a + n * c) -= kI * h(c, b);
      }
    }
  Eigen::PartialPivLU<Matrix> lu(big);
  for (int k = 0; k < d; ++k) {
    const Matrix src = kI * position_commutator(CovariantOperator(zeta, m.shape()), k).matrix();
    const Eigen::VectorXcd x = lu.solve(Eigen::Map<const Eigen::VectorXcd>(src.data(), n * n));
    const Matrix xm = Eigen::Map<const Matrix>(x.data(), n, n);
    for (int j = 0; j < d; ++j) sigma(j, k) = -(velocity_operator(m, j).matrix() * xm).trace() / double(n);
  }
  return sigma;
}

}  // namespace

TEST(Liouvillian, MatchesMatrixCommutator) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const Matrix h = build_hamiltonian(m).matrix();
  const LiouvillianRep l(diagonalize(build_hamiltonian(m)));
  const Matrix b = testing_util::random_matrix(36, 1);
  EXPECT_LT((l.apply(op(b, m.shape())).matrix() - (h * b - b * h)).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Liouvillian, SelfAdjointForHilbertSchmidtProduct) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const LiouvillianRep l(diagonalize(build_hamiltonian(m)));
  const auto a = op(testing_util::random_matrix(36, 2), m.shape());
  const auto b = op(testing_util::random_matrix(36, 3), m.shape());
  EXPECT_LT(std::abs(hs_inner(a, l.apply(b)) - hs_inner(l.apply(a), b)), 1e-11);
}

TEST(Liouvillian, ExponentialIsTwoSidedConjugation) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const Matrix h = build_hamiltonian(m).matrix();
  const LiouvillianRep l(diagonalize(build_hamiltonian(m)));
  const Matrix b = testing_util::random_matrix(36, 4);
  const double t = 1.7;
  const Matrix u = testing_util::spectral(h, [t](double e) { return std::polar(1.0, -t * e); });
  EXPECT_LT((l.evolve(t, op(b, m.shape())).matrix() - u * b * u.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LiouvillianResolvent, TwoByTwo) {
  const LatticeShape s{1, {2, 1}, Boundary::open};
  Matrix h = Matrix::Zero(2, 2);
  h(1, 1) = 1.0;
  Matrix b(2, 2);
  b << 0, 1, 1, 0;
  const LiouvillianRep l(diagonalize(op(h, s)));
  const Matrix r = liouvillian_resolvent(l, 1.0, op(b, s)).matrix();
  EXPECT_LT(std::abs(r(0, 1) - Complex(0.5, 0.5)), 1e-15);
  EXPECT_LT(std::abs(r(1, 0) - Complex(0.5, -0.5)), 1e-15);
}

TEST(LiouvillianResolvent, DiagonalAndRoundTrip) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const LiouvillianRep l(diagonalize(build_hamiltonian(m)));
  const double eta = 0.3;
  // Diagonal in the eigenbasis means in Ker L.
  Eigen::VectorXcd dvals = testing_util::random_matrix(36, 5).col(0);
  const auto bdiag = l.spectrum().compose(Vector(dvals));
  EXPECT_LT((liouvillian_resolvent(l, eta, bdiag).matrix() - bdiag.matrix() / eta).norm(), 1e-11);
  const auto b = op(testing_util::random_matrix(36, 6), m.shape());
  const auto x = liouvillian_resolvent(l, eta, b);
  const Matrix back = kI * l.apply(x).matrix() + eta * x.matrix();
  EXPECT_LT((back - b.matrix()).norm(), 1e-11);
  EXPECT_THROW(liouvillian_resolvent(l, 0.0, b), DomainError);
}

TEST(KernelProjection, DiagonalAndOffDiagonalParts) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const LiouvillianRep l(diagonalize(build_hamiltonian(m)));
  Eigen::VectorXcd dvals = testing_util::random_matrix(36, 7).col(0);
  EXPECT_LT(kernel_projection(l, l.spectrum().compose(Vector(dvals))).matrix().norm(), 1e-11);
  Matrix off = testing_util::random_matrix(36, 8);
  off.diagonal().setZero();
  const auto b = op(l.spectrum().from_eigenbasis(off), m.shape());
  EXPECT_LT((kernel_projection(l, b).matrix() - b.matrix()).norm(), 1e-11);
}

TEST(KernelProjection, CurrentOfProjectionIsOrthogonalToKernel) {
  const auto m = hofstadter(6, Boundary::open, 1.0);
  const LiouvillianRep l(diagonalize(build_hamiltonian(m)));
  const auto p = fermi_projection(l.spectrum(), gap_below(m, 12));
  for (int a = 0; a < 2; ++a) {
    const auto x = comm_odot(p, current_source(p, a));
    EXPECT_LT((kernel_projection(l, x).matrix() - x.matrix()).norm(), 1e-10);
  }
}

TEST(CurrentSource, IdentityHasNone) {
  EXPECT_EQ(current_source(CovariantOperator::identity({2, {4, 4}, Boundary::torus}), 1).matrix().norm(), 0.0);
}

TEST(SigmaResolvent, MatchesSylvesterSolve) {
  const auto m = hofstadter(3, Boundary::open, 1.0);
  const auto zeta = EquilibriumState::thermal(2.0, -0.3);
  const Matrix z = zeta.evaluate(diagonalize(build_hamiltonian(m))).matrix();
  EXPECT_LT((sigma_resolvent(m, zeta, 0.7) - sylvester_sigma(m, z, 0.7)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SigmaResolvent, IdentityStateGivesZero) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const auto zeta = EquilibriumState::thermal(1e-3, 1e6);  // f = 1 on the spectrum
  EXPECT_LT(sigma_resolvent(m, zeta, 1.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SigmaResolvent, CleanRealHamiltonianHasNoHall) {
  const auto m = LatticeModel::clean({2, {6, 6}, Boundary::torus});
  const auto s = sigma_resolvent(m, EquilibriumState::projection(widest_gap_level(m)), 0.5);
  EXPECT_LT(std::abs(s(0, 1)), 1e-10);
  EXPECT_LT(std::abs(s(1, 0)), 1e-10);
}

TEST(SigmaResolvent, DisorderedRealHamiltonianHasNoAntisymmetricPart) {
  const auto m = LatticeModel::disordered({2, {6, 5}, Boundary::open}, {}, {1.0, 3}, 0);
  const auto s = sigma_resolvent(m, EquilibriumState::projection(gap_below(m, 15)), 0.5);
  EXPECT_LT(std::abs(s(0, 1) - s(1, 0)), 1e-10);
}

TEST(SigmaResolvent, ApproachesStredaInGap) {
  const auto m = hofstadter(12);
  const double ef = gap_below(m, 48);
  const auto s = sigma_resolvent(m, EquilibriumState::projection(ef), 0.25);
  EXPECT_LT(max_abs_difference(s, sigma_streda(m, ef).sigma), 0.05);
}

TEST(SigmaKubo, IdentityStateGivesZero) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  EXPECT_LT(sigma_kubo_integral(m, EquilibriumState::thermal(1e-3, 1e6), 1.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SigmaKubo, AgreesWithResolventAndConverges) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const auto zeta = EquilibriumState::projection(gap_below(m, 12));
  const auto ref = sigma_resolvent(m, zeta, 1.0);
  EXPECT_LT(max_abs_difference(sigma_kubo_integral(m, zeta, 1.0), ref), 1e-6);
  double prev = std::numeric_limits<double>::infinity();
  for (double panel : {16.0, 8.0, 4.0}) {
    const double gap = max_abs_difference(sigma_kubo_integral(m, zeta, 1.0, {panel, 1e-12}), ref);
    EXPECT_LT(gap, prev) << "panel " << panel;
    prev = gap;
  }
}

TEST(Currents, ZeroFieldGivesZeroCurrent) {
  const auto m = hofstadter(6, Boundary::open, 1.0);
  const auto r = net_current(m, DriveProtocol{1.0, {0, 0}}, EquilibriumState::projection(gap_below(m, 12)),
                             TimeGrid{-30, 0.02});
  EXPECT_EQ(r.current.norm(), 0.0);
}

TEST(Currents, HallComponentIsOddInField) {
  const auto m = hofstadter(6, Boundary::open, 1.0);
  const auto zeta = EquilibriumState::projection(gap_below(m, 12));
  const TimeGrid g = TimeGrid::for_drive(DriveProtocol{1.0, {1, 0}}, 0.02);
  auto even_part = [&](double e) {
    const auto jp = net_current(m, DriveProtocol{1.0, {0, e}}, zeta, g).current;
    const auto jm = net_current(m, DriveProtocol{1.0, {0, -e}}, zeta, g).current;
    return std::abs(jp(0) + jm(0));
  };
  const double a = even_part(0.02), b = even_part(0.01);
  EXPECT_LT(a, 0.02 * 0.02);
  EXPECT_NEAR(a / b, 4.0, 0.5);
}

TEST(Currents, SmallFieldCurrentMatchesStreda) {
  const auto m = hofstadter(12);
  const double ef = gap_below(m, 48);
  const double e = 1e-3, eta = 0.25;
  const auto j = net_current(m, DriveProtocol{eta, {0, e}}, EquilibriumState::projection(ef),
                             TimeGrid::for_drive(DriveProtocol{eta, {0, e}}, 0.02));
  const double expected = sigma_streda(m, ef).sigma(0, 1).real() * e;
  EXPECT_NEAR(j.current(0), expected, 0.05 * std::abs(expected));
}

TEST(Currents, EquilibriumCurrentVanishes) {
  const auto clean0 = LatticeModel::clean({2, {6, 6}, Boundary::torus});
  const auto r0 = equilibrium_current(clean0, EquilibriumState::thermal(3.0, 0.3));
  EXPECT_LT(r0.current.cwiseAbs().maxCoeff(), 1e-10);
  const auto clean = hofstadter(12);
  const auto r1 = equilibrium_current(clean, EquilibriumState::projection(gap_below(clean, 48)));
  EXPECT_LT(r1.current.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FiniteDifference, AgreesWithResolventOnOpenBox) {
  const auto m = hofstadter(6, Boundary::open);
  const auto zeta = EquilibriumState::projection(gap_below(m, 12));
  const double eta = 1.0;
  const TimeGrid g = TimeGrid::for_drive(DriveProtocol{eta, {1, 0}}, 0.02);
  const auto ref = sigma_resolvent(m, zeta, eta);
  EXPECT_LT(max_abs_difference(sigma_finite_difference(m, zeta, eta, 1e-3, g), ref), 1e-3);
}

TEST(FiniteDifference, RichardsonRemovesFieldCurvature) {
  const auto m = hofstadter(4, Boundary::open, 1.0);
  const auto zeta = EquilibriumState::projection(gap_below(m, 6));
  const double eta = 1.0;
  const TimeGrid g = TimeGrid::for_drive(DriveProtocol{eta, {1, 0}}, 0.01);
  const auto ref = sigma_resolvent(m, zeta, eta);
  const double plain = max_abs_difference(sigma_finite_difference(m, zeta, eta, 0.2, g), ref);
  const double rich = max_abs_difference(sigma_finite_difference_richardson(m, zeta, eta, 0.2, g), ref);
  EXPECT_LT(rich, 0.1 * plain);
}

TEST(Streda, OpenBoxAntisymmetry) {
  const auto m = hofstadter(6, Boundary::open, 1.0);
  const auto s = sigma_streda(m, gap_below(m, 12)).sigma;
  EXPECT_EQ(s(0, 0), Complex(0.0));
  EXPECT_EQ(s(1, 1), Complex(0.0));
  EXPECT_LT(std::abs(s(0, 1) + s(1, 0)), 1e-10);
}

TEST(Streda, RealHamiltonianOnOpenBoxVanishes) {
  const auto m = LatticeModel::disordered({2, {6, 5}, Boundary::open}, {}, {1.0, 3}, 0);
  EXPECT_LT(sigma_streda(m, gap_below(m, 15)).sigma.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Streda, HallConductanceIsQuantized) {
  const auto m = hofstadter(12);
  const auto r = sigma_streda(m, gap_below(m, 48));
  EXPECT_NEAR(std::abs(r.hall_scaled), 1.0, 0.02);
  EXPECT_LT(std::abs(r.hall_imaginary), 1e-10);
  // Same sign as the band Chern number on the magnetic Brillouin zone.
  const double chern = fhs_chern_number(1, 3, 1);
  EXPECT_NEAR(chern, std::round(chern), 1e-9);
  EXPECT_EQ(std::abs(std::round(chern)), 1.0);
  EXPECT_GT(r.hall_scaled * chern, 0.0);
}

TEST(Streda, SecondGapCarriesOppositeCharge) {
  // Two filled bands at flux 1/3 carry total Chern number of opposite sign.
  EXPECT_NEAR(fhs_chern_number(1, 3, 2), -fhs_chern_number(1, 3, 1), 1e-9);
  const auto m = hofstadter(12);
  const auto r = sigma_streda(m, gap_below(m, 96));
  EXPECT_NEAR(r.hall_scaled, fhs_chern_number(1, 3, 2), 0.02);
}

TEST(TripleCommutator, TrivialProjections) {
  const LatticeShape s{2, {4, 4}, Boundary::torus};
  EXPECT_EQ(triple_commutator_check(CovariantOperator::zero(s), 0).operator_norm, 0.0);
  EXPECT_EQ(triple_commutator_check(CovariantOperator::identity(s), 1).operator_norm, 0.0);
}

TEST(TripleCommutator, RandomProjectorOnOpenBox) {
  const LatticeShape s{2, {5, 4}, Boundary::open};
  const Eigen::HouseholderQR<Matrix> qr(testing_util::random_matrix(20, 12));
  const Matrix q = qr.householderQ() * Matrix::Identity(20, 7);
  const auto p = op(q * q.adjoint(), s);
  for (int a = 0; a < 2; ++a) EXPECT_LT(triple_commutator_check(p, a).operator_norm, 1e-12);
}

TEST(TripleCommutator, TorusDefectShrinksWithSize) {
  // With minimal-image displacement the identity only holds up to wrap-around terms.
  double prev = std::numeric_limits<double>::infinity();
  for (int L : {6, 12, 18}) {
    const auto m = hofstadter(L);
    const auto p = fermi_projection(diagonalize(build_hamiltonian(m)), gap_below(m, L * L / 3));
    const double v = triple_commutator_check(p, 0).operator_norm;
    EXPECT_LT(v, prev) << "L=" << L;
    prev = v;
  }
}

TEST(LiouvillianForm, EqualsResolventPathway) {
  const auto m = hofstadter(6, Boundary::open, 1.0);
  const double ef = gap_below(m, 12);
  for (double eta : {1.0, 0.3}) {
    const auto a = sigma_liouvillian_form(m, ef, eta);
    const auto b = sigma_resolvent(m, EquilibriumState::projection(ef), eta);
    EXPECT_LT(max_abs_difference(a, b), 1e-8) << "eta=" << eta;
  }
}

TEST(StructuralIdentity, ExactOnOpenBox) {
  const auto m = hofstadter(6, Boundary::open, 1.0);
  const double ef = gap_below(m, 12);
  for (int a = 0; a < 2; ++a) EXPECT_LT(structural_identity_check(m, ef, a), 1e-10);
}

TEST(EtaSweep, SinglePointMatchesResolvent) {
  const auto m = hofstadter(6, Boundary::torus, 1.0);
  const double ef = gap_below(m, 12);
  const auto rep = eta_sweep(m, ef, {0.5});
  ASSERT_EQ(rep.size(), 1u);
  EXPECT_EQ(max_abs_difference(rep[0].sigma_resolvent, sigma_resolvent(m, EquilibriumState::projection(ef), 0.5)),
            0.0);
  EXPECT_THROW(eta_sweep(m, ef, {0.5, 1.0}), DomainError);
}

TEST(EtaSweep, GappedCleanErrorsDecrease) {
  const auto m = hofstadter(12);
  const auto rep = eta_sweep(m, gap_below(m, 48), {1.0, 0.5, 0.25, 0.125});
  for (std::size_t i = 1; i < rep.size(); ++i) EXPECT_LT(rep[i].streda_gap, rep[i - 1].streda_gap);
}

TEST(EtaSweep, DisorderedEnsembleImprovesAtSmallEta) {
  double first = 0.0, last = 0.0;
  for (int r = 0; r < 10; ++r) {
    const auto m = hofstadter(6, Boundary::torus, 2.0, r);
    const auto rep = eta_sweep(m, -1.0, {1.0, 0.125});
    first += rep.front().streda_gap / 10;
    last += rep.back().streda_gap / 10;
  }
  EXPECT_LT(last, first);
}
