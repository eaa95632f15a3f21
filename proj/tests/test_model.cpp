#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "kubo/funcalc.hpp"
#include "kubo/model.hpp"
#include "test_util.hpp"

using namespace kubo;

namespace {

LatticeConfig chain(int L, Boundary b = Boundary::torus) { return {1, {L, 1}, b}; }
LatticeConfig square(int L1, int L2, Boundary b = Boundary::torus) { return {2, {L1, L2}, b}; }

Eigen::VectorXd sorted_eigenvalues(const CovariantOperator& h) { return diagonalize(h).eigenvalues; }

}  // namespace

TEST(Disorder, ZeroStrengthGivesZeroPotential) {
  for (int idx : {0, 3, 99}) {
    const auto v = sample_disorder({0.0, 42}, 16, idx);
    EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
  }
}

TEST(Disorder, DeterministicInSeedAndIndex) {
  const DisorderSpec spec{2.0, 1234};
  EXPECT_EQ(sample_disorder(spec, 25, 7), sample_disorder(spec, 25, 7));
  EXPECT_NE(sample_disorder(spec, 25, 7), sample_disorder(spec, 25, 8));
  EXPECT_NE(sample_disorder({2.0, 1235}, 25, 7), sample_disorder(spec, 25, 7));
}

TEST(Disorder, UniformLawOverManyRealizations) {
  const DisorderSpec spec{2.0, 99};
  std::vector<double> all;
  for (int idx = 0; idx < 1000; ++idx) {
    const auto v = sample_disorder(spec, 16, idx);
    for (double x : v) {
      ASSERT_GE(x, -1.0);
      ASSERT_LT(x, 1.0);
    }
    all.insert(all.end(), v.begin(), v.end());
  }
  const double mean = std::accumulate(all.begin(), all.end(), 0.0) / all.size();
  double var = 0.0;
  for (double x : all) var += (x - mean) * (x - mean);
  var /= all.size() - 1;
  EXPECT_LT(std::abs(mean), 0.05);
  EXPECT_NEAR(var, 4.0 / 12.0, 0.1 * 4.0 / 12.0);
}

TEST(Disorder, NegativeIndexRejected) { EXPECT_THROW(sample_disorder({1.0, 1}, 4, -1), DomainError); }

TEST(Hamiltonian, CleanChainSpectrum) {
  const auto e = sorted_eigenvalues(build_hamiltonian(LatticeModel::clean(chain(4))));
  const Eigen::Vector4d expected(-2, 0, 0, 2);
  EXPECT_LT((e - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hamiltonian, OpenTwoByTwoGrid) {
  const auto e = sorted_eigenvalues(build_hamiltonian(LatticeModel::clean(square(2, 2, Boundary::open))));
  const Eigen::Vector4d expected(-2, 0, 0, 2);
  EXPECT_LT((e - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hamiltonian, ExactlyHermitian) {
  for (auto b : {Boundary::torus, Boundary::open}) {
    const auto m = LatticeModel::disordered(square(6, 4, b), {1, 3}, {1.5, 3}, 2);
    const Matrix h = build_hamiltonian(m).matrix();
    EXPECT_EQ((h - h.adjoint()).norm(), 0.0);
  }
}

TEST(Hamiltonian, CleanFluxFreeSpectrumMatchesDispersion) {
  const int L1 = 6, L2 = 4;
  const auto e = sorted_eigenvalues(build_hamiltonian(LatticeModel::clean(square(L1, L2))));
  std::vector<double> oracle;
  for (int a = 0; a < L1; ++a)
    for (int b = 0; b < L2; ++b)
      oracle.push_back(-2 * std::cos(2 * kPi * a / L1) - 2 * std::cos(2 * kPi * b / L2));
  std::sort(oracle.begin(), oracle.end());
  for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(e(static_cast<Index>(i)), oracle[i], 1e-10);
}

TEST(Hamiltonian, ChainDispersion) {
  const int L = 9;
  const auto e = sorted_eigenvalues(build_hamiltonian(LatticeModel::clean(chain(L))));
  std::vector<double> oracle;
  for (int k = 0; k < L; ++k) oracle.push_back(-2 * std::cos(2 * kPi * k / L));
  std::sort(oracle.begin(), oracle.end());
  for (int i = 0; i < L; ++i) EXPECT_NEAR(e(i), oracle[static_cast<std::size_t>(i)], 1e-12);
}

TEST(Hamiltonian, CommensurabilityViolationIsConfigError) {
  EXPECT_THROW(LatticeModel::clean(square(8, 6), {1, 3}), ConfigError);
  EXPECT_NO_THROW(LatticeModel::clean(square(8, 6, Boundary::open), {1, 3}));
  EXPECT_THROW(LatticeModel::clean(chain(6), {1, 3}), ConfigError);
  EXPECT_THROW(LatticeModel::clean(square(6, 6), {2, 6}), ConfigError);
}

TEST(Hamiltonian, PlaquetteFluxIsPhi) {
  // Product of hoppings around one plaquette, counter-clockwise, equals e^{i 2 pi phi}.
  const auto m = LatticeModel::clean(square(6, 6, Boundary::open), {1, 3});
  const Matrix h = build_hamiltonian(m).matrix();
  const LatticeShape s = m.shape();
  const Index a = s.index({2, 1}), b = s.index({3, 1}), c = s.index({3, 2}), d = s.index({2, 2});
  const Complex loop = h(b, a) * h(c, b) * h(d, c) * h(a, d);
  EXPECT_NEAR(std::arg(loop), 2 * kPi / 3, 1e-12);
}

TEST(MagneticTranslation, ZeroIsIdentity) {
  const auto m = LatticeModel::clean(square(6, 6), {1, 3});
  EXPECT_LT((magnetic_translation(m, {0, 0}).matrix() - Matrix::Identity(36, 36)).norm(), 1e-15);
}

TEST(MagneticTranslation, CleanInvarianceUnderCommensurateShift) {
  const auto m = LatticeModel::clean(square(6, 6), {1, 3});
  const Matrix h = build_hamiltonian(m).matrix();
  for (LatticeVector a : {LatticeVector{3, 0}, LatticeVector{0, 1}, LatticeVector{1, 0}, LatticeVector{2, 5}}) {
    const Matrix u = magnetic_translation(m, a).matrix();
    EXPECT_LT((u * h * u.adjoint() - h).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MagneticTranslation, Unitary) {
  const auto m = LatticeModel::clean(square(6, 3), {1, 3});
  for (LatticeVector a : {LatticeVector{1, 2}, LatticeVector{4, 1}}) {
    const Matrix u = magnetic_translation(m, a).matrix();
    EXPECT_LT((u.adjoint() * u - Matrix::Identity(18, 18)).norm(), 1e-12);
  }
}

TEST(MagneticTranslation, OpenBoundaryUnsupported) {
  const auto m = LatticeModel::clean(square(4, 4, Boundary::open));
  EXPECT_THROW(magnetic_translation(m, {1, 0}), UnsupportedOperation);
  EXPECT_THROW(shift_disorder(m, {1, 0}), UnsupportedOperation);
}

TEST(MagneticTranslation, IncompatibleShiftRejected) {
  // phi a1 L2 = 1/3 * 1 * 4 is not an integer.
  const auto m = LatticeModel::clean(square(6, 4), {1, 3});
  EXPECT_THROW(magnetic_translation(m, {1, 0}), ConfigError);
  EXPECT_NO_THROW(magnetic_translation(m, {3, 0}));
}

TEST(MagneticTranslation, ProjectiveRelation) {
  const auto m = LatticeModel::clean(square(6, 6), {1, 3});
  const LatticeVector a{1, 2}, b{2, 5}, ab{3, 7};
  const Matrix prod = magnetic_translation(m, a).matrix() * magnetic_translation(m, b).matrix();
  const Matrix uab = magnetic_translation(m, ab).matrix();
  const Matrix ratio = prod * uab.adjoint();
  const Complex phase = ratio(0, 0);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
  EXPECT_LT((ratio - phase * Matrix::Identity(36, 36)).cwiseAbs().maxCoeff(), 1e-12);
  // e^{-i 2 pi phi b1 a2}
  EXPECT_LT(std::abs(phase - std::polar(1.0, -2 * kPi / 3 * b[0] * a[1])), 1e-12);
}

TEST(MagneticTranslation, MovesSiteIndicators) {
  const auto m = LatticeModel::clean(square(6, 6), {1, 3});
  const LatticeShape s = m.shape();
  const LatticeVector a{2, 3};
  const Matrix u = magnetic_translation(m, a).matrix();
  for (Site b : {Site{0, 0}, Site{5, 4}, Site{3, 2}}) {
    Matrix chi = Matrix::Zero(36, 36);
    chi(s.index(b), s.index(b)) = 1.0;
    Matrix expect = Matrix::Zero(36, 36);
    const Site moved{(b[0] + a[0]) % 6, (b[1] + a[1]) % 6};
    expect(s.index(moved), s.index(moved)) = 1.0;
    EXPECT_LT((u * chi * u.adjoint() - expect).norm(), 1e-12);
  }
}

TEST(Covariance, ShiftedDisorderMatchesConjugation) {
  const auto m = LatticeModel::disordered(square(6, 6), {1, 3}, {1.0, 17}, 0);
  const Matrix h = build_hamiltonian(m).matrix();
  for (LatticeVector a : {LatticeVector{1, 0}, LatticeVector{0, 1}, LatticeVector{4, 3}}) {
    const Matrix u = magnetic_translation(m, a).matrix();
    const Matrix hs = build_hamiltonian(shift_disorder(m, a)).matrix();
    EXPECT_LT((u * h * u.adjoint() - hs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Covariance, ZeroAndFullPeriodShiftsAreIdentity) {
  const auto m = LatticeModel::disordered(square(6, 4), {0, 1}, {1.0, 5}, 3);
  EXPECT_EQ(shift_disorder(m, {0, 0}).potential, m.potential);
  EXPECT_EQ(shift_disorder(m, {6, 0}).potential, m.potential);
  EXPECT_EQ(shift_disorder(m, {0, 4}).potential, m.potential);
}

TEST(Covariance, ChainTranslation) {
  const auto m = LatticeModel::disordered(chain(7), {}, {2.0, 8}, 1);
  const Matrix h = build_hamiltonian(m).matrix();
  const Matrix u = magnetic_translation(m, {3, 0}).matrix();
  EXPECT_LT((u * h * u.adjoint() - build_hamiltonian(shift_disorder(m, {3, 0})).matrix()).norm(), 1e-12);
}

TEST(Displacement, Cases) {
  const LatticeShape open{1, {8, 1}, Boundary::open};
  const LatticeShape torus{1, {8, 1}, Boundary::torus};
  EXPECT_EQ(displacement(open, 3, 3, 0), 0);
  EXPECT_EQ(displacement(open, 7, 0, 0), 7);
  EXPECT_EQ(displacement(torus, 7, 0, 0), -1);
  EXPECT_EQ(displacement(torus, 0, 7, 0), 1);
  EXPECT_EQ(displacement(torus, 4, 0, 0), -4);
  EXPECT_EQ(displacement(torus, 3, 0, 0), 3);
}

TEST(Displacement, TwoDimensionalAxes) {
  const LatticeShape s{2, {5, 4}, Boundary::torus};
  const Index m = s.index({4, 3}), n = s.index({0, 0});
  EXPECT_EQ(displacement(s, m, n, 0), -1);
  EXPECT_EQ(displacement(s, m, n, 1), -1);
  EXPECT_EQ(displacement(s, n, m, 0), 1);
}

TEST(Velocity, ZeroHoppingGivesZero) {
  auto m = LatticeModel::disordered(square(4, 4), {1, 2}, {3.0, 1}, 0);
  m.hopping = 0.0;
  for (int a = 0; a < 2; ++a) EXPECT_EQ(velocity_operator(m, a).matrix().norm(), 0.0);
}

TEST(Velocity, OpenChainEqualsCommutatorWithPosition) {
  const auto m = LatticeModel::clean(chain(9, Boundary::open));
  const Matrix h = build_hamiltonian(m).matrix();
  const Matrix x = testing_util::exact_position(m.shape(), 0);
  const Matrix oracle = kI * (h * x - x * h);
  EXPECT_LT((velocity_operator(m, 0).matrix() - oracle).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Velocity, OpenSquareWithFluxEqualsCommutator) {
  const auto m = LatticeModel::disordered(square(6, 5, Boundary::open), {1, 3}, {1.0, 4}, 0);
  const Matrix h = build_hamiltonian(m).matrix();
  for (int a = 0; a < 2; ++a) {
    const Matrix x = testing_util::exact_position(m.shape(), a);
    EXPECT_LT((velocity_operator(m, a).matrix() - kI * (h * x - x * h)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Velocity, HermitianWithZeroDiagonal) {
  const auto m = LatticeModel::disordered(square(6, 6), {1, 3}, {1.0, 4}, 1);
  for (int a = 0; a < 2; ++a) {
    const Matrix v = velocity_operator(m, a).matrix();
    EXPECT_LT((v - v.adjoint()).norm(), 1e-12);
    EXPECT_EQ(v.diagonal().norm(), 0.0);
  }
}

TEST(Velocity, SupportedOnBondsOnly) {
  const auto m = LatticeModel::clean(square(4, 4), {1, 2});
  const Matrix h = build_hamiltonian(m).matrix();
  const Matrix v = velocity_operator(m, 1).matrix();
  for (Index j = 0; j < 16; ++j)
    for (Index i = 0; i < 16; ++i)
      if (h(i, j) == Complex(0.0)) EXPECT_EQ(v(i, j), Complex(0.0));
}
