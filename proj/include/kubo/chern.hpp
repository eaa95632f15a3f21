#pragma once

// Chern number of the filled Hofstadter bands from link variables on a
// discretized magnetic Brillouin zone (Fukui-Hatsugai-Suzuki). Independent of
// the real-space machinery; used to validate the Kubo-Streda value.

#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kubo/core.hpp"

namespace kubo {

/// q x q Bloch Hamiltonian of the clean Landau-gauge Hofstadter model at flux p/q.
/// k1 in [0, 2 pi / q) across the magnetic cell, k2 in [0, 2 pi).
inline Matrix hofstadter_bloch(long p, long q, double k1, double k2) {
  const double phi = static_cast<double>(p) / static_cast<double>(q);
  const Index n = static_cast<Index>(q);
  Matrix h = Matrix::Zero(n, n);
  for (Index s = 0; s < n; ++s) h(s, s) = -2.0 * std::cos(k2 - 2.0 * kPi * phi * static_cast<double>(s));
  if (n == 1) {
    h(0, 0) += -2.0 * std::cos(k1);
    return h;
  }
  for (Index s = 0; s + 1 < n; ++s) {
    h(s + 1, s) += -1.0;
    h(s, s + 1) += -1.0;
  }
  const Complex wrap = -std::polar(1.0, k1 * static_cast<double>(q));
  h(0, n - 1) += wrap;
  h(n - 1, 0) += std::conj(wrap);
  return h;
}

/// Total Chern number of the lowest `filled` bands on an nk x nk grid.
inline double fhs_chern_number(long p, long q, int filled, int nk = 24) {
  if (filled < 1 || filled > q) throw DomainError("chern: filled band count out of range");
  const double dk1 = 2.0 * kPi / (static_cast<double>(q) * nk);
  const double dk2 = 2.0 * kPi / nk;
  std::vector<Matrix> frames(static_cast<std::size_t>(nk * nk));
  for (int a = 0; a < nk; ++a)
    for (int b = 0; b < nk; ++b) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(hofstadter_bloch(p, q, a * dk1, b * dk2));
      frames[static_cast<std::size_t>(a * nk + b)] = es.eigenvectors().leftCols(filled);
    }
  auto frame = [&](int a, int b) -> const Matrix& {
    return frames[static_cast<std::size_t>(((a % nk + nk) % nk) * nk + (b % nk + nk) % nk)];
  };
  auto link = [&](const Matrix& u, const Matrix& v) {
    const Complex det = (u.adjoint() * v).determinant();
    return det / std::abs(det);
  };
  double total = 0.0;
  for (int a = 0; a < nk; ++a)
    for (int b = 0; b < nk; ++b) {
      const Complex u1 = link(frame(a, b), frame(a + 1, b));
      const Complex u2 = link(frame(a + 1, b), frame(a + 1, b + 1));
      const Complex u3 = link(frame(a, b + 1), frame(a + 1, b + 1));
      const Complex u4 = link(frame(a, b), frame(a, b + 1));
      total += std::arg(u1 * u2 * std::conj(u3) * std::conj(u4));
    }
  return total / (2.0 * kPi);
}

}  // namespace kubo
