/*   Copyright 2026 The rmltsk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
 */
#pragma once

// Solvers for the Sylvester equation  A W + W B = Z.
//
// solve_sylvester is a Bartels-Stewart elimination on complex Schur forms and
// scales to the consequent subproblem. kron_oracle is the literal vectorized
// system  (I_n (x) A + B^T (x) I_m) vec(W) = vec(Z)  with column-major vec; it
// is O((mn)^3) and kept as a reference for small problems.

#include "rmltsk/common.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace rmltsk {

struct SylvesterProblem {
  Matrix A;  // m x m
  Matrix B;  // n x n
  Matrix Z;  // m x n
};

inline constexpr double kSylvesterRcondTol = 1e-12;
inline constexpr Index kKronOracleMaxSize = 4096;

inline void check_shapes(const SylvesterProblem& p) {
  if (p.A.rows() != p.A.cols()) throw DataError("sylvester: A must be square");
  if (p.B.rows() != p.B.cols()) throw DataError("sylvester: B must be square");
  if (p.Z.rows() != p.A.rows() || p.Z.cols() != p.B.rows())
    throw DataError("sylvester: Z must be " + std::to_string(p.A.rows()) + "x" + std::to_string(p.B.rows()));
}

inline double sylvester_residual(const SylvesterProblem& p, const Matrix& W) {
  return (p.A * W + W * p.B - p.Z).norm();
}

inline Matrix solve_sylvester(const SylvesterProblem& p) {
  check_shapes(p);
  using Complex = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;
  const Index m = p.A.rows(), n = p.B.rows();
  if (m == 0 || n == 0) return Matrix::Zero(m, n);

  // A = U T U^*, B = V S V^*, both T and S upper triangular.
  Eigen::ComplexSchur<CMatrix> schur_a(p.A.cast<Complex>());
  Eigen::ComplexSchur<CMatrix> schur_b(p.B.cast<Complex>());
  if (schur_a.info() != Eigen::Success || schur_b.info() != Eigen::Success)
    throw NumericalError("sylvester: Schur decomposition did not converge");
  const CMatrix& U = schur_a.matrixU();
  const CMatrix& T = schur_a.matrixT();
  const CMatrix& V = schur_b.matrixU();
  const CMatrix& S = schur_b.matrixT();

  // Smallest |t_ii + s_jj| relative to the operator scale estimates the
  // reciprocal condition of the triangular system.
  const double scale = std::max(p.A.norm() + p.B.norm(), std::numeric_limits<double>::min());
  double min_gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) min_gap = std::min(min_gap, std::abs(T(i, i) + S(j, j)));
  if (!(min_gap / scale >= kSylvesterRcondTol))
    throw NumericalError("singular problem: spectra of A and -B overlap (rcond estimate " +
                         format_real(min_gap / scale, 3) + ")");

  // T Y + Y S = F with Y = U^* W V, F = U^* Z V; solve column by column.
  CMatrix F = U.adjoint() * p.Z.cast<Complex>() * V;
  CMatrix Y(m, n);
  for (Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = F.col(j);
    if (j > 0) rhs -= Y.leftCols(j) * S.col(j).head(j);
    for (Index i = m - 1; i >= 0; --i) {
      Complex acc = rhs(i);
      if (i + 1 < m)
        acc -= T.row(i).segment(i + 1, m - i - 1).transpose().cwiseProduct(Y.col(j).segment(i + 1, m - i - 1)).sum();
      Y(i, j) = acc / (T(i, i) + S(j, j));
    }
  }
  return (U * Y * V.adjoint()).real();
}

inline Matrix kron_oracle(const SylvesterProblem& p) {
  check_shapes(p);
  const Index m = p.A.rows(), n = p.B.rows();
  const Index mn = m * n;
  if (mn > kKronOracleMaxSize)
    throw DataError("kron_oracle: system size " + std::to_string(mn) + " exceeds guard " +
                    std::to_string(kKronOracleMaxSize));
  if (mn == 0) return Matrix::Zero(m, n);

  Matrix M = Matrix::Zero(mn, mn);
  // I_n (x) A : block-diagonal copies of A.
  for (Index b = 0; b < n; ++b) M.block(b * m, b * m, m, m) += p.A;
  // B^T (x) I_m : block (r, c) is B(c, r) * I_m.
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      M.block(r * m, c * m, m, m).diagonal().array() += p.B(c, r);

  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible() || !(lu.rcond() >= kSylvesterRcondTol))
    throw NumericalError("singular problem: Kronecker system is rank deficient");
  const Vector z = Eigen::Map<const Vector>(p.Z.data(), mn);
  const Vector w = lu.solve(z);
  return Eigen::Map<const Matrix>(w.data(), m, n);
}

}  // namespace rmltsk
