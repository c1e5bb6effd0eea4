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

// Robust multilabel TSK training objective
//
//   ||(SY - C Xg)^T||_{2,1} + alpha ||C||_F^2 + beta ||(Y - SY)^T||_{2,1}
//     + 2 gamma Tr(Y^T S^T Lap S Y),     Lap = diag((CC^T) 1) - CC^T,
//
// minimized by alternating reweighted Sylvester solves for C and S. Both
// updates of one iteration read the previous iterate (S0, C0); the pair is
// committed together afterwards.

#include "rmltsk/dataset.hpp"
#include "rmltsk/fuzzy_rules.hpp"
#include "rmltsk/model.hpp"
#include "rmltsk/sylvester.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace rmltsk {

struct LossComponents {
  double soft_loss = 0.0;    // ||(SY - C Xg)^T||_{2,1}
  double c_penalty = 0.0;    // alpha ||C||_F^2
  double soft_label = 0.0;   // beta ||(Y - SY)^T||_{2,1}
  double correlation = 0.0;  // 2 gamma Tr(Y^T S^T Lap S Y)
  double total = 0.0;
};

struct ReweightDiagonals {
  Vector dS1;
  Vector dS2;
  Vector dC;
};

struct CorrelationLaplacian {
  Matrix R;
  Vector degree;
  Matrix lap;
};

enum class StopReason { Margin, NonpositiveLoss, MaxIters };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Margin: return "margin";
    case StopReason::NonpositiveLoss: return "nonpositive_loss";
    case StopReason::MaxIters: return "max_iters";
  }
  return "unknown";
}

struct TrainTrace {
  std::vector<LossComponents> iterations;
  StopReason stop_reason = StopReason::MaxIters;
  double initial_loss = 0.0;  // objective at the initialization
  double margin = 0.0;        // the Min actually used

  // Number of iterations whose total loss exceeded the previous iteration's.
  int n_increases() const {
    int n = 0;
    for (std::size_t t = 1; t < iterations.size(); ++t)
      if (iterations[t].total > iterations[t - 1].total) ++n;
    return n;
  }
};

inline void check_shapes(const Matrix& S, const Matrix& C, const Matrix& Xg, const Matrix& Y) {
  const Index L = Y.rows();
  if (S.rows() != L || S.cols() != L) throw DataError("S must be L x L");
  if (C.rows() != L) throw DataError("C must have L rows");
  if (C.cols() != Xg.rows()) throw DataError("C columns must match fuzzy feature dimension");
  if (Xg.cols() != Y.cols()) throw DataError("Xg and Y sample counts differ");
}

inline CorrelationLaplacian correlation_laplacian(const Matrix& C) {
  CorrelationLaplacian out;
  out.R = C * C.transpose();
  out.degree = out.R.rowwise().sum();
  out.lap = Matrix(out.degree.asDiagonal()) - out.R;
  return out;
}

inline LossComponents objective(const Matrix& S, const Matrix& C, const Matrix& Xg, const Matrix& Y,
                                const TrainConfig& cfg) {
  check_shapes(S, C, Xg, Y);
  const Matrix SY = S * Y;
  const Matrix lap = correlation_laplacian(C).lap;
  LossComponents lc;
  lc.soft_loss = l21_of_transpose(SY - C * Xg);
  lc.c_penalty = cfg.alpha * C.squaredNorm();
  lc.soft_label = cfg.beta * l21_of_transpose(Y - SY);
  lc.correlation = 2.0 * cfg.gamma * (SY.transpose() * lap * SY).trace();
  lc.total = lc.soft_loss + lc.c_penalty + lc.soft_label + lc.correlation;
  return lc;
}

inline ReweightDiagonals reweight_diagonals(const Matrix& S, const Matrix& C, const Matrix& Xg,
                                            const Matrix& Y, double epsilon_row) {
  check_shapes(S, C, Xg, Y);
  const Matrix SY = S * Y;
  const Vector fit_norms = (SY - C * Xg).colwise().norm().transpose();
  const Vector label_norms = (Y - SY).colwise().norm().transpose();
  ReweightDiagonals out;
  out.dS1 = (0.5 / fit_norms.array().max(epsilon_row)).matrix();
  out.dS2 = (0.5 / label_norms.array().max(epsilon_row)).matrix();
  out.dC = out.dS1;
  return out;
}

inline double gram_ridge(const Matrix& Y, const TrainConfig& cfg) {
  if (cfg.ridge_y) return *cfg.ridge_y;
  return cfg.ridge_y_rel * Y.squaredNorm() / static_cast<double>(Y.rows());
}

// Coefficients of the C-subproblem  A C + C B = Z  for frozen D_c.
inline SylvesterProblem c_subproblem(const Matrix& S, const Matrix& Xg, const Matrix& Y,
                                     const Vector& dC, const TrainConfig& cfg) {
  const Index L = Y.rows();
  const Matrix SY = S * Y;
  const Matrix P = SY * SY.transpose();
  const Matrix diagP_ones = P.diagonal().replicate(1, L);  // (P o I) 1 1^T
  SylvesterProblem p;
  p.A = cfg.alpha * Matrix::Identity(L, L) +
        cfg.gamma * (diagP_ones + diagP_ones.transpose()) - 2.0 * cfg.gamma * P;
  const Matrix XgD = Xg * dC.asDiagonal();
  p.B = XgD * Xg.transpose();
  p.Z = SY * XgD.transpose();
  return p;
}

// Coefficients of the S-subproblem  A S + S B = Z  for frozen D_S1, D_S2 and Lap.
// With G = Y Y^T + rho I:
//   A = 2 gamma Lap,  B = (Y (D_S1 + beta D_S2) Y^T + rho I) G^{-1},
//   Z = (C Xg D_S1 + beta Y D_S2) Y^T G^{-1}.
// The rho I added to B is a rho ||S||_F^2 term; it pins the components of S
// along null(Y^T), which do not affect S Y at all, to zero. Without it the
// system is singular whenever Y is row-rank deficient, since Lap 1 = 0.
inline SylvesterProblem s_subproblem(const Matrix& C, const Matrix& Xg, const Matrix& Y,
                                     const ReweightDiagonals& w, const Matrix& lap,
                                     const TrainConfig& cfg) {
  const Index L = Y.rows();
  const double rho = gram_ridge(Y, cfg);
  const Matrix I = Matrix::Identity(L, L);
  const Matrix G = Y * Y.transpose() + rho * I;
  Eigen::LDLT<Matrix> gram(G);
  if (gram.info() != Eigen::Success || !(gram.rcond() >= kSylvesterRcondTol))
    throw NumericalError("singular problem: label Gram matrix is not invertible (ridge " +
                         format_real(rho, 3) + ")");
  const Vector weights = w.dS1 + cfg.beta * w.dS2;
  const Matrix weighted_gram = Y * weights.asDiagonal() * Y.transpose() + rho * I;
  const Matrix rhs = (C * Xg * w.dS1.asDiagonal() + cfg.beta * Y * w.dS2.asDiagonal()) * Y.transpose();
  SylvesterProblem p;
  p.A = 2.0 * cfg.gamma * lap;
  // X G^{-1} = (G^{-1} X^T)^T since G is symmetric.
  p.B = gram.solve(weighted_gram.transpose()).transpose();
  p.Z = gram.solve(rhs.transpose()).transpose();
  return p;
}

// Solves the S-subproblem restricted to range(Y). Components of S along
// null(Y^T) solve (2 gamma rho Lap + rho I) S u = 0 and are exactly zero; the
// remaining r x r block is well conditioned even when rho is tiny. This is the
// same solution as solve_sylvester(s_subproblem(...)), without the 1/rho
// amplification of rounding in duplicated label rows.
inline Matrix solve_s_subproblem(const Matrix& C, const Matrix& Xg, const Matrix& Y,
                                 const ReweightDiagonals& w, const Matrix& lap, const TrainConfig& cfg) {
  const Index L = Y.rows();
  const double rho = gram_ridge(Y, cfg);
  const Matrix gram = Y * Y.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("label Gram eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(lambda.maxCoeff(), 0.0);
  std::vector<Index> keep;
  for (Index i = 0; i < L; ++i)
    if (lambda(i) > cutoff) keep.push_back(i);
  const auto r = static_cast<Index>(keep.size());
  if (r == 0) return Matrix::Zero(L, L);
  Matrix U(L, r);
  Vector g(r);
  for (Index j = 0; j < r; ++j) {
    U.col(j) = eig.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
    g(j) = lambda(keep[static_cast<std::size_t>(j)]) + rho;
  }
  if (!(g.minCoeff() / g.maxCoeff() >= kSylvesterRcondTol))
    throw NumericalError("singular problem: label Gram matrix is not invertible (ridge " + format_real(rho, 3) + ")");

  const Vector weights = w.dS1 + cfg.beta * w.dS2;
  const Matrix YU = Y.transpose() * U;  // N x r
  const Matrix weighted = YU.transpose() * weights.asDiagonal() * YU + rho * Matrix::Identity(r, r);
  const Matrix rhs = (C * Xg * w.dS1.asDiagonal() + cfg.beta * Y * w.dS2.asDiagonal()) * YU;
  SylvesterProblem p;
  p.A = 2.0 * cfg.gamma * lap;
  p.B = weighted * g.cwiseInverse().asDiagonal();
  p.Z = rhs * g.cwiseInverse().asDiagonal();
  return solve_sylvester(p) * U.transpose();
}

inline Matrix update_C(const Matrix& S, const Matrix& C_prev, const Matrix& Xg, const Matrix& Y,
                       const TrainConfig& cfg) {
  const auto w = reweight_diagonals(S, C_prev, Xg, Y, cfg.epsilon_row);
  return solve_sylvester(c_subproblem(S, Xg, Y, w.dC, cfg));
}

inline Matrix update_S(const Matrix& S_prev, const Matrix& C, const Matrix& Xg, const Matrix& Y,
                       const TrainConfig& cfg) {
  const auto w = reweight_diagonals(S_prev, C, Xg, Y, cfg.epsilon_row);
  const auto lap = correlation_laplacian(C).lap;
  return solve_s_subproblem(C, Xg, Y, w, lap, cfg);
}

inline Matrix initial_S(Index L) { return Matrix::Ones(L, L); }
inline Matrix initial_C(Index L, Index dim) { return Matrix::Constant(L, dim, 1.0 / static_cast<double>(L)); }

struct TrainResult {
  ModelParams model;
  TrainTrace trace;
};

// Alternating minimization on already-built fuzzy features. Returns (S, C).
inline std::pair<Matrix, Matrix> optimize(const Matrix& Xg, const Matrix& Y, const TrainConfig& cfg,
                                          TrainTrace& trace) {
  validate(cfg);
  const Index L = Y.rows();
  Matrix S0 = initial_S(L);
  Matrix C0 = initial_C(L, Xg.rows());

  trace = TrainTrace{};
  trace.initial_loss = objective(S0, C0, Xg, Y, cfg).total;
  trace.margin = cfg.min_margin ? *cfg.min_margin : cfg.min_margin_rel * std::abs(trace.initial_loss);
  double prev_loss = 0.0;

  for (int t = 1; t <= cfg.T; ++t) {
    Matrix C_next, S_next;
    try {
      C_next = update_C(S0, C0, Xg, Y, cfg);
      S_next = update_S(S0, C0, Xg, Y, cfg);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(t) + ": " + e.what());
    }
    C0 = std::move(C_next);
    S0 = std::move(S_next);

    const auto loss = objective(S0, C0, Xg, Y, cfg);
    if (!std::isfinite(loss.total))
      throw NumericalError("iteration " + std::to_string(t) + ": non-finite loss (soft_loss=" +
                           format_real(loss.soft_loss, 6) + ", soft_label=" + format_real(loss.soft_label, 6) +
                           ", correlation=" + format_real(loss.correlation, 6) + ")");
    trace.iterations.push_back(loss);
    if (std::abs(loss.total - prev_loss) <= trace.margin) {
      trace.stop_reason = StopReason::Margin;
      return {S0, C0};
    }
    if (loss.total <= 0.0) {
      trace.stop_reason = StopReason::NonpositiveLoss;
      return {S0, C0};
    }
    prev_loss = loss.total;
  }
  trace.stop_reason = StopReason::MaxIters;
  return {S0, C0};
}

// Fits normalization and rule base on the given data, then optimizes.
inline TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  validate(data);
  validate(cfg);
  TrainResult out;
  auto& m = out.model;
  m.norm = fit_norm(data.features);
  const Matrix X = apply_norm(data.features, m.norm);
  m.rulebase = fit_antecedents(X, cfg.K, cfg.width_floor);
  const Matrix Xg = fuzzy_feature_matrix(X, m.rulebase);
  auto [S, C] = optimize(Xg, data.labels, cfg, out.trace);
  m.S = std::move(S);
  m.C = std::move(C);
  m.tau = cfg.tau;
  m.label_names = data.label_names;
  m.feature_names = data.feature_names;
  m.config = cfg;
  return out;
}

}  // namespace rmltsk
