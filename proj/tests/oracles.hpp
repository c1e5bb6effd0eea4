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

// Independent reference computations used by the test suites. Everything here
// is written from the defining formulas with plain loops and deliberately
// avoids calling into the library's own helpers (other than the basic types).

#include "rmltsk/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using rmltsk::Index;
using rmltsk::Matrix;
using rmltsk::Vector;

// ---------------------------------------------------------------------------
// Metrics by literal set / pair enumeration
// ---------------------------------------------------------------------------

// 1-based ranks: stable sort by descending score, so equal scores keep label
// order (smaller index ranks first).
inline std::vector<int> ranks(const Matrix& scores, Index col) {
  const auto L = static_cast<std::size_t>(scores.rows());
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores(Index(a), col) > scores(Index(b), col); });
  std::vector<int> r(L);
  for (std::size_t pos = 0; pos < L; ++pos) r[order[pos]] = static_cast<int>(pos + 1);
  return r;
}

inline std::set<Index> relevant_set(const Matrix& truth, Index col) {
  std::set<Index> s;
  for (Index l = 0; l < truth.rows(); ++l)
    if (truth(l, col) == 1.0) s.insert(l);
  return s;
}

struct Metrics {
  double ap = std::numeric_limits<double>::quiet_NaN();
  double hl = 0.0, rl = std::numeric_limits<double>::quiet_NaN();
  double cv = std::numeric_limits<double>::quiet_NaN();
  int ap_used = 0, rl_used = 0, cv_used = 0;
};

inline Metrics brute_metrics(const Matrix& scores, const Matrix& predicted, const Matrix& truth) {
  Metrics m;
  const Index L = scores.rows(), N = scores.cols();
  double ap = 0, rl = 0, cv = 0, hl = 0;
  for (Index i = 0; i < N; ++i) {
    const auto r = ranks(scores, i);
    const auto rel = relevant_set(truth, i);
    std::set<Index> irr;
    for (Index l = 0; l < L; ++l)
      if (!rel.count(l)) irr.insert(l);
    for (Index l = 0; l < L; ++l) hl += (predicted(l, i) != truth(l, i)) ? 1.0 : 0.0;
    if (!rel.empty()) {
      double term = 0;
      for (Index l : rel) {
        std::set<Index> above;
        for (Index o : rel)
          if (r[std::size_t(o)] <= r[std::size_t(l)]) above.insert(o);
        term += double(above.size()) / r[std::size_t(l)];
      }
      ap += term / double(rel.size());
      ++m.ap_used;
      int deepest = 0;
      for (Index l : rel) deepest = std::max(deepest, r[std::size_t(l)]);
      cv += deepest - 1;
      ++m.cv_used;
    }
    if (!rel.empty() && !irr.empty()) {
      int bad = 0;
      for (Index a : rel)
        for (Index b : irr)
          if (scores(a, i) <= scores(b, i)) ++bad;
      rl += double(bad) / double(rel.size() * irr.size());
      ++m.rl_used;
    }
  }
  m.hl = hl / double(L * N);
  if (m.ap_used) m.ap = ap / m.ap_used;
  if (m.rl_used) m.rl = rl / m.rl_used;
  if (m.cv_used) m.cv = cv / m.cv_used;
  return m;
}

// ---------------------------------------------------------------------------
// Objective pieces
// ---------------------------------------------------------------------------

// sum_{i,j} ||s_i^T Y - s_j^T Y||^2 * c_i^T c_j, with s_i, c_i the rows of S, C.
inline double correlation_double_sum(const Matrix& S, const Matrix& C, const Matrix& Y) {
  const Index L = S.rows(), N = Y.cols();
  double total = 0;
  for (Index i = 0; i < L; ++i)
    for (Index j = 0; j < L; ++j) {
      double dist = 0;
      for (Index n = 0; n < N; ++n) {
        double a = 0, b = 0;
        for (Index k = 0; k < L; ++k) {
          a += S(i, k) * Y(k, n);
          b += S(j, k) * Y(k, n);
        }
        dist += (a - b) * (a - b);
      }
      double cij = 0;
      for (Index k = 0; k < C.cols(); ++k) cij += C(i, k) * C(j, k);
      total += dist * cij;
    }
  return total;
}

// Elementwise evaluation of the full objective; the correlation term uses the
// double-sum form, which equals 2 Tr(Y^T S^T Lap S Y).
inline double objective(const Matrix& S, const Matrix& C, const Matrix& Xg, const Matrix& Y, double alpha,
                        double beta, double gamma) {
  const Index L = Y.rows(), N = Y.cols();
  double fit = 0, soft = 0, pen = 0;
  for (Index n = 0; n < N; ++n) {
    double f2 = 0, s2 = 0;
    for (Index l = 0; l < L; ++l) {
      double sy = 0, cx = 0;
      for (Index k = 0; k < L; ++k) sy += S(l, k) * Y(k, n);
      for (Index k = 0; k < Xg.rows(); ++k) cx += C(l, k) * Xg(k, n);
      f2 += (sy - cx) * (sy - cx);
      s2 += (Y(l, n) - sy) * (Y(l, n) - sy);
    }
    fit += std::sqrt(f2);
    soft += std::sqrt(s2);
  }
  for (Index i = 0; i < C.rows(); ++i)
    for (Index j = 0; j < C.cols(); ++j) pen += C(i, j) * C(i, j);
  return fit + alpha * pen + beta * soft + gamma * correlation_double_sum(S, C, Y);
}

// Squared distances between the rows of SY: M_ij = ||(SY)_i - (SY)_j||^2.
inline Matrix row_distance_matrix(const Matrix& S, const Matrix& Y) {
  const Matrix A = S * Y;
  const Index L = A.rows();
  Matrix M(L, L);
  for (Index i = 0; i < L; ++i)
    for (Index j = 0; j < L; ++j) M(i, j) = (A.row(i) - A.row(j)).squaredNorm();
  return M;
}

inline Matrix laplacian_of(const Matrix& C) {
  const Matrix R = C * C.transpose();
  Matrix lap = -R;
  for (Index i = 0; i < R.rows(); ++i) lap(i, i) += R.row(i).sum();
  return lap;
}

// ---------------------------------------------------------------------------
// Frozen-weight surrogates and their derivatives
// ---------------------------------------------------------------------------

// C-surrogate: Tr((SY - C Xg) Dc (SY - C Xg)^T) + alpha ||C||^2
//              + gamma sum_ij M_ij c_i^T c_j   (M from the fixed S)
inline double c_surrogate(const Matrix& C, const Matrix& S, const Matrix& Xg, const Matrix& Y, const Vector& dc,
                          double alpha, double gamma) {
  const Matrix E = S * Y - C * Xg;
  const Matrix M = row_distance_matrix(S, Y);
  double v = 0;
  for (Index n = 0; n < E.cols(); ++n) v += dc(n) * E.col(n).squaredNorm();
  v += alpha * C.squaredNorm();
  for (Index i = 0; i < C.rows(); ++i)
    for (Index j = 0; j < C.rows(); ++j) v += gamma * M(i, j) * C.row(i).dot(C.row(j));
  return v;
}

inline Matrix c_gradient(const Matrix& C, const Matrix& S, const Matrix& Xg, const Matrix& Y, const Vector& dc,
                         double alpha, double gamma) {
  const Matrix Dc = dc.asDiagonal();
  const Matrix M = row_distance_matrix(S, Y);
  return 2.0 * (C * Xg * Dc * Xg.transpose() - S * Y * Dc * Xg.transpose() + alpha * C + gamma * M * C);
}

// S-surrogate with the ridged Gram G = Y Y^T + rho I:
//   Tr((SY - C Xg) Ds1 (.)^T) + beta Tr((Y - SY) Ds2 (.)^T)
//   + rho ||S||^2 + 2 gamma Tr(S^T Lap S G)
// (rho = 0 recovers the unridged objective terms).
inline double s_surrogate(const Matrix& S, const Matrix& C, const Matrix& Xg, const Matrix& Y, const Vector& ds1,
                          const Vector& ds2, const Matrix& lap, double beta, double gamma, double rho) {
  const Matrix E1 = S * Y - C * Xg;
  const Matrix E2 = Y - S * Y;
  double v = 0;
  for (Index n = 0; n < Y.cols(); ++n) v += ds1(n) * E1.col(n).squaredNorm() + beta * ds2(n) * E2.col(n).squaredNorm();
  const Matrix G = Y * Y.transpose() + rho * Matrix::Identity(Y.rows(), Y.rows());
  v += rho * S.squaredNorm();
  v += 2.0 * gamma * (S.transpose() * lap * S * G).trace();
  return v;
}

inline Matrix s_gradient(const Matrix& S, const Matrix& C, const Matrix& Xg, const Matrix& Y, const Vector& ds1,
                         const Vector& ds2, const Matrix& lap, double beta, double gamma, double rho) {
  const Index L = Y.rows();
  const Matrix I = Matrix::Identity(L, L);
  const Vector w = ds1 + beta * ds2;
  const Matrix G = Y * Y.transpose() + rho * I;
  const Matrix F = (C * Xg * ds1.asDiagonal() + beta * Y * ds2.asDiagonal()) * Y.transpose();
  return 2.0 * (S * (Y * w.asDiagonal() * Y.transpose() + rho * I) - F + 2.0 * gamma * lap * S * G);
}

// Central finite-difference gradient of f at X.
template <class F>
Matrix numeric_gradient(F&& f, const Matrix& X, double h = 1e-6) {
  Matrix g(X.rows(), X.cols());
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j) {
      Matrix p = X, m = X;
      p(i, j) += h;
      m(i, j) -= h;
      g(i, j) = (f(p) - f(m)) / (2 * h);
    }
  return g;
}

// ---------------------------------------------------------------------------
// Fuzzy layer
// ---------------------------------------------------------------------------

// Best two-cluster split of 1-D data by exhaustive search; returns the two
// cluster means (ascending).
inline std::pair<double, double> best_two_split(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  double best = std::numeric_limits<double>::infinity();
  std::pair<double, double> out{0, 0};
  for (std::size_t cut = 1; cut < n; ++cut) {
    auto stats = [&](std::size_t b, std::size_t e) {
      double mean = 0;
      for (std::size_t i = b; i < e; ++i) mean += x[i];
      mean /= double(e - b);
      double sse = 0;
      for (std::size_t i = b; i < e; ++i) sse += (x[i] - mean) * (x[i] - mean);
      return std::pair{mean, sse};
    };
    const auto [m1, s1] = stats(0, cut);
    const auto [m2, s2] = stats(cut, n);
    if (s1 + s2 < best) {
      best = s1 + s2;
      out = {m1, m2};
    }
  }
  return out;
}

// f_l(x) = sum_k mu~^k(x) * (c_l0^k + sum_d c_ld^k x_d), recomputed per rule.
inline double rule_score(const Matrix& centers, const Matrix& widths, const Matrix& C, Index l, const Vector& x) {
  const Index K = centers.rows(), D = centers.cols();
  std::vector<double> mu(static_cast<std::size_t>(K));
  double total = 0;
  for (Index k = 0; k < K; ++k) {
    double p = 1;
    for (Index d = 0; d < D; ++d) {
      const double z = (x(d) - centers(k, d)) / widths(k, d);
      p *= std::exp(-0.5 * z * z);
    }
    mu[std::size_t(k)] = p;
    total += p;
  }
  double f = 0;
  for (Index k = 0; k < K; ++k) {
    const double w = total > 0 ? mu[std::size_t(k)] / total : 1.0 / double(K);
    double lin = C(l, k * (D + 1));
    for (Index d = 0; d < D; ++d) lin += C(l, k * (D + 1) + 1 + d) * x(d);
    f += w * lin;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Random helpers
// ---------------------------------------------------------------------------

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = u(rng);
  return m;
}

inline Matrix random_binary(std::mt19937_64& rng, Index r, Index c, double p = 0.5) {
  std::bernoulli_distribution b(p);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = b(rng) ? 1.0 : 0.0;
  return m;
}

inline Index random_int(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

}  // namespace oracle
