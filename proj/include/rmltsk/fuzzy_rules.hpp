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

// IF-part of a multi-output TSK fuzzy system.
//
// Each of the K rules has one Gaussian fuzzy set per feature. A sample x is
// mapped to the fuzzy feature vector
//
//   x_g = [ mu~^1(x) (1, x) ; ... ; mu~^K(x) (1, x) ]   (length K(D+1))
//
// where mu~^k are the normalized firing strengths. The THEN-part is then a
// linear model over x_g.

#include "rmltsk/common.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace rmltsk {

inline constexpr double kDefaultWidthFloor = 1e-4;

struct RuleBase {
  Matrix centers;  // K x D
  Matrix widths;   // K x D, all >= width_floor
  double width_floor = kDefaultWidthFloor;

  Index n_rules() const { return centers.rows(); }
  Index n_features() const { return centers.cols(); }
  Index feature_dim() const { return n_rules() * (n_features() + 1); }
};

inline double membership(double x, double center, double width) {
  const double z = (x - center) / width;
  return std::exp(-0.5 * z * z);
}

namespace detail {

struct VarPartCluster {
  std::vector<Index> members;
  Vector mean;
  Vector var;  // population variance per dimension
  double sse = 0.0;
};

inline VarPartCluster summarize(const Matrix& X, std::vector<Index> members) {
  VarPartCluster c;
  const Index D = X.rows();
  c.mean = Vector::Zero(D);
  for (Index i : members) c.mean += X.col(i);
  c.mean /= static_cast<double>(members.size());
  c.var = Vector::Zero(D);
  for (Index i : members) c.var += (X.col(i) - c.mean).array().square().matrix();
  c.sse = c.var.sum();
  c.var /= static_cast<double>(members.size());
  c.members = std::move(members);
  return c;
}

}  // namespace detail

// Variance-partition clustering: starting from one cluster holding every
// sample, K-1 times split the cluster with the largest within-cluster sum of
// squares at the mean of its highest-variance dimension. Rules take the
// per-cluster means as centers and standard deviations (floored) as widths.
//
// If every cluster is degenerate (all members identical) before K clusters
// exist, the largest cluster is duplicated so exactly K rules come out.
inline RuleBase fit_antecedents(const Matrix& X, Index K, double width_floor = kDefaultWidthFloor) {
  if (K < 1) throw DataError("rule count must be at least 1");
  if (X.rows() < 1) throw DataError("feature dimension must be at least 1");
  if (K > X.cols()) throw DataError("rule count exceeds sample count");
  if (!(width_floor > 0.0)) throw DataError("width floor must be positive");

  std::vector<Index> all(static_cast<std::size_t>(X.cols()));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<detail::VarPartCluster> clusters;
  clusters.push_back(detail::summarize(X, std::move(all)));

  while (static_cast<Index>(clusters.size()) < K) {
    std::size_t best = clusters.size();
    Index split_dim = 0;
    double split_at = 0.0;
    std::vector<Index> left, right;
    // Walk clusters in descending SSE (ties by index) until one splits.
    std::vector<std::size_t> order(clusters.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return clusters[a].sse > clusters[b].sse; });
    for (std::size_t idx : order) {
      const auto& c = clusters[idx];
      if (!(c.sse > 0.0)) break;
      c.var.maxCoeff(&split_dim);
      split_at = c.mean(split_dim);
      left.clear();
      right.clear();
      for (Index i : c.members) (X(split_dim, i) <= split_at ? left : right).push_back(i);
      if (!left.empty() && !right.empty()) {
        best = idx;
        break;
      }
    }
    if (best == clusters.size()) {
      std::size_t largest = 0;
      for (std::size_t i = 1; i < clusters.size(); ++i)
        if (clusters[i].members.size() > clusters[largest].members.size()) largest = i;
      clusters.push_back(clusters[largest]);
      continue;
    }
    clusters[best] = detail::summarize(X, std::move(left));
    clusters.push_back(detail::summarize(X, std::move(right)));
  }

  RuleBase rb;
  rb.width_floor = width_floor;
  rb.centers.resize(K, X.rows());
  rb.widths.resize(K, X.rows());
  for (Index k = 0; k < K; ++k) {
    const auto& c = clusters[static_cast<std::size_t>(k)];
    rb.centers.row(k) = c.mean.transpose();
    rb.widths.row(k) = c.var.array().sqrt().max(width_floor).matrix().transpose();
  }
  return rb;
}

// Normalized firing strengths; uniform when every raw strength underflows to zero.
inline Vector firing_strengths(const Eigen::Ref<const Vector>& x, const RuleBase& rb) {
  if (x.size() != rb.n_features()) throw DataError("sample dimension does not match rule base");
  const Index K = rb.n_rules();
  Vector mu(K);
  for (Index k = 0; k < K; ++k) {
    double prod = 1.0;
    for (Index d = 0; d < x.size(); ++d) prod *= membership(x(d), rb.centers(k, d), rb.widths(k, d));
    mu(k) = prod;
  }
  const double total = mu.sum();
  if (!(total > 0.0)) return Vector::Constant(K, 1.0 / static_cast<double>(K));
  return mu / total;
}

inline Vector fuzzy_features(const Eigen::Ref<const Vector>& x, const RuleBase& rb) {
  const Vector w = firing_strengths(x, rb);
  const Index D = rb.n_features();
  Vector xg(rb.feature_dim());
  for (Index k = 0; k < rb.n_rules(); ++k) {
    xg(k * (D + 1)) = w(k);
    xg.segment(k * (D + 1) + 1, D) = w(k) * x;
  }
  return xg;
}

// K(D+1) x N; column i is fuzzy_features(X.col(i)).
inline Matrix fuzzy_feature_matrix(const Matrix& X, const RuleBase& rb) {
  if (X.rows() != rb.n_features()) throw DataError("feature dimension does not match rule base");
  Matrix Xg(rb.feature_dim(), X.cols());
  for (Index i = 0; i < X.cols(); ++i) Xg.col(i) = fuzzy_features(X.col(i), rb);
  return Xg;
}

}  // namespace rmltsk
