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

// Multilabel evaluation: average precision, Hamming loss, ranking loss,
// coverage, and the Bonferroni-Dunn critical difference.
//
// Scores and truth are L x N (one column per sample). Ranks are 1-based;
// equal scores are ordered by label index, so ranks always form a
// permutation of 1..L. Samples whose relevant set is empty (or, for ranking
// loss, full) have undefined per-sample terms and are skipped.

#include "rmltsk/common.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace rmltsk {

struct MetricsReport {
  double ap = 0.0;
  double hl = 0.0;
  double rl = 0.0;
  double cv_raw = 0.0;
  double cv_norm = 0.0;
  Index n_skipped_ap_rl = 0;  // samples with empty or full relevant set
};

struct StatsInput {
  int n_methods = 2;
  int n_datasets = 1;
  double q_alpha = 0.0;
};

inline std::vector<int> rank_labels(const Eigen::Ref<const Vector>& scores) {
  const Index L = scores.size();
  std::vector<int> ranks(static_cast<std::size_t>(L));
  for (Index l = 0; l < L; ++l) {
    int r = 1;
    for (Index o = 0; o < L; ++o)
      if (scores(o) > scores(l) || (o < l && scores(o) == scores(l))) ++r;
    ranks[static_cast<std::size_t>(l)] = r;
  }
  return ranks;
}

namespace detail {

inline void check_pair(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("score and truth shapes differ");
  if (a.cols() == 0) throw DataError("no evaluable samples");
}

inline void check_binary(const Matrix& m, const char* what) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0 && m(i, j) != 1.0) throw DataError(std::string("non-binary ") + what);
}

}  // namespace detail

inline double average_precision(const Matrix& scores, const Matrix& truth, Index* n_skipped = nullptr) {
  detail::check_pair(scores, truth);
  detail::check_binary(truth, "truth");
  const Index L = scores.rows();
  double sum = 0.0;
  Index used = 0, skipped = 0;
  for (Index i = 0; i < scores.cols(); ++i) {
    const auto f = scores.col(i);
    const auto ranks = rank_labels(f);
    double term = 0.0;
    Index relevant = 0;
    for (Index l = 0; l < L; ++l) {
      if (truth(l, i) != 1.0) continue;
      ++relevant;
      // Relevant labels ranked at or above l; equals the f(l') >= f(l) count
      // when scores are tie-free, and stays <= rank(l) under ties.
      Index at_or_above = 0;
      for (Index o = 0; o < L; ++o)
        if (truth(o, i) == 1.0 && ranks[static_cast<std::size_t>(o)] <= ranks[static_cast<std::size_t>(l)]) ++at_or_above;
      term += static_cast<double>(at_or_above) / ranks[static_cast<std::size_t>(l)];
    }
    if (relevant == 0) {
      ++skipped;
      continue;
    }
    sum += term / static_cast<double>(relevant);
    ++used;
  }
  if (n_skipped) *n_skipped = skipped;
  if (used == 0) throw DataError("no evaluable samples");
  return sum / static_cast<double>(used);
}

inline double hamming_loss(const Matrix& predicted, const Matrix& truth) {
  detail::check_pair(predicted, truth);
  detail::check_binary(predicted, "prediction");
  detail::check_binary(truth, "truth");
  const double differing = (predicted.array() != truth.array()).cast<double>().sum();
  return differing / static_cast<double>(predicted.rows() * predicted.cols());
}

inline double ranking_loss(const Matrix& scores, const Matrix& truth, Index* n_skipped = nullptr) {
  detail::check_pair(scores, truth);
  detail::check_binary(truth, "truth");
  const Index L = scores.rows();
  double sum = 0.0;
  Index used = 0, skipped = 0;
  for (Index i = 0; i < scores.cols(); ++i) {
    Index relevant = 0, violated = 0;
    for (Index l = 0; l < L; ++l) {
      if (truth(l, i) != 1.0) continue;
      ++relevant;
      for (Index o = 0; o < L; ++o)
        if (truth(o, i) != 1.0 && scores(l, i) <= scores(o, i)) ++violated;
    }
    const Index irrelevant = L - relevant;
    if (relevant == 0 || irrelevant == 0) {
      ++skipped;
      continue;
    }
    sum += static_cast<double>(violated) / static_cast<double>(relevant * irrelevant);
    ++used;
  }
  if (n_skipped) *n_skipped = skipped;
  if (used == 0) throw DataError("no evaluable samples");
  return sum / static_cast<double>(used);
}

struct Coverage {
  double raw = 0.0;
  double norm = 0.0;
};

inline Coverage coverage(const Matrix& scores, const Matrix& truth) {
  detail::check_pair(scores, truth);
  detail::check_binary(truth, "truth");
  const Index L = scores.rows();
  double sum = 0.0;
  Index used = 0;
  for (Index i = 0; i < scores.cols(); ++i) {
    const auto ranks = rank_labels(scores.col(i));
    int deepest = 0;
    for (Index l = 0; l < L; ++l)
      if (truth(l, i) == 1.0) deepest = std::max(deepest, ranks[static_cast<std::size_t>(l)]);
    if (deepest == 0) continue;
    sum += deepest - 1;
    ++used;
  }
  if (used == 0) throw DataError("no evaluable samples");
  Coverage c;
  c.raw = sum / static_cast<double>(used);
  c.norm = c.raw / static_cast<double>(L);
  return c;
}

inline MetricsReport evaluate(const Matrix& scores, const Matrix& predicted, const Matrix& truth) {
  MetricsReport r;
  r.ap = average_precision(scores, truth);
  r.hl = hamming_loss(predicted, truth);
  r.rl = ranking_loss(scores, truth, &r.n_skipped_ap_rl);
  const auto cv = coverage(scores, truth);
  r.cv_raw = cv.raw;
  r.cv_norm = cv.norm;
  return r;
}

inline MetricsReport evaluate(const Matrix& scores, const Matrix& truth, double tau) {
  return evaluate(scores, (scores.array() >= tau).cast<double>().matrix(), truth);
}

inline double critical_difference(const StatsInput& s) {
  if (s.n_methods < 2) throw DataError("critical difference needs at least two methods");
  if (s.n_datasets < 1) throw DataError("critical difference needs at least one dataset");
  const double n = s.n_methods;
  return s.q_alpha * std::sqrt(n * (n + 1.0) / (6.0 * s.n_datasets));
}

}  // namespace rmltsk
