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

// Synthetic five-label datasets with fixed label logic, and per-sample label
// noise injection.
//
//   Independence: Y1..Y4 independent Bernoulli(p)
//   Equality:     Y1 = Y2, Y3 = Y4
//   Union:        Y1 = Y2 | Y3 | Y4
//   all kinds:    Y5 = !Y1 & !Y2 & !Y3 & !Y4
//
// Features are tied to labels through one random prototype per label: a
// sample is the mean of its active labels' prototypes plus N(0, 0.1^2) noise,
// clipped to [0,1].

#include "rmltsk/dataset.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>

namespace rmltsk {

enum class SynthKind { Independence, Equality, Union };

inline constexpr Index kSynthLabels = 5;

struct SynthSpec {
  SynthKind kind = SynthKind::Independence;
  Index n_samples = 1000;
  Index n_features = 20;
  std::uint64_t seed = 0;
  double base_label_prob = 0.4;
  double feature_noise_sd = 0.1;
};

struct NoiseSpec {
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

inline std::string to_string(SynthKind k) {
  switch (k) {
    case SynthKind::Independence: return "independence";
    case SynthKind::Equality: return "equality";
    case SynthKind::Union: return "union";
  }
  return "unknown";
}

inline std::optional<SynthKind> parse_synth_kind(std::string_view s) {
  if (s == "independence") return SynthKind::Independence;
  if (s == "equality") return SynthKind::Equality;
  if (s == "union") return SynthKind::Union;
  return std::nullopt;
}

// True iff column i of the labels obeys the kind's logic and the Y5 rule.
inline bool satisfies_logic(SynthKind kind, const Matrix& labels, Index i) {
  const bool y1 = labels(0, i) == 1.0, y2 = labels(1, i) == 1.0, y3 = labels(2, i) == 1.0,
             y4 = labels(3, i) == 1.0, y5 = labels(4, i) == 1.0;
  if (y5 != (!y1 && !y2 && !y3 && !y4)) return false;
  switch (kind) {
    case SynthKind::Independence: return true;
    case SynthKind::Equality: return y1 == y2 && y3 == y4;
    case SynthKind::Union: return y1 == (y2 || y3 || y4);
  }
  return false;
}

inline Dataset gen_synthetic(const SynthSpec& spec) {
  if (spec.n_samples < 1) throw DataError("n_samples must be positive");
  if (spec.n_features < 1) throw DataError("n_features must be positive");
  if (!(spec.base_label_prob > 0.0 && spec.base_label_prob < 1.0))
    throw DataError("base_label_prob must lie in (0,1)");
  if (!(spec.feature_noise_sd >= 0.0)) throw DataError("feature_noise_sd must be nonnegative");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::bernoulli_distribution coin(spec.base_label_prob);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Index D = spec.n_features, N = spec.n_samples;
  Matrix prototypes(D, kSynthLabels);
  for (Index l = 0; l < kSynthLabels; ++l)
    for (Index d = 0; d < D; ++d) prototypes(d, l) = unif(rng);

  Dataset out;
  out.labels = Matrix::Zero(kSynthLabels, N);
  out.features.resize(D, N);
  for (Index i = 0; i < N; ++i) {
    bool y[5] = {false, false, false, false, false};
    switch (spec.kind) {
      case SynthKind::Independence:
        for (int l = 0; l < 4; ++l) y[l] = coin(rng);
        break;
      case SynthKind::Equality:
        y[0] = y[1] = coin(rng);
        y[2] = y[3] = coin(rng);
        break;
      case SynthKind::Union:
        y[1] = coin(rng);
        y[2] = coin(rng);
        y[3] = coin(rng);
        y[0] = y[1] || y[2] || y[3];
        break;
    }
    y[4] = !y[0] && !y[1] && !y[2] && !y[3];

    Vector center = Vector::Zero(D);
    int active = 0;
    for (Index l = 0; l < kSynthLabels; ++l) {
      if (!y[l]) continue;
      out.labels(l, i) = 1.0;
      center += prototypes.col(l);
      ++active;
    }
    center /= static_cast<double>(active);  // Y5 guarantees at least one active label
    for (Index d = 0; d < D; ++d)
      out.features(d, i) = std::clamp(center(d) + spec.feature_noise_sd * noise(rng), 0.0, 1.0);
  }
  out.feature_names = default_names("x", D);
  out.label_names = default_names("Y", kSynthLabels);
  return out;
}

// Columns chosen for flipping: exactly round(ratio * N) distinct samples.
inline std::vector<Index> noise_selection(Index n, const NoiseSpec& spec) {
  if (!(spec.ratio >= 0.0 && spec.ratio <= 1.0)) throw DataError("noise ratio must lie in [0,1]");
  const auto count = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(n)));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

// Every label bit of each listed column is flipped: related labels become
// unrelated and vice versa.
inline Dataset flip_label_columns(const Dataset& data, const std::vector<Index>& columns) {
  Dataset out = data;
  for (Index c : columns) out.labels.col(c) = (1.0 - data.labels.col(c).array()).matrix();
  return out;
}

inline Dataset inject_label_noise(const Dataset& data, const NoiseSpec& spec) {
  return flip_label_columns(data, noise_selection(data.n_samples(), spec));
}

}  // namespace rmltsk
