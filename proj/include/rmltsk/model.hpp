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

#include "rmltsk/dataset.hpp"
#include "rmltsk/fuzzy_rules.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rmltsk {

struct TrainConfig {
  double alpha = 0.1;   // ||C||_F^2 weight
  double beta = 10.0;   // soft-label fidelity weight
  double gamma = 0.001; // correlation-enhancement weight
  Index K = 3;          // rule count
  int T = 50;           // max iterations
  // Absolute stopping margin; when unset, min_margin_rel * |loss at initialization|.
  std::optional<double> min_margin;
  double min_margin_rel = 1e-5;
  double epsilon_row = 1e-8;
  // Gram ridge; when unset, ridge_y_rel * Tr(Y Y^T) / L.
  std::optional<double> ridge_y;
  double ridge_y_rel = 1e-6;
  double width_floor = kDefaultWidthFloor;
  double tau = 0.5;
  std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !(cfg.beta >= 0.0) || !(cfg.gamma >= 0.0))
    throw DataError("alpha, beta and gamma must be nonnegative");
  if (cfg.K < 1) throw DataError("rule count K must be at least 1");
  if (cfg.T < 1) throw DataError("iteration count T must be at least 1");
  if (cfg.min_margin && !(*cfg.min_margin >= 0.0)) throw DataError("Min must be nonnegative");
  if (!(cfg.min_margin_rel >= 0.0)) throw DataError("relative Min must be nonnegative");
  if (!(cfg.epsilon_row > 0.0)) throw DataError("epsilon_row must be positive");
  if (cfg.ridge_y && !(*cfg.ridge_y >= 0.0)) throw DataError("ridge_y must be nonnegative");
  if (!(cfg.ridge_y_rel >= 0.0)) throw DataError("relative ridge_y must be nonnegative");
  if (!(cfg.width_floor > 0.0)) throw DataError("width_floor must be positive");
  if (!std::isfinite(cfg.tau)) throw DataError("threshold must be finite");
}

struct ModelParams {
  Matrix S;  // L x L soft-label transform
  Matrix C;  // L x K(D+1) consequent matrix
  RuleBase rulebase;
  double tau = 0.5;
  NormStats norm;
  std::vector<std::string> label_names;
  std::vector<std::string> feature_names;
  TrainConfig config;

  Index n_labels() const { return C.rows(); }
  Index n_features() const { return rulebase.n_features(); }
};

}  // namespace rmltsk
