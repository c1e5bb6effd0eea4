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

// Minimal library walk-through: generate data, split, train, score, evaluate,
// and print the learned rules.

#include "rmltsk/experiment.hpp"

#include <iostream>

int main() {
  using namespace rmltsk;

  SynthSpec spec;
  spec.kind = SynthKind::Union;
  spec.n_samples = 400;
  spec.seed = 7;
  const Dataset data = gen_synthetic(spec);

  const FoldPlan plan = kfold_split(data.n_samples(), 5, 0);
  const Dataset train_set = select_columns(data, plan.train_indices(0));
  const Dataset test_set = select_columns(data, plan.test_indices(0));

  TrainConfig cfg;
  cfg.K = 2;
  const TrainResult result = train(train_set, cfg);
  std::cout << "iterations: " << result.trace.iterations.size()
            << " (stop: " << to_string(result.trace.stop_reason) << ")\n";

  const Matrix scores = score(result.model, test_set.features);
  const MetricsReport m = evaluate(scores, test_set.labels, result.model.tau);
  std::cout << "AP " << format_real(m.ap, 4) << "  HL " << format_real(m.hl, 4) << "  RL "
            << format_real(m.rl, 4) << "  CV " << format_real(m.cv_raw, 4) << "\n\n";

  std::cout << export_rules(result.model);
  return 0;
}
