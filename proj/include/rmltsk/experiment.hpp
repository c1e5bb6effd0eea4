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

// Experiment drivers: k-fold cross-validation, nested grid search, label-noise
// robustness curves and paired ablations. Every driver is a deterministic
// function of (dataset, config); independent work items run on a bounded pool
// of threads and results are stored by item index.

#include "rmltsk/dataset.hpp"
#include "rmltsk/metrics.hpp"
#include "rmltsk/optimizer.hpp"
#include "rmltsk/predictor.hpp"
#include "rmltsk/synthgen.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace rmltsk {

struct GridSpec {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> gammas;
  std::vector<Index> Ks;
};

// Search ranges used for the method's published comparison.
inline GridSpec default_grid() {
  const std::vector<double> v = {0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1, 5, 10, 50, 100};
  return {v, v, v, {2, 3}};
}

struct ExperimentConfig {
  TrainConfig train;
  GridSpec grid;
  int folds = 5;
  int inner_folds = 3;
  std::vector<double> noise_ratios = {0.0, 0.1, 0.2, 0.3, 0.4};
  double train_noise = 0.0;  // label noise injected into every training split
  bool force_beta_zero = false;
  bool force_gamma_zero = false;
  std::vector<std::uint64_t> seeds = {0};
  int workers = 1;
};

struct FoldResult {
  std::uint64_t seed = 0;
  int fold = 0;
  Index n_test = 0;
  MetricsReport metrics;
  int iterations = 0;
  StopReason stop_reason = StopReason::MaxIters;
  double final_loss = 0.0;
  int loss_increases = 0;
  TrainConfig chosen;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct RunReport {
  std::vector<FoldResult> folds;
  MetricSummary ap, hl, rl, cv_raw, cv_norm;
  double seconds = 0.0;
};

// ---------------------------------------------------------------------------
// Work pool
// ---------------------------------------------------------------------------

// Runs fn(i) for i in [0, n) on at most `workers` threads. The first exception
// (by item index) is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fold_noise_seed(std::uint64_t seed, int fold) {
  return mix_seed(seed, 1000 + static_cast<std::uint64_t>(fold));
}

inline MetricSummary summarize_values(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

inline void aggregate(RunReport& r) {
  std::sort(r.folds.begin(), r.folds.end(),
            [](const FoldResult& a, const FoldResult& b) { return std::tie(a.seed, a.fold) < std::tie(b.seed, b.fold); });
  auto collect = [&](auto member) {
    std::vector<double> v;
    for (const auto& f : r.folds) v.push_back(f.metrics.*member);
    return summarize_values(v);
  };
  r.ap = collect(&MetricsReport::ap);
  r.hl = collect(&MetricsReport::hl);
  r.rl = collect(&MetricsReport::rl);
  r.cv_raw = collect(&MetricsReport::cv_raw);
  r.cv_norm = collect(&MetricsReport::cv_norm);
}

inline void validate(const ExperimentConfig& c) {
  validate(c.train);
  if (c.folds < 2) throw DataError("folds must be at least 2");
  if (c.inner_folds < 2) throw DataError("inner folds must be at least 2");
  if (c.seeds.empty()) throw DataError("at least one seed is required");
  if (!(c.train_noise >= 0.0 && c.train_noise <= 1.0)) throw DataError("training noise ratio must lie in [0,1]");
  for (double r : c.noise_ratios)
    if (!(r >= 0.0 && r <= 1.0)) throw DataError("noise ratios must lie in [0,1]");
}

// Trains on `train_split` (noise applied to its labels if ratio > 0) and
// evaluates on the clean `test_split`.
inline FoldResult run_fold(const Dataset& train_split, const Dataset& test_split, const TrainConfig& cfg,
                           double noise_ratio, std::uint64_t noise_seed) {
  const Dataset noisy = noise_ratio > 0.0 ? inject_label_noise(train_split, {noise_ratio, noise_seed}) : train_split;
  const auto result = train(noisy, cfg);
  const Matrix scores = score(result.model, test_split.features);
  FoldResult f;
  f.n_test = test_split.n_samples();
  f.metrics = evaluate(scores, test_split.labels, result.model.tau);
  f.iterations = static_cast<int>(result.trace.iterations.size());
  f.stop_reason = result.trace.stop_reason;
  f.final_loss = result.trace.iterations.empty() ? 0.0 : result.trace.iterations.back().total;
  f.loss_increases = result.trace.n_increases();
  f.chosen = cfg;
  return f;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

inline RunReport cmd_cv(const Dataset& data, const ExperimentConfig& config, double noise_ratio) {
  validate(config);
  validate(data);
  const auto t0 = std::chrono::steady_clock::now();
  struct Item {
    std::uint64_t seed;
    int fold;
    const FoldPlan* plan;
  };
  std::vector<FoldPlan> plans;
  for (auto s : config.seeds) plans.push_back(kfold_split(data.n_samples(), config.folds, s));
  std::vector<Item> items;
  for (std::size_t si = 0; si < config.seeds.size(); ++si)
    for (int f = 0; f < config.folds; ++f) items.push_back({config.seeds[si], f, &plans[si]});

  RunReport report;
  report.folds.resize(items.size());
  parallel_for(items.size(), config.workers, [&](std::size_t i) {
    const auto& it = items[i];
    try {
      auto fr = run_fold(select_columns(data, it.plan->train_indices(it.fold)),
                         select_columns(data, it.plan->test_indices(it.fold)), config.train, noise_ratio,
                         fold_noise_seed(it.seed, it.fold));
      fr.seed = it.seed;
      fr.fold = it.fold;
      report.folds[i] = fr;
    } catch (const NumericalError& e) {
      throw NumericalError("fold " + std::to_string(it.fold) + " (seed " + std::to_string(it.seed) + "): " + e.what());
    } catch (const DataError& e) {
      throw DataError("fold " + std::to_string(it.fold) + " (seed " + std::to_string(it.seed) + "): " + e.what());
    }
  });
  aggregate(report);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

inline RunReport cmd_cv(const Dataset& data, const ExperimentConfig& config) {
  return cmd_cv(data, config, config.train_noise);
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridCell {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  Index K = 1;
  auto key() const { return std::tie(alpha, beta, gamma, K); }
  bool operator<(const GridCell& o) const { return key() < o.key(); }
  bool operator==(const GridCell& o) const { return key() == o.key(); }
};

// Distinct cells in tie-break order (smaller alpha, then beta, gamma, K).
inline std::vector<GridCell> grid_cells(const GridSpec& g) {
  std::vector<GridCell> cells;
  for (double a : g.alphas)
    for (double b : g.betas)
      for (double c : g.gammas)
        for (Index k : g.Ks) cells.push_back({a, b, c, k});
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

inline TrainConfig with_cell(TrainConfig cfg, const GridCell& c) {
  cfg.alpha = c.alpha;
  cfg.beta = c.beta;
  cfg.gamma = c.gamma;
  cfg.K = c.K;
  return cfg;
}

struct GridResult {
  GridCell best;
  RunReport report;  // outer folds, each trained with its own inner-CV winner
  std::vector<GridCell> fold_winners;  // parallel to report.folds
  // Inner-CV mean AP per (outer item, cell); failed cells hold -inf.
  std::vector<std::vector<double>> inner_ap;
  std::vector<GridCell> cells;
};

// Index of the cell with the largest score; strict '>' keeps the earliest
// (tie-break order) cell on ties.
inline std::size_t select_cell(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

// Nested search: inside each outer training split, every cell is scored by
// inner k-fold mean AP; the winner is refit on the whole outer training split
// and evaluated on the outer test split. A cell whose training fails
// numerically scores -inf. The overall best cell is the one chosen by the
// most outer folds (ties by cell order).
inline GridResult cmd_grid(const Dataset& data, const ExperimentConfig& config) {
  validate(config);
  validate(data);
  const auto t0 = std::chrono::steady_clock::now();
  GridResult out;
  out.cells = grid_cells(config.grid);
  if (out.cells.empty()) throw DataError("empty grid");
  for (const auto& c : out.cells) validate(with_cell(config.train, c));

  struct Outer {
    std::uint64_t seed;
    int fold;
    Dataset train, test;
    FoldPlan inner;
  };
  std::vector<Outer> outer;
  for (auto s : config.seeds) {
    const auto plan = kfold_split(data.n_samples(), config.folds, s);
    for (int f = 0; f < config.folds; ++f) {
      Outer o{s, f, select_columns(data, plan.train_indices(f)), select_columns(data, plan.test_indices(f)), {}};
      o.inner = kfold_split(o.train.n_samples(), config.inner_folds, mix_seed(s, static_cast<std::uint64_t>(f)));
      outer.push_back(std::move(o));
    }
  }

  const std::size_t n_cells = out.cells.size();
  out.inner_ap.assign(outer.size(), std::vector<double>(n_cells, 0.0));
  parallel_for(outer.size() * n_cells, config.workers, [&](std::size_t item) {
    const auto& o = outer[item / n_cells];
    const auto cfg = with_cell(config.train, out.cells[item % n_cells]);
    const auto outer_fold = static_cast<int>(item / n_cells);
    double sum = 0.0;
    try {
      for (int f = 0; f < config.inner_folds; ++f) {
        const auto fr = run_fold(select_columns(o.train, o.inner.train_indices(f)),
                                 select_columns(o.train, o.inner.test_indices(f)), cfg, config.train_noise,
                                 fold_noise_seed(mix_seed(o.seed, static_cast<std::uint64_t>(outer_fold)), f));
        sum += fr.metrics.ap;
      }
      out.inner_ap[item / n_cells][item % n_cells] = sum / config.inner_folds;
    } catch (const NumericalError&) {
      out.inner_ap[item / n_cells][item % n_cells] = -std::numeric_limits<double>::infinity();
    }
  });

  out.fold_winners.resize(outer.size());
  out.report.folds.resize(outer.size());
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const auto& scores = out.inner_ap[i];
    if (std::all_of(scores.begin(), scores.end(), [](double v) { return std::isinf(v); }))
      throw NumericalError("fold " + std::to_string(outer[i].fold) + ": every grid cell failed to train");
    out.fold_winners[i] = out.cells[select_cell(scores)];
  }
  parallel_for(outer.size(), config.workers, [&](std::size_t i) {
    const auto& o = outer[i];
    try {
      auto fr = run_fold(o.train, o.test, with_cell(config.train, out.fold_winners[i]), config.train_noise,
                         fold_noise_seed(o.seed, o.fold));
      fr.seed = o.seed;
      fr.fold = o.fold;
      out.report.folds[i] = fr;
    } catch (const NumericalError& e) {
      throw NumericalError("fold " + std::to_string(o.fold) + ": " + e.what());
    }
  });
  // aggregate() sorts folds by (seed, fold), which is already their order.
  aggregate(out.report);

  std::map<GridCell, int> votes;
  for (const auto& w : out.fold_winners) ++votes[w];
  int best_votes = -1;
  for (const auto& [cell, n] : votes)
    if (n > best_votes) {
      best_votes = n;
      out.best = cell;
    }
  out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Noise robustness and ablation
// ---------------------------------------------------------------------------

struct NoiseCurveRow {
  double ratio = 0.0;
  RunReport report;
};

// One cross-validation per ratio, noise injected into training splits only.
// Rows come out in ascending ratio order.
inline std::vector<NoiseCurveRow> cmd_noise_curve(const Dataset& data, const ExperimentConfig& config) {
  validate(config);
  auto ratios = config.noise_ratios;
  std::sort(ratios.begin(), ratios.end());
  ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());
  std::vector<NoiseCurveRow> rows;
  for (double r : ratios) rows.push_back({r, cmd_cv(data, config, r)});
  return rows;
}

struct AblationResult {
  std::string name;    // "beta" or "gamma"
  RunReport group_a;   // ablated weight forced to 0
  RunReport group_b;   // configured weight
};

inline std::vector<AblationResult> cmd_ablation(const Dataset& data, const ExperimentConfig& config) {
  validate(config);
  std::vector<AblationResult> out;
  auto run_pair = [&](const std::string& name, auto zero) {
    ExperimentConfig a = config;
    zero(a.train);
    out.push_back({name, cmd_cv(data, a), cmd_cv(data, config)});
  };
  if (config.force_beta_zero) run_pair("beta", [](TrainConfig& c) { c.beta = 0.0; });
  if (config.force_gamma_zero) run_pair("gamma", [](TrainConfig& c) { c.gamma = 0.0; });
  return out;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline std::string fold_csv(const RunReport& r) {
  std::ostringstream out;
  out << "seed,fold,n_test,alpha,beta,gamma,K,ap,hl,rl,cv_raw,cv_norm,n_skipped,iterations,stop_reason,final_loss,"
         "loss_increases\n";
  for (const auto& f : r.folds) {
    out << f.seed << ',' << f.fold << ',' << f.n_test << ',' << format_real(f.chosen.alpha) << ','
        << format_real(f.chosen.beta) << ',' << format_real(f.chosen.gamma) << ',' << f.chosen.K << ','
        << format_real(f.metrics.ap) << ',' << format_real(f.metrics.hl) << ',' << format_real(f.metrics.rl) << ','
        << format_real(f.metrics.cv_raw) << ',' << format_real(f.metrics.cv_norm) << ',' << f.metrics.n_skipped_ap_rl
        << ',' << f.iterations << ',' << to_string(f.stop_reason) << ',' << format_real(f.final_loss) << ','
        << f.loss_increases << '\n';
  }
  return out.str();
}

inline std::string summary_csv(const RunReport& r) {
  std::ostringstream out;
  out << "metric,mean,sd\n";
  auto row = [&](const char* name, const MetricSummary& s) {
    out << name << ',' << format_real(s.mean) << ',' << format_real(s.sd) << '\n';
  };
  row("ap", r.ap);
  row("hl", r.hl);
  row("rl", r.rl);
  row("cv_raw", r.cv_raw);
  row("cv_norm", r.cv_norm);
  return out.str();
}

inline std::string summary_text(const std::string& title, const RunReport& r) {
  std::ostringstream out;
  auto ms = [](const MetricSummary& s) { return format_real(s.mean, 4) + " (" + format_real(s.sd, 4) + ")"; };
  out << title << ": " << r.folds.size() << " folds, " << format_real(r.seconds, 3) << " s\n";
  out << "  AP     " << ms(r.ap) << '\n';
  out << "  HL     " << ms(r.hl) << '\n';
  out << "  RL     " << ms(r.rl) << '\n';
  out << "  CV     " << ms(r.cv_raw) << "  normalized " << ms(r.cv_norm) << '\n';
  int margin = 0, increases = 0;
  for (const auto& f : r.folds) {
    margin += f.stop_reason == StopReason::Margin;
    increases += f.loss_increases;
  }
  out << "  stops by margin " << margin << "/" << r.folds.size() << ", loss increases " << increases << '\n';
  return out.str();
}

inline std::string noise_curve_csv(const std::vector<NoiseCurveRow>& rows) {
  std::ostringstream out;
  out << "ratio,ap_mean,ap_sd,hl_mean,hl_sd,rl_mean,rl_sd,cv_norm_mean,cv_norm_sd\n";
  for (const auto& r : rows) {
    const auto& p = r.report;
    out << format_real(r.ratio) << ',' << format_real(p.ap.mean) << ',' << format_real(p.ap.sd) << ','
        << format_real(p.hl.mean) << ',' << format_real(p.hl.sd) << ',' << format_real(p.rl.mean) << ','
        << format_real(p.rl.sd) << ',' << format_real(p.cv_norm.mean) << ',' << format_real(p.cv_norm.sd) << '\n';
  }
  return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace rmltsk
