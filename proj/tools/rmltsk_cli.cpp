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

// rmltsk command-line harness.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
// Input paths are taken as given; relative output paths land under --out-dir.

#include "rmltsk/experiment.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rmltsk;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int workers = 1;
  std::string config_path;
};

struct DataArgs {
  std::string features;
  std::string labels;
};

struct TrainArgs {
  double alpha = TrainConfig{}.alpha;
  double beta = TrainConfig{}.beta;
  double gamma = TrainConfig{}.gamma;
  Index K = TrainConfig{}.K;
  int T = TrainConfig{}.T;
  double min_margin = -1.0;  // < 0: relative default
  double tau = TrainConfig{}.tau;
  double width_floor = kDefaultWidthFloor;

  TrainConfig to_config(std::uint64_t seed) const {
    TrainConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.gamma = gamma;
    c.K = K;
    c.T = T;
    if (min_margin >= 0.0) c.min_margin = min_margin;
    c.tau = tau;
    c.width_floor = width_floor;
    c.seed = seed;
    return c;
  }
};

struct ExperimentArgs {
  int folds = 5;
  int inner_folds = 3;
  std::vector<std::uint64_t> seeds;
  std::vector<double> ratios;
  double train_noise = 0.0;
  std::string ablate = "both";
  std::vector<double> alphas, betas, gammas;
  std::vector<Index> Ks;
  std::string prefix;
};

fs::path output_path(const Globals& g, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.out_dir) / path;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// Comma-separated list; repeated flags accumulate.
template <class T>
void add_list_option(CLI::App* cmd, const std::string& name, std::vector<T>& v, const std::string& help) {
  cmd->add_option(name, v, help)->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--features", d.features, "Feature CSV (N rows x D)");
  cmd->add_option("--labels", d.labels, "Label CSV (N rows x L, 0/1)");
}

void add_train_options(CLI::App* cmd, TrainArgs& t) {
  cmd->add_option("--alpha", t.alpha, "Consequent penalty weight")->capture_default_str();
  cmd->add_option("--beta", t.beta, "Soft-label fidelity weight")->capture_default_str();
  cmd->add_option("--gamma", t.gamma, "Correlation weight")->capture_default_str();
  cmd->add_option("--K,--rules", t.K, "Number of fuzzy rules")->capture_default_str();
  cmd->add_option("--T,--max-iters", t.T, "Maximum iterations")->capture_default_str();
  cmd->add_option("--min-margin", t.min_margin, "Absolute stop margin (default: relative)");
  cmd->add_option("--tau,--threshold", t.tau, "Prediction threshold")->capture_default_str();
  cmd->add_option("--width-floor", t.width_floor, "Minimum Gaussian width")->capture_default_str();
}

void add_experiment_options(CLI::App* cmd, ExperimentArgs& e) {
  cmd->add_option("--folds", e.folds, "Outer folds")->capture_default_str();
  add_list_option(cmd, "--seeds", e.seeds, "Split seeds (default: --seed)");
  cmd->add_option("--train-noise", e.train_noise, "Label noise ratio injected into training splits");
  cmd->add_option("--prefix", e.prefix, "Output file prefix (default: subcommand name)");
}

Dataset load(const DataArgs& d) {
  require(d.features, "--features");
  require(d.labels, "--labels");
  return load_dataset(d.features, d.labels);
}

ExperimentConfig experiment_config(const Globals& g, const TrainArgs& t, const ExperimentArgs& e) {
  ExperimentConfig c;
  c.train = t.to_config(g.seed);
  c.folds = e.folds;
  c.inner_folds = e.inner_folds;
  c.seeds = e.seeds.empty() ? std::vector<std::uint64_t>{g.seed} : e.seeds;
  c.train_noise = e.train_noise;
  c.workers = g.workers;
  return c;
}

void emit_report(const Globals& g, const std::string& prefix, const std::string& title, const RunReport& r) {
  write_text_file(output_path(g, prefix + "_folds.csv"), fold_csv(r));
  write_text_file(output_path(g, prefix + "_summary.csv"), summary_csv(r));
  const auto text = summary_text(title, r);
  write_text_file(output_path(g, prefix + "_summary.txt"), text);
  std::cout << text;
}

// key=value lines; blank lines and '#' comments ignored.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key(trim(view.substr(0, eq)));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    out.emplace_back(key, std::string(trim(view.substr(eq + 1))));
  }
  return out;
}

// Config values fill options the command line left unset.
void apply_config(CLI::App& app, CLI::App* sub, const std::string& path) {
  for (const auto& [key, value] : read_config(path)) {
    CLI::Option* opt = sub ? sub->get_option_no_throw("--" + key) : nullptr;
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt) throw UsageError("unknown config key: " + key);
    if (opt->count() > 0) continue;
    if (opt->get_expected_max() > 1) {
      for (auto part : split(value, ',')) opt->add_result(std::string(trim(part)));
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Robust multilabel TSK fuzzy system: training, evaluation and experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads for experiments")->capture_default_str();
  app.add_option("--config", g.config_path, "key=value file; command-line flags take precedence");

  DataArgs data;
  TrainArgs targs;
  ExperimentArgs eargs;

  auto* synth = app.add_subcommand("synth", "Generate a logic-constrained synthetic dataset");
  std::string kind = "independence";
  Index n = 1000, d = 20;
  std::string out_prefix;
  synth->add_option("--kind", kind, "independence | equality | union")->capture_default_str();
  synth->add_option("--n", n, "Samples")->capture_default_str();
  synth->add_option("--d", d, "Features")->capture_default_str();
  synth->add_option("--out-prefix", out_prefix, "Writes <prefix>.X.csv and <prefix>.Y.csv");

  auto* noise = app.add_subcommand("noise", "Flip all labels of a random fraction of samples");
  double ratio = 0.0;
  add_data_options(noise, data);
  noise->add_option("--ratio", ratio, "Fraction of samples to corrupt");
  noise->add_option("--out-prefix", out_prefix, "Writes <prefix>.X.csv and <prefix>.Y.csv");

  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
  std::string model_path = "model.txt";
  std::string trace_path;
  add_data_options(train_cmd, data);
  add_train_options(train_cmd, targs);
  train_cmd->add_option("--model", model_path, "Output model file")->capture_default_str();
  train_cmd->add_option("--trace", trace_path, "Optional per-iteration loss CSV");

  auto* predict_cmd = app.add_subcommand("predict", "Score (or threshold) a feature file");
  std::string out_path;
  double threshold = 0.0;
  bool binary = false;
  predict_cmd->add_option("--model", model_path, "Model file");
  predict_cmd->add_option("--features", data.features, "Feature CSV");
  predict_cmd->add_option("--out", out_path, "Output CSV (N rows x L)");
  auto* predict_tau = predict_cmd->add_option("--threshold", threshold, "Override the stored threshold");
  predict_cmd->add_flag("--binary", binary, "Write thresholded 0/1 predictions instead of scores");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a score file against labels");
  std::string scores_path;
  double eval_tau = 0.5;
  eval_cmd->add_option("--scores", scores_path, "Score CSV (N rows x L)");
  eval_cmd->add_option("--labels", data.labels, "Label CSV");
  eval_cmd->add_option("--threshold", eval_tau, "Threshold for Hamming loss")->capture_default_str();

  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
  add_data_options(cv_cmd, data);
  add_train_options(cv_cmd, targs);
  add_experiment_options(cv_cmd, eargs);

  auto* grid_cmd = app.add_subcommand("grid", "Nested-CV grid search");
  add_data_options(grid_cmd, data);
  add_train_options(grid_cmd, targs);
  add_experiment_options(grid_cmd, eargs);
  grid_cmd->add_option("--inner-folds", eargs.inner_folds, "Inner folds")->capture_default_str();
  add_list_option(grid_cmd, "--alphas", eargs.alphas, "alpha grid");
  add_list_option(grid_cmd, "--betas", eargs.betas, "beta grid");
  add_list_option(grid_cmd, "--gammas", eargs.gammas, "gamma grid");
  add_list_option(grid_cmd, "--Ks", eargs.Ks, "rule-count grid");

  auto* curve_cmd = app.add_subcommand("noise-curve", "Cross-validated AP against training label noise");
  add_data_options(curve_cmd, data);
  add_train_options(curve_cmd, targs);
  add_experiment_options(curve_cmd, eargs);
  add_list_option(curve_cmd, "--ratios", eargs.ratios, "Noise ratios");

  auto* ablate_cmd = app.add_subcommand("ablate", "Paired runs with beta and/or gamma forced to zero");
  add_data_options(ablate_cmd, data);
  add_train_options(ablate_cmd, targs);
  add_experiment_options(ablate_cmd, eargs);
  ablate_cmd->add_option("--ablate", eargs.ablate, "beta | gamma | both")->capture_default_str();

  auto* rules_cmd = app.add_subcommand("export-rules", "Write the rule base in linguistic form");
  rules_cmd->add_option("--model", model_path, "Model file");
  rules_cmd->add_option("--out", out_path, "Output text file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (!g.config_path.empty()) apply_config(app, sub, g.config_path);
  if (g.workers < 1) throw UsageError("--workers must be at least 1");
  const std::string name = sub->get_name();
  const std::string prefix = eargs.prefix.empty() ? name : eargs.prefix;

  if (name == "synth") {
    const auto k = parse_synth_kind(kind);
    if (!k) throw UsageError("unknown --kind: " + kind);
    require(out_prefix, "--out-prefix");
    SynthSpec spec;
    spec.kind = *k;
    spec.n_samples = n;
    spec.n_features = d;
    spec.seed = g.seed;
    const auto ds = gen_synthetic(spec);
    const auto base = output_path(g, out_prefix).string();
    if (fs::path(base).has_parent_path()) fs::create_directories(fs::path(base).parent_path());
    save_dataset(ds, base + ".X.csv", base + ".Y.csv");
    std::cout << "wrote " << base << ".X.csv and " << base << ".Y.csv (" << ds.n_samples() << " samples)\n";
  } else if (name == "noise") {
    require(out_prefix, "--out-prefix");
    const auto ds = load(data);
    const auto noisy = inject_label_noise(ds, {ratio, g.seed});
    const auto base = output_path(g, out_prefix).string();
    if (fs::path(base).has_parent_path()) fs::create_directories(fs::path(base).parent_path());
    save_dataset(noisy, base + ".X.csv", base + ".Y.csv");
    std::cout << "flipped " << noise_selection(ds.n_samples(), {ratio, g.seed}).size() << " of " << ds.n_samples()
              << " samples\n";
  } else if (name == "train") {
    const auto ds = load(data);
    const auto result = train(ds, targs.to_config(g.seed));
    const auto mpath = output_path(g, model_path);
    if (mpath.has_parent_path()) fs::create_directories(mpath.parent_path());
    save_model(result.model, mpath.string());
    if (!trace_path.empty()) {
      std::ostringstream t;
      t << "iteration,soft_loss,c_penalty,soft_label,correlation,total\n";
      for (std::size_t i = 0; i < result.trace.iterations.size(); ++i) {
        const auto& l = result.trace.iterations[i];
        t << i + 1 << ',' << format_real(l.soft_loss) << ',' << format_real(l.c_penalty) << ','
          << format_real(l.soft_label) << ',' << format_real(l.correlation) << ',' << format_real(l.total) << '\n';
      }
      write_text_file(output_path(g, trace_path), t.str());
    }
    std::cout << "iterations " << result.trace.iterations.size() << ", stop " << to_string(result.trace.stop_reason)
              << ", final loss " << format_real(result.trace.iterations.back().total, 6) << "\nmodel "
              << mpath.string() << '\n';
  } else if (name == "predict") {
    require(model_path, "--model");
    require(data.features, "--features");
    require(out_path, "--out");
    const auto model = load_model(model_path);
    const Matrix X = load_matrix_csv(data.features);
    Matrix out = score(model, X);
    if (binary) out = threshold_scores(out, predict_tau->count() ? threshold : model.tau);
    const auto opath = output_path(g, out_path);
    if (opath.has_parent_path()) fs::create_directories(opath.parent_path());
    save_matrix_csv(opath.string(), out, model.label_names);
  } else if (name == "eval") {
    require(scores_path, "--scores");
    require(data.labels, "--labels");
    const Matrix scores = load_matrix_csv(scores_path);
    const Matrix truth = load_matrix_csv(data.labels);
    const auto r = evaluate(scores, truth, eval_tau);
    // One line, fields in the order ap,hl,rl,cv_raw,cv_norm,n_skipped.
    std::cout << format_real(r.ap) << ',' << format_real(r.hl) << ',' << format_real(r.rl) << ','
              << format_real(r.cv_raw) << ',' << format_real(r.cv_norm) << ',' << r.n_skipped_ap_rl << '\n';
  } else if (name == "cv") {
    const auto ds = load(data);
    emit_report(g, prefix, "cross-validation", cmd_cv(ds, experiment_config(g, targs, eargs)));
  } else if (name == "grid") {
    const auto ds = load(data);
    auto cfg = experiment_config(g, targs, eargs);
    cfg.grid = default_grid();
    if (!eargs.alphas.empty()) cfg.grid.alphas = eargs.alphas;
    if (!eargs.betas.empty()) cfg.grid.betas = eargs.betas;
    if (!eargs.gammas.empty()) cfg.grid.gammas = eargs.gammas;
    if (!eargs.Ks.empty()) cfg.grid.Ks = eargs.Ks;
    const auto res = cmd_grid(ds, cfg);
    std::ostringstream best;
    best << "alpha,beta,gamma,K\n"
         << format_real(res.best.alpha) << ',' << format_real(res.best.beta) << ',' << format_real(res.best.gamma)
         << ',' << res.best.K << '\n';
    write_text_file(output_path(g, prefix + "_best.csv"), best.str());
    std::cout << "best alpha=" << format_real(res.best.alpha) << " beta=" << format_real(res.best.beta)
              << " gamma=" << format_real(res.best.gamma) << " K=" << res.best.K << '\n';
    emit_report(g, prefix, "nested grid search", res.report);
  } else if (name == "noise-curve") {
    const auto ds = load(data);
    auto cfg = experiment_config(g, targs, eargs);
    if (!eargs.ratios.empty()) cfg.noise_ratios = eargs.ratios;
    const auto rows = cmd_noise_curve(ds, cfg);
    const auto csv = noise_curve_csv(rows);
    write_text_file(output_path(g, prefix + ".csv"), csv);
    std::cout << csv;
  } else if (name == "ablate") {
    const auto ds = load(data);
    auto cfg = experiment_config(g, targs, eargs);
    if (eargs.ablate == "beta" || eargs.ablate == "both") cfg.force_beta_zero = true;
    if (eargs.ablate == "gamma" || eargs.ablate == "both") cfg.force_gamma_zero = true;
    if (!cfg.force_beta_zero && !cfg.force_gamma_zero) throw UsageError("--ablate must be beta, gamma or both");
    for (const auto& r : cmd_ablation(ds, cfg)) {
      emit_report(g, prefix + "_" + r.name + "_groupA", r.name + " = 0 (group A)", r.group_a);
      emit_report(g, prefix + "_" + r.name + "_groupB", r.name + " as configured (group B)", r.group_b);
    }
  } else if (name == "export-rules") {
    require(model_path, "--model");
    require(out_path, "--out");
    write_text_file(output_path(g, out_path), export_rules(load_model(model_path)));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
