// Command-line harness for TPAUC surrogate training: config-driven runs,
// batch-size and proximal-weight ablations, the built-in reference-oracle
// suite, and snapshot evaluation.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "staco/experiment.hpp"
#include "staco/oracles.hpp"

namespace {

const char* kConfigReference = R"(Config file keys (flat `key = value` lines, grouped by [section]):

[dataset]
  path        = "file"   libsvm-format training data (omit when synth = true)
  test_path   = "file"   optional libsvm test file; otherwise train_frac split
  synth       = false    generate two Gaussians instead of loading a file
  n_pos, n_neg, d        synthetic class sizes and dimension
  separation  = 3.0      synthetic class separation along the first axis
  keep_frac   = 1.0      keep this fraction of positives (imbalance subsampling)
  train_frac  = 0.8      head/tail split fraction when no test_path is given

[method]
  name   = staco1        staco1 | staco2 | ce | auc_pairwise
  scorer = linear        linear | mlp
  hidden = 8             hidden width of the mlp scorer
  bias   = false         add a bias parameter to the linear scorer

[staco]
  theta0 = 0.5           positive-tail rate, k1 = floor(n_pos * theta0)
  theta1 = 0.5           negative-tail rate, k2 = floor(n_neg * theta1)
  loss   = squared_hinge squared_hinge | hinge | logistic
  margin = 0.5           surrogate margin
  alpha, beta, eta, beta_prime   step sizes (dual, thresholds, model, global)
  S = 32, B = 32         positive / negative batch sizes
  T = 3000               iterations (staco1, baselines) or stages (staco2)
  K = 1                  inner iterations per stage (staco2)
  gamma = 0              proximal weight (staco2, must be > 0)
  milestones = 500,1500,2500   iterations at which step sizes decay
  decay_factor = 0.1     per-milestone multiplier
  weight_decay = 0.0     L2 shrink applied with the model step
  eval_every = 50        trace cadence in iterations (0 disables tracing)

[eval]
  tpauc = 0.5:0.5,0.75:0.75    theta0:theta1 pairs reported on train/test

[run]
  out = out              artifact directory
  seeds = 1,2,3          one full run per seed
  target_obj = inf       objective target used by ablate-batch
  quiet = false          suppress progress output

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.)";

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',') {
      if (!cur.empty()) {
        seeds.push_back(std::stoull(cur));
        cur.clear();
      }
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur += ch;
    }
  }
  if (seeds.empty()) throw staco::config_error("--seed: empty seed list");
  return seeds;
}

struct common_options {
  std::string config_path;
  std::string out_override;
  std::string seed_override;
  bool quiet = false;
};

void add_common(CLI::App* cmd, common_options& opt, bool config_required = true) {
  auto* c = cmd->add_option("--config", opt.config_path, "experiment config file");
  if (config_required) c->required();
  cmd->add_option("--out", opt.out_override, "override the output directory");
  cmd->add_option("--seed", opt.seed_override, "override run.seeds (comma separated)");
  cmd->add_flag("--quiet", opt.quiet, "suppress progress output");
}

staco::experiment_config load_config(const common_options& opt) {
  staco::experiment_config cfg = staco::load_experiment_config(opt.config_path);
  if (!opt.out_override.empty()) cfg.out_dir = opt.out_override;
  if (!opt.seed_override.empty()) cfg.seeds = parse_seed_list(opt.seed_override);
  if (opt.quiet) cfg.quiet = true;
  return cfg;
}

int run_oracles(double perturb) {
  const auto results = staco::oracles::run_suite(perturb);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-28s %s  measured=%.3e  tol=%.3e  (%s)\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.measured, r.tolerance, r.note.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TPAUC surrogate optimization harness"};
  app.require_subcommand(1);
  app.footer(kConfigReference);

  common_options run_opt, ab_opt, ag_opt, eval_opt;
  std::vector<int> b_values;
  std::vector<double> gamma_values;
  std::string params_path;
  double perturb_subgrad = 0.0;

  CLI::App* run_cmd = app.add_subcommand("run", "train and evaluate every seed");
  add_common(run_cmd, run_opt);

  CLI::App* ab_cmd =
      app.add_subcommand("ablate-batch", "iterations-to-target per negative batch size");
  add_common(ab_cmd, ab_opt);
  ab_cmd->add_option("--b-values", b_values, "negative batch sizes to compare")
      ->required()
      ->delimiter(',');

  CLI::App* ag_cmd =
      app.add_subcommand("ablate-gamma", "final objective and TPAUC per proximal weight");
  add_common(ag_cmd, ag_opt);
  ag_cmd->add_option("--gamma-values", gamma_values, "proximal weights to compare")
      ->required()
      ->delimiter(',');

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "run the built-in reference-oracle suite");
  oracle_cmd
      ->add_option("--perturb-subgrad", perturb_subgrad,
                   "test hook: shift analytic subgradients to force a failure")
      ->capture_default_str();

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a parameter snapshot on the configured data");
  add_common(eval_cmd, eval_opt);
  eval_cmd->add_option("--params", params_path, "parameter snapshot JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const staco::experiment_config cfg = load_config(run_opt);
      const staco::json summary = staco::run_experiment(cfg);
      if (!cfg.quiet) std::cout << summary["metrics"].dump(2) << "\n";
      return 0;
    }
    if (ab_cmd->parsed()) {
      const staco::experiment_config cfg = load_config(ab_opt);
      std::cout << staco::ablate_batch(cfg, b_values);
      return 0;
    }
    if (ag_cmd->parsed()) {
      const staco::experiment_config cfg = load_config(ag_opt);
      std::cout << staco::ablate_gamma(cfg, gamma_values);
      return 0;
    }
    if (oracle_cmd->parsed()) {
      return run_oracles(perturb_subgrad);
    }
    if (eval_cmd->parsed()) {
      const staco::experiment_config cfg = load_config(eval_opt);
      std::cout << staco::eval_snapshot(cfg, params_path).dump(2) << "\n";
      return 0;
    }
  } catch (const staco::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
