#ifndef STACO_EXPERIMENT_HPP
#define STACO_EXPERIMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "staco/dataset.hpp"
#include "staco/errors.hpp"
#include "staco/metrics.hpp"
#include "staco/optimizers.hpp"
#include "staco/scorers.hpp"

namespace staco {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Flat key = value configuration text with [section] headers and # comments.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

}  // namespace detail

// Parsed but untyped config: section.key -> raw value string.
class flat_config {
 public:
  static flat_config parse(std::istream& in) {
    flat_config cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string t = detail::trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']') throw config_error("line " + std::to_string(line_no) +
                                                ": unterminated section header");
        section = detail::trim(t.substr(1, t.size() - 2));
        continue;
      }
      const std::size_t eq = t.find('=');
      if (eq == std::string::npos) {
        throw config_error("line " + std::to_string(line_no) +
                           ": expected key = value");
      }
      std::string key = detail::trim(t.substr(0, eq));
      std::string val = detail::trim(t.substr(eq + 1));
      if (key.empty()) {
        throw config_error("line " + std::to_string(line_no) + ": empty key");
      }
      if (val.size() >= 2 && val.front() == '"' && val.back() == '"') {
        val = val.substr(1, val.size() - 2);
      }
      if (!section.empty()) key = section + "." + key;
      cfg.values_[key] = val;
    }
    return cfg;
  }

  static flat_config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      throw config_error(key + ": expected a number, got '" + it->second + "'");
    }
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      throw config_error(key + ": expected an integer, got '" + it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw config_error(key + ": expected true/false, got '" + it->second + "'");
  }

  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         std::vector<std::int64_t> fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    std::vector<std::int64_t> out;
    for (const std::string& tok : detail::split_list(it->second)) {
      if (tok.empty()) continue;
      try {
        out.push_back(std::stoll(tok));
      } catch (const std::exception&) {
        throw config_error(key + ": bad integer '" + tok + "'");
      }
    }
    return out;
  }

  // Rejecting unknown keys catches typos at config-validation time.
  void reject_unconsumed() const {
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) {
        throw config_error("unknown config key: " + key);
      }
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

// ---------------------------------------------------------------------------
// Experiment description
// ---------------------------------------------------------------------------

enum class scorer_kind { linear, mlp };

struct experiment_config {
  // dataset
  std::string data_path;   // libsvm file; empty means synthetic
  std::string test_path;   // optional pre-defined test file
  bool use_synth = false;
  int synth_n_pos = 50;
  int synth_n_neg = 500;
  int synth_d = 5;
  double synth_separation = 3.0;
  double keep_frac = 1.0;  // positive subsampling applied before the split
  double train_frac = 0.8;

  // model / method
  method_kind method = method_kind::staco1;
  scorer_kind scorer = scorer_kind::linear;
  int mlp_hidden = 8;
  bool linear_bias = false;

  staco_config staco;  // seed is overwritten per run

  // evaluation + outputs
  std::vector<std::pair<double, double>> eval_pairs{{0.5, 0.5}, {0.75, 0.75}};
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  double target_obj = std::numeric_limits<double>::infinity();
  bool quiet = false;
};

inline experiment_config load_experiment_config(const std::string& path) {
  flat_config f = flat_config::parse_file(path);
  experiment_config c;

  c.data_path = f.get_string("dataset.path", "");
  c.test_path = f.get_string("dataset.test_path", "");
  c.use_synth = f.get_bool("dataset.synth", c.data_path.empty());
  c.synth_n_pos = static_cast<int>(f.get_int("dataset.n_pos", c.synth_n_pos));
  c.synth_n_neg = static_cast<int>(f.get_int("dataset.n_neg", c.synth_n_neg));
  c.synth_d = static_cast<int>(f.get_int("dataset.d", c.synth_d));
  c.synth_separation = f.get_double("dataset.separation", c.synth_separation);
  c.keep_frac = f.get_double("dataset.keep_frac", c.keep_frac);
  c.train_frac = f.get_double("dataset.train_frac", c.train_frac);
  if (c.use_synth && !c.data_path.empty()) {
    throw config_error("dataset.path and dataset.synth are mutually exclusive");
  }
  if (!c.use_synth && c.data_path.empty()) {
    throw config_error("dataset.path: required unless dataset.synth = true");
  }

  c.method = method_from_string(f.get_string("method.name", "staco1"));
  const std::string sc = f.get_string("method.scorer", "linear");
  if (sc == "linear") {
    c.scorer = scorer_kind::linear;
  } else if (sc == "mlp") {
    c.scorer = scorer_kind::mlp;
  } else {
    throw config_error("method.scorer: expected linear or mlp, got '" + sc + "'");
  }
  c.mlp_hidden = static_cast<int>(f.get_int("method.hidden", c.mlp_hidden));
  c.linear_bias = f.get_bool("method.bias", c.linear_bias);

  staco_config& s = c.staco;
  s.theta0 = f.get_double("staco.theta0", s.theta0);
  s.theta1 = f.get_double("staco.theta1", s.theta1);
  s.loss = surrogate_loss(loss_kind_from_string(
                              f.get_string("staco.loss", "squared_hinge")),
                          f.get_double("staco.margin", 0.5));
  s.alpha = f.get_double("staco.alpha", s.alpha);
  s.beta = f.get_double("staco.beta", s.beta);
  s.eta = f.get_double("staco.eta", s.eta);
  s.beta_prime = f.get_double("staco.beta_prime", s.beta_prime);
  s.S = static_cast<int>(f.get_int("staco.S", s.S));
  s.B = static_cast<int>(f.get_int("staco.B", s.B));
  s.T = f.get_int("staco.T", s.T);
  s.K = f.get_int("staco.K", s.K);
  s.gamma = f.get_double("staco.gamma", s.gamma);
  s.decay_milestones = f.get_int_list("staco.milestones", {});
  s.decay_factor = f.get_double("staco.decay_factor", s.decay_factor);
  s.weight_decay = f.get_double("staco.weight_decay", s.weight_decay);
  s.eval_every = f.get_int("staco.eval_every", s.eval_every);

  const std::string pairs = f.get_string("eval.tpauc", "0.5:0.5,0.75:0.75");
  c.eval_pairs.clear();
  for (const std::string& tok : detail::split_list(pairs)) {
    if (tok.empty()) continue;
    const std::size_t colon = tok.find(':');
    if (colon == std::string::npos) {
      throw config_error("eval.tpauc: expected theta0:theta1 pairs, got '" + tok + "'");
    }
    try {
      c.eval_pairs.emplace_back(std::stod(tok.substr(0, colon)),
                                std::stod(tok.substr(colon + 1)));
    } catch (const std::exception&) {
      throw config_error("eval.tpauc: bad pair '" + tok + "'");
    }
  }
  if (c.eval_pairs.empty()) throw config_error("eval.tpauc: at least one pair required");

  c.out_dir = f.get_string("run.out", c.out_dir);
  c.seeds.clear();
  for (std::int64_t v : f.get_int_list("run.seeds", {1})) {
    c.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (c.seeds.empty()) throw config_error("run.seeds: at least one seed required");
  c.target_obj = f.get_double("run.target_obj", c.target_obj);
  c.quiet = f.get_bool("run.quiet", false);

  f.reject_unconsumed();
  return c;
}

// ---------------------------------------------------------------------------
// Artifact helpers
// ---------------------------------------------------------------------------

// Write-then-rename so partially written artifacts are never observed.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline json to_json(const dataset_summary& s) {
  return json{{"n", s.n},
              {"d", s.d},
              {"n_pos", s.n_pos},
              {"n_neg", s.n_neg},
              {"positive_fraction", s.positive_fraction},
              {"feature_min", s.feature_min},
              {"feature_max", s.feature_max}};
}

inline std::string theta_key(double t0, double t1) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f_%.2f", t0, t1);
  return buf;
}

// ---------------------------------------------------------------------------
// Scorer snapshots (flat parameter vector + shape metadata)
// ---------------------------------------------------------------------------

inline json snapshot_to_json(const linear_scorer& s) {
  const vec p = s.params();
  return json{{"scorer", "linear"},
              {"d", s.dim()},
              {"bias", s.has_bias()},
              {"params", std::vector<double>(p.data(), p.data() + p.size())}};
}

inline json snapshot_to_json(const mlp_scorer& s) {
  const vec p = s.params();
  return json{{"scorer", "mlp"},
              {"d", s.dim()},
              {"hidden", s.hidden()},
              {"params", std::vector<double>(p.data(), p.data() + p.size())}};
}

using any_scorer = std::variant<linear_scorer, mlp_scorer>;

inline any_scorer snapshot_from_json(const json& j) {
  const std::string kind = j.at("scorer").get<std::string>();
  const std::vector<double> p = j.at("params").get<std::vector<double>>();
  const vec pv = Eigen::Map<const vec>(p.data(), static_cast<Eigen::Index>(p.size()));
  if (kind == "linear") {
    linear_scorer s = linear_scorer::zeros(j.at("d").get<int>(),
                                           j.value("bias", false));
    s.set_params(pv);
    return s;
  }
  if (kind == "mlp") {
    mlp_scorer s = mlp_scorer::random_init(j.at("d").get<int>(),
                                           j.at("hidden").get<int>(), 0);
    s.set_params(pv);
    return s;
  }
  throw parse_error("unknown scorer kind in snapshot: " + kind);
}

inline any_scorer load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw parse_error(std::string("bad snapshot JSON: ") + e.what());
  }
  return snapshot_from_json(j);
}

// ---------------------------------------------------------------------------
// Running experiments
// ---------------------------------------------------------------------------

struct seed_outcome {
  std::uint64_t seed = 0;
  training_trace trace;
  any_scorer final_scorer;
  std::map<std::string, double> metrics;  // flat metric name -> value
  double wall_ms = 0.0;
};

namespace detail {

inline std::pair<dataset, dataset> build_data(const experiment_config& cfg,
                                              std::uint64_t seed) {
  dataset base = cfg.use_synth
                     ? synth_gaussian(cfg.synth_n_pos, cfg.synth_n_neg, cfg.synth_d,
                                      cfg.synth_separation, seed)
                     : load_libsvm_file(cfg.data_path);
  if (cfg.keep_frac < 1.0) base = subsample_positives(base, cfg.keep_frac, seed);
  if (!cfg.test_path.empty()) {
    dataset test = load_libsvm_file(cfg.test_path);
    test.require_both_classes("test dataset");
    base.require_both_classes("train dataset");
    return {std::move(base), std::move(test)};
  }
  return split_head_tail(base, cfg.train_frac);
}

template <scorer_like S>
void eval_split(const S& scorer, const dataset& ds, const experiment_config& cfg,
                const std::string& prefix, std::map<std::string, double>& out) {
  const vec sc = score_all(scorer, ds);
  std::vector<double> scores(sc.data(), sc.data() + sc.size());
  out[prefix + "_auc"] = auc(scores, ds.labels);
  for (auto [t0, t1] : cfg.eval_pairs) {
    rate_params rp(t0, t1, ds.n_pos(), ds.n_neg());
    out[prefix + "_tpauc_" + theta_key(t0, t1)] = tpauc_metric(scores, ds.labels, rp);
  }
}

template <scorer_like S>
seed_outcome run_one_seed(const experiment_config& cfg, S scorer_init,
                          const dataset& train, const dataset& test,
                          std::uint64_t seed) {
  staco_config sc = cfg.staco;
  sc.seed = seed;
  seed_outcome out;
  out.seed = seed;
  wall_timer timer;

  S final_scorer = scorer_init;
  switch (cfg.method) {
    case method_kind::staco1: {
      auto res = staco1_train(train, sc, scorer_init);
      final_scorer = res.scorer;
      out.trace = std::move(res.trace);
      break;
    }
    case method_kind::staco2: {
      auto res = staco2_train(train, sc, scorer_init);
      final_scorer = res.scorer;
      out.trace = std::move(res.trace);
      break;
    }
    case method_kind::ce: {
      auto res = baseline_ce_train(train, sc, scorer_init);
      final_scorer = res.scorer;
      out.trace = std::move(res.trace);
      break;
    }
    case method_kind::auc_pairwise: {
      auto res = baseline_auc_pairwise_train(train, sc, scorer_init);
      final_scorer = res.scorer;
      out.trace = std::move(res.trace);
      break;
    }
  }

  const rate_params rp(sc.theta0, sc.theta1, train.n_pos(), train.n_neg());
  out.metrics["final_obj_eq1"] = exact_objective_eq1(final_scorer, train, rp, sc.loss);
  out.metrics["final_obj_eq2min"] =
      partial_min_eq2(final_scorer, train, rp, sc.loss).value;
  eval_split(final_scorer, train, cfg, "train", out.metrics);
  eval_split(final_scorer, test, cfg, "test", out.metrics);
  out.wall_ms = timer.elapsed_ms();
  out.final_scorer = final_scorer;
  return out;
}

inline seed_outcome run_seed_dispatch(const experiment_config& cfg,
                                      const dataset& train, const dataset& test,
                                      std::uint64_t seed) {
  if (cfg.scorer == scorer_kind::linear) {
    return run_one_seed(cfg, linear_scorer::zeros(train.dim(), cfg.linear_bias),
                        train, test, seed);
  }
  return run_one_seed(cfg, mlp_scorer::random_init(train.dim(), cfg.mlp_hidden, seed),
                      train, test, seed);
}

inline json aggregate_metrics(const std::vector<seed_outcome>& outcomes) {
  json agg = json::object();
  if (outcomes.empty()) return agg;
  for (const auto& [name, first_value] : outcomes.front().metrics) {
    double sum = 0.0, sum_sq = 0.0;
    for (const seed_outcome& o : outcomes) {
      const double v = o.metrics.at(name);
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(outcomes.size());
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    agg[name] = json{{"mean", mean}, {"std", std::sqrt(var)}};
  }
  return agg;
}

}  // namespace detail

// Full `run` driver: trains every seed, writes trace_<seed>.csv and
// params_<seed>.json, and aggregates per-metric mean/std into summary.json.
inline json run_experiment(const experiment_config& cfg) {
  namespace fs = std::filesystem;
  std::vector<seed_outcome> outcomes;
  json per_seed = json::array();

  json data_info = json::object();
  for (std::uint64_t seed : cfg.seeds) {
    auto [train, test] = detail::build_data(cfg, seed);
    if (data_info.empty()) {
      data_info["train"] = to_json(summarize(train));
      data_info["test"] = to_json(summarize(test));
    }
    cfg.staco.validate(cfg.method, train.n_pos(), train.n_neg());
    seed_outcome out = detail::run_seed_dispatch(cfg, train, test, seed);

    std::ostringstream trace_csv;
    out.trace.to_csv(trace_csv);
    atomic_write_file(fs::path(cfg.out_dir) / ("trace_" + std::to_string(seed) + ".csv"),
                      trace_csv.str());
    const json snap = std::visit([](const auto& s) { return snapshot_to_json(s); },
                                 out.final_scorer);
    atomic_write_file(fs::path(cfg.out_dir) / ("params_" + std::to_string(seed) + ".json"),
                      snap.dump(2) + "\n");

    json seed_json = json::object();
    seed_json["seed"] = out.seed;
    seed_json["wall_ms"] = out.wall_ms;
    for (const auto& [k, v] : out.metrics) seed_json[k] = v;
    per_seed.push_back(seed_json);
    if (!cfg.quiet) {
      std::cerr << "[staco] seed " << seed << " done in " << out.wall_ms << " ms\n";
    }
    outcomes.push_back(std::move(out));
  }

  json summary;
  summary["method"] = to_string(cfg.method);
  summary["dataset"] = data_info;
  summary["seeds"] = cfg.seeds;
  summary["runs"] = per_seed;
  summary["metrics"] = detail::aggregate_metrics(outcomes);
  atomic_write_file(fs::path(cfg.out_dir) / "summary.json", summary.dump(2) + "\n");
  return summary;
}

// Iterations until the traced exact objective first drops to the target;
// -1 when the run never reaches it.
inline std::int64_t iters_to_target(const training_trace& trace, double target) {
  for (const trace_record& r : trace.records) {
    if (r.obj_eq1 <= target) return r.iter;
  }
  return -1;
}

// Negative-batch-size ablation: per B, the median over seeds of
// iterations-to-target. CSV columns: B,iters_to_target_median.
inline std::string ablate_batch(const experiment_config& cfg,
                                const std::vector<int>& b_values) {
  if (b_values.empty()) throw config_error("ablate-batch: b_values must be nonempty");
  std::ostringstream csv;
  csv << "B,iters_to_target_median\n";
  for (int b : b_values) {
    std::vector<double> iters;
    for (std::uint64_t seed : cfg.seeds) {
      auto [train, test] = detail::build_data(cfg, seed);
      experiment_config run_cfg = cfg;
      run_cfg.staco.B = b;
      run_cfg.staco.validate(run_cfg.method, train.n_pos(), train.n_neg());
      seed_outcome out = detail::run_seed_dispatch(run_cfg, train, test, seed);
      const std::int64_t reached = iters_to_target(out.trace, cfg.target_obj);
      iters.push_back(reached < 0 ? std::numeric_limits<double>::infinity()
                                  : static_cast<double>(reached));
      if (reached < 0 && !cfg.quiet) {
        std::cerr << "[staco] warning: B=" << b << " seed=" << seed
                  << " never reached target " << cfg.target_obj << "\n";
      }
    }
    std::sort(iters.begin(), iters.end());
    const double median = iters[iters.size() / 2];
    if (std::isinf(median)) {
      csv << b << ",-1\n";
    } else {
      csv << b << "," << static_cast<std::int64_t>(median) << "\n";
    }
  }
  const std::string text = csv.str();
  atomic_write_file(std::filesystem::path(cfg.out_dir) / "ablate_batch.csv", text);
  return text;
}

// Proximal-weight ablation: per gamma, final exact objective and final test
// TPAUC at the first configured (theta0, theta1). CSV: gamma,final_obj,final_tpauc.
inline std::string ablate_gamma(const experiment_config& cfg,
                                const std::vector<double>& gamma_values) {
  if (gamma_values.empty()) {
    throw config_error("ablate-gamma: gamma_values must be nonempty");
  }
  if (cfg.method != method_kind::staco2) {
    throw config_error("ablate-gamma requires method.name = staco2");
  }
  const std::string tp_key = "test_tpauc_" + theta_key(cfg.eval_pairs.front().first,
                                                       cfg.eval_pairs.front().second);
  std::ostringstream csv;
  csv << "gamma,final_obj,final_tpauc\n";
  char buf[128];
  for (double gamma : gamma_values) {
    if (!(gamma > 0.0)) throw config_error("ablate-gamma: gamma values must be > 0");
    double obj_sum = 0.0, tp_sum = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
      auto [train, test] = detail::build_data(cfg, seed);
      experiment_config run_cfg = cfg;
      run_cfg.staco.gamma = gamma;
      run_cfg.staco.validate(run_cfg.method, train.n_pos(), train.n_neg());
      seed_outcome out = detail::run_seed_dispatch(run_cfg, train, test, seed);
      obj_sum += out.metrics.at("final_obj_eq1");
      tp_sum += out.metrics.at(tp_key);
    }
    const double n = static_cast<double>(cfg.seeds.size());
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", gamma, obj_sum / n,
                  tp_sum / n);
    csv << buf;
  }
  const std::string text = csv.str();
  atomic_write_file(std::filesystem::path(cfg.out_dir) / "ablate_gamma.csv", text);
  return text;
}

// `eval` driver: score a parameter snapshot on the configured dataset and
// report metrics for the train/test splits as JSON.
inline json eval_snapshot(const experiment_config& cfg, const std::string& params_path) {
  any_scorer scorer = load_snapshot(params_path);
  auto [train, test] = detail::build_data(cfg, cfg.seeds.front());
  json out;
  std::visit(
      [&](const auto& s) {
        std::map<std::string, double> m;
        detail::eval_split(s, train, cfg, "train", m);
        detail::eval_split(s, test, cfg, "test", m);
        json mj = json::object();
        for (const auto& [k, v] : m) mj[k] = v;
        out["metrics"] = mj;
        out["train"] = to_json(summarize(train));
        out["test"] = to_json(summarize(test));
      },
      scorer);
  return out;
}

}  // namespace staco

#endif  // STACO_EXPERIMENT_HPP
