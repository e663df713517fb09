#ifndef STACO_OPTIMIZERS_HPP
#define STACO_OPTIMIZERS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "staco/dataset.hpp"
#include "staco/errors.hpp"
#include "staco/metrics.hpp"
#include "staco/rng.hpp"
#include "staco/tpauc_core.hpp"

namespace staco {

enum class method_kind { staco1, staco2, ce, auc_pairwise };

inline method_kind method_from_string(const std::string& s) {
  if (s == "staco1") return method_kind::staco1;
  if (s == "staco2") return method_kind::staco2;
  if (s == "ce") return method_kind::ce;
  if (s == "auc_pairwise") return method_kind::auc_pairwise;
  throw config_error("unknown method: " + s);
}

inline const char* to_string(method_kind m) {
  switch (m) {
    case method_kind::staco1: return "staco1";
    case method_kind::staco2: return "staco2";
    case method_kind::ce: return "ce";
    case method_kind::auc_pairwise: return "auc_pairwise";
  }
  return "?";
}

struct step_sizes {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double beta_prime = 0.0;
};

// Milestone decay: every step size is multiplied by factor once per
// milestone that is <= iteration.
inline step_sizes lr_schedule(const step_sizes& base, std::int64_t iteration,
                              const std::vector<std::int64_t>& milestones,
                              double factor) {
  std::int64_t count = 0;
  for (std::int64_t m : milestones) {
    if (m <= iteration) ++count;
  }
  const double scale = std::pow(factor, static_cast<double>(count));
  return {base.alpha * scale, base.beta * scale, base.eta * scale,
          base.beta_prime * scale};
}

// All hyperparameters of a training run. T counts iterations for the
// single-loop methods and stages for the double-loop one (K inner
// iterations per stage).
struct staco_config {
  double theta0 = 0.5;
  double theta1 = 0.5;
  surrogate_loss loss{loss_kind::squared_hinge, 0.5};
  double alpha = 0.1;
  double beta = 0.1;
  double eta = 0.1;
  double beta_prime = 0.1;
  int S = 32;  // positive batch size
  int B = 32;  // negative batch size
  std::int64_t T = 1000;
  std::int64_t K = 1;
  double gamma = 0.0;  // proximal weight, required > 0 for the double loop
  std::vector<std::int64_t> decay_milestones;
  double decay_factor = 0.1;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  std::int64_t eval_every = 50;

  step_sizes base_steps() const { return {alpha, beta, eta, beta_prime}; }

  void validate(method_kind method, int n_pos, int n_neg) const {
    rate_params check(theta0, theta1, n_pos, n_neg);  // throws on bad rates
    (void)check;
    if (T < 0) throw config_error("T must be >= 0");
    if (!(decay_factor > 0.0) || decay_factor > 1.0) {
      throw config_error("decay_factor must lie in (0, 1]");
    }
    if (!std::is_sorted(decay_milestones.begin(), decay_milestones.end())) {
      throw config_error("decay_milestones must be sorted ascending");
    }
    if (weight_decay < 0.0) throw config_error("weight_decay must be >= 0");
    const bool staco = method == method_kind::staco1 || method == method_kind::staco2;
    if (staco) {
      if (!(alpha > 0.0) || !(beta > 0.0) || !(eta > 0.0) || !(beta_prime > 0.0)) {
        throw config_error("step sizes alpha, beta, eta, beta_prime must be > 0");
      }
      if (S < 1 || S > n_pos) throw config_error("S must satisfy 1 <= S <= n_pos");
      if (B < 1 || B > n_neg) throw config_error("B must satisfy 1 <= B <= n_neg");
    } else {
      if (eta < 0.0) throw config_error("eta must be >= 0");
      if (S < 1 || B < 1) throw config_error("S and B must be >= 1");
      if (method == method_kind::auc_pairwise && (S > n_pos || B > n_neg)) {
        throw config_error("S/B exceed class sizes");
      }
      if (method == method_kind::ce && S + B > n_pos + n_neg) {
        throw config_error("S + B exceeds dataset size");
      }
    }
    if (method == method_kind::staco2) {
      if (!(gamma > 0.0)) throw config_error("staco2 requires gamma > 0");
      if (K < 1) throw config_error("staco2 requires K >= 1");
    }
  }
};

struct trace_record {
  std::int64_t iter = 0;
  double obj_eq1 = 0.0;
  double obj_eq2min = 0.0;
  double tpauc_05_05 = 0.0;
  double tpauc_075_075 = 0.0;
  double w_norm = 0.0;
  double s_prime = 0.0;
  double stage_move = 0.0;
  double wall_ms = 0.0;  // measured; not written to CSV (see to_csv)
};

struct training_trace {
  std::vector<trace_record> records;

  // The ms column is emitted as 0 so that identical (config, seed) runs
  // produce byte-identical files; measured timings are reported in the run
  // summary instead.
  void to_csv(std::ostream& out) const {
    out << "iter,obj_eq1,obj_eq2min,tpauc_05_05,tpauc_075_075,w_norm,s_prime,"
           "stage_move,ms\n";
    char buf[256];
    for (const trace_record& r : records) {
      std::snprintf(buf, sizeof(buf),
                    "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,0\n",
                    static_cast<long long>(r.iter), r.obj_eq1, r.obj_eq2min,
                    r.tpauc_05_05, r.tpauc_075_075, r.w_norm, r.s_prime,
                    r.stage_move);
      out << buf;
    }
  }
};

namespace detail {

class wall_timer {
 public:
  wall_timer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    auto d = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double, std::milli>(d).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <scorer_like S>
trace_record make_record(std::int64_t iter, const S& scorer, const dataset& ds,
                         const rate_params& rp, const surrogate_loss& loss,
                         double s_prime, double stage_move, double wall_ms) {
  trace_record r;
  r.iter = iter;
  r.obj_eq1 = exact_objective_eq1(scorer, ds, rp, loss);
  r.obj_eq2min = partial_min_eq2(scorer, ds, rp, loss).value;
  const vec sc = score_all(scorer, ds);
  std::vector<double> scores(sc.data(), sc.data() + sc.size());
  auto tp = [&](double t0, double t1) {
    try {
      rate_params mrp(t0, t1, ds.n_pos(), ds.n_neg());
      return tpauc_metric(scores, ds.labels, mrp);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  r.tpauc_05_05 = tp(0.5, 0.5);
  r.tpauc_075_075 = tp(0.75, 0.75);
  r.w_norm = scorer.params().norm();
  r.s_prime = s_prime;
  r.stage_move = stage_move;
  r.wall_ms = wall_ms;
  return r;
}

inline bool trace_due(std::int64_t t, std::int64_t total, std::int64_t every) {
  if (every <= 0) return false;
  return (t + 1) % every == 0 || t + 1 == total;
}

}  // namespace detail

using iter_observer = std::function<void(std::int64_t, const pd_state&)>;
using stage_iter_observer =
    std::function<void(std::int64_t stage, std::int64_t k, const pd_state&)>;

template <scorer_like S>
struct staco1_result {
  S scorer;  // parameters set to the uniform iterate average
  vec s_bar;
  double s_prime_bar = 0.0;
  training_trace trace;
};

// Single-loop stochastic primal-dual block-coordinate training for convex
// scorers. Per iteration: sample S positives and two independent negative
// batches of size B; for each sampled positive refresh the dual with the
// prox step on the first batch and take subgradients on the second; then
// move the sampled thresholds, the model, and the global threshold.
// Returns the uniform average of the iterates over all T iterations.
template <scorer_like S>
staco1_result<S> staco1_train(const dataset& ds, const staco_config& cfg, S scorer,
                              const iter_observer& observer = {}) {
  cfg.validate(method_kind::staco1, ds.n_pos(), ds.n_neg());
  const rate_params rp(cfg.theta0, cfg.theta1, ds.n_pos(), ds.n_neg());
  const int n_pos = ds.n_pos();
  const int p = scorer.num_params();

  pd_state state;
  state.scorer_params = scorer.params();
  state.s = vec::Ones(n_pos);
  state.s_prime = 1.0;
  state.y = vec::Ones(n_pos);

  vec w_sum = vec::Zero(p);
  vec s_sum = vec::Zero(n_pos);
  double sp_sum = 0.0;

  subset_sampler pos_sampler(n_pos);
  subset_sampler neg_sampler(ds.n_neg());
  std::vector<int> s_t, b_t, b_tilde;
  std::vector<double> y_new(static_cast<std::size_t>(cfg.S));
  std::vector<double> ds_i(static_cast<std::size_t>(cfg.S));
  row_major_matrix dws(cfg.S, p);

  staco1_result<S> result{scorer, vec(), 0.0, {}};
  detail::wall_timer timer;

  for (std::int64_t t = 0; t < cfg.T; ++t) {
    const step_sizes st =
        lr_schedule(cfg.base_steps(), t, cfg.decay_milestones, cfg.decay_factor);
    rng it_rng = rng::derive(cfg.seed, rng_stream::sampler, static_cast<std::uint64_t>(t));
    pos_sampler.sample(cfg.S, it_rng, s_t);
    neg_sampler.sample(cfg.B, it_rng, b_t);
    neg_sampler.sample(cfg.B, it_rng, b_tilde);

    for (int idx = 0; idx < cfg.S; ++idx) {
      const int i = s_t[static_cast<std::size_t>(idx)];
      const double g_hat =
          g_minibatch(scorer, ds, i, b_t, state.s(i), rp, cfg.loss);
      y_new[static_cast<std::size_t>(idx)] =
          y_prox_update(state.y(i), g_hat, state.s_prime, rp.theta0, st.alpha);
      Eigen::Map<vec> dw_row(dws.data() + static_cast<std::ptrdiff_t>(idx) * p, p);
      ds_i[static_cast<std::size_t>(idx)] =
          g_subgrads(scorer, ds, i, b_tilde, state.s(i), rp, cfg.loss, dw_row);
    }
    primal_steps(state, s_t, y_new, dws, ds_i, rp,
                 {st.beta, st.eta, st.beta_prime}, nullptr, cfg.weight_decay);
    scorer.set_params(state.scorer_params);

    w_sum += state.scorer_params;
    s_sum += state.s;
    sp_sum += state.s_prime;

    if (observer) observer(t, state);
    if (detail::trace_due(t, cfg.T, cfg.eval_every)) {
      result.trace.records.push_back(detail::make_record(
          t + 1, scorer, ds, rp, cfg.loss, state.s_prime, 0.0, timer.elapsed_ms()));
    }
  }

  if (cfg.T > 0) {
    const double inv_t = 1.0 / static_cast<double>(cfg.T);
    result.s_bar = s_sum * inv_t;
    result.s_prime_bar = sp_sum * inv_t;
    scorer.set_params(w_sum * inv_t);
    result.scorer = scorer;
  } else {
    result.s_bar = state.s;
    result.s_prime_bar = state.s_prime;
  }
  return result;
}

template <scorer_like S>
struct staco2_result {
  S scorer;  // parameters set to the last stage average
  vec s_final;
  double s_prime_final = 0.0;
  training_trace trace;
  std::vector<double> stage_moves;  // ||w_{t+1} - w_t|| / gamma per stage
};

// Double-loop proximal variant for weakly-convex scorers: each stage anchors
// (w, s), re-initializes the duals to one, runs K inner iterations of the
// single-loop step with the quadratic pull toward the anchor, then restarts
// from the uniform inner average.
template <scorer_like S>
staco2_result<S> staco2_train(const dataset& ds, const staco_config& cfg, S scorer,
                              const stage_iter_observer& observer = {}) {
  cfg.validate(method_kind::staco2, ds.n_pos(), ds.n_neg());
  const rate_params rp(cfg.theta0, cfg.theta1, ds.n_pos(), ds.n_neg());
  const int n_pos = ds.n_pos();
  const int p = scorer.num_params();

  pd_state state;
  state.scorer_params = scorer.params();
  state.s = vec::Ones(n_pos);
  state.s_prime = 1.0;
  state.y = vec::Ones(n_pos);

  subset_sampler pos_sampler(n_pos);
  subset_sampler neg_sampler(ds.n_neg());
  std::vector<int> s_t, b_t, b_tilde;
  std::vector<double> y_new(static_cast<std::size_t>(cfg.S));
  std::vector<double> ds_i(static_cast<std::size_t>(cfg.S));
  row_major_matrix dws(cfg.S, p);

  staco2_result<S> result{scorer, vec(), 0.0, {}, {}};
  detail::wall_timer timer;
  double last_stage_move = 0.0;
  const std::int64_t total_iters = cfg.T * cfg.K;

  for (std::int64_t stage = 0; stage < cfg.T; ++stage) {
    state.y.setOnes();
    const stage_anchor anchor(state.scorer_params, state.s, cfg.gamma);
    vec w_sum = vec::Zero(p);
    vec s_sum = vec::Zero(n_pos);
    double sp_sum = 0.0;
    if (observer) observer(stage, -1, state);

    for (std::int64_t k = 0; k < cfg.K; ++k) {
      const std::int64_t g = stage * cfg.K + k;
      const step_sizes st =
          lr_schedule(cfg.base_steps(), g, cfg.decay_milestones, cfg.decay_factor);
      rng it_rng =
          rng::derive(cfg.seed, rng_stream::sampler, static_cast<std::uint64_t>(g));
      pos_sampler.sample(cfg.S, it_rng, s_t);
      neg_sampler.sample(cfg.B, it_rng, b_t);
      neg_sampler.sample(cfg.B, it_rng, b_tilde);

      for (int idx = 0; idx < cfg.S; ++idx) {
        const int i = s_t[static_cast<std::size_t>(idx)];
        const double g_hat =
            g_minibatch(scorer, ds, i, b_t, state.s(i), rp, cfg.loss);
        y_new[static_cast<std::size_t>(idx)] =
            y_prox_update(state.y(i), g_hat, state.s_prime, rp.theta0, st.alpha);
        Eigen::Map<vec> dw_row(dws.data() + static_cast<std::ptrdiff_t>(idx) * p, p);
        ds_i[static_cast<std::size_t>(idx)] =
            g_subgrads(scorer, ds, i, b_tilde, state.s(i), rp, cfg.loss, dw_row);
      }
      primal_steps(state, s_t, y_new, dws, ds_i, rp,
                   {st.beta, st.eta, st.beta_prime}, &anchor, cfg.weight_decay);
      scorer.set_params(state.scorer_params);

      w_sum += state.scorer_params;
      s_sum += state.s;
      sp_sum += state.s_prime;

      if (observer) observer(stage, k, state);
      if (detail::trace_due(g, total_iters, cfg.eval_every)) {
        result.trace.records.push_back(
            detail::make_record(g + 1, scorer, ds, rp, cfg.loss, state.s_prime,
                                last_stage_move, timer.elapsed_ms()));
      }
    }

    const double inv_k = 1.0 / static_cast<double>(cfg.K);
    vec w_avg = w_sum * inv_k;
    last_stage_move = (w_avg - anchor.w_anchor).norm() / cfg.gamma;
    result.stage_moves.push_back(last_stage_move);
    state.scorer_params = std::move(w_avg);
    state.s = s_sum * inv_k;
    state.s_prime = sp_sum * inv_k;
    scorer.set_params(state.scorer_params);
  }

  result.scorer = scorer;
  result.s_final = state.s;
  result.s_prime_final = state.s_prime;
  return result;
}

template <scorer_like S>
struct baseline_result {
  S scorer;  // final iterate
  training_trace trace;
  std::vector<double> loss_curve;  // per-iteration minibatch training loss
};

// Mini-batch SGD on the per-example logistic loss log(1 + exp(-y * u)) where
// u is the scorer's pre-squash output. Shares the milestone schedule and
// trace machinery with the main methods; batch size is S + B examples.
template <scorer_like S>
baseline_result<S> baseline_ce_train(const dataset& ds, const staco_config& cfg,
                                     S scorer) {
  cfg.validate(method_kind::ce, ds.n_pos(), ds.n_neg());
  ds.require_both_classes("baseline_ce_train");
  const rate_params rp(cfg.theta0, cfg.theta1, ds.n_pos(), ds.n_neg());
  const int batch = cfg.S + cfg.B;
  const int p = scorer.num_params();

  subset_sampler sampler(ds.n());
  std::vector<int> rows;
  vec grad(p);
  vec params = scorer.params();
  baseline_result<S> result{scorer, {}, {}};
  detail::wall_timer timer;

  for (std::int64_t t = 0; t < cfg.T; ++t) {
    const step_sizes st =
        lr_schedule(cfg.base_steps(), t, cfg.decay_milestones, cfg.decay_factor);
    rng it_rng = rng::derive(cfg.seed, rng_stream::sampler, static_cast<std::uint64_t>(t));
    sampler.sample(batch, it_rng, rows);

    grad.setZero();
    double loss_acc = 0.0;
    for (int r : rows) {
      const double y = ds.labels[static_cast<std::size_t>(r)] > 0 ? 1.0 : -1.0;
      const double u = scorer.logit(ds.row(r));
      const double margin = y * u;
      loss_acc += margin > 0.0 ? std::log1p(std::exp(-margin))
                               : -margin + std::log1p(std::exp(margin));
      scorer.add_logit_grad(ds.row(r), -y * sigmoid(-margin), grad);
    }
    const double inv_b = 1.0 / static_cast<double>(batch);
    params -= st.eta * (inv_b * grad + cfg.weight_decay * params);
    scorer.set_params(params);
    result.loss_curve.push_back(loss_acc * inv_b);

    if (detail::trace_due(t, cfg.T, cfg.eval_every)) {
      result.trace.records.push_back(detail::make_record(
          t + 1, scorer, ds, rp, cfg.loss, 0.0, 0.0, timer.elapsed_ms()));
    }
  }
  result.scorer = scorer;
  return result;
}

// Mini-batch SGD on the plain pairwise surrogate: every iteration samples S
// positives and B negatives and descends the mean of l(h_j - h_i) over the
// S x B pairs.
template <scorer_like S>
baseline_result<S> baseline_auc_pairwise_train(const dataset& ds,
                                               const staco_config& cfg, S scorer) {
  cfg.validate(method_kind::auc_pairwise, ds.n_pos(), ds.n_neg());
  ds.require_both_classes("baseline_auc_pairwise_train");
  const rate_params rp(cfg.theta0, cfg.theta1, ds.n_pos(), ds.n_neg());
  const int p = scorer.num_params();

  subset_sampler pos_sampler(ds.n_pos());
  subset_sampler neg_sampler(ds.n_neg());
  std::vector<int> pos_b, neg_b;
  std::vector<double> hp(static_cast<std::size_t>(cfg.S));
  std::vector<double> hn(static_cast<std::size_t>(cfg.B));
  std::vector<double> coeff_pos(static_cast<std::size_t>(cfg.S));
  std::vector<double> coeff_neg(static_cast<std::size_t>(cfg.B));
  vec grad(p);
  vec params = scorer.params();
  baseline_result<S> result{scorer, {}, {}};
  detail::wall_timer timer;

  for (std::int64_t t = 0; t < cfg.T; ++t) {
    const step_sizes st =
        lr_schedule(cfg.base_steps(), t, cfg.decay_milestones, cfg.decay_factor);
    rng it_rng = rng::derive(cfg.seed, rng_stream::sampler, static_cast<std::uint64_t>(t));
    pos_sampler.sample(cfg.S, it_rng, pos_b);
    neg_sampler.sample(cfg.B, it_rng, neg_b);

    for (int a = 0; a < cfg.S; ++a) {
      hp[static_cast<std::size_t>(a)] =
          scorer.score(ds.row(ds.pos_idx[pos_b[static_cast<std::size_t>(a)]]));
    }
    for (int b = 0; b < cfg.B; ++b) {
      hn[static_cast<std::size_t>(b)] =
          scorer.score(ds.row(ds.neg_idx[neg_b[static_cast<std::size_t>(b)]]));
    }
    std::fill(coeff_pos.begin(), coeff_pos.end(), 0.0);
    std::fill(coeff_neg.begin(), coeff_neg.end(), 0.0);
    const double inv = 1.0 / (static_cast<double>(cfg.S) * static_cast<double>(cfg.B));
    double loss_acc = 0.0;
    for (int a = 0; a < cfg.S; ++a) {
      for (int b = 0; b < cfg.B; ++b) {
        const double diff = hn[static_cast<std::size_t>(b)] - hp[static_cast<std::size_t>(a)];
        loss_acc += cfg.loss.value(diff);
        const double c = inv * cfg.loss.subgrad(diff);
        coeff_neg[static_cast<std::size_t>(b)] += c;
        coeff_pos[static_cast<std::size_t>(a)] -= c;
      }
    }
    work().pair_evals += static_cast<std::uint64_t>(cfg.S) * cfg.B;

    grad.setZero();
    for (int a = 0; a < cfg.S; ++a) {
      if (coeff_pos[static_cast<std::size_t>(a)] != 0.0) {
        scorer.add_score_grad(ds.row(ds.pos_idx[pos_b[static_cast<std::size_t>(a)]]),
                              coeff_pos[static_cast<std::size_t>(a)], grad);
      }
    }
    for (int b = 0; b < cfg.B; ++b) {
      if (coeff_neg[static_cast<std::size_t>(b)] != 0.0) {
        scorer.add_score_grad(ds.row(ds.neg_idx[neg_b[static_cast<std::size_t>(b)]]),
                              coeff_neg[static_cast<std::size_t>(b)], grad);
      }
    }
    params -= st.eta * (grad + cfg.weight_decay * params);
    scorer.set_params(params);
    result.loss_curve.push_back(loss_acc * inv);

    if (detail::trace_due(t, cfg.T, cfg.eval_every)) {
      result.trace.records.push_back(detail::make_record(
          t + 1, scorer, ds, rp, cfg.loss, 0.0, 0.0, timer.elapsed_ms()));
    }
  }
  result.scorer = scorer;
  return result;
}

}  // namespace staco

#endif  // STACO_OPTIMIZERS_HPP
