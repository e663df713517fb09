#ifndef STACO_TPAUC_CORE_HPP
#define STACO_TPAUC_CORE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "staco/dataset.hpp"
#include "staco/errors.hpp"
#include "staco/rate_params.hpp"
#include "staco/scorers.hpp"
#include "staco/selection.hpp"
#include "staco/surrogate.hpp"

namespace staco {

// Block-coordinate primal-dual iterate: model parameters w, per-positive
// thresholds s, the global threshold s_prime, and duals y in [0,1]^{n_pos}.
struct pd_state {
  vec scorer_params;
  vec s;
  double s_prime = 1.0;
  vec y;
};

// Stage anchor of the proximal (double-loop) scheme: quadratic pull of
// strength 1/gamma toward the stage's starting point.
struct stage_anchor {
  vec w_anchor;
  vec s_anchor;
  double gamma = 0.0;

  stage_anchor() = default;
  stage_anchor(vec w0, vec s0, double g)
      : w_anchor(std::move(w0)), s_anchor(std::move(s0)), gamma(g) {
    if (!(gamma > 0.0)) throw std::invalid_argument("stage_anchor: gamma must be > 0");
  }
};

struct primal_step_sizes {
  double beta = 0.0;
  double eta = 0.0;
  double beta_prime = 0.0;
};

// Cheap per-thread instrumentation; tests assert that one optimizer
// iteration touches exactly S positives and 2B negatives.
struct work_counters {
  std::uint64_t pair_evals = 0;
  std::uint64_t score_evals = 0;
};

inline thread_local work_counters tl_work;
inline work_counters& work() { return tl_work; }

namespace detail {

inline void check_pos_ordinal(const dataset& ds, int pos_ord, const char* op) {
  if (pos_ord < 0 || pos_ord >= ds.n_pos()) {
    throw std::invalid_argument(std::string(op) + ": positive ordinal out of range");
  }
}

inline void check_neg_batch(const dataset& ds, std::span<const int> batch,
                            const char* op) {
  if (batch.empty()) {
    throw std::invalid_argument(std::string(op) + ": negative batch is empty");
  }
  for (int j : batch) {
    if (j < 0 || j >= ds.n_neg()) {
      throw std::invalid_argument(std::string(op) + ": negative ordinal out of range");
    }
  }
}

}  // namespace detail

// Mini-batch estimator of the inner CVaR-style average for positive i:
//   g_i(w, s_i; B) = (1/|B|) sum_j [ s_i + max(0, l(h_j - h_i) - s_i)/theta1 ].
// Unbiased in the batch; always >= s_i since theta1 <= 1.
template <scorer_like S>
double g_minibatch(const S& scorer, const dataset& ds, int pos_ord,
                   std::span<const int> neg_batch, double s_i,
                   const rate_params& rp, const surrogate_loss& loss) {
  detail::check_pos_ordinal(ds, pos_ord, "g_minibatch");
  detail::check_neg_batch(ds, neg_batch, "g_minibatch");
  const double h_i = scorer.score(ds.row(ds.pos_idx[pos_ord]));
  double acc = 0.0;
  for (int j : neg_batch) {
    const double h_j = scorer.score(ds.row(ds.neg_idx[j]));
    const double l_ij = loss.value(h_j - h_i);
    const double excess = l_ij - s_i;
    acc += s_i + (excess > 0.0 ? excess / rp.theta1 : 0.0);
  }
  work().pair_evals += neg_batch.size();
  work().score_evals += neg_batch.size() + 1;
  return acc / static_cast<double>(neg_batch.size());
}

// Batch subgradient of g_i with respect to (w, s_i). The indicator of the
// outer hinge is taken as 0 at exact ties, a valid subgradient choice.
// Returns d g_i / d s_i; the parameter gradient is accumulated into dw
// (which is zeroed first).
template <scorer_like S>
double g_subgrads(const S& scorer, const dataset& ds, int pos_ord,
                  std::span<const int> neg_batch, double s_i,
                  const rate_params& rp, const surrogate_loss& loss, vec_ref dw) {
  detail::check_pos_ordinal(ds, pos_ord, "g_subgrads");
  detail::check_neg_batch(ds, neg_batch, "g_subgrads");
  if (dw.size() != scorer.num_params()) {
    throw std::invalid_argument("g_subgrads: dw has wrong size");
  }
  dw.setZero();
  const auto x_i = ds.row(ds.pos_idx[pos_ord]);
  const double h_i = scorer.score(x_i);
  const double inv = 1.0 / (static_cast<double>(neg_batch.size()) * rp.theta1);
  double coeff_sum = 0.0;
  int active = 0;
  for (int j : neg_batch) {
    const auto x_j = ds.row(ds.neg_idx[j]);
    const double h_j = scorer.score(x_j);
    const double l_ij = loss.value(h_j - h_i);
    if (l_ij > s_i) {
      const double c = inv * loss.subgrad(h_j - h_i);
      scorer.add_score_grad(x_j, c, dw);
      coeff_sum += c;
      ++active;
    }
  }
  if (coeff_sum != 0.0) scorer.add_score_grad(x_i, -coeff_sum, dw);
  work().pair_evals += neg_batch.size();
  work().score_evals += neg_batch.size() + 1;
  return 1.0 - static_cast<double>(active) /
                   (static_cast<double>(neg_batch.size()) * rp.theta1);
}

// Closed form of the dual proximal ascent step
//   argmax_{y in [0,1]} { y (g_hat - s_prime)/theta0 - (y - y_i)^2 / (2 alpha) },
// i.e. the old dual moved along the quadratic's vertex and clipped to [0,1].
inline double y_prox_update(double y_i, double g_hat, double s_prime, double theta0,
                            double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("y_prox_update: alpha must be > 0");
  if (y_i < 0.0 || y_i > 1.0) {
    throw std::invalid_argument("y_prox_update: y_i must lie in [0,1]");
  }
  double y = y_i + alpha * (g_hat - s_prime) / theta0;
  if (y < 0.0) return 0.0;
  if (y > 1.0) return 1.0;
  return y;
}

// Applies one block-coordinate primal step. Only the sampled coordinates of
// s and y change; w and s_prime always move. With an anchor, the quadratic
// pulls (1/gamma)(x - x_anchor) on w and the sampled s coordinates enter the
// scaled subgradients (s_prime has no anchor term). weight_decay shrinks w
// multiplicatively by (1 - eta * weight_decay) after the gradient step.
inline void primal_steps(pd_state& state, std::span<const int> sampled_positives,
                         std::span<const double> y_new, const row_major_matrix& dw,
                         std::span<const double> ds_i, const rate_params& rp,
                         const primal_step_sizes& steps,
                         const stage_anchor* anchor = nullptr,
                         double weight_decay = 0.0) {
  const int n_pos = static_cast<int>(state.s.size());
  const int batch = static_cast<int>(sampled_positives.size());
  if (batch == 0) throw std::invalid_argument("primal_steps: empty positive batch");
  if (static_cast<int>(y_new.size()) != batch ||
      static_cast<int>(ds_i.size()) != batch || dw.rows() != batch) {
    throw std::invalid_argument("primal_steps: per-sample arrays must match batch");
  }
  if (!(steps.beta > 0.0) || !(steps.eta > 0.0) || !(steps.beta_prime > 0.0)) {
    throw std::invalid_argument("primal_steps: step sizes must be > 0");
  }
  if (anchor && (anchor->w_anchor.size() != state.scorer_params.size() ||
                 anchor->s_anchor.size() != state.s.size())) {
    throw std::invalid_argument("primal_steps: anchor size mismatch");
  }

  double y_sum = 0.0;
  for (int idx = 0; idx < batch; ++idx) {
    const int i = sampled_positives[idx];
    if (i < 0 || i >= n_pos) {
      throw std::invalid_argument("primal_steps: index outside positives");
    }
    if (y_new[idx] < 0.0 || y_new[idx] > 1.0) {
      throw std::invalid_argument("primal_steps: y_new outside [0,1]");
    }
    double g = y_new[idx] * ds_i[idx];
    if (anchor) g += (state.s(i) - anchor->s_anchor(i)) / anchor->gamma;
    state.s(i) -= steps.beta / rp.theta0 * g;
    state.y(i) = y_new[idx];
    y_sum += y_new[idx];
  }

  vec grad = vec::Zero(state.scorer_params.size());
  for (int idx = 0; idx < batch; ++idx) {
    grad += y_new[idx] * dw.row(idx).transpose();
  }
  grad /= static_cast<double>(batch);
  if (anchor) grad += (state.scorer_params - anchor->w_anchor) / anchor->gamma;
  state.scorer_params -= steps.eta / rp.theta0 * grad;
  if (weight_decay > 0.0) state.scorer_params *= 1.0 - steps.eta * weight_decay;

  state.s_prime -=
      steps.beta_prime * (1.0 - y_sum / (rp.theta0 * static_cast<double>(batch)));
}

// Scores every row of the dataset in row order.
template <scorer_like S>
vec score_all(const S& scorer, const dataset& ds) {
  vec out(ds.n());
  for (int i = 0; i < ds.n(); ++i) out(i) = scorer.score(ds.row(i));
  work().score_evals += static_cast<std::uint64_t>(ds.n());
  return out;
}

namespace detail {

template <scorer_like S>
void class_scores(const S& scorer, const dataset& ds, std::vector<double>& pos,
                  std::vector<double>& neg) {
  pos.resize(ds.pos_idx.size());
  neg.resize(ds.neg_idx.size());
  for (std::size_t i = 0; i < ds.pos_idx.size(); ++i) {
    pos[i] = scorer.score(ds.row(ds.pos_idx[i]));
  }
  for (std::size_t j = 0; j < ds.neg_idx.size(); ++j) {
    neg[j] = scorer.score(ds.row(ds.neg_idx[j]));
  }
  work().score_evals += static_cast<std::uint64_t>(ds.n());
}

}  // namespace detail

// Exact sorted objective: the average of l(h_j - h_i) over the k1 positives
// with the smallest scores and the k2 negatives with the largest, normalized
// by n_pos * n_neg. Ties in scores select the smaller row index first.
template <scorer_like S>
double exact_objective_eq1(const S& scorer, const dataset& ds, const rate_params& rp,
                           const surrogate_loss& loss) {
  ds.require_both_classes("exact_objective_eq1");
  if (rp.k1 > ds.n_pos() || rp.k2 > ds.n_neg()) {
    throw std::invalid_argument("exact_objective_eq1: rate_params exceed dataset");
  }
  std::vector<double> hp, hn;
  detail::class_scores(scorer, ds, hp, hn);
  const std::vector<int> sel_pos = bottom_k_positions(hp, rp.k1);
  const std::vector<int> sel_neg = top_k_positions(hn, rp.k2);
  double sum = 0.0;
  for (int i : sel_pos) {
    for (int j : sel_neg) {
      sum += loss.value(hn[static_cast<std::size_t>(j)] -
                        hp[static_cast<std::size_t>(i)]);
    }
  }
  work().pair_evals += static_cast<std::uint64_t>(rp.k1) * rp.k2;
  return sum / (static_cast<double>(ds.n_pos()) * static_cast<double>(ds.n_neg()));
}

struct eq2_solution {
  vec s_star;           // per-positive inner CVaR threshold
  double s_prime_star;  // outer threshold
  double value;         // minimized compositional objective
};

// Closed-form partial minimization of the compositional objective over
// (s, s_prime): per positive the k2-th largest pairwise loss minimizes the
// inner CVaR form, and the k1-th largest of the resulting g values
// minimizes the outer one.
template <scorer_like S>
eq2_solution partial_min_eq2(const S& scorer, const dataset& ds,
                             const rate_params& rp, const surrogate_loss& loss) {
  ds.require_both_classes("partial_min_eq2");
  if (rp.k1 > ds.n_pos() || rp.k2 > ds.n_neg()) {
    throw std::invalid_argument("partial_min_eq2: rate_params exceed dataset");
  }
  std::vector<double> hp, hn;
  detail::class_scores(scorer, ds, hp, hn);
  const int n_pos = ds.n_pos();
  const int n_neg = ds.n_neg();

  eq2_solution sol;
  sol.s_star.resize(n_pos);
  std::vector<double> g_star(static_cast<std::size_t>(n_pos));
  std::vector<double> losses(static_cast<std::size_t>(n_neg));
  for (int i = 0; i < n_pos; ++i) {
    for (int j = 0; j < n_neg; ++j) {
      losses[static_cast<std::size_t>(j)] =
          loss.value(hn[static_cast<std::size_t>(j)] - hp[static_cast<std::size_t>(i)]);
    }
    const double s_i = kth_largest(losses, rp.k2);
    double acc = 0.0;
    for (double l : losses) {
      const double excess = l - s_i;
      acc += s_i + (excess > 0.0 ? excess / rp.theta1 : 0.0);
    }
    sol.s_star(i) = s_i;
    g_star[static_cast<std::size_t>(i)] = acc / static_cast<double>(n_neg);
  }
  work().pair_evals += static_cast<std::uint64_t>(n_pos) * n_neg;

  sol.s_prime_star = kth_largest(g_star, rp.k1);
  double acc = 0.0;
  for (double g : g_star) {
    const double excess = g - sol.s_prime_star;
    acc += sol.s_prime_star + (excess > 0.0 ? excess / rp.theta0 : 0.0);
  }
  sol.value = acc / static_cast<double>(n_pos);
  return sol;
}

}  // namespace staco

#endif  // STACO_TPAUC_CORE_HPP
