#ifndef STACO_ORACLES_HPP
#define STACO_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "staco/dataset.hpp"
#include "staco/metrics.hpp"
#include "staco/rng.hpp"
#include "staco/scorers.hpp"
#include "staco/tpauc_core.hpp"

// Self-contained reference checks: brute-force enumerations, grid searches
// and finite differences that validate the fast implementations from the
// outside. Kept deliberately independent of the code paths they test.

namespace staco::oracles {

struct outcome {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

namespace detail {

// Lexicographic enumeration of all size-k subsets of {0..n-1}.
inline bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[static_cast<std::size_t>(i)] < n - k + i) {
      ++c[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) {
        c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
      }
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Mean of the batch estimator over every size-B subset of the negatives must
// equal the full-batch value exactly (the estimator is linear in the batch).
template <scorer_like S>
outcome check_minibatch_unbiasedness(const S& scorer, const dataset& ds, int pos_ord,
                                     double s_i, const rate_params& rp,
                                     const surrogate_loss& loss, int batch_size,
                                     double tol = 1e-12) {
  const int n_neg = ds.n_neg();
  std::vector<int> all(static_cast<std::size_t>(n_neg));
  std::iota(all.begin(), all.end(), 0);
  const double full = g_minibatch(scorer, ds, pos_ord, all, s_i, rp, loss);

  std::vector<int> comb(static_cast<std::size_t>(batch_size));
  std::iota(comb.begin(), comb.end(), 0);
  double sum = 0.0;
  std::int64_t count = 0;
  do {
    sum += g_minibatch(scorer, ds, pos_ord, comb, s_i, rp, loss);
    ++count;
  } while (detail::next_combination(comb, n_neg));

  const double mean = sum / static_cast<double>(count);
  outcome o;
  o.name = "minibatch_unbiasedness";
  o.measured = std::abs(mean - full);
  o.tolerance = tol;
  o.pass = o.measured <= tol;
  std::ostringstream note;
  note << count << " subsets of size " << batch_size << ", |mean - full| = "
       << o.measured;
  o.note = note.str();
  return o;
}

// The closed-form dual update must match a grid search of the prox problem
//   max_{y in [0,1]} y (g - s')/theta0 - (y - y0)^2 / (2 alpha)
// over a 1e-4 grid, on random instances.
inline outcome check_y_prox_grid(int instances, std::uint64_t seed,
                                 double grid_step = 1e-4, double tol = 1e-4) {
  rng gen = rng::derive(seed, rng_stream::oracle, 1);
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    const double y0 = gen.next_double();
    const double g = gen.next_uniform(-3.0, 3.0);
    const double sp = gen.next_uniform(-3.0, 3.0);
    const double theta0 = gen.next_uniform(0.1, 1.0);
    const double alpha = gen.next_uniform(0.01, 2.0);
    const double closed = y_prox_update(y0, g, sp, theta0, alpha);

    const double slope = (g - sp) / theta0;
    double best_y = 0.0;
    double best_val = -std::numeric_limits<double>::infinity();
    const int steps = static_cast<int>(std::lround(1.0 / grid_step));
    for (int k = 0; k <= steps; ++k) {
      const double y = static_cast<double>(k) * grid_step;
      const double val = y * slope - (y - y0) * (y - y0) / (2.0 * alpha);
      if (val > best_val) {
        best_val = val;
        best_y = y;
      }
    }
    worst = std::max(worst, std::abs(closed - best_y));
  }
  outcome o;
  o.name = "y_prox_closed_form";
  o.measured = worst;
  o.tolerance = tol;
  o.pass = worst <= tol;
  o.note = std::to_string(instances) + " random instances, worst |closed - grid|";
  return o;
}

// Brute-force exact objective: full sorts, no partial selection. Used as the
// independent route for the sorted-objective implementation.
template <scorer_like S>
double exact_eq1_bruteforce(const S& scorer, const dataset& ds, const rate_params& rp,
                            const surrogate_loss& loss) {
  std::vector<std::pair<double, int>> pos, neg;
  for (std::size_t i = 0; i < ds.pos_idx.size(); ++i) {
    pos.push_back({scorer.score(ds.row(ds.pos_idx[i])), static_cast<int>(i)});
  }
  for (std::size_t j = 0; j < ds.neg_idx.size(); ++j) {
    neg.push_back({scorer.score(ds.row(ds.neg_idx[j])), static_cast<int>(j)});
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  double sum = 0.0;
  for (int a = 0; a < rp.k1; ++a) {
    for (int b = 0; b < rp.k2; ++b) {
      sum += loss.value(neg[static_cast<std::size_t>(b)].first -
                        pos[static_cast<std::size_t>(a)].first);
    }
  }
  return sum / (static_cast<double>(ds.n_pos()) * static_cast<double>(ds.n_neg()));
}

// Grid minimization of the compositional objective over (s, s'). The inner
// minimization is separable per positive, so each s^(i) gets its own 1-D
// grid over the pairwise-loss range, then s' gets one over the g range.
template <scorer_like S>
double eq2_grid_min(const S& scorer, const dataset& ds, const rate_params& rp,
                    const surrogate_loss& loss, double grid_step = 1e-3) {
  const int n_pos = ds.n_pos();
  const int n_neg = ds.n_neg();
  std::vector<double> g_min(static_cast<std::size_t>(n_pos));
  std::vector<double> losses(static_cast<std::size_t>(n_neg));
  for (int i = 0; i < n_pos; ++i) {
    const double h_i = scorer.score(ds.row(ds.pos_idx[i]));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int j = 0; j < n_neg; ++j) {
      losses[static_cast<std::size_t>(j)] =
          loss.value(scorer.score(ds.row(ds.neg_idx[j])) - h_i);
      lo = std::min(lo, losses[static_cast<std::size_t>(j)]);
      hi = std::max(hi, losses[static_cast<std::size_t>(j)]);
    }
    double best = std::numeric_limits<double>::infinity();
    const int steps = static_cast<int>(std::ceil((hi - lo) / grid_step)) + 1;
    for (int k = 0; k <= steps; ++k) {
      const double s = lo + static_cast<double>(k) * grid_step;
      double acc = 0.0;
      for (double l : losses) {
        const double ex = l - s;
        acc += s + (ex > 0.0 ? ex / rp.theta1 : 0.0);
      }
      best = std::min(best, acc / static_cast<double>(n_neg));
    }
    g_min[static_cast<std::size_t>(i)] = best;
  }

  double lo = *std::min_element(g_min.begin(), g_min.end());
  double hi = *std::max_element(g_min.begin(), g_min.end());
  double best = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::ceil((hi - lo) / grid_step)) + 1;
  for (int k = 0; k <= steps; ++k) {
    const double sp = lo + static_cast<double>(k) * grid_step;
    double acc = 0.0;
    for (double g : g_min) {
      const double ex = g - sp;
      acc += sp + (ex > 0.0 ? ex / rp.theta0 : 0.0);
    }
    best = std::min(best, acc / static_cast<double>(n_pos));
  }
  return best;
}

// O(n^2) pair enumeration of the Mann-Whitney statistic with 0.5 tie credit.
inline double auc_bruteforce(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  double credit = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] <= 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] > 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        credit += 1.0;
      } else if (scores[i] == scores[j]) {
        credit += 0.5;
      }
    }
  }
  return credit / static_cast<double>(pairs);
}

// Central finite differences of the batch estimator g against the analytic
// subgradients at points far from every hinge kink. The optional
// perturbation is a negative-control hook that shifts the analytic values.
template <scorer_like S>
outcome check_g_subgrads_fd(S scorer, const dataset& ds, int points,
                            std::uint64_t seed, double eps = 1e-6,
                            double tol = 1e-5, double kink_margin = 1e-3,
                            double perturbation = 0.0) {
  rng gen = rng::derive(seed, rng_stream::oracle, 2);
  const rate_params rp(0.5, 0.5, ds.n_pos(), ds.n_neg());
  const surrogate_loss loss(loss_kind::squared_hinge, 0.5);
  const int p = scorer.num_params();
  const int batch_size = std::min(4, ds.n_neg());

  subset_sampler neg_sampler(ds.n_neg());
  std::vector<int> batch;
  vec dw(p);
  double worst = 0.0;
  int tested = 0;

  while (tested < points) {
    // Random parameters, positive and batch.
    vec params(p);
    for (int k = 0; k < p; ++k) params(k) = gen.next_uniform(-1.0, 1.0);
    scorer.set_params(params);
    const int i = static_cast<int>(gen.next_below(static_cast<std::uint64_t>(ds.n_pos())));
    neg_sampler.sample(batch_size, gen, batch);

    // Choose s_i away from every kink of the outer hinge.
    const double h_i = scorer.score(ds.row(ds.pos_idx[i]));
    std::vector<double> lv;
    for (int j : batch) {
      lv.push_back(loss.value(scorer.score(ds.row(ds.neg_idx[j])) - h_i));
    }
    double s_i = 0.0;
    bool found = false;
    for (int attempt = 0; attempt < 64 && !found; ++attempt) {
      s_i = gen.next_uniform(-0.5, *std::max_element(lv.begin(), lv.end()) + 0.5);
      found = true;
      for (double l : lv) {
        if (std::abs(l - s_i) < kink_margin) found = false;
      }
    }
    if (!found) continue;

    double ds_analytic = g_subgrads(scorer, ds, i, batch, s_i, rp, loss, dw);
    vec dw_analytic = dw;
    ds_analytic += perturbation;
    if (p > 0) dw_analytic(0) += perturbation;

    double err = 0.0;
    for (int k = 0; k < p; ++k) {
      vec pp = params;
      pp(k) = params(k) + eps;
      scorer.set_params(pp);
      const double up = g_minibatch(scorer, ds, i, batch, s_i, rp, loss);
      pp(k) = params(k) - eps;
      scorer.set_params(pp);
      const double dn = g_minibatch(scorer, ds, i, batch, s_i, rp, loss);
      const double fd = (up - dn) / (2.0 * eps);
      err = std::max(err, std::abs(dw_analytic(k) - fd) / (1.0 + std::abs(dw_analytic(k))));
    }
    scorer.set_params(params);
    {
      const double up = g_minibatch(scorer, ds, i, batch, s_i + eps, rp, loss);
      const double dn = g_minibatch(scorer, ds, i, batch, s_i - eps, rp, loss);
      const double fd = (up - dn) / (2.0 * eps);
      err = std::max(err, std::abs(ds_analytic - fd) / (1.0 + std::abs(ds_analytic)));
    }
    worst = std::max(worst, err);
    ++tested;
  }

  outcome o;
  o.name = "g_subgrads_finite_diff";
  o.measured = worst;
  o.tolerance = tol;
  o.pass = worst <= tol;
  std::ostringstream note;
  note << tested << " kink-free points, eps = " << eps;
  o.note = note.str();
  return o;
}

// Built-in suite on tiny deterministic instances, as exposed by the CLI.
inline std::vector<outcome> run_suite(double subgrad_perturbation = 0.0) {
  std::vector<outcome> out;

  // Shared tiny instance: 2 positives, 6 negatives.
  const dataset tiny = synth_gaussian(2, 6, 3, 1.0, 20240601);
  linear_scorer lin(vec::Zero(3));
  {
    vec w(3);
    w << 0.7, -0.3, 0.2;
    lin.set_params(w);
  }
  const rate_params rp_tiny(0.5, 0.5, tiny.n_pos(), tiny.n_neg());
  const surrogate_loss sqh(loss_kind::squared_hinge, 0.5);

  out.push_back(check_minibatch_unbiasedness(lin, tiny, 0, 0.3, rp_tiny, sqh, 2));
  out.push_back(check_y_prox_grid(1000, 7));

  // Lemma-style scaling on a crafted 4 x 5 instance with distinct scores.
  {
    dataset d45;
    d45.features.resize(9, 1);
    d45.labels = {1, 1, 1, 1, -1, -1, -1, -1, -1};
    const double vals[9] = {0.10, 0.40, 0.45, 0.90, 0.00, 0.20, 0.50, 0.70, 0.80};
    for (int i = 0; i < 9; ++i) d45.features(i, 0) = vals[i];
    d45.rebuild_index();
    linear_scorer unit(vec::Ones(1));
    const rate_params rp45(0.5, 0.4, 4, 5);

    const double eq1 = exact_objective_eq1(unit, d45, rp45, sqh);
    const eq2_solution eq2 = partial_min_eq2(unit, d45, rp45, sqh);
    const double scaled = eq2.value * rp45.theta0 * rp45.theta1;
    outcome o;
    o.name = "lemma_scaling";
    o.measured = std::abs(scaled - eq1);
    o.tolerance = 1e-10;
    o.pass = o.measured <= o.tolerance;
    std::ostringstream note;
    note << "measured ratio eq2/eq1 = " << eq2.value / eq1
         << ", predicted 1/(theta0*theta1) = "
         << 1.0 / (rp45.theta0 * rp45.theta1);
    o.note = note.str();
    out.push_back(o);

    const double grid = eq2_grid_min(unit, d45, rp45, sqh, 1e-3);
    outcome og;
    og.name = "eq2_grid_min";
    og.measured = std::abs(eq2.value - grid);
    og.tolerance = 2e-3;
    og.pass = og.measured <= og.tolerance;
    og.note = "closed-form partial min vs (s, s') grid";
    out.push_back(og);
  }

  // AUC vs pair enumeration and trapezoid consistency.
  {
    rng gen = rng::derive(11, rng_stream::oracle, 3);
    double worst_auc = 0.0, worst_trap = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      std::vector<double> scores;
      std::vector<int> labels;
      int n_pos = 0;
      for (int i = 0; i < 20; ++i) {
        // Quantized scores so ties actually occur.
        scores.push_back(std::floor(gen.next_uniform(-4.0, 4.0)) / 2.0);
        const int l = gen.next_double() < 0.4 ? 1 : -1;
        labels.push_back(l);
        n_pos += l > 0 ? 1 : 0;
      }
      if (n_pos == 0) labels[0] = 1;
      if (n_pos == 20) labels[0] = -1;
      const double fast = auc(scores, labels);
      worst_auc = std::max(worst_auc, std::abs(fast - auc_bruteforce(scores, labels)));
      worst_trap = std::max(worst_trap,
                            std::abs(fast - trapezoid_area(roc_points(scores, labels))));
    }
    outcome oa;
    oa.name = "auc_pair_enumeration";
    oa.measured = worst_auc;
    oa.tolerance = 0.0;
    oa.pass = worst_auc == 0.0;
    oa.note = "100 random 20-point instances, exact match required";
    out.push_back(oa);
    outcome ot;
    ot.name = "roc_trapezoid_consistency";
    ot.measured = worst_trap;
    ot.tolerance = 1e-12;
    ot.pass = worst_trap <= 1e-12;
    ot.note = "area under roc_points vs auc";
    out.push_back(ot);
  }

  // Finite differences for both scorer families.
  {
    const dataset fd_data = synth_gaussian(5, 12, 4, 1.0, 99);
    out.push_back(check_g_subgrads_fd(linear_scorer::zeros(4), fd_data, 100, 5,
                                      1e-6, 1e-5, 1e-3, subgrad_perturbation));
    out.push_back(check_g_subgrads_fd(mlp_scorer::random_init(4, 6, 5), fd_data, 100,
                                      6, 1e-6, 1e-5, 1e-3, subgrad_perturbation));
  }

  return out;
}

}  // namespace staco::oracles

#endif  // STACO_ORACLES_HPP
