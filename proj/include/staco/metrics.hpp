#ifndef STACO_METRICS_HPP
#define STACO_METRICS_HPP

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "staco/rate_params.hpp"
#include "staco/selection.hpp"

namespace staco {

// Empirical ranking metrics. All functions are pure and thread-safe.

namespace detail {

inline void split_by_label(const std::vector<double>& scores,
                           const std::vector<int>& labels, std::vector<double>& pos,
                           std::vector<double>& neg) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metrics: scores and labels differ in length");
  }
  pos.clear();
  neg.clear();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (labels[i] > 0 ? pos : neg).push_back(scores[i]);
  }
}

}  // namespace detail

// Two-way partial AUC estimator over the hard region: the k1 lowest-scored
// positives against the k2 highest-scored negatives, with 0.5 credit for
// ties, normalized by k1 * k2 so the value lies in [0, 1].
inline double tpauc_metric(const std::vector<double>& scores,
                           const std::vector<int>& labels, const rate_params& rp) {
  std::vector<double> pos, neg;
  detail::split_by_label(scores, labels, pos, neg);
  if (rp.k1 > static_cast<int>(pos.size()) || rp.k2 > static_cast<int>(neg.size())) {
    throw std::invalid_argument("tpauc_metric: fewer examples than k1/k2 require");
  }
  const std::vector<int> sel_pos = bottom_k_positions(pos, rp.k1);
  const std::vector<int> sel_neg = top_k_positions(neg, rp.k2);

  std::vector<double> ph(sel_pos.size());
  for (std::size_t a = 0; a < sel_pos.size(); ++a) {
    ph[a] = pos[static_cast<std::size_t>(sel_pos[a])];
  }
  std::sort(ph.begin(), ph.end());

  double credit = 0.0;
  for (int j : sel_neg) {
    const double hn = neg[static_cast<std::size_t>(j)];
    const auto lo = std::lower_bound(ph.begin(), ph.end(), hn);
    const auto hi = std::upper_bound(ph.begin(), ph.end(), hn);
    credit += static_cast<double>(ph.end() - hi);  // strictly above
    credit += 0.5 * static_cast<double>(hi - lo);  // ties
  }
  return credit / (static_cast<double>(rp.k1) * static_cast<double>(rp.k2));
}

// Mann-Whitney AUC with 0.5 tie credit, via average ranks in O(n log n).
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l > 0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc: need both classes");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](int a, int b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j averaged across the tie group
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// ROC staircase from (0,0) to (1,1), one point per distinct score threshold.
inline std::vector<std::pair<double, double>> roc_points(
    const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("roc_points: scores and labels differ in length");
  }
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l > 0 ? 1 : 0;
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("roc_points: need both classes");
  }

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](int a, int b) { return scores[a] > scores[b]; });

  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0) {
        ++tp;
      } else {
        ++fp;
      }
    }
    pts.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos));
    i = j;
  }
  return pts;
}

inline double trapezoid_area(const std::vector<std::pair<double, double>>& pts) {
  double area = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    area += (pts[k].first - pts[k - 1].first) * 0.5 *
            (pts[k].second + pts[k - 1].second);
  }
  return area;
}

struct metric_report {
  // keyed by (theta0, theta1)
  std::map<std::pair<double, double>, double> tpauc;
  double auc_value = 0.0;
  int n_pos = 0;
  int n_neg = 0;
};

inline metric_report evaluate_metrics(
    const std::vector<double>& scores, const std::vector<int>& labels,
    const std::vector<std::pair<double, double>>& theta_pairs) {
  metric_report rep;
  for (int l : labels) (l > 0 ? rep.n_pos : rep.n_neg) += 1;
  rep.auc_value = auc(scores, labels);
  for (auto [t0, t1] : theta_pairs) {
    rate_params rp(t0, t1, rep.n_pos, rep.n_neg);
    rep.tpauc[{t0, t1}] = tpauc_metric(scores, labels, rp);
  }
  return rep;
}

}  // namespace staco

#endif  // STACO_METRICS_HPP
