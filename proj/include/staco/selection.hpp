#ifndef STACO_SELECTION_HPP
#define STACO_SELECTION_HPP

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace staco {

// Deterministic top-k / bottom-k selection with ties broken by the smaller
// position. Returned positions are sorted ascending so downstream reductions
// run in a fixed order.

inline std::vector<int> bottom_k_positions(const std::vector<double>& v, int k) {
  if (k < 1 || k > static_cast<int>(v.size())) {
    throw std::invalid_argument("bottom_k_positions: k out of range");
  }
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&v](int a, int b) { return v[a] < v[b] || (v[a] == v[b] && a < b); };
  std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), less);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::vector<int> top_k_positions(const std::vector<double>& v, int k) {
  if (k < 1 || k > static_cast<int>(v.size())) {
    throw std::invalid_argument("top_k_positions: k out of range");
  }
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto greater = [&v](int a, int b) { return v[a] > v[b] || (v[a] == v[b] && a < b); };
  std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), greater);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// k-th largest value (k is 1-based).
inline double kth_largest(std::vector<double> v, int k) {
  if (k < 1 || k > static_cast<int>(v.size())) {
    throw std::invalid_argument("kth_largest: k out of range");
  }
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end(), std::greater<double>());
  return v[static_cast<std::size_t>(k - 1)];
}

}  // namespace staco

#endif  // STACO_SELECTION_HPP
