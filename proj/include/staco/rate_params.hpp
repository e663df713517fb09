#ifndef STACO_RATE_PARAMS_HPP
#define STACO_RATE_PARAMS_HPP

#include <cmath>

#include "staco/errors.hpp"

namespace staco {

// Rate parameters of the restricted ROC region: k1 = floor(n_pos * theta0)
// hardest positives, k2 = floor(n_neg * theta1) hardest negatives. A rate
// that floors to zero is a configuration error, never silently clamped.
// theta = 1 selects the whole class, which makes the partial metric collapse
// to the full AUC.
struct rate_params {
  double theta0 = 0.5;
  double theta1 = 0.5;
  int k1 = 0;
  int k2 = 0;

  rate_params(double t0, double t1, int n_pos, int n_neg) : theta0(t0), theta1(t1) {
    if (!(t0 > 0.0) || t0 > 1.0 || !(t1 > 0.0) || t1 > 1.0) {
      throw config_error("rate_params: theta0 and theta1 must lie in (0, 1]");
    }
    if (n_pos < 1 || n_neg < 1) {
      throw config_error("rate_params: need at least one example per class");
    }
    // The small nudge absorbs binary representation error in theta * n.
    k1 = static_cast<int>(std::floor(t0 * n_pos + 1e-9));
    k2 = static_cast<int>(std::floor(t1 * n_neg + 1e-9));
    if (k1 < 1) throw config_error("rate_params: floor(n_pos * theta0) = 0");
    if (k2 < 1) throw config_error("rate_params: floor(n_neg * theta1) = 0");
  }
};

}  // namespace staco

#endif  // STACO_RATE_PARAMS_HPP
