#ifndef STACO_SURROGATE_HPP
#define STACO_SURROGATE_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace staco {

enum class loss_kind { squared_hinge, hinge, logistic };

inline loss_kind loss_kind_from_string(const std::string& s) {
  if (s == "squared_hinge") return loss_kind::squared_hinge;
  if (s == "hinge") return loss_kind::hinge;
  if (s == "logistic") return loss_kind::logistic;
  throw std::invalid_argument("unknown loss kind: " + s);
}

inline const char* to_string(loss_kind k) {
  switch (k) {
    case loss_kind::squared_hinge: return "squared_hinge";
    case loss_kind::hinge: return "hinge";
    case loss_kind::logistic: return "logistic";
  }
  return "?";
}

// Convex, non-decreasing surrogate of the ranking indicator I(t >= 0).
// squared_hinge: max(0, c + t)^2, hinge: max(0, c + t), logistic: log(1 + e^t).
struct surrogate_loss {
  loss_kind kind = loss_kind::squared_hinge;
  double margin = 0.5;

  surrogate_loss() = default;
  surrogate_loss(loss_kind k, double c) : kind(k), margin(c) {
    if (c < 0.0) throw std::invalid_argument("surrogate_loss: margin must be >= 0");
  }

  double value(double t) const {
    switch (kind) {
      case loss_kind::squared_hinge: {
        double m = margin + t;
        return m > 0.0 ? m * m : 0.0;
      }
      case loss_kind::hinge: {
        double m = margin + t;
        return m > 0.0 ? m : 0.0;
      }
      case loss_kind::logistic:
        // Stable softplus.
        return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    return 0.0;
  }

  // One element of the subdifferential; at the hinge kink we take 0.
  double subgrad(double t) const {
    switch (kind) {
      case loss_kind::squared_hinge: {
        double m = margin + t;
        return m > 0.0 ? 2.0 * m : 0.0;
      }
      case loss_kind::hinge:
        return margin + t > 0.0 ? 1.0 : 0.0;
      case loss_kind::logistic:
        return t > 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
    }
    return 0.0;
  }
};

}  // namespace staco

#endif  // STACO_SURROGATE_HPP
