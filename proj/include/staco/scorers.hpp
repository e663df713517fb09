#ifndef STACO_SCORERS_HPP
#define STACO_SCORERS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>

#include "staco/rng.hpp"

namespace staco {

using vec = Eigen::VectorXd;
using cvec_ref = Eigen::Ref<const Eigen::VectorXd>;
using vec_ref = Eigen::Ref<Eigen::VectorXd>;

// A scorer maps a feature vector to a real score and exposes exact gradients
// with respect to a flat parameter vector. The flattening order is fixed and
// round-trips through params()/set_params().
template <typename T>
concept scorer_like = requires(T s, const T cs, cvec_ref x, vec_ref g, double c) {
  { cs.dim() } -> std::convertible_to<int>;
  { cs.num_params() } -> std::convertible_to<int>;
  { cs.score(x) } -> std::convertible_to<double>;
  { cs.score_and_grad(x, g) } -> std::convertible_to<double>;
  { cs.add_score_grad(x, c, g) };
  { cs.params() } -> std::convertible_to<vec>;
  { s.set_params(x) };
};

inline double sigmoid(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

// h_w(x) = w.x (+ bias). Parameter layout: [w(0..d-1), bias?].
class linear_scorer {
 public:
  linear_scorer() = default;
  linear_scorer(vec w, bool with_bias = false, double bias = 0.0)
      : w_(std::move(w)), with_bias_(with_bias), bias_(bias) {}

  static linear_scorer zeros(int d, bool with_bias = false) {
    return linear_scorer(vec::Zero(d), with_bias, 0.0);
  }

  int dim() const { return static_cast<int>(w_.size()); }
  int num_params() const { return dim() + (with_bias_ ? 1 : 0); }
  bool has_bias() const { return with_bias_; }

  double score(cvec_ref x) const {
    check_dim(x);
    return w_.dot(x) + bias_;
  }

  // grad must have num_params() entries; it is overwritten.
  double score_and_grad(cvec_ref x, vec_ref grad) const {
    check_dim(x);
    grad.head(dim()) = x;
    if (with_bias_) grad(dim()) = 1.0;
    return w_.dot(x) + bias_;
  }

  // acc += coeff * d score / d params.
  void add_score_grad(cvec_ref x, double coeff, vec_ref acc) const {
    check_dim(x);
    acc.head(dim()) += coeff * x;
    if (with_bias_) acc(dim()) += coeff;
  }

  // The pre-squash score; identical to score() for a linear model.
  double logit(cvec_ref x) const { return score(x); }
  void add_logit_grad(cvec_ref x, double coeff, vec_ref acc) const {
    add_score_grad(x, coeff, acc);
  }

  vec params() const {
    vec p(num_params());
    p.head(dim()) = w_;
    if (with_bias_) p(dim()) = bias_;
    return p;
  }

  void set_params(cvec_ref p) {
    if (p.size() != num_params()) {
      throw std::invalid_argument("linear_scorer::set_params: size mismatch");
    }
    w_ = p.head(dim());
    if (with_bias_) bias_ = p(dim());
  }

 private:
  void check_dim(cvec_ref x) const {
    if (x.size() != w_.size()) {
      throw std::invalid_argument("linear_scorer: feature dimension mismatch");
    }
  }

  vec w_;
  bool with_bias_ = false;
  double bias_ = 0.0;
};

// One-hidden-layer perceptron: sigmoid(w2 . tanh(W1 x + b1) + b2), so the
// score lies in (0, 1). Parameter layout: [W1 row-major, b1, w2, b2].
class mlp_scorer {
 public:
  mlp_scorer() = default;
  mlp_scorer(Eigen::MatrixXd w1, vec b1, vec w2, double b2)
      : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(b2) {
    if (w1_.rows() != b1_.size() || w1_.rows() != w2_.size() || w1_.rows() < 1) {
      throw std::invalid_argument("mlp_scorer: inconsistent shapes");
    }
  }

  // Uniform(-0.1, 0.1) initialization from a named stream of the seed.
  static mlp_scorer random_init(int d, int hidden, std::uint64_t seed) {
    if (d < 1 || hidden < 1) {
      throw std::invalid_argument("mlp_scorer: d and hidden must be >= 1");
    }
    rng gen = rng::derive(seed, rng_stream::scorer_init);
    Eigen::MatrixXd w1(hidden, d);
    vec b1(hidden), w2(hidden);
    for (int r = 0; r < hidden; ++r) {
      for (int c = 0; c < d; ++c) w1(r, c) = gen.next_uniform(-0.1, 0.1);
    }
    for (int r = 0; r < hidden; ++r) b1(r) = gen.next_uniform(-0.1, 0.1);
    for (int r = 0; r < hidden; ++r) w2(r) = gen.next_uniform(-0.1, 0.1);
    double b2 = gen.next_uniform(-0.1, 0.1);
    return mlp_scorer(std::move(w1), std::move(b1), std::move(w2), b2);
  }

  int dim() const { return static_cast<int>(w1_.cols()); }
  int hidden() const { return static_cast<int>(w1_.rows()); }
  int num_params() const { return hidden() * dim() + 2 * hidden() + 1; }

  double score(cvec_ref x) const {
    check_dim(x);
    return sigmoid(pre_activation(x));
  }

  double logit(cvec_ref x) const {
    check_dim(x);
    return pre_activation(x);
  }

  double score_and_grad(cvec_ref x, vec_ref grad) const {
    check_dim(x);
    grad.setZero();
    double out;
    backprop(x, 1.0, grad, &out, /*through_sigmoid=*/true);
    return out;
  }

  void add_score_grad(cvec_ref x, double coeff, vec_ref acc) const {
    check_dim(x);
    backprop(x, coeff, acc, nullptr, /*through_sigmoid=*/true);
  }

  void add_logit_grad(cvec_ref x, double coeff, vec_ref acc) const {
    check_dim(x);
    backprop(x, coeff, acc, nullptr, /*through_sigmoid=*/false);
  }

  vec params() const {
    const int h = hidden(), d = dim();
    vec p(num_params());
    for (int r = 0; r < h; ++r) p.segment(r * d, d) = w1_.row(r).transpose();
    p.segment(h * d, h) = b1_;
    p.segment(h * d + h, h) = w2_;
    p(h * d + 2 * h) = b2_;
    return p;
  }

  void set_params(cvec_ref p) {
    if (p.size() != num_params()) {
      throw std::invalid_argument("mlp_scorer::set_params: size mismatch");
    }
    const int h = hidden(), d = dim();
    for (int r = 0; r < h; ++r) w1_.row(r) = p.segment(r * d, d).transpose();
    b1_ = p.segment(h * d, h);
    w2_ = p.segment(h * d + h, h);
    b2_ = p(h * d + 2 * h);
  }

 private:
  void check_dim(cvec_ref x) const {
    if (x.size() != w1_.cols()) {
      throw std::invalid_argument("mlp_scorer: feature dimension mismatch");
    }
  }

  // Materializes the hidden activations so score() and score_and_grad()
  // produce bitwise-identical values.
  double pre_activation(cvec_ref x) const {
    vec a = (w1_ * x + b1_).array().tanh().matrix();
    return w2_.dot(a) + b2_;
  }

  // Accumulates coeff * d(out)/d(params) into acc, where out is the sigmoid
  // output (or the pre-sigmoid value when through_sigmoid is false).
  void backprop(cvec_ref x, double coeff, vec_ref acc, double* out_value,
                bool through_sigmoid) const {
    const int h = hidden(), d = dim();
    vec a = (w1_ * x + b1_).array().tanh().matrix();
    double u = w2_.dot(a) + b2_;
    double out = sigmoid(u);
    if (out_value) *out_value = through_sigmoid ? out : u;
    double du = through_sigmoid ? coeff * out * (1.0 - out) : coeff;
    // d u / d w2 = a, d u / d b2 = 1, d u / d b1 = w2 .* (1 - a^2)
    for (int r = 0; r < h; ++r) {
      double db1 = du * w2_(r) * (1.0 - a(r) * a(r));
      acc.segment(r * d, d) += db1 * x;
      acc(h * d + r) += db1;
      acc(h * d + h + r) += du * a(r);
    }
    acc(h * d + 2 * h) += du;
  }

  Eigen::MatrixXd w1_;
  vec b1_;
  vec w2_;
  double b2_ = 0.0;
};

// Max over parameters of |analytic - central difference| / (|analytic| + eps).
template <scorer_like S>
double finite_diff_check(const S& scorer, cvec_ref x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_check: eps must be > 0");
  vec grad(scorer.num_params());
  S probe = scorer;
  probe.score_and_grad(x, grad);
  vec p0 = scorer.params();
  double worst = 0.0;
  for (int k = 0; k < p0.size(); ++k) {
    vec p = p0;
    p(k) = p0(k) + eps;
    probe.set_params(p);
    double up = probe.score(x);
    p(k) = p0(k) - eps;
    probe.set_params(p);
    double dn = probe.score(x);
    double numeric = (up - dn) / (2.0 * eps);
    double err = std::abs(grad(k) - numeric) / (std::abs(grad(k)) + eps);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace staco

#endif  // STACO_SCORERS_HPP
