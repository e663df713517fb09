#include <catch_amalgamated.hpp>

#include "staco/rng.hpp"
#include "staco/surrogate.hpp"

using namespace staco;

TEST_CASE("squared hinge values at the margin") {
  surrogate_loss l(loss_kind::squared_hinge, 0.5);
  CHECK(l.value(0.0) == Catch::Approx(0.25));
  CHECK(l.value(-2.0) == 0.0);
  CHECK(l.subgrad(0.0) == Catch::Approx(1.0));
  CHECK(l.subgrad(-2.0) == 0.0);
}

TEST_CASE("hinge is monotone at sampled points") {
  surrogate_loss l(loss_kind::hinge, 0.5);
  CHECK(l.value(-1.0) == 0.0);
  CHECK(l.value(0.0) == Catch::Approx(0.5));
  CHECK(l.value(1.0) == Catch::Approx(1.5));
  CHECK(l.subgrad(-0.5) == 0.0);  // kink convention: 0 at the corner
}

TEST_CASE("logistic matches softplus and its slope is the sigmoid") {
  surrogate_loss l(loss_kind::logistic, 0.5);
  CHECK(l.value(0.0) == Catch::Approx(std::log(2.0)));
  CHECK(l.value(30.0) == Catch::Approx(30.0).margin(1e-9));
  CHECK(l.subgrad(0.0) == Catch::Approx(0.5));
}

TEST_CASE("all surrogate kinds are convex and non-decreasing on samples") {
  rng g = rng::derive(123, rng_stream::test);
  for (loss_kind kind :
       {loss_kind::squared_hinge, loss_kind::hinge, loss_kind::logistic}) {
    surrogate_loss l(kind, 0.5);
    for (int i = 0; i < 500; ++i) {
      double t1 = g.next_uniform(-4.0, 4.0);
      double t2 = g.next_uniform(-4.0, 4.0);
      if (t1 > t2) std::swap(t1, t2);
      CHECK(l.value(t1) <= l.value(t2) + 1e-15);
      // midpoint convexity
      const double mid = 0.5 * (t1 + t2);
      CHECK(l.value(mid) <= 0.5 * (l.value(t1) + l.value(t2)) + 1e-12);
    }
  }
}

TEST_CASE("negative margin is rejected") {
  CHECK_THROWS_AS(surrogate_loss(loss_kind::hinge, -0.1), std::invalid_argument);
}
