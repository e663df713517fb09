#include <catch_amalgamated.hpp>

#include <cmath>

#include "staco/metrics.hpp"
#include "staco/oracles.hpp"
#include "staco/rng.hpp"

using namespace staco;

TEST_CASE("tpauc_metric hand enumeration") {
  // pos {0.9, 0.4, 0.8}, neg {0.3, 0.7}; theta0 = 2/3 -> k1 = 2, theta1 = 0.5
  // -> k2 = 1. Selected positives {0.4, 0.8}, negative {0.7} -> credit 1 of 2.
  const std::vector<double> scores = {0.9, 0.4, 0.8, 0.3, 0.7};
  const std::vector<int> labels = {1, 1, 1, -1, -1};
  rate_params rp(2.0 / 3.0, 0.5, 3, 2);
  CHECK(tpauc_metric(scores, labels, rp) == Catch::Approx(0.5));
}

TEST_CASE("tpauc_metric bounds and tie conventions") {
  SECTION("perfect ranking gives 1 for any valid rates") {
    const std::vector<double> scores = {5.0, 4.0, 3.0, 2.0, 1.0, 0.0};
    const std::vector<int> labels = {1, 1, 1, -1, -1, -1};
    for (double t0 : {0.4, 0.5, 0.75, 1.0}) {
      for (double t1 : {0.4, 0.5, 0.75, 1.0}) {
        rate_params rp(t0, t1, 3, 3);
        CHECK(tpauc_metric(scores, labels, rp) == 1.0);
      }
    }
  }

  SECTION("all-equal scores give exactly one half") {
    const std::vector<double> scores(6, 1.0);
    const std::vector<int> labels = {1, 1, 1, -1, -1, -1};
    rate_params rp(0.5, 0.5, 3, 3);
    CHECK(tpauc_metric(scores, labels, rp) == 0.5);
  }

  SECTION("hard region fully misranked gives zero") {
    const std::vector<double> scores = {0.0, 0.1, 5.0, 1.0, 2.0};
    const std::vector<int> labels = {1, 1, 1, -1, -1};
    rate_params rp(2.0 / 3.0, 0.5, 3, 2);
    CHECK(tpauc_metric(scores, labels, rp) == 0.0);
  }

  SECTION("requesting more than available is an error") {
    const std::vector<double> scores = {1.0, 0.0};
    const std::vector<int> labels = {1, -1};
    rate_params rp(1.0, 1.0, 5, 5);
    CHECK_THROWS_AS(tpauc_metric(scores, labels, rp), std::invalid_argument);
  }
}

TEST_CASE("auc basics and the pair-enumeration oracle") {
  CHECK(auc({2.0, 1.0}, {1, -1}) == 1.0);
  CHECK(auc({1.0, 1.0}, {1, -1}) == 0.5);
  CHECK(auc({1.0, 2.0}, {1, -1}) == 0.0);
  CHECK_THROWS_AS(auc({1.0, 2.0}, {1, 1}), std::invalid_argument);

  rng g = rng::derive(11, rng_stream::test);
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<double> scores;
    std::vector<int> labels;
    int n_pos = 0;
    for (int i = 0; i < 20; ++i) {
      scores.push_back(std::floor(g.next_uniform(-4.0, 4.0)) / 2.0);
      const int l = g.next_double() < 0.4 ? 1 : -1;
      labels.push_back(l);
      n_pos += l > 0 ? 1 : 0;
    }
    if (n_pos == 0) labels[0] = 1;
    if (n_pos == 20) labels[0] = -1;
    CHECK(auc(scores, labels) == oracles::auc_bruteforce(scores, labels));
  }
}

TEST_CASE("tpauc at full rates equals auc") {
  rng g = rng::derive(13, rng_stream::test);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<double> scores;
    std::vector<int> labels = {1, -1};
    scores.push_back(g.next_double());
    scores.push_back(g.next_double());
    for (int i = 0; i < 18; ++i) {
      scores.push_back(std::floor(g.next_uniform(-4.0, 4.0)) / 2.0);
      labels.push_back(g.next_double() < 0.5 ? 1 : -1);
    }
    int np = 0;
    for (int l : labels) np += l > 0 ? 1 : 0;
    rate_params rp(1.0, 1.0, np, static_cast<int>(labels.size()) - np);
    CHECK(tpauc_metric(scores, labels, rp) == Catch::Approx(auc(scores, labels)));
  }
}

TEST_CASE("roc_points staircase") {
  SECTION("perfect ranking passes through (0,1)") {
    const std::vector<double> scores = {3.0, 2.0, 1.0, 0.0};
    const std::vector<int> labels = {1, 1, -1, -1};
    const auto pts = roc_points(scores, labels);
    REQUIRE(pts.front() == std::pair<double, double>(0.0, 0.0));
    REQUIRE(pts.back() == std::pair<double, double>(1.0, 1.0));
    bool hits_corner = false;
    for (const auto& p : pts) {
      hits_corner = hits_corner || (p.first == 0.0 && p.second == 1.0);
    }
    CHECK(hits_corner);
  }

  SECTION("all-equal scores produce only the diagonal endpoints") {
    const std::vector<double> scores(5, 2.0);
    const std::vector<int> labels = {1, 1, -1, -1, -1};
    const auto pts = roc_points(scores, labels);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0] == std::pair<double, double>(0.0, 0.0));
    CHECK(pts[1] == std::pair<double, double>(1.0, 1.0));
  }

  SECTION("trapezoid area equals auc within 1e-12") {
    rng g = rng::derive(14, rng_stream::test);
    for (int inst = 0; inst < 50; ++inst) {
      std::vector<double> scores = {0.4};
      std::vector<int> labels = {1};
      scores.push_back(0.1);
      labels.push_back(-1);
      for (int i = 0; i < 20; ++i) {
        scores.push_back(std::floor(g.next_uniform(-3.0, 3.0)) / 2.0);
        labels.push_back(g.next_double() < 0.5 ? 1 : -1);
      }
      CHECK(std::abs(trapezoid_area(roc_points(scores, labels)) -
                     auc(scores, labels)) <= 1e-12);
    }
  }
}

TEST_CASE("metrics are invariant under strictly increasing transforms") {
  rng g = rng::derive(15, rng_stream::test);
  std::vector<double> scores;
  std::vector<int> labels = {1, -1};
  scores.push_back(1.3);
  scores.push_back(-0.2);
  for (int i = 0; i < 30; ++i) {
    scores.push_back(g.next_uniform(-2.0, 2.0));
    labels.push_back(g.next_double() < 0.3 ? 1 : -1);
  }
  std::vector<double> warped(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    warped[i] = std::exp(0.7 * scores[i]) + 2.0;  // strictly increasing
  }
  int np = 0;
  for (int l : labels) np += l > 0 ? 1 : 0;
  const int nn = static_cast<int>(labels.size()) - np;
  CHECK(auc(scores, labels) == Catch::Approx(auc(warped, labels)).epsilon(1e-14));
  for (double t0 : {0.5, 0.75}) {
    rate_params rp(t0, t0, np, nn);
    CHECK(tpauc_metric(scores, labels, rp) ==
          Catch::Approx(tpauc_metric(warped, labels, rp)).epsilon(1e-14));
  }
}

TEST_CASE("selection helpers break ties by smaller position") {
  const std::vector<double> v = {1.0, 1.0, 2.0, 0.5, 1.0};
  CHECK(bottom_k_positions(v, 2) == std::vector<int>{0, 3});
  CHECK(bottom_k_positions(v, 3) == std::vector<int>{0, 1, 3});
  const std::vector<double> w = {3.0, 3.0, 1.0};
  CHECK(top_k_positions(w, 1) == std::vector<int>{0});
  CHECK(top_k_positions(w, 2) == std::vector<int>{0, 1});
  CHECK(kth_largest({1.0, 5.0, 3.0}, 2) == 3.0);
}

TEST_CASE("evaluate_metrics aggregates tpauc and auc") {
  const std::vector<double> scores = {0.9, 0.4, 0.8, 0.3, 0.7, 0.1};
  const std::vector<int> labels = {1, 1, 1, -1, -1, -1};
  const metric_report rep =
      evaluate_metrics(scores, labels, {{0.5, 0.5}, {1.0, 1.0}});
  CHECK(rep.n_pos == 3);
  CHECK(rep.n_neg == 3);
  CHECK(rep.tpauc.at({1.0, 1.0}) == Catch::Approx(rep.auc_value));
  for (const auto& [key, value] : rep.tpauc) {
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
  }
}
