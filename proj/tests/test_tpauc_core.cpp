#include <catch_amalgamated.hpp>

#include <numeric>

#include "staco/oracles.hpp"
#include "staco/tpauc_core.hpp"

using namespace staco;

namespace {

// pos score 0, neg scores 0.1 and 0.7 under a unit linear scorer with a
// margin-0 hinge give pairwise losses exactly {0.1, 0.7}.
dataset tiny_pair_dataset() {
  dataset ds;
  ds.features.resize(3, 1);
  ds.features << 0.0, 0.1, 0.7;
  ds.labels = {1, -1, -1};
  ds.rebuild_index();
  return ds;
}

dataset crafted_4x5() {
  dataset ds;
  ds.features.resize(9, 1);
  ds.labels = {1, 1, 1, 1, -1, -1, -1, -1, -1};
  const double vals[9] = {0.10, 0.40, 0.45, 0.90, 0.00, 0.20, 0.50, 0.70, 0.80};
  for (int i = 0; i < 9; ++i) ds.features(i, 0) = vals[i];
  ds.rebuild_index();
  return ds;
}

}  // namespace

TEST_CASE("g_minibatch on the documented hand instance") {
  dataset ds = tiny_pair_dataset();
  linear_scorer unit(vec::Ones(1));
  surrogate_loss hinge0(loss_kind::hinge, 0.0);
  rate_params rp(1.0, 0.5, 1, 2);
  const std::vector<int> batch = {0, 1};
  CHECK(g_minibatch(unit, ds, 0, batch, 0.2, rp, hinge0) == Catch::Approx(0.7));

  SECTION("batch covering all negatives equals the direct full average") {
    double direct = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double l = std::max(0.0, ds.features(ds.neg_idx[j], 0) - 0.0);
      direct += 0.2 + std::max(0.0, l - 0.2) / 0.5;
    }
    direct /= 2.0;
    CHECK(g_minibatch(unit, ds, 0, batch, 0.2, rp, hinge0) == Catch::Approx(direct));
  }

  SECTION("errors") {
    const std::vector<int> empty;
    CHECK_THROWS_AS(g_minibatch(unit, ds, 0, empty, 0.2, rp, hinge0),
                    std::invalid_argument);
    const std::vector<int> bad = {5};
    CHECK_THROWS_AS(g_minibatch(unit, ds, 0, bad, 0.2, rp, hinge0),
                    std::invalid_argument);
    CHECK_THROWS_AS(g_minibatch(unit, ds, 3, batch, 0.2, rp, hinge0),
                    std::invalid_argument);
  }
}

TEST_CASE("g_minibatch is unbiased over all subsets (enumeration oracle)") {
  dataset ds = synth_gaussian(2, 6, 3, 1.0, 20240601);
  linear_scorer lin(vec::Zero(3));
  vec w(3);
  w << 0.7, -0.3, 0.2;
  lin.set_params(w);
  rate_params rp(0.5, 0.5, 2, 6);
  surrogate_loss loss(loss_kind::squared_hinge, 0.5);
  auto o = oracles::check_minibatch_unbiasedness(lin, ds, 0, 0.3, rp, loss, 2);
  INFO(o.note);
  CHECK(o.pass);
  CHECK(o.measured <= 1e-12);
}

TEST_CASE("g_minibatch structural properties") {
  dataset ds = synth_gaussian(4, 10, 3, 0.8, 17);
  linear_scorer lin(vec::Ones(3));
  surrogate_loss loss(loss_kind::squared_hinge, 0.5);
  rate_params rp(0.5, 0.4, 4, 10);
  rng g = rng::derive(21, rng_stream::test);
  std::vector<int> batch = {0, 2, 3, 7};
  vec dw(lin.num_params());

  for (int rep = 0; rep < 200; ++rep) {
    const double s_i = g.next_uniform(-2.0, 4.0);
    const int i = static_cast<int>(g.next_below(4));
    // estimator dominates its threshold
    CHECK(g_minibatch(lin, ds, i, batch, s_i, rp, loss) >= s_i - 1e-15);
    // subgradient slope lies in [1 - 1/theta1, 1]
    const double ds_i = g_subgrads(lin, ds, i, batch, s_i, rp, loss, dw);
    CHECK(ds_i <= 1.0 + 1e-15);
    CHECK(ds_i >= 1.0 - 1.0 / rp.theta1 - 1e-15);
    // midpoint convexity in s_i
    const double a = g.next_uniform(-2.0, 4.0), b = g.next_uniform(-2.0, 4.0);
    const double ga = g_minibatch(lin, ds, i, batch, a, rp, loss);
    const double gb = g_minibatch(lin, ds, i, batch, b, rp, loss);
    const double gm = g_minibatch(lin, ds, i, batch, 0.5 * (a + b), rp, loss);
    CHECK(gm <= 0.5 * (ga + gb) + 1e-12);
  }
}

TEST_CASE("g_subgrads saturation cases") {
  dataset ds = tiny_pair_dataset();
  linear_scorer unit(vec::Ones(1));
  surrogate_loss hinge0(loss_kind::hinge, 0.0);
  rate_params rp(1.0, 0.5, 1, 2);
  const std::vector<int> batch = {0, 1};
  vec dw(1);

  SECTION("all losses below the threshold: hinge inactive") {
    const double ds_i = g_subgrads(unit, ds, 0, batch, 10.0, rp, hinge0, dw);
    CHECK(ds_i == 1.0);
    CHECK(dw(0) == 0.0);
  }

  SECTION("all losses above the threshold: fully active") {
    const double ds_i = g_subgrads(unit, ds, 0, batch, -10.0, rp, hinge0, dw);
    CHECK(ds_i == Catch::Approx(-1.0));  // 1 - 1/theta1 with theta1 = 0.5
    // dw = (1/(B*theta1)) * sum l'(h_j-h_i) (x_j - x_i); l' = 1, x_i = 0
    CHECK(dw(0) == Catch::Approx((0.1 + 0.7) / (2.0 * 0.5)));
  }

  SECTION("exact tie contributes nothing (indicator 0 at equality)") {
    const double ds_i = g_subgrads(unit, ds, 0, batch, 0.7, rp, hinge0, dw);
    // only the 0.1 loss is below, the 0.7 loss ties and is excluded
    CHECK(ds_i == 1.0);
    CHECK(dw(0) == 0.0);
  }
}

TEST_CASE("g_subgrads matches finite differences away from kinks") {
  const dataset ds = synth_gaussian(5, 12, 4, 1.0, 99);
  auto lin = oracles::check_g_subgrads_fd(linear_scorer::zeros(4), ds, 60, 5);
  INFO(lin.note);
  CHECK(lin.pass);
  auto mlp = oracles::check_g_subgrads_fd(mlp_scorer::random_init(4, 6, 5), ds, 60, 6);
  INFO(mlp.note);
  CHECK(mlp.pass);
}

TEST_CASE("perturbed subgradients fail the finite-difference oracle") {
  const dataset ds = synth_gaussian(5, 12, 4, 1.0, 99);
  auto bad = oracles::check_g_subgrads_fd(linear_scorer::zeros(4), ds, 20, 5, 1e-6,
                                          1e-5, 1e-3, /*perturbation=*/1e-2);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("y_prox_update closed form") {
  CHECK(y_prox_update(0.5, 2.0, 0.0, 1.0, 0.1) == Catch::Approx(0.7));
  CHECK(y_prox_update(0.9, 5.0, 0.0, 1.0, 1.0) == 1.0);
  CHECK(y_prox_update(0.1, -5.0, 0.0, 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(y_prox_update(0.5, 1.0, 0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(y_prox_update(1.5, 1.0, 0.0, 1.0, 0.1), std::invalid_argument);

  SECTION("grid oracle on 1000 random instances") {
    auto o = oracles::check_y_prox_grid(1000, 7);
    INFO(o.note);
    CHECK(o.pass);
  }

  SECTION("output in [0,1] and monotone in g_hat") {
    rng g = rng::derive(31, rng_stream::test);
    for (int rep = 0; rep < 500; ++rep) {
      const double y0 = g.next_double();
      const double sp = g.next_uniform(-2.0, 2.0);
      const double t0 = g.next_uniform(0.1, 1.0);
      const double al = g.next_uniform(0.01, 2.0);
      double g1 = g.next_uniform(-3.0, 3.0), g2 = g.next_uniform(-3.0, 3.0);
      if (g1 > g2) std::swap(g1, g2);
      const double y1 = y_prox_update(y0, g1, sp, t0, al);
      const double y2 = y_prox_update(y0, g2, sp, t0, al);
      CHECK(y1 >= 0.0);
      CHECK(y2 <= 1.0);
      CHECK(y1 <= y2 + 1e-15);
    }
  }
}

TEST_CASE("primal_steps special cases") {
  const int n_pos = 6, p = 3;
  rate_params rp(0.5, 0.5, n_pos, 10);
  rng g = rng::derive(41, rng_stream::test);

  pd_state state;
  state.scorer_params = vec::Zero(p);
  state.s = vec::Zero(n_pos);
  state.s_prime = 0.3;
  state.y = vec::Constant(n_pos, 0.5);
  for (int i = 0; i < n_pos; ++i) state.s(i) = g.next_uniform(-1.0, 1.0);

  std::vector<int> all(n_pos);
  std::iota(all.begin(), all.end(), 0);
  row_major_matrix zero_dw = row_major_matrix::Zero(n_pos, p);
  std::vector<double> zero_ds(n_pos, 0.0);
  primal_step_sizes st{0.2, 0.3, 0.4};

  SECTION("zero subgradients with y_new = y: only s_prime moves") {
    std::vector<double> y_new(state.y.data(), state.y.data() + n_pos);
    pd_state before = state;
    primal_steps(state, all, y_new, zero_dw, zero_ds, rp, st);
    CHECK((state.s - before.s).cwiseAbs().maxCoeff() == 0.0);
    CHECK((state.scorer_params - before.scorer_params).cwiseAbs().maxCoeff() == 0.0);
    const double y_sum = state.y.sum();
    CHECK(state.s_prime ==
          Catch::Approx(before.s_prime - 0.4 * (1.0 - y_sum / (0.5 * n_pos))));
  }

  SECTION("y_new = theta0 with zero subgradients keeps s_prime stationary") {
    std::vector<double> y_new(n_pos, rp.theta0);
    const double sp_before = state.s_prime;
    primal_steps(state, all, y_new, zero_dw, zero_ds, rp, st);
    CHECK(state.s_prime == sp_before);
  }

  SECTION("anchor at the current point reproduces the anchor-free step") {
    pd_state with = state, without = state;
    std::vector<double> y_new(n_pos), ds_rand(n_pos);
    row_major_matrix dw_rand(n_pos, p);
    for (int i = 0; i < n_pos; ++i) {
      y_new[static_cast<std::size_t>(i)] = g.next_double();
      ds_rand[static_cast<std::size_t>(i)] = g.next_uniform(-1.0, 1.0);
      for (int k = 0; k < p; ++k) dw_rand(i, k) = g.next_uniform(-1.0, 1.0);
    }
    stage_anchor anchor(state.scorer_params, state.s, 2.5);
    primal_steps(with, all, y_new, dw_rand, ds_rand, rp, st, &anchor);
    primal_steps(without, all, y_new, dw_rand, ds_rand, rp, st, nullptr);
    CHECK((with.scorer_params - without.scorer_params).cwiseAbs().maxCoeff() == 0.0);
    CHECK((with.s - without.s).cwiseAbs().maxCoeff() == 0.0);
    CHECK(with.s_prime == without.s_prime);
  }

  SECTION("coordinates outside the sampled set are bitwise untouched") {
    std::vector<int> some = {1, 4};
    std::vector<double> y_new = {0.25, 0.75};
    std::vector<double> ds_some = {0.5, -0.5};
    row_major_matrix dw_some(2, p);
    dw_some.setConstant(0.3);
    pd_state before = state;
    primal_steps(state, some, y_new, dw_some, ds_some, rp, st);
    for (int i = 0; i < n_pos; ++i) {
      if (i == 1 || i == 4) continue;
      CHECK(state.s(i) == before.s(i));
      CHECK(state.y(i) == before.y(i));
    }
    CHECK(state.y(1) == 0.25);
    CHECK(state.y(4) == 0.75);
    CHECK(state.s(1) != before.s(1));
  }

  SECTION("invalid inputs") {
    std::vector<int> bad = {n_pos};
    std::vector<double> y1 = {0.5};
    std::vector<double> d1 = {0.0};
    row_major_matrix dw1 = row_major_matrix::Zero(1, p);
    CHECK_THROWS_AS(primal_steps(state, bad, y1, dw1, d1, rp, st),
                    std::invalid_argument);
    std::vector<int> ok = {0};
    std::vector<double> ybad = {1.5};
    CHECK_THROWS_AS(primal_steps(state, ok, ybad, dw1, d1, rp, st),
                    std::invalid_argument);
    CHECK_THROWS_AS(primal_steps(state, ok, y1, dw1, d1, rp, {0.0, 0.1, 0.1}),
                    std::invalid_argument);
  }
}

TEST_CASE("exact_objective_eq1 on crafted instances") {
  surrogate_loss sqh(loss_kind::squared_hinge, 0.5);

  SECTION("separated with margin under the hinge gives zero") {
    dataset ds;
    ds.features.resize(4, 1);
    ds.features << 2.0, 3.0, 0.0, 1.0;
    ds.labels = {1, 1, -1, -1};
    ds.rebuild_index();
    linear_scorer unit(vec::Ones(1));
    rate_params rp(0.5, 0.5, 2, 2);
    surrogate_loss hinge(loss_kind::hinge, 0.5);
    CHECK(exact_objective_eq1(unit, ds, rp, hinge) == 0.0);
  }

  SECTION("4x5 instance equals the hand-computed pair sum and the brute force") {
    dataset ds = crafted_4x5();
    linear_scorer unit(vec::Ones(1));
    rate_params rp(0.5, 0.4, 4, 5);
    const double val = exact_objective_eq1(unit, ds, rp, sqh);
    // selected positives {0.10, 0.40}, negatives {0.80, 0.70}:
    // (1.2^2 + 1.1^2 + 0.9^2 + 0.8^2) / 20
    CHECK(val == Catch::Approx(0.205).epsilon(1e-12));
    CHECK(val == Catch::Approx(oracles::exact_eq1_bruteforce(unit, ds, rp, sqh))
                     .epsilon(1e-14));
  }

  SECTION("row permutation leaves the value unchanged") {
    dataset ds = crafted_4x5();
    dataset shuffled;
    const int perm[9] = {4, 0, 7, 2, 8, 1, 5, 3, 6};
    shuffled.features.resize(9, 1);
    shuffled.labels.resize(9);
    for (int i = 0; i < 9; ++i) {
      shuffled.features(i, 0) = ds.features(perm[i], 0);
      shuffled.labels[static_cast<std::size_t>(i)] =
          ds.labels[static_cast<std::size_t>(perm[i])];
    }
    shuffled.rebuild_index();
    linear_scorer unit(vec::Ones(1));
    rate_params rp(0.5, 0.4, 4, 5);
    CHECK(exact_objective_eq1(unit, ds, rp, sqh) ==
          Catch::Approx(exact_objective_eq1(unit, shuffled, rp, sqh)).epsilon(1e-12));
  }
}

TEST_CASE("partial_min_eq2 closed form") {
  surrogate_loss sqh(loss_kind::squared_hinge, 0.5);

  SECTION("single pair with full rates collapses to the pair loss") {
    dataset ds;
    ds.features.resize(2, 1);
    ds.features << 0.2, 0.6;
    ds.labels = {1, -1};
    ds.rebuild_index();
    linear_scorer unit(vec::Ones(1));
    rate_params rp(1.0, 1.0, 1, 1);
    const double l11 = sqh.value(0.6 - 0.2);
    const eq2_solution sol = partial_min_eq2(unit, ds, rp, sqh);
    CHECK(sol.value == Catch::Approx(l11).epsilon(1e-14));
    CHECK(sol.s_star(0) == Catch::Approx(l11));
    CHECK(sol.s_prime_star == Catch::Approx(l11).epsilon(1e-14));
  }

  SECTION("4x5 instance: hand values, grid oracle, and the scaling relation") {
    dataset ds = crafted_4x5();
    linear_scorer unit(vec::Ones(1));
    rate_params rp(0.5, 0.4, 4, 5);
    const eq2_solution sol = partial_min_eq2(unit, ds, rp, sqh);
    CHECK(sol.value == Catch::Approx(1.025).epsilon(1e-12));
    CHECK(sol.s_prime_star == Catch::Approx(0.725).epsilon(1e-12));
    CHECK(sol.s_star(0) == Catch::Approx(1.21).epsilon(1e-12));
    CHECK(sol.s_star(3) == Catch::Approx(0.09).epsilon(1e-12));

    const double grid = oracles::eq2_grid_min(unit, ds, rp, sqh, 1e-3);
    CHECK(std::abs(sol.value - grid) <= 2e-3);

    const double eq1 = exact_objective_eq1(unit, ds, rp, sqh);
    CHECK(std::abs(sol.value * rp.theta0 * rp.theta1 - eq1) <= 1e-10);
  }
}

TEST_CASE("work counters scale with batch sizes") {
  dataset ds = synth_gaussian(4, 10, 3, 0.8, 17);
  linear_scorer lin(vec::Ones(3));
  surrogate_loss loss(loss_kind::squared_hinge, 0.5);
  rate_params rp(0.5, 0.4, 4, 10);
  std::vector<int> batch = {0, 1, 2, 3, 4, 5, 6};
  vec dw(lin.num_params());

  work() = {};
  g_minibatch(lin, ds, 0, batch, 0.1, rp, loss);
  CHECK(work().pair_evals == batch.size());
  work() = {};
  g_subgrads(lin, ds, 0, batch, 0.1, rp, loss, dw);
  CHECK(work().pair_evals == batch.size());
  work() = {};
  exact_objective_eq1(lin, ds, rp, loss);
  CHECK(work().pair_evals == static_cast<std::uint64_t>(rp.k1) * rp.k2);
}

TEST_CASE("rate_params validation") {
  CHECK_THROWS_AS(rate_params(0.0, 0.5, 10, 10), config_error);
  CHECK_THROWS_AS(rate_params(0.5, 1.5, 10, 10), config_error);
  CHECK_THROWS_AS(rate_params(0.05, 0.5, 10, 10), config_error);  // k1 = 0
  CHECK_THROWS_AS(rate_params(0.5, 0.05, 10, 10), config_error);  // k2 = 0
  rate_params ok(2.0 / 3.0, 0.5, 3, 2);
  CHECK(ok.k1 == 2);
  CHECK(ok.k2 == 1);
  rate_params full(1.0, 1.0, 7, 9);
  CHECK(full.k1 == 7);
  CHECK(full.k2 == 9);
}
