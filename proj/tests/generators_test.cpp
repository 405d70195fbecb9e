#include <doctest.h>

#include <cmath>

#include "prioroute/generators.hpp"
#include "prioroute/io.hpp"
#include "prioroute/pricing.hpp"

using namespace prioroute;

TEST_SUITE("generators_oracle") {

TEST_CASE("small families") {
  auto single = gen_single_edge(1, 0, 1, 2);
  CHECK(single.instance.num_edges() == 1);
  CHECK(single.prices.fee(0) == 1.0);
  CHECK(single.instance.total_demand() == 2.0);

  const Instance pigou = gen_pigou(2.0);
  REQUIRE(pigou.num_edges() == 2);
  CHECK(pigou.edge(0).a == 1.0);
  CHECK(pigou.edge(1).b == 1.0);

  auto so1 = social_optimum(gen_pigou(1.0));
  CHECK(so1.flow.edges[0] == doctest::Approx(1.0));
  CHECK(so1.cost == doctest::Approx(0.5));
  CHECK(social_optimum(gen_pigou(0.0)).cost == 0.0);
  auto eq2 = evaluate_prices(pigou, PriceVector::disabled(2));
  CHECK(eq2.equilibrium_cost == doctest::Approx(2.0));
  CHECK(eq2.optimal_cost == doctest::Approx(1.5));
}

TEST_CASE("Braess network") {
  const Instance with = gen_braess(1.0, true);
  const auto zero = PriceVector::uniform(with.num_edges(), 0.0);
  auto eq = solve_equilibrium(with, zero);
  for (const char* id : {"su", "uv", "vt"}) {
    CHECK(eq.total.edges[*with.find_edge(id)] == doctest::Approx(1.0).epsilon(1e-6));
  }
  const Instance without = gen_braess(1.0, false);
  auto half = solve_equilibrium(without, PriceVector::uniform(without.num_edges(), 0.0));
  for (EdgeIndex e = 0; e < without.num_edges(); ++e) {
    CHECK(half.total.edges[e] == doctest::Approx(0.5).epsilon(1e-6));
  }
  auto empty = solve_equilibrium(gen_braess(0.0, true), zero);
  for (double x : empty.total.edges) CHECK(x == 0.0);
}

TEST_CASE("G_k construction") {
  const Instance g0 = gen_gk({0, true});
  REQUIRE(g0.num_edges() == 2);
  CHECK(g0.edge(0).id == "q");
  CHECK(g0.edge(1).a == 2.0);
  CHECK(g0.total_demand() == 1.0);

  CHECK(gen_gk({3, false}).num_edges() == 16);
  CHECK(gen_gk({6, true}).num_edges() == 8);
  const Instance big = gen_gk({200, true});
  CHECK(big.edge(201).series_count == std::ldexp(1.0, 200));
  CHECK(big.edge(201).a == std::ldexp(1.0, -199));
  CHECK_THROWS_AS(gen_gk({20, false}), InputError);
  CHECK_THROWS_AS(gen_gk({-1, true}), InputError);
}

TEST_CASE("compressed and expanded G_k agree") {
  for (int k : {3, 6}) {
    const Instance c = gen_gk({k, true}), x = gen_gk({k, false});
    CHECK(social_optimum(c).cost == doctest::Approx(social_optimum(x).cost).epsilon(1e-8));
    for (double w : {0.01, 0.2, 0.6}) {
      auto ec = solve_equilibrium(c, PriceVector::uniform(c.num_edges(), w));
      auto ex = solve_equilibrium(x, PriceVector::uniform(x.num_edges(), w));
      CHECK(total_cost(c, ec.total) == doctest::Approx(total_cost(x, ex.total)).epsilon(1e-8));
      // Per-path flows: the compressed edge p<i> against p<i>_0.
      for (int i = 0; i <= k; ++i) {
        const std::string id = "p" + std::to_string(i);
        CHECK(ec.total.edges[*c.find_edge(id)] ==
              doctest::Approx(ex.total.edges[*x.find_edge(id + "_0")]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("closed form") {
  CHECK(gk_closed_form_cost(2, 0.3) == doctest::Approx(0.49 + 0.36 + 1.7));
  for (int k : {0, 3, 10, 200}) {
    CHECK(gk_closed_form_cost(k, 2.0) == doctest::Approx(k + 1.0));
    CHECK(gk_closed_form_cost(k, 7.5) == doctest::Approx(k + 1.0));
    CHECK(gk_closed_form_cost(k, 0.0) == doctest::Approx(k + 1.0));
    const double tiny = std::ldexp(1.0, -(k + 30));
    CHECK(gk_closed_form_cost(k, tiny) == doctest::Approx(k + 1.0).epsilon(1e-6));
  }
  // Continuous across the kinks.
  for (int i = 0; i <= 6; ++i) {
    const double w = std::ldexp(1.0, -i);
    CHECK(gk_closed_form_cost(6, w * (1 - 1e-9)) ==
          doctest::Approx(gk_closed_form_cost(6, w * (1 + 1e-9))).epsilon(1e-7));
  }
  CHECK_THROWS_AS(gk_closed_form_cost(3, -1.0), InputError);
}

TEST_CASE("random instances") {
  RandomSpec spec;
  spec.seed = 1;
  spec.links = 5;
  const std::string first = instance_to_json(gen_random(spec));
  CHECK(first == instance_to_json(gen_random(spec)));
  CHECK(gen_random(spec).num_edges() == 5);
  spec.seed = 2;
  CHECK(first != instance_to_json(gen_random(spec)));

  spec.a_lo = spec.a_hi = 0.0;
  const Instance flat = gen_random(spec);
  for (const Edge& e : flat.edges()) CHECK(e.a == 0.0);
  auto rep = evaluate_prices(flat, PriceVector::uniform(flat.num_edges(), 0.2));
  REQUIRE(rep.ratio.has_value());
  CHECK(*rep.ratio == doctest::Approx(1.0));

  RandomSpec layered;
  layered.seed = 7;
  layered.topology = RandomSpec::Topology::layered;
  layered.layers = 3;
  layered.width = 3;
  const Instance g = gen_random(layered);
  auto so = social_optimum(g);
  CHECK(so.report.converged());
  CHECK_NOTHROW(check_feasible(g, so.flow));
}

TEST_CASE("brute force oracle") {
  auto single = gen_single_edge(1, 0, 1, 2.0);
  auto s = brute_force_equilibrium(single.instance, single.prices, 1e-3);
  CHECK(s.violation <= 2e-3);
  // Total latency 0.5 a r^2 whatever the lane split.
  CHECK(s.cost == doctest::Approx(2.0));

  const Instance pigou = gen_pigou(2.0);
  PriceVector marginal(2);
  marginal.set_fee(0, 0.5);
  marginal.set_fee(1, 0.0);
  auto m = brute_force_equilibrium(pigou, marginal, 1e-3, 2);
  CHECK(m.flow[0] == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(m.cost == doctest::Approx(1.5).epsilon(5e-3));

  auto z = brute_force_equilibrium(pigou, PriceVector::uniform(2, 0.0), 1e-3);
  CHECK(z.flow[0] == doctest::Approx(2.0).epsilon(5e-3));
  CHECK(z.cost == doctest::Approx(2.0).epsilon(5e-3));

  CHECK_THROWS_AS(brute_force_equilibrium(gen_braess(), PriceVector::uniform(5, 0.0), 1e-2),
                  InputError);
  RandomSpec five;
  five.links = 5;
  const Instance g5 = gen_random(five);
  CHECK_THROWS_AS(brute_force_equilibrium(g5, PriceVector::uniform(5, 0.1), 1e-2), InputError);
  CHECK_THROWS_AS(brute_force_equilibrium(pigou, marginal, 0.0), InputError);
}

}  // TEST_SUITE
