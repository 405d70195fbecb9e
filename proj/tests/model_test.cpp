#include <doctest.h>

#include <cmath>
#include <random>

#include "prioroute/generators.hpp"
#include "prioroute/model.hpp"

using namespace prioroute;

namespace {

Edge linear(double a, double b, double m = 1.0) {
  Edge e;
  e.id = "e";
  e.tail = 0;
  e.head = 1;
  e.a = a;
  e.b = b;
  e.series_count = m;
  return e;
}

// Two-node, one-edge instance with the lane flows given.
ExtendedFlow single_lane_flow(double fR, double fV) {
  ExtendedFlow f;
  f.edges = {LaneFlow{fR, fV}};
  f.by_commodity = {{LaneFlow{fR, fV}}};
  return f;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("priority lane cost") {
  CHECK(perceived_cost_priority(linear(1, 0), 3.0, 1.0) == doctest::Approx(2.5));
  CHECK(perceived_cost_priority(linear(1, 0), 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(perceived_cost_priority(linear(2, 1), 1.0, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("regular lane cost") {
  CHECK(perceived_cost_regular(linear(1, 0), 2.0, 0.0) == doctest::Approx(1.0));
  CHECK(perceived_cost_regular(linear(1, 0), 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(perceived_cost_regular(linear(1, 0), 1.0, 1.0) == doctest::Approx(1.5));
}

TEST_CASE("critical threshold") {
  CHECK(*critical_threshold(linear(1, 0), 1.0) == doctest::Approx(2.0));
  CHECK_FALSE(critical_threshold(linear(0, 0), 1.0).has_value());
  CHECK(*critical_threshold(linear(4, 0), 1.0) == doctest::Approx(0.5));
  CHECK_FALSE(critical_threshold(linear(1, 0), kInfinity).has_value());
}

TEST_CASE("effective cost branches") {
  const Edge e = linear(1, 0);
  auto below = effective_cost(e, 1.0, 1.0);
  CHECK(below.singleton());
  CHECK(below.lo == doctest::Approx(0.5));
  auto at = effective_cost(e, 2.0, 1.0);
  CHECK(at.lo == doctest::Approx(1.0));
  CHECK(at.hi == doctest::Approx(2.0));
  auto above = effective_cost(e, 3.0, 1.0);
  CHECK(above.singleton());
  CHECK(above.lo == doctest::Approx(2.5));
  // Disabled priority: always the averaged latency.
  CHECK(effective_cost(e, 3.0, kInfinity).lo == doctest::Approx(1.5));
}

TEST_CASE("effective cost matches lane costs away from the threshold") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.05, 3.0);
  for (int t = 0; t < 200; ++t) {
    const Edge e = linear(U(rng), U(rng) - 0.05);
    const double w = U(rng);
    const double theta = 2.0 * w / e.a;
    const double x = U(rng) * 2.0 * theta;
    if (std::abs(x - theta) < 1e-3) continue;
    const double expected = x < theta ? perceived_cost_regular(e, x, 0.0)
                                      : perceived_cost_priority(e, x, w);
    CHECK(effective_cost(e, x, w).lo == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("path cost sums series copies") {
  Instance two({"s", "m", "t"},
               {Edge{"x", 0, 1, 1, 0, 1}, Edge{"y", 1, 2, 1, 0, 1}},
               {Commodity{0, 2, 1.0}});
  ExtendedFlow f;
  f.edges = {LaneFlow{1, 0}, LaneFlow{1, 0}};
  f.by_commodity = {f.edges};
  const auto prices = PriceVector::uniform(2, 1.0);
  ExtendedPath p{{0, Lane::regular}, {1, Lane::regular}};
  CHECK(path_perceived_cost(two, prices, f, 0, p) == doctest::Approx(1.0));

  Instance consts({"s", "m", "t"},
                  {Edge{"x", 0, 1, 0, 1, 1}, Edge{"y", 1, 2, 0, 1, 1}},
                  {Commodity{0, 2, 1.0}});
  ExtendedFlow empty;
  empty.edges.assign(2, LaneFlow{});
  empty.by_commodity = {empty.edges};
  CHECK(path_perceived_cost(consts, prices, empty, 0, p) == doctest::Approx(2.0));

  // A compressed path of 2^i copies with every user in the priority lane.
  for (int i = 0; i < 6; ++i) {
    const double m = std::ldexp(1.0, i);
    Instance g({"s", "t"}, {Edge{"p", 0, 1, 2.0 / m, 0, m}}, {Commodity{0, 1, 1.0}});
    const double x = 0.3, w = 0.01;
    ExtendedFlow lane = single_lane_flow(0.0, x);
    const double c = path_perceived_cost(g, PriceVector::uniform(1, w), lane, 0,
                                         {{0, Lane::priority}});
    CHECK(c == doctest::Approx(x + m * w));
  }
}

TEST_CASE("path cost rejects disabled lanes and broken walks") {
  Instance g({"s", "t"}, {Edge{"e", 0, 1, 1, 0, 1}}, {Commodity{0, 1, 1.0}});
  ExtendedFlow f = single_lane_flow(1.0, 0.0);
  CHECK_THROWS_AS(path_perceived_cost(g, PriceVector::disabled(1), f, 0, {{0, Lane::priority}}),
                  InputError);
  CHECK_THROWS_AS(path_perceived_cost(g, PriceVector::disabled(1), f, 0, {}), InputError);
}

TEST_CASE("total cost") {
  const Instance pigou = gen_pigou(2.0);
  const std::vector<double> f{1.0, 1.0};
  CHECK(total_cost(pigou, f) == doctest::Approx(1.5));
  CHECK(total_cost(pigou, std::vector<double>{0.0, 0.0}) == 0.0);

  for (int k : {1, 4, 9}) {
    const Instance g = gen_gk({k, true});
    std::vector<double> x(g.num_edges(), 0.5);
    x[0] = 0.5 * (k + 1);
    CHECK(total_cost(g, x) == doctest::Approx(0.75 * (k + 1)));
  }
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(Instance({"s", "t"}, {Edge{"e", 0, 5, 1, 0, 1}}, {Commodity{0, 1, 1.0}}),
                  InputError);
  CHECK_THROWS_AS(Instance({"s", "t"}, {Edge{"e", 0, 1, -1, 0, 1}}, {Commodity{0, 1, 1.0}}),
                  InputError);
  CHECK_THROWS_AS(Instance({"s", "t"}, {Edge{"e", 0, 1, 1, 0, 1.5}}, {Commodity{0, 1, 1.0}}),
                  InputError);
  CHECK_THROWS_AS(Instance({"s", "t"}, {Edge{"e", 0, 1, 1, 0, 1}}, {Commodity{0, 1, -1.0}}),
                  InputError);
  // Sink unreachable.
  CHECK_THROWS_AS(Instance({"s", "t"}, {Edge{"e", 1, 0, 1, 0, 1}}, {Commodity{0, 1, 1.0}}),
                  InputError);
  CHECK_THROWS_AS(Instance({"s", "t"}, {Edge{"e", 0, 1, 1, 0, 1}, Edge{"e", 0, 1, 1, 0, 1}},
                           {Commodity{0, 1, 1.0}}),
                  InputError);
}

TEST_CASE("lexicographic id ranks") {
  Instance g({"s", "t"},
             {Edge{"b", 0, 1, 1, 0, 1}, Edge{"a", 0, 1, 1, 0, 1}, Edge{"c", 0, 1, 1, 0, 1}},
             {Commodity{0, 1, 1.0}});
  auto r = g.id_rank();
  CHECK(r[0] == 1);
  CHECK(r[1] == 0);
  CHECK(r[2] == 2);
}

TEST_CASE("feasibility check and path decomposition") {
  const Instance b = gen_braess(1.0, true);
  TotalFlow f;
  f.edges.assign(b.num_edges(), 0.0);
  const auto su = *b.find_edge("su"), uv = *b.find_edge("uv"), vt = *b.find_edge("vt");
  f.edges[su] = f.edges[uv] = f.edges[vt] = 1.0;
  f.by_commodity = {f.edges};
  CHECK_NOTHROW(check_feasible(b, f));
  auto paths = decompose_paths(b, 0, f.edges);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].flow == doctest::Approx(1.0));
  CHECK(paths[0].edges == std::vector<EdgeIndex>{su, uv, vt});

  f.edges[vt] = 0.5;
  f.by_commodity = {f.edges};
  CHECK_THROWS_AS(check_feasible(b, f), InputError);
}

TEST_CASE("single edge cost curve") {
  auto curve = edge_cost_curve(linear(1, 0), 1.0, 4.0, 41);
  REQUIRE(curve.threshold.has_value());
  CHECK(*curve.threshold == doctest::Approx(2.0));
  REQUIRE(curve.interval.has_value());
  CHECK(curve.interval->lo == doctest::Approx(1.0));
  CHECK(curve.interval->hi == doctest::Approx(2.0));
  for (auto [r, c] : curve.below) CHECK(c == doctest::Approx(0.5 * r));
  for (auto [r, c] : curve.above) CHECK(c == doctest::Approx(0.5 * r + 1.0));

  auto flat = edge_cost_curve(linear(0, 1), 1.0, 4.0, 5);
  CHECK_FALSE(flat.threshold.has_value());
  for (auto [r, c] : flat.below) CHECK(c == doctest::Approx(1.0));
}

}  // TEST_SUITE
