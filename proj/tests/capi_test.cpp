#include <doctest.h>

#include <cstring>
#include <string>

#include "json.hpp"
#include "prioroute/prioroute.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  pr_string_free(s);
  return out;
}

pr_instance* generate(const char* spec) {
  pr_instance* g = nullptr;
  REQUIRE(pr_generate(spec, &g, nullptr) == PR_OK);
  return g;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("generate and summarize") {
  pr_instance* g = generate(R"({"family": "gk", "k": 6, "compressed": true})");
  size_t nodes = 0, edges = 0;
  double demand = 0;
  CHECK(pr_instance_summary(g, &nodes, &edges, &demand) == PR_OK);
  CHECK(edges == 8);
  CHECK(demand == 7.0);
  pr_instance_free(g);

  pr_instance* bad = nullptr;
  CHECK(pr_generate(R"({"family": "nope"})", &bad, nullptr) == PR_INPUT_ERROR);
  CHECK(bad == nullptr);
  CHECK(std::strlen(pr_last_error()) > 0);
  CHECK(pr_generate("not json", &bad, nullptr) == PR_INPUT_ERROR);
}

TEST_CASE("Pigou price of anarchy through the C interface") {
  pr_instance* g = generate(R"({"family": "pigou", "r": 2})");
  pr_options o;
  pr_options_default(&o);
  pr_prices* marginal = nullptr;
  REQUIRE(pr_prices_parse(g, "marginal", &o, &marginal) == PR_OK);
  char* out = nullptr;
  REQUIRE(pr_poa(g, marginal, &o, &out) == PR_OK);
  auto j = json::parse(take(out));
  CHECK(j["poa"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));

  pr_prices* none = nullptr;
  REQUIRE(pr_prices_parse(g, "none", &o, &none) == PR_OK);
  REQUIRE(pr_poa(g, none, &o, &out) == PR_OK);
  j = json::parse(take(out));
  CHECK(j["poa"].get<double>() == doctest::Approx(4.0 / 3.0).epsilon(1e-6));

  pr_prices* bogus = nullptr;
  CHECK(pr_prices_parse(g, "sweep:0:1:5", &o, &bogus) == PR_INPUT_ERROR);
  CHECK(pr_prices_parse(g, "uniform:-1", &o, &bogus) == PR_INPUT_ERROR);
  CHECK(pr_prices_parse(g, "/no/such/prices.json", &o, &bogus) == PR_INPUT_ERROR);

  pr_prices_free(marginal);
  pr_prices_free(none);
  pr_instance_free(g);
}

TEST_CASE("solve and verify") {
  pr_instance* g = nullptr;
  pr_prices* p = nullptr;
  REQUIRE(pr_generate(R"({"family": "single_edge", "a": 1, "b": 0, "omega": 1, "r": 2})", &g,
                      &p) == PR_OK);
  REQUIRE(p != nullptr);
  pr_options o;
  pr_options_default(&o);
  char *js = nullptr, *table = nullptr;
  REQUIRE(pr_solve(g, p, &o, &js, &table) == PR_OK);
  const std::string flow = take(js);
  CHECK(take(table).find("1.5") != std::string::npos);
  auto j = json::parse(flow);
  CHECK(j["xi"]["e"].get<double>() == doctest::Approx(1.5));

  char* rep = nullptr;
  CHECK(pr_verify(g, p, flow.c_str(), 1e-6, &rep) == PR_OK);
  CHECK(json::parse(take(rep))["is_equilibrium"].get<bool>());
  CHECK(pr_verify(g, p, "{}", 1e-6, &rep) == PR_INPUT_ERROR);
  pr_prices_free(p);
  pr_instance_free(g);
}

TEST_CASE("sweep") {
  pr_instance* g = generate(R"({"family": "gk", "k": 3})");
  pr_options o;
  pr_options_default(&o);
  char *csv = nullptr, *svg = nullptr;
  REQUIRE(pr_sweep(g, 0.01, 2.0, 7, 1, &o, &csv, &svg) == PR_OK);
  const std::string text = take(csv);
  CHECK(text.rfind("omega,cost,poa,converged\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 8);
  CHECK(take(svg).find("</svg>") != std::string::npos);
  CHECK(pr_sweep(g, 2.0, 1.0, 7, 1, &o, &csv, nullptr) == PR_INPUT_ERROR);
  pr_instance_free(g);
}

TEST_CASE("figure one") {
  char *svg = nullptr, *csv = nullptr;
  REQUIRE(pr_figure1(1, 0, 1, 4, 41, &svg, &csv) == PR_OK);
  const std::string text = take(csv);
  CHECK(text.find("interval,2,1\n") != std::string::npos);
  CHECK(text.find("interval,2,2\n") != std::string::npos);
  CHECK(take(svg).find("</svg>") != std::string::npos);
  CHECK(pr_figure1(1, 0, 1, 4, 1, &svg, &csv) == PR_INPUT_ERROR);
}

TEST_CASE("instance json through the C interface") {
  pr_instance* g = generate(R"({"family": "braess"})");
  char* text = nullptr;
  REQUIRE(pr_instance_to_json(g, &text) == PR_OK);
  const std::string s = take(text);
  pr_instance* back = nullptr;
  REQUIRE(pr_instance_from_json(s.c_str(), &back) == PR_OK);
  REQUIRE(pr_instance_to_json(back, &text) == PR_OK);
  CHECK(take(text) == s);
  pr_instance_free(back);
  pr_instance_free(g);
  CHECK(pr_instance_load("/no/such/file.json", &back) == PR_INPUT_ERROR);
}

}  // TEST_SUITE
