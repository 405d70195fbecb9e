// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prioroute/equilibrium.hpp"
#include "prioroute/generators.hpp"
#include "prioroute/pricing.hpp"
#include "prioroute/prioroute.h"

using namespace prioroute;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

Instance random_instance(std::uint64_t seed) {
  RandomSpec spec;
  spec.seed = seed;
  if (seed % 2 == 0) {
    spec.topology = RandomSpec::Topology::layered;
    spec.extra_commodities = static_cast<int>(seed % 3);
  } else {
    spec.links = 3 + static_cast<int>(seed % 4);
  }
  return gen_random(spec);
}

// Per-edge fees with some lanes disabled, drawn independently of the
// instance generator.
PriceVector random_fees(const Instance& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  PriceVector p(g.num_edges());
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    if (U(rng) < 0.2) continue;
    p.set_fee(e, 0.5 * U(rng) * std::max(0.1, g.edge(e).a) * g.total_demand());
  }
  return p;
}

// ---------------------------------------------------------------------------

Outcome single_edge_figure() {
  Outcome out;
  const double tol = 1e-6;
  for (double r : {0.5, 1.9, 2.1, 3.0}) {
    auto inst = gen_single_edge(1, 0, 1, r);
    auto eq = solve_equilibrium(inst.instance, inst.prices);
    const LaneFlow& f = eq.flow.edges[0];
    if (r < 2) {
      out.require(eq.regime[0] == EdgeRegime::below && f.priority <= tol &&
                      std::abs(f.regular - r) <= tol && std::abs(eq.xi[0] - 0.5 * r) <= tol,
                  "r=" + fmt("%g", r) + " is not all-regular");
    } else {
      out.require(eq.regime[0] == EdgeRegime::above && f.regular <= tol &&
                      std::abs(f.priority - r) <= tol && std::abs(eq.xi[0] - (0.5 * r + 1)) <= tol,
                  "r=" + fmt("%g", r) + " is not all-priority");
    }
  }
  auto at = gen_single_edge(1, 0, 1, 2.0);
  auto eq = solve_equilibrium(at.instance, at.prices);
  const Edge& e = at.instance.edge(0);
  const LaneFlow& f = eq.flow.edges[0];
  const double lv = perceived_cost_priority(e, f.priority, 1.0);
  const double lr = perceived_cost_regular(e, f.regular, f.priority);
  out.require(eq.regime[0] == EdgeRegime::critical, "r=2 not classified critical");
  out.require(eq.epsilon <= tol, "r=2 split not certified");
  out.require(std::abs(lv - lr) <= tol, "r=2 lanes disagree");
  out.require(lv >= 1 - tol && lv <= 2 + tol, "r=2 cost outside [1,2]");

  char *svg = nullptr, *csv = nullptr;
  if (pr_figure1(1, 0, 1, 4, 81, &svg, &csv) != PR_OK) {
    out.require(false, std::string("figure1 failed: ") + pr_last_error());
    return out;
  }
  std::istringstream in(csv);
  pr_string_free(csv);
  pr_string_free(svg);
  std::string line;
  std::getline(in, line);
  int below = 0, above = 0;
  std::vector<double> interval;
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.rfind(',');
    const std::string branch = line.substr(0, c1);
    const double r = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const double c = std::stod(line.substr(c2 + 1));
    if (branch == "below") {
      ++below;
      out.require(r < 2 && std::abs(c - 0.5 * r) <= tol, "bad point on the lower branch");
    } else if (branch == "above") {
      ++above;
      out.require(r > 2 && std::abs(c - (0.5 * r + 1)) <= tol, "bad point on the upper branch");
    } else {
      out.require(std::abs(r - 2) <= tol, "interval not at r=2");
      interval.push_back(c);
    }
  }
  out.require(below > 0 && above > 0, "missing branch");
  out.require(interval.size() == 2 && std::abs(interval[0] - 1) <= tol &&
                  std::abs(interval[1] - 2) <= tol,
              "interval endpoints are not (2,1)-(2,2)");
  if (out.pass) out.detail = "regimes at r=0.5,1.9,2.1,3; split at r=2 with cost " + fmt("%.6f", lv);
  return out;
}

Outcome marginal_pricing() {
  Outcome out;
  std::vector<std::pair<std::string, Instance>> cases;
  cases.emplace_back("pigou", gen_pigou(2.0));
  cases.emplace_back("braess", gen_braess(1.0, true));
  cases.emplace_back("G_6", gen_gk({6, true}));
  for (std::uint64_t s = 1; s <= 20; ++s) cases.emplace_back("seed " + std::to_string(s), random_instance(s));
  double worst_flow = 0.0, worst_cost = 0.0;
  for (auto& [name, g] : cases) {
    auto opt = social_optimum(g);
    auto eq = solve_equilibrium(g, marginal_cost_prices(g, opt.flow.edges));
    double dflow = 0.0;
    for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
      if (g.edge(e).a > 0) dflow = std::max(dflow, std::abs(eq.total.edges[e] - opt.flow.edges[e]));
    }
    const double dcost = std::abs(total_cost(g, eq.total) / opt.cost - 1.0);
    worst_flow = std::max(worst_flow, dflow);
    worst_cost = std::max(worst_cost, dcost);
    out.require(dflow <= 1e-5, name + ": flow deviation " + fmt("%.3g", dflow));
    out.require(dcost <= 1e-6, name + ": cost ratio off by " + fmt("%.3g", dcost));
  }
  if (out.pass) {
    out.detail = std::to_string(cases.size()) + " instances, max flow dev " +
                 fmt("%.2g", worst_flow) + ", max cost dev " + fmt("%.2g", worst_cost);
  }
  return out;
}

Outcome gk_lower_bound() {
  Outcome out;
  struct Run {
    int k;
    bool compressed;
    std::vector<CurvePoint> curve;
  };
  std::vector<Run> runs{{12, false, {}}, {12, true, {}}, {200, true, {}}};
  double bound200 = 0.0;
  std::string summary;
  for (auto& run : runs) {
    const Instance g = gen_gk({run.k, run.compressed});
    SearchConfig cfg;
    cfg.lo = std::ldexp(1.0, -(run.k + 2));
    cfg.hi = 4.0;
    cfg.points = 400;
    const auto grid = price_grid(cfg);
    run.curve = uniform_price_curve(g, grid, {}, jobs());
    double min_cost = kInfinity, min_poa = kInfinity, worst = 0.0;
    int compared = 0;
    const std::string name = "G_" + std::to_string(run.k) + (run.compressed ? "c" : "e");
    for (const auto& pt : run.curve) {
      out.require(pt.error.empty() && pt.converged,
                  name + " failed at fee " + fmt("%.6g", pt.omega) + " " + pt.error);
      if (!pt.error.empty()) continue;
      min_cost = std::min(min_cost, pt.cost);
      min_poa = std::min(min_poa, pt.poa);
      bool kink = false;
      for (int i = 0; i <= run.k + 2; ++i) {
        if (std::abs(pt.omega * std::ldexp(1.0, i) - 1.0) <= 1e-6) kink = true;
      }
      if (kink) continue;
      ++compared;
      const double c = gk_closed_form_cost(run.k, pt.omega);
      const double rel = std::abs(c - pt.cost) / c;
      worst = std::max(worst, rel);
      out.require(rel <= 1e-4, name + " closed form off by " + fmt("%.3g", rel) + " at fee " +
                                   fmt("%.6g", pt.omega));
    }
    out.require(min_cost >= run.k - 2, name + " minimum cost " + fmt("%.6f", min_cost));
    const double certified = (run.k - 2) / (0.75 * (run.k + 1));
    out.require(min_poa >= certified - 1e-9, name + " sweep PoA below " + fmt("%.6f", certified));
    if (run.k == 200) bound200 = min_poa;
    summary += name + " min " + fmt("%.4f", min_cost) + " (" + std::to_string(compared) +
               " pts vs closed form, max rel " + fmt("%.1e", worst) + "); ";
  }
  for (std::size_t p = 0; p < runs[0].curve.size(); ++p) {
    const double a = runs[0].curve[p].cost, b = runs[1].curve[p].cost;
    out.require(std::abs(a - b) <= 1e-6 * b, "G_12 expanded and compressed disagree at fee " +
                                                  fmt("%.6g", runs[0].curve[p].omega));
  }
  out.require(bound200 >= 1.313, "G_200 sweep PoA " + fmt("%.6f", bound200));
  if (out.pass) out.detail = summary + "G_200 PoA >= " + fmt("%.6f", bound200);
  return out;
}

Outcome uniqueness() {
  Outcome out;
  std::vector<std::tuple<std::string, Instance, PriceVector>> cases;
  {
    const Instance p = gen_pigou(2.0);
    cases.emplace_back("pigou", p, marginal_cost_prices(p, std::vector<double>{1.0, 1.0}));
    const Instance b = gen_braess(1.0, true);
    cases.emplace_back("braess", b, PriceVector::uniform(b.num_edges(), 0.1));
  }
  for (std::uint64_t s = 1; s <= 20; ++s) {
    Instance g = random_instance(s);
    PriceVector p = random_fees(g, s);
    cases.emplace_back("seed " + std::to_string(s), std::move(g), std::move(p));
  }
  double lat = 0.0, cost = 0.0, flow = 0.0;
  int strict = 0;
  for (auto& [name, g, p] : cases) {
    auto rep = uniqueness_probe(g, p, 5, {}, jobs());
    lat = std::max(lat, rep.latency_deviation);
    cost = std::max(cost, rep.cost_deviation);
    out.require(rep.latency_deviation <= 1e-5, name + ": latency deviation " +
                                                    fmt("%.3g", rep.latency_deviation));
    out.require(rep.cost_deviation <= 1e-5, name + ": cost deviation " +
                                                fmt("%.3g", rep.cost_deviation));
    if (rep.flow_deviation) {
      ++strict;
      flow = std::max(flow, *rep.flow_deviation);
      out.require(*rep.flow_deviation <= 1e-5, name + ": flow deviation " +
                                                   fmt("%.3g", *rep.flow_deviation));
    }
  }
  if (out.pass) {
    out.detail = std::to_string(cases.size()) + " instances x 5 starts, latency dev " +
                 fmt("%.2g", lat) + ", cost dev " + fmt("%.2g", cost) + ", flow dev " +
                 fmt("%.2g", flow) + " on " + std::to_string(strict) + " strictly increasing";
  }
  return out;
}

Outcome vi_residuals() {
  Outcome out;
  std::vector<std::tuple<std::string, Instance, PriceVector>> cases;
  {
    const Instance p = gen_pigou(2.0);
    cases.emplace_back("pigou marginal", p, marginal_cost_prices(p, std::vector<double>{1.0, 1.0}));
    cases.emplace_back("pigou off", p, PriceVector::disabled(2));
    const Instance b = gen_braess(1.0, true);
    cases.emplace_back("braess", b, PriceVector::uniform(b.num_edges(), 0.0));
    const Instance g6 = gen_gk({6, true});
    cases.emplace_back("G_6", g6, PriceVector::uniform(g6.num_edges(), 0.03));
    cases.emplace_back("G_6 marginal", g6, marginal_cost_prices(g6, social_optimum(g6).flow.edges));
  }
  for (std::uint64_t s = 1; s <= 20; ++s) {
    Instance g = random_instance(s);
    PriceVector p = random_fees(g, s);
    cases.emplace_back("seed " + std::to_string(s), std::move(g), std::move(p));
  }
  double worst_eq = kInfinity, worst_pert = -kInfinity;
  int perturbed = 0;
  for (auto& [name, g, p] : cases) {
    auto eq = solve_equilibrium(g, p);
    const double c = total_cost(g, eq.total);
    const double res = vi_residual(g, p, eq.total, eq.xi);
    worst_eq = std::min(worst_eq, res / (1 + c));
    out.require(res >= -1e-6 * (1 + c), name + ": equilibrium residual " + fmt("%.3g", res));
    auto moved = perturb_flow(g, eq.total, eq.xi, 0.05);
    const double pres = vi_residual(g, p, moved, effective_costs(g, p, moved.edges));
    ++perturbed;
    worst_pert = std::max(worst_pert, pres);
    out.require(pres < -1e-4, name + ": perturbed residual " + fmt("%.3g", pres));
  }
  if (out.pass) {
    out.detail = std::to_string(cases.size()) + " equilibria, min residual/(1+C) " +
                 fmt("%.2g", worst_eq) + "; " + std::to_string(perturbed) +
                 " perturbations, max residual " + fmt("%.3g", worst_pert);
  }
  return out;
}

Outcome oracle_equivalence() {
  Outcome out;
  std::vector<std::tuple<std::string, Instance, PriceVector>> cases;
  for (double r : {1.0, 2.0, 3.0}) {
    auto s = gen_single_edge(1, 0, 1, r);
    cases.emplace_back("single r=" + fmt("%g", r), s.instance, s.prices);
  }
  const Instance pigou = gen_pigou(2.0);
  cases.emplace_back("pigou marginal", pigou,
                     marginal_cost_prices(pigou, std::vector<double>{1.0, 1.0}));
  cases.emplace_back("pigou zero", pigou, PriceVector::uniform(2, 0.0));
  cases.emplace_back("pigou off", pigou, PriceVector::disabled(2));
  cases.emplace_back("pigou 0.3", pigou, PriceVector::uniform(2, 0.3));
  for (std::uint64_t s = 1; s <= 4; ++s) {
    RandomSpec spec;
    spec.seed = 40 + s;
    spec.links = 3;
    const Instance g = gen_random(spec);
    cases.emplace_back("3 links seed " + std::to_string(spec.seed), g,
                       PriceVector::uniform(3, 0.15 * s));
  }
  for (std::uint64_t s = 1; s <= 2; ++s) {
    RandomSpec spec;
    spec.seed = 60 + s;
    spec.links = 4;
    spec.demand_lo = spec.demand_hi = 1.0;
    const Instance g = gen_random(spec);
    cases.emplace_back("4 links seed " + std::to_string(spec.seed), g, random_fees(g, spec.seed));
  }
  double worst = 0.0;
  for (auto& [name, g, p] : cases) {
    auto eq = solve_equilibrium(g, p);
    auto bf = brute_force_equilibrium(g, p, 1e-3, jobs());
    const double d = std::abs(total_cost(g, eq.total) - bf.cost);
    worst = std::max(worst, d);
    out.require(d <= 1e-2, name + ": cost differs by " + fmt("%.3g", d));
  }
  if (out.pass) {
    out.detail = std::to_string(cases.size()) + " parallel-link instances, max |diff| " +
                 fmt("%.2g", worst);
  }
  return out;
}

Outcome observation_one() {
  Outcome out;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> A(0.05, 5.0), B(0.0, 3.0), W(0.01, 3.0), U(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Edge e{"e", 0, 1, A(rng), B(rng), 1.0};
    const double w = W(rng);
    const double theta = *critical_threshold(e, w);
    for (int s = 0; s < 10; ++s) {
      const double fv = U(rng) * theta;
      const double fr = theta - fv;
      const double lv = perceived_cost_priority(e, fv, w);
      const double lr = perceived_cost_regular(e, fr, fv);
      worst = std::max(worst, std::abs(lv - lr));
      out.require(std::abs(lv - lr) <= 1e-12, "lanes differ by " + fmt("%.3g", lv - lr));
      out.require(lv >= w + e.b - 1e-12 && lv <= 2 * w + e.b + 1e-12, "cost outside the interval");
      // The split recovered from that cost is the same split.
      const LaneFlow back = split_critical_edge(e, w, lv);
      out.require(std::abs(back.priority - fv) <= 1e-9 * std::max(1.0, theta),
                  "split does not round-trip");
    }
  }
  if (out.pass) out.detail = "1000 splits, max |lV - lR| " + fmt("%.2g", worst);
  return out;
}

Outcome classical_bound() {
  Outcome out;
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= 50; ++s) {
    RandomSpec spec;
    spec.seed = 1000 + s;
    spec.b_lo = 0.0;
    spec.b_hi = s % 5 == 0 ? 0.2 : 3.0;
    if (s % 2 == 0) {
      spec.topology = RandomSpec::Topology::layered;
      spec.extra_commodities = static_cast<int>(s % 3);
    } else {
      spec.links = 2 + static_cast<int>(s % 5);
    }
    const Instance g = gen_random(spec);
    auto rep = evaluate_prices(g, PriceVector::disabled(g.num_edges()));
    const double poa = rep.ratio.value_or(1.0);
    worst = std::max(worst, poa);
    out.require(poa <= 4.0 / 3.0 + 1e-3, "seed " + std::to_string(spec.seed) + ": PoA " +
                                             fmt("%.6f", poa));
  }
  if (out.pass) out.detail = "50 instances, max PoA " + fmt("%.6f", worst);
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit;  // seconds
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "single edge regimes and figure 1", 1.0, single_edge_figure},
      {2, "marginal-cost fees reach the optimum", 30.0, marginal_pricing},
      {3, "uniform-fee lower bound on G_k", 300.0, gk_lower_bound},
      {4, "equilibrium uniqueness across starts", 60.0, uniqueness},
      {5, "variational inequality residuals", 30.0, vi_residuals},
      {6, "brute-force oracle agreement", 120.0, oracle_equivalence},
      {7, "lane indifference at the threshold", 1.0, observation_one},
      {8, "PoA without priority at most 4/3", 60.0, classical_bound},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && secs > c.limit) {
      o.pass = false;
      o.detail = "took " + fmt("%.1f", secs) + " s, limit " + fmt("%.0f", c.limit) + " s";
    }
    failed += !o.pass;
    std::printf("%s [%d] %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
