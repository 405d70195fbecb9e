#include "prioroute/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include <Eigen/Dense>

#include "parallel.hpp"

namespace prioroute {

namespace {

// Single-valued effective cost off the critical band.
double branch_cost(const Edge& e, double x, double fee) {
  if (e.a <= 0.0) return e.b;
  auto theta = critical_threshold(e, fee);
  if (!theta || x < *theta) return e.latency(x);
  return e.latency(x) + fee;
}

std::vector<std::vector<PathFlow>> path_flows(const Instance& instance, const TotalFlow& flow) {
  if (flow.paths.size() == instance.num_commodities()) return flow.paths;
  std::vector<std::vector<PathFlow>> paths(instance.num_commodities());
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    paths[i] = decompose_paths(instance, i, flow.by_commodity.at(i));
  }
  return paths;
}

// Path cost c + coef . w in the scaled critical unknowns w.
struct AffineCost {
  double constant = 0.0;
  Eigen::VectorXd coef;
};

struct Halfspace {
  Eigen::VectorXd normal;  // unit length
  double offset = 0.0;     // normal . w >= offset
};

}  // namespace

LaneFlow split_critical_edge(const Edge& e, double fee, double xi) {
  auto theta = critical_threshold(e, fee);
  if (!theta) throw InputError("edge '" + e.id + "' has no critical threshold");
  const double lo = fee + e.b;
  const double hi = 2.0 * fee + e.b;
  const double slack = 1e-12 * std::max(1.0, hi);
  if (xi < lo - slack || xi > hi + slack) {
    throw InputError("edge cost outside the indifference interval of edge '" + e.id + "'");
  }
  const double v = std::clamp(2.0 * (xi - e.b - fee) / e.a, 0.0, *theta);
  return {*theta - v, v};
}

std::vector<EdgeRegime> classify_edges(const Instance& instance, const PriceVector& prices,
                                       std::span<const double> edge_flows,
                                       double critical_tolerance) {
  std::vector<EdgeRegime> regime(instance.num_edges(), EdgeRegime::disabled);
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    if (!prices.enabled(e)) continue;
    const Edge& edge = instance.edge(e);
    auto theta = critical_threshold(edge, prices.fee(e));
    if (!theta) {
      regime[e] = EdgeRegime::below;
    } else if (near_threshold(edge_flows[e], *theta, critical_tolerance)) {
      regime[e] = EdgeRegime::critical;
    } else {
      regime[e] = edge_flows[e] < *theta ? EdgeRegime::below : EdgeRegime::above;
    }
  }
  return regime;
}

ExtendedFlow split_flow(const Instance& instance, const PriceVector& prices,
                        const TotalFlow& flow, std::span<const double> xi,
                        std::span<const EdgeRegime> regime) {
  const std::size_t n = instance.num_edges();
  ExtendedFlow out;
  out.edges.resize(n);
  std::vector<double> priority_share(n, 0.0);
  for (EdgeIndex e = 0; e < n; ++e) {
    const double x = std::max(0.0, flow.edges[e]);
    switch (regime[e]) {
      case EdgeRegime::disabled:
      case EdgeRegime::below:
        out.edges[e] = {x, 0.0};
        break;
      case EdgeRegime::above:
        out.edges[e] = {0.0, x};
        priority_share[e] = 1.0;
        break;
      case EdgeRegime::critical: {
        const Edge& edge = instance.edge(e);
        const double v =
            std::min(x, split_critical_edge(edge, prices.fee(e), xi[e]).priority);
        out.edges[e] = {x - v, v};
        priority_share[e] = x > 0.0 ? v / x : 0.0;
        break;
      }
    }
  }
  out.by_commodity.assign(instance.num_commodities(), std::vector<LaneFlow>(n));
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    for (EdgeIndex e = 0; e < n; ++e) {
      const double f = std::max(0.0, flow.by_commodity[i][e]);
      const double v = f * priority_share[e];
      out.by_commodity[i][e] = {f - v, v};
    }
  }
  return out;
}

EdgeCosts recover_edge_costs(const Instance& instance, const PriceVector& prices,
                             const TotalFlow& flow, std::span<const EdgeIndex> critical,
                             std::span<const double> fallback, int max_cycles) {
  const std::size_t n = instance.num_edges();
  EdgeCosts out;
  out.xi.resize(n);
  for (EdgeIndex e = 0; e < n; ++e) {
    out.xi[e] = branch_cost(instance.edge(e), std::max(0.0, flow.edges[e]), prices.fee(e));
  }

  // Unknowns: critical edges with a nondegenerate interval, scaled so that
  // xi = fee + b + w * fee with w in [0, 1].
  std::vector<long> var(n, -1);
  std::vector<EdgeIndex> vars;
  for (EdgeIndex e : critical) {
    const double fee = prices.fee(e);
    out.xi[e] = fee + instance.edge(e).b;
    if (fee > 0.0 && var[e] < 0) {
      var[e] = static_cast<long>(vars.size());
      vars.push_back(e);
    }
  }
  const long C = static_cast<long>(vars.size());

  auto affine = [&](const std::vector<EdgeIndex>& path) {
    AffineCost c;
    c.coef = Eigen::VectorXd::Zero(C);
    for (EdgeIndex e : path) {
      const double m = instance.edge(e).series_count;
      c.constant += m * out.xi[e];
      if (var[e] >= 0) c.coef(var[e]) += m * prices.fee(e);
    }
    return c;
  };
  auto apply = [&](const Eigen::VectorXd& w) {
    std::vector<double> xi = out.xi;
    for (long j = 0; j < C; ++j) {
      const EdgeIndex e = vars[j];
      const double fee = prices.fee(e);
      xi[e] = fee + instance.edge(e).b + std::clamp(w(j), 0.0, 1.0) * fee;
    }
    return xi;
  };

  const auto paths = path_flows(instance, flow);
  struct Reference {
    CommodityIndex commodity;
    AffineCost cost;
  };
  std::vector<Reference> refs;
  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  double scale = 1.0;
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    const double r = instance.commodity(i).demand;
    if (r <= 0.0) continue;
    std::vector<AffineCost> used;
    for (const auto& p : paths[i]) {
      if (p.flow > 1e-10 * std::max(1.0, r)) used.push_back(affine(p.edges));
    }
    if (used.empty()) continue;
    std::size_t best = 0;
    for (std::size_t k = 1; k < used.size(); ++k) {
      if ((used[k].coef.array() != 0.0).count() < (used[best].coef.array() != 0.0).count()) {
        best = k;
      }
    }
    scale = std::max(scale, used[best].constant + used[best].coef.sum());
    for (std::size_t k = 0; k < used.size(); ++k) {
      if (k == best) continue;
      Eigen::VectorXd row = used[k].coef - used[best].coef;
      const double norm = row.norm();
      if (norm == 0.0) continue;
      eq_rows.push_back(row / norm);
      eq_rhs.push_back((used[best].constant - used[k].constant) / norm);
    }
    refs.push_back({i, used[best]});
  }

  std::vector<Halfspace> cuts;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(C, 0.5);
  bool feasible = true;
  const double tol = 1e-9 * scale;

  Eigen::MatrixXd A(static_cast<long>(eq_rows.size()), C);
  Eigen::VectorXd rhs(static_cast<long>(eq_rows.size()));
  for (std::size_t r = 0; r < eq_rows.size(); ++r) {
    A.row(static_cast<long>(r)) = eq_rows[r].transpose();
    rhs(static_cast<long>(r)) = eq_rhs[r];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  if (A.rows() > 0 && C > 0) cod.compute(A);

  for (int round = 0; round < 64 && C > 0; ++round) {
    // Dykstra's alternating projection onto box, affine set and cuts,
    // started from the interval midpoints.
    const std::size_t sets = 2 + cuts.size();
    std::vector<Eigen::VectorXd> incr(sets, Eigen::VectorXd::Zero(C));
    w = Eigen::VectorXd::Constant(C, 0.5);
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
      const Eigen::VectorXd start = w;
      for (std::size_t s = 0; s < sets; ++s) {
        Eigen::VectorXd y = w + incr[s];
        Eigen::VectorXd p;
        if (s == 0) {
          p = y.cwiseMax(0.0).cwiseMin(1.0);
        } else if (s == 1) {
          p = A.rows() > 0 ? Eigen::VectorXd(y - cod.solve(A * y - rhs)) : y;
        } else {
          const Halfspace& h = cuts[s - 2];
          const double slack = h.normal.dot(y) - h.offset;
          p = slack >= 0.0 ? y : Eigen::VectorXd(y - slack * h.normal);
        }
        incr[s] = y - p;
        w = p;
      }
      if ((w - start).lpNorm<Eigen::Infinity>() < 1e-14) break;
    }

    // Add the most violated shortest path of each commodity as a cut.
    const auto xi = apply(w);
    bool added = false;
    feasible = true;
    for (const auto& ref : refs) {
      const double lambda = ref.cost.constant + ref.cost.coef.dot(w.cwiseMax(0.0).cwiseMin(1.0));
      auto sp = shortest_path(instance, xi, ref.commodity);
      if (sp.cost >= lambda - tol) continue;
      AffineCost q = affine(sp.edges);
      Eigen::VectorXd row = q.coef - ref.cost.coef;
      const double norm = row.norm();
      if (norm == 0.0) {
        feasible = false;
        continue;
      }
      bool duplicate = false;
      for (const auto& c : cuts) {
        if ((c.normal - row / norm).lpNorm<Eigen::Infinity>() < 1e-15) duplicate = true;
      }
      if (duplicate) {
        feasible = false;
        continue;
      }
      cuts.push_back({row / norm, (ref.cost.constant - q.constant) / norm});
      added = true;
    }
    if (!added) break;
  }

  if (C > 0) {
    if (A.rows() > 0) {
      const Eigen::VectorXd clipped = w.cwiseMax(0.0).cwiseMin(1.0);
      if ((A * clipped - rhs).lpNorm<Eigen::Infinity>() > tol) feasible = false;
    }
    for (const auto& c : cuts) {
      if (c.normal.dot(w.cwiseMax(0.0).cwiseMin(1.0)) < c.offset - tol) feasible = false;
    }
    out.xi = apply(w);
    if (!feasible) {
      out.exact = false;
      if (fallback.size() == n) {
        for (EdgeIndex e : vars) {
          const double fee = prices.fee(e);
          const double lo = fee + instance.edge(e).b;
          out.xi[e] = std::clamp(fallback[e], lo, lo + fee);
        }
      }
    }
  }

  out.lambda.assign(instance.num_commodities(), 0.0);
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    out.lambda[i] = shortest_path(instance, out.xi, i).cost;
  }
  return out;
}

ExtendedEquilibrium solve_equilibrium(const Instance& instance, const PriceVector& prices,
                                      const EquilibriumOptions& options,
                                      const TotalFlow* warm_start) {
  if (prices.size() != instance.num_edges()) {
    throw InputError("price vector does not match the edge count");
  }
  if (options.smoothing_schedule.empty()) throw InputError("empty smoothing schedule");
  const std::size_t n = instance.num_edges();

  ExtendedEquilibrium eq;
  std::vector<EdgePotential> pots(n);
  TotalFlow current;
  const TotalFlow* warm = warm_start;
  for (double delta : options.smoothing_schedule) {
    for (EdgeIndex e = 0; e < n; ++e) {
      pots[e] = EdgePotential::equilibrium(instance.edge(e), prices.fee(e), delta);
    }
    auto res = minimize_potential(instance, pots, options.solve, warm);
    current = std::move(res.flow);
    warm = &current;
    const long before = eq.report.iterations;
    const double seconds = eq.report.seconds;
    auto history = std::move(eq.report.history);
    eq.report = std::move(res.report);
    eq.report.iterations += before;
    eq.report.seconds += seconds;
    history.insert(history.end(), eq.report.history.begin(), eq.report.history.end());
    eq.report.history = std::move(history);
  }

  eq.regime = classify_edges(instance, prices, current.edges, options.critical_tolerance);
  std::vector<EdgeIndex> critical;
  for (EdgeIndex e = 0; e < n; ++e) {
    if (eq.regime[e] == EdgeRegime::critical) critical.push_back(e);
  }
  const auto fallback = potential_gradient(pots, current.edges);
  auto costs = recover_edge_costs(instance, prices, current, critical, fallback,
                                  options.recovery_cycles);
  eq.xi = std::move(costs.xi);
  eq.lambda = std::move(costs.lambda);
  eq.flow = split_flow(instance, prices, current, eq.xi, eq.regime);
  eq.total = std::move(current);

  double scale = 1.0;
  for (double l : eq.lambda) scale = std::max(scale, l);
  auto report = verify_equilibrium(instance, prices, eq.flow, options.certify_epsilon * scale);
  eq.epsilon = report.violation;
  if (!report.is_equilibrium) {
    throw CertificationError("equilibrium certification failed: violation " +
                                 std::to_string(report.violation) + " after " +
                                 std::to_string(eq.report.iterations) + " iterations (" +
                                 to_string(eq.report.termination) + ")",
                             report);
  }
  return eq;
}

VerificationReport verify_equilibrium(const Instance& instance, const PriceVector& prices,
                                      const ExtendedFlow& flow, double epsilon) {
  const std::size_t n = instance.num_edges();
  if (flow.edges.size() != n || flow.by_commodity.size() != instance.num_commodities()) {
    throw InputError("extended flow does not match the instance");
  }
  TotalFlow totals;
  totals.edges.resize(n);
  for (EdgeIndex e = 0; e < n; ++e) {
    const LaneFlow& l = flow.edges[e];
    if (l.regular < -1e-9 || l.priority < -1e-9) throw InputError("negative lane flow");
    if (!prices.enabled(e) && l.priority > 1e-12) {
      throw InputError("priority flow on edge '" + instance.edge(e).id +
                       "' where priority is disabled");
    }
    totals.edges[e] = l.total();
  }
  for (const auto& fi : flow.by_commodity) {
    if (fi.size() != n) throw InputError("commodity lane flows do not match the edge count");
    std::vector<double> t(n);
    for (EdgeIndex e = 0; e < n; ++e) t[e] = fi[e].total();
    totals.by_commodity.push_back(std::move(t));
  }
  check_feasible(instance, totals);

  std::vector<double> cost_r(n), cost_v(n, kInfinity), cheapest(n);
  for (EdgeIndex e = 0; e < n; ++e) {
    const Edge& edge = instance.edge(e);
    const double fr = std::max(0.0, flow.edges[e].regular);
    const double fv = std::max(0.0, flow.edges[e].priority);
    cost_r[e] = perceived_cost_regular(edge, fr, fv);
    if (prices.enabled(e)) cost_v[e] = perceived_cost_priority(edge, fv, prices.fee(e));
    cheapest[e] = std::min(cost_r[e], cost_v[e]);
  }

  VerificationReport report;
  report.epsilon = epsilon;
  double worst = -kInfinity;
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    const double r = instance.commodity(i).demand;
    if (r <= 0.0) continue;
    const double used_floor = 1e-12 * std::max(1.0, r);
    auto sp = shortest_path(instance, cheapest, i);
    for (const auto& p : decompose_paths(instance, i, totals.by_commodity[i])) {
      double cost = 0.0;
      ExtendedPath laned;
      for (EdgeIndex e : p.edges) {
        const LaneFlow& l = flow.by_commodity[i][e];
        const bool reg = l.regular > used_floor;
        const bool pri = l.priority > used_floor;
        double c;
        Lane lane;
        if (reg && pri) {
          lane = cost_r[e] >= cost_v[e] ? Lane::regular : Lane::priority;
          c = std::max(cost_r[e], cost_v[e]);
        } else if (pri || (!reg && l.priority > l.regular)) {
          lane = Lane::priority;
          c = cost_v[e];
        } else {
          lane = Lane::regular;
          c = cost_r[e];
        }
        cost += instance.edge(e).series_count * c;
        laned.push_back({e, lane});
      }
      const double gap = cost - sp.cost;
      if (gap > worst) {
        worst = gap;
        report.commodity = i;
        report.used_path = std::move(laned);
        report.used_cost = cost;
        report.cheaper_cost = sp.cost;
        report.cheaper_path.clear();
        for (EdgeIndex e : sp.edges) {
          report.cheaper_path.push_back(
              {e, cost_v[e] < cost_r[e] ? Lane::priority : Lane::regular});
        }
      }
    }
  }
  report.violation = std::max(0.0, worst);
  report.is_equilibrium = report.violation <= epsilon;
  return report;
}

double vi_residual(const Instance& instance, const PriceVector& prices, const TotalFlow& flow,
                   std::span<const double> xi) {
  if (xi.size() != instance.num_edges() || prices.size() != instance.num_edges()) {
    throw InputError("edge cost vector does not match the edge count");
  }
  double residual = 0.0;
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    const double r = instance.commodity(i).demand;
    if (r > 0.0) residual += r * shortest_path(instance, xi, i).cost;
  }
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    residual -= instance.edge(e).series_count * xi[e] * flow.edges[e];
  }
  return residual;
}

std::vector<double> effective_costs(const Instance& instance, const PriceVector& prices,
                                    std::span<const double> edge_flows,
                                    double critical_tolerance) {
  std::vector<double> xi(instance.num_edges());
  for (EdgeIndex e = 0; e < xi.size(); ++e) {
    xi[e] = effective_cost(instance.edge(e), std::max(0.0, edge_flows[e]), prices.fee(e),
                           critical_tolerance)
                .midpoint();
  }
  return xi;
}

TotalFlow perturb_flow(const Instance& instance, const TotalFlow& flow,
                       std::span<const double> xi, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must lie in (0, 1]");
  const auto paths = path_flows(instance, flow);
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    const double r = instance.commodity(i).demand;
    if (r <= 0.0 || paths[i].empty()) continue;
    std::size_t heaviest = 0;
    for (std::size_t k = 1; k < paths[i].size(); ++k) {
      if (paths[i][k].flow > paths[i][heaviest].flow) heaviest = k;
    }
    const auto& from = paths[i][heaviest];
    double total = 1.0;
    for (EdgeIndex e = 0; e < xi.size(); ++e) total += instance.edge(e).series_count * xi[e];
    std::vector<double> costs(xi.begin(), xi.end());
    for (EdgeIndex e : from.edges) costs[e] += total;
    auto to = shortest_path(instance, costs, i);
    if (to.edges == from.edges) continue;

    const double moved = std::min(fraction * r, from.flow);
    TotalFlow out = flow;
    out.paths = paths;
    auto& list = out.paths[i];
    list[heaviest].flow -= moved;
    bool found = false;
    for (auto& p : list) {
      if (p.edges == to.edges) {
        p.flow += moved;
        found = true;
      }
    }
    if (!found) list.push_back({to.edges, moved});
    for (EdgeIndex e : from.edges) {
      out.edges[e] -= moved;
      out.by_commodity[i][e] -= moved;
    }
    for (EdgeIndex e : to.edges) {
      out.edges[e] += moved;
      out.by_commodity[i][e] += moved;
    }
    for (auto& x : out.edges) x = std::max(0.0, x);
    for (auto& x : out.by_commodity[i]) x = std::max(0.0, x);
    return out;
  }
  throw InputError("no commodity has an alternative path to perturb toward");
}

UniquenessReport uniqueness_probe(const Instance& instance, const PriceVector& prices,
                                  int starts, const EquilibriumOptions& options, int jobs) {
  if (starts < 1) throw InputError("need at least one start");
  std::vector<TotalFlow> flows(static_cast<std::size_t>(starts));
  std::vector<std::exception_ptr> errors(flows.size());
  detail::parallel_for(flows.size(), jobs, [&](std::size_t s) {
    try {
      EquilibriumOptions o = options;
      if (s > 0) o.solve.start_seed = s;
      flows[s] = solve_equilibrium(instance, prices, o).total;
    } catch (...) {
      errors[s] = std::current_exception();
    }
  });
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  UniquenessReport report;
  report.starts = starts;
  const bool strict = instance.all_strictly_increasing();
  if (strict) report.flow_deviation = 0.0;
  std::vector<double> cost(flows.size());
  for (std::size_t s = 0; s < flows.size(); ++s) cost[s] = total_cost(instance, flows[s].edges);
  const auto [lo, hi] = std::minmax_element(cost.begin(), cost.end());
  report.cost_deviation = *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    const Edge& edge = instance.edge(e);
    double lmin = kInfinity, lmax = -kInfinity, fmin = kInfinity, fmax = -kInfinity;
    for (const auto& f : flows) {
      lmin = std::min(lmin, edge.latency(f.edges[e]));
      lmax = std::max(lmax, edge.latency(f.edges[e]));
      fmin = std::min(fmin, f.edges[e]);
      fmax = std::max(fmax, f.edges[e]);
    }
    report.latency_deviation = std::max(report.latency_deviation, lmax - lmin);
    if (strict) report.flow_deviation = std::max(*report.flow_deviation, fmax - fmin);
  }
  return report;
}

}  // namespace prioroute
