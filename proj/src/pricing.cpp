#include "prioroute/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"

namespace prioroute {

SocialOptimum social_optimum(const Instance& instance, const SolveOptions& options) {
  std::vector<EdgePotential> pots;
  pots.reserve(instance.num_edges());
  for (const Edge& e : instance.edges()) pots.push_back(EdgePotential::social(e));
  auto res = minimize_potential(instance, pots, options);
  if (!res.report.converged()) {
    throw SolverError(std::string("social optimum did not converge: ") +
                      to_string(res.report.termination));
  }
  SocialOptimum opt;
  opt.cost = total_cost(instance, res.flow.edges);
  opt.flow = std::move(res.flow);
  opt.report = std::move(res.report);
  return opt;
}

PriceVector marginal_cost_prices(const Instance& instance, std::span<const double> optimal_flow) {
  if (optimal_flow.size() != instance.num_edges()) {
    throw InputError("flow vector size does not match the edge count");
  }
  PriceVector p(instance.num_edges());
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    p.set_fee(e, 0.5 * instance.edge(e).a * std::max(0.0, optimal_flow[e]));
  }
  return p;
}

PoAReport evaluate_prices(const Instance& instance, const PriceVector& prices,
                          const EquilibriumOptions& options, const SocialOptimum* optimum) {
  std::optional<SocialOptimum> own;
  if (!optimum) {
    own = social_optimum(instance, options.solve);
    optimum = &*own;
  }
  PoAReport report;
  report.prices = prices;
  report.equilibrium = solve_equilibrium(instance, prices, options);
  report.equilibrium_cost = total_cost(instance, report.equilibrium.total.edges);
  report.optimal_cost = optimum->cost;
  if (report.optimal_cost > 0.0) report.ratio = report.equilibrium_cost / report.optimal_cost;
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    if (prices.enabled(e)) {
      report.revenue += instance.edge(e).series_count * prices.fee(e) *
                        report.equilibrium.flow.edges[e].priority;
    }
  }
  return report;
}

namespace {

PriceVector uniform_prices(const Instance& instance, double omega,
                           const std::optional<std::vector<EdgeIndex>>& subset) {
  if (subset) return PriceVector::uniform_on(instance.num_edges(), *subset, omega);
  return PriceVector::uniform(instance.num_edges(), omega);
}

CurvePoint evaluate_point(const Instance& instance, double omega,
                          const EquilibriumOptions& options, const SocialOptimum& optimum,
                          const std::optional<std::vector<EdgeIndex>>& subset) {
  CurvePoint pt;
  pt.omega = omega;
  try {
    auto report = evaluate_prices(instance, uniform_prices(instance, omega, subset), options,
                                  &optimum);
    pt.cost = report.equilibrium_cost;
    pt.poa = report.ratio.value_or(std::numeric_limits<double>::quiet_NaN());
    pt.converged = report.equilibrium.report.converged();
  } catch (const Error& err) {
    pt.cost = std::numeric_limits<double>::quiet_NaN();
    pt.poa = std::numeric_limits<double>::quiet_NaN();
    pt.error = err.what();
  }
  return pt;
}

}  // namespace

std::vector<CurvePoint> uniform_price_curve(const Instance& instance,
                                            std::span<const double> omegas,
                                            const EquilibriumOptions& options, int jobs,
                                            std::optional<std::vector<EdgeIndex>> subset) {
  for (double w : omegas) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("fees must be finite and >= 0");
  }
  if (subset) {
    for (EdgeIndex e : *subset) {
      if (e >= instance.num_edges()) throw InputError("unknown edge in priced subset");
    }
  }
  const auto optimum = social_optimum(instance, options.solve);
  std::vector<CurvePoint> curve(omegas.size());
  detail::parallel_for(omegas.size(), jobs, [&](std::size_t k) {
    curve[k] = evaluate_point(instance, omegas[k], options, optimum, subset);
  });
  return curve;
}

std::vector<double> price_grid(const SearchConfig& config) {
  if (config.points < 1) throw InputError("grid needs at least one point");
  if (!(config.lo >= 0.0) || !(config.hi >= config.lo) || !std::isfinite(config.hi)) {
    throw InputError("price range must satisfy 0 <= lo <= hi");
  }
  if (config.logarithmic && !(config.lo > 0.0)) {
    throw InputError("logarithmic grid needs lo > 0");
  }
  std::vector<double> grid(static_cast<std::size_t>(config.points));
  if (config.points == 1) {
    grid[0] = config.lo;
    return grid;
  }
  for (int k = 0; k < config.points; ++k) {
    const double t = static_cast<double>(k) / (config.points - 1);
    grid[k] = config.logarithmic
                  ? std::exp(std::log(config.lo) + t * (std::log(config.hi) - std::log(config.lo)))
                  : config.lo + t * (config.hi - config.lo);
  }
  grid.front() = config.lo;
  grid.back() = config.hi;
  return grid;
}

std::pair<double, double> default_sweep_range(const Instance& instance) {
  double max_a = 0.0, max_m = 1.0;
  for (const Edge& e : instance.edges()) {
    max_a = std::max(max_a, e.a);
    max_m = std::max(max_m, e.series_count);
  }
  const double hi = max_a * instance.total_demand();
  if (!(hi > 0.0)) return {0.0, 1.0};
  const double K =
      std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(1, instance.num_edges()))) +
                std::log2(max_m));
  return {std::ldexp(hi, -static_cast<int>(K) - 3), hi};
}

BestUniformPrice best_uniform_price(const Instance& instance, const SearchConfig& config,
                                    const EquilibriumOptions& options, int jobs,
                                    std::optional<std::vector<EdgeIndex>> subset) {
  const auto grid = price_grid(config);
  BestUniformPrice best;
  best.curve = uniform_price_curve(instance, grid, options, jobs, subset);
  std::size_t arg = grid.size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& pt = best.curve[k];
    if (!pt.error.empty()) continue;
    if (arg == grid.size() || pt.cost < best.curve[arg].cost) arg = k;
  }
  if (arg == grid.size()) throw SolverError("every grid point failed");
  best.omega = grid[arg];
  best.cost = best.curve[arg].cost;

  if (grid.size() >= 2 && config.refine_iterations > 0) {
    const auto optimum = social_optimum(instance, options.solve);
    const bool log = config.logarithmic;
    auto to = [&](double w) { return log ? std::log(w) : w; };
    auto from = [&](double u) { return log ? std::exp(u) : u; };
    double a = to(grid[arg == 0 ? 0 : arg - 1]);
    double b = to(grid[std::min(arg + 1, grid.size() - 1)]);
    auto f = [&](double u) {
      const double w = from(u);
      auto pt = evaluate_point(instance, w, options, optimum, subset);
      const double c = pt.error.empty() ? pt.cost : std::numeric_limits<double>::infinity();
      if (c < best.cost) {
        best.cost = c;
        best.omega = w;
      }
      return c;
    };
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < config.refine_iterations && b - a > 1e-12 * (1.0 + std::abs(a)); ++it) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = f(d);
      }
    }
  }
  best.report = evaluate_prices(instance, uniform_prices(instance, best.omega, subset), options);
  best.cost = best.report.equilibrium_cost;
  return best;
}

PoAReport restrict_priority_subset(const Instance& instance, std::span<const EdgeIndex> subset,
                                   double omega, const EquilibriumOptions& options) {
  return evaluate_prices(instance, PriceVector::uniform_on(instance.num_edges(), subset, omega),
                         options);
}

}  // namespace prioroute
