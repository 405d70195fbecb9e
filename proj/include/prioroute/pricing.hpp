#pragma once

// Social optimum, marginal-cost priority fees, and uniform-fee evaluation.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prioroute/equilibrium.hpp"
#include "prioroute/model.hpp"

namespace prioroute {

struct SocialOptimum {
  TotalFlow flow;
  double cost = 0.0;
  SolveReport report;
};

SocialOptimum social_optimum(const Instance& instance, const SolveOptions& options = {});

/// fee_e = 0.5 * a_e * f*_e on every edge.
PriceVector marginal_cost_prices(const Instance& instance, std::span<const double> optimal_flow);

struct PoAReport {
  double equilibrium_cost = 0.0;
  double optimal_cost = 0.0;
  std::optional<double> ratio;  // none when the optimal cost is zero
  double revenue = 0.0;         // sum_e m_e fee_e fV_e
  PriceVector prices;
  ExtendedEquilibrium equilibrium;
};

/// The optimum may be passed in to avoid recomputing it.
PoAReport evaluate_prices(const Instance& instance, const PriceVector& prices,
                          const EquilibriumOptions& options = {},
                          const SocialOptimum* optimum = nullptr);

struct CurvePoint {
  double omega = 0.0;
  double cost = 0.0;
  double poa = 0.0;
  bool converged = false;
  std::string error;  // empty on success
};

/// Uniform fee on every edge (or on `subset` when given), evaluated
/// independently at each value. Failures are recorded per point.
std::vector<CurvePoint> uniform_price_curve(const Instance& instance,
                                            std::span<const double> omegas,
                                            const EquilibriumOptions& options = {},
                                            int jobs = 1,
                                            std::optional<std::vector<EdgeIndex>> subset = {});

struct SearchConfig {
  double lo = 0.0;
  double hi = 1.0;
  int points = 400;
  bool logarithmic = true;
  int refine_iterations = 40;
};

/// Grid of `points` values over [lo, hi]; logarithmic spacing needs lo > 0.
std::vector<double> price_grid(const SearchConfig& config);

/// Range used when no range is given: hi = max_e a_e * r_total and
/// lo = hi / 2^(K+3) with K = ceil(log2(edges * max_e m_e)), which reaches
/// below the smallest fee any threshold of the instance can matter at.
std::pair<double, double> default_sweep_range(const Instance& instance);

struct BestUniformPrice {
  double omega = 0.0;
  double cost = 0.0;
  PoAReport report;
  std::vector<CurvePoint> curve;
};

/// Grid sweep followed by golden-section refinement between the neighbours
/// of the best grid point. Reports the best value seen, not a global optimum.
BestUniformPrice best_uniform_price(const Instance& instance, const SearchConfig& config,
                                    const EquilibriumOptions& options = {}, int jobs = 1,
                                    std::optional<std::vector<EdgeIndex>> subset = {});

/// Uniform fee on `subset`; priority disabled elsewhere.
PoAReport restrict_priority_subset(const Instance& instance, std::span<const EdgeIndex> subset,
                                   double omega, const EquilibriumOptions& options = {});

}  // namespace prioroute
