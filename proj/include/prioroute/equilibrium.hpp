#pragma once

// Equilibria of the priced game: total flows from the smoothed potential,
// equilibrium edge costs xi, lane splits, and a posteriori certification.

#include <optional>
#include <vector>

#include "prioroute/model.hpp"
#include "prioroute/solver.hpp"

namespace prioroute {

struct EquilibriumOptions {
  double critical_tolerance = kDefaultCriticalTolerance;
  /// Ramp widths relative to each threshold, solved in order with warm
  /// starts. The last width must sit inside the critical band.
  std::vector<double> smoothing_schedule{1e-4, 1e-6, 1e-8};
  SolveOptions solve;
  /// Largest accepted Wardrop violation, scaled by max(1, max_i lambda_i).
  double certify_epsilon = 1e-6;
  int recovery_cycles = 20000;
};

enum class EdgeRegime { disabled, below, critical, above };

struct ExtendedEquilibrium {
  ExtendedFlow flow;
  TotalFlow total;
  std::vector<double> xi;
  std::vector<double> lambda;
  std::vector<EdgeRegime> regime;
  double epsilon = 0.0;  // certified Wardrop slack
  SolveReport report;
};

struct VerificationReport {
  bool is_equilibrium = true;
  double violation = 0.0;
  double epsilon = 0.0;
  std::optional<CommodityIndex> commodity;
  ExtendedPath used_path;
  double used_cost = 0.0;
  ExtendedPath cheaper_path;
  double cheaper_cost = 0.0;
};

class CertificationError : public SolverError {
 public:
  CertificationError(const std::string& what, VerificationReport report)
      : SolverError(what), report_(std::move(report)) {}
  const VerificationReport& report() const { return report_; }

 private:
  VerificationReport report_;
};

struct EdgeCosts {
  std::vector<double> xi;
  std::vector<double> lambda;
  bool exact = true;  // false when the fallback selection was used
};

/// Equilibrium edge costs given the total flow. Edges in `critical` take a
/// value in [fee + b, 2 fee + b] chosen so that every used path of a
/// commodity costs lambda_i and no path costs less; among feasible choices
/// the one closest to the interval midpoints (measured in units of the
/// interval width) is returned. `fallback` supplies values used when the
/// feasibility problem cannot be solved to tolerance.
EdgeCosts recover_edge_costs(const Instance& instance, const PriceVector& prices,
                             const TotalFlow& flow, std::span<const EdgeIndex> critical,
                             std::span<const double> fallback = {},
                             int max_cycles = 20000);

/// Lane split of a critical edge at which both lanes cost exactly xi.
LaneFlow split_critical_edge(const Edge& e, double fee, double xi);

/// Per-edge regime of a total flow, with snapping inside the critical band.
std::vector<EdgeRegime> classify_edges(const Instance& instance, const PriceVector& prices,
                                       std::span<const double> edge_flows,
                                       double critical_tolerance = kDefaultCriticalTolerance);

/// Lane flows for a total flow and its edge costs; commodities share each
/// edge's split in proportion to their flow.
ExtendedFlow split_flow(const Instance& instance, const PriceVector& prices,
                        const TotalFlow& flow, std::span<const double> xi,
                        std::span<const EdgeRegime> regime);

ExtendedEquilibrium solve_equilibrium(const Instance& instance, const PriceVector& prices,
                                      const EquilibriumOptions& options = {},
                                      const TotalFlow* warm_start = nullptr);

/// Checks the Wardrop condition on the extended network. Throws InputError
/// when the flow is infeasible or uses a disabled priority lane.
VerificationReport verify_equilibrium(const Instance& instance, const PriceVector& prices,
                                      const ExtendedFlow& flow, double epsilon);

/// min over feasible f of <m xi, f> - <m xi, f_t>; nonnegative exactly at
/// solutions of the variational inequality.
double vi_residual(const Instance& instance, const PriceVector& prices, const TotalFlow& flow,
                   std::span<const double> xi);

/// Effective costs at a flow, midpoint on critical edges.
std::vector<double> effective_costs(const Instance& instance, const PriceVector& prices,
                                    std::span<const double> edge_flows,
                                    double critical_tolerance = kDefaultCriticalTolerance);

/// Moves `fraction` of one commodity's demand from its heaviest used path
/// to the cheapest path that avoids as much of it as possible.
TotalFlow perturb_flow(const Instance& instance, const TotalFlow& flow,
                       std::span<const double> xi, double fraction = 0.05);

struct UniquenessReport {
  int starts = 0;
  double latency_deviation = 0.0;
  double cost_deviation = 0.0;       // relative
  std::optional<double> flow_deviation;  // only with every a_e > 0
};

/// Re-solves from `starts` different initial flows and tie-break orders and
/// compares edge latencies, total costs and (when defined) total flows.
UniquenessReport uniqueness_probe(const Instance& instance, const PriceVector& prices,
                                  int starts, const EquilibriumOptions& options = {},
                                  int jobs = 1);

}  // namespace prioroute
