#pragma once

// Convex flow optimization over the multicommodity flow polytope: a
// shortest-path oracle and a minimizer for separable potentials whose
// per-edge derivative is piecewise linear with at most one (possibly
// smoothed) upward jump.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prioroute/model.hpp"

namespace prioroute {

/// Per-copy potential of one edge. Its derivative is
///   slope * x + offset + jump * s(x)
/// where s steps from 0 to 1 at `kink`. With smoothing > 0 the step is a
/// linear ramp on [kink - smoothing, kink]; with smoothing == 0 it is a jump
/// and derivative() returns the left value at the kink itself.
struct EdgePotential {
  double slope = 0.0;
  double offset = 0.0;
  double kink = kInfinity;
  double jump = 0.0;
  double smoothing = 0.0;

  /// 0.5*a*x^2 + b*x, whose derivative a*x + b is the marginal social cost.
  static EdgePotential social(const Edge& e);
  /// Integral of the effective-cost selection 0.5*a*x + b (+ fee above the
  /// threshold 2*fee/a). `relative_smoothing` scales the ramp width by the
  /// threshold.
  static EdgePotential equilibrium(const Edge& e, double fee, double relative_smoothing);

  bool has_kink() const { return kink != kInfinity && jump > 0.0; }
  double value(double x) const;
  double derivative(double x) const;
  /// Slope of the derivative on the piece containing x; at a breakpoint the
  /// right piece, or the left one when `from_left` is set.
  double curvature(double x, bool from_left = false) const;
  /// Breakpoints of the derivative in increasing order.
  std::vector<double> breakpoints() const;
};

struct Path {
  std::vector<EdgeIndex> edges;
  double cost = 0.0;
};

/// Minimum-cost source-sink path of `commodity` under nonnegative per-copy
/// edge costs; every edge counts with its series multiplicity. Exact ties
/// are broken by the lexicographically smallest edge sequence, comparing
/// edges by `tie_rank` (edge index when empty).
Path shortest_path(const Instance& instance, std::span<const double> edge_costs,
                   CommodityIndex commodity, std::span<const std::size_t> tie_rank = {});

enum class Method {
  frank_wolfe,       // classic steps toward the all-or-nothing vertex
  pairwise,          // away-to-shortest path swaps
  projected_newton,  // path-space Newton steps over generated columns
};

enum class Termination { converged, iteration_limit, stalled };

const char* to_string(Termination t);
const char* to_string(Method m);

struct SolveOptions {
  /// Absolute duality-gap target; when zero it becomes
  /// relative_gap * (1 + |potential at the starting flow|).
  double gap_tolerance = 0.0;
  double relative_gap = 1e-8;
  long max_iterations = 1'000'000;
  Method method = Method::projected_newton;
  /// Columns generated per commodity and iteration by the Newton variant.
  int columns_per_iteration = 32;
  /// Seeds a randomized start: initial paths are shortest under random edge
  /// costs and ties are broken by a random edge permutation.
  std::optional<std::uint64_t> start_seed;
  bool record_history = false;
};

struct SolveReport {
  long iterations = 0;
  double gap = 0.0;
  double gap_tolerance = 0.0;
  double potential = 0.0;
  double seconds = 0.0;
  Termination termination = Termination::converged;
  Method method = Method::projected_newton;
  std::vector<double> history;  // potential per iteration when recorded

  bool converged() const { return termination == Termination::converged; }
};

struct SolveResult {
  TotalFlow flow;
  SolveReport report;
};

double potential_value(const Instance& instance, std::span<const EdgePotential> potentials,
                       std::span<const double> edge_flows);

/// Per-copy derivatives at the given edge flows.
std::vector<double> potential_gradient(std::span<const EdgePotential> potentials,
                                       std::span<const double> edge_flows);

/// Frank-Wolfe duality gap sum_e m_e g_e(x_e) x_e - sum_i r_i lambda_i.
double duality_gap(const Instance& instance, std::span<const EdgePotential> potentials,
                   std::span<const double> edge_flows);

/// Minimizes sum_e m_e Phi_e(x_e) over feasible flows. Never throws on
/// non-convergence; the report says how it ended. `warm_start` must carry
/// path bookkeeping to be used.
SolveResult minimize_potential(const Instance& instance,
                               std::span<const EdgePotential> potentials,
                               const SolveOptions& options,
                               const TotalFlow* warm_start = nullptr);

/// Global minimizer over t in [0, max_step] of sum_e m_e Phi_e(x_e + t d_e),
/// computed exactly from the piecewise-quadratic structure.
double exact_line_search(const Instance& instance, std::span<const EdgePotential> potentials,
                         std::span<const double> edge_flows, std::span<const double> direction,
                         double max_step = 1.0);

}  // namespace prioroute
