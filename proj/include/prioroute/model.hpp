#pragma once

// Instance data and the closed-form perceived-cost functions of the
// priority-lane routing model.
//
// Every edge e carries a linear raw latency a*x + b. Users experience the
// averaged latency 0.5*a*x + b. Each edge offers a regular lane and, when
// enabled, a priority lane that costs an extra fee per copy of the edge.
// Priority users travel first; regular users queue behind all of them.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prioroute {

using NodeIndex = std::size_t;
using EdgeIndex = std::size_t;
using CommodityIndex = std::size_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Default relative band |x - theta| <= tau * max(1, theta) inside which an
/// edge counts as sitting exactly on its critical threshold.
inline constexpr double kDefaultCriticalTolerance = 1e-7;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (files, flags, instance data).
class InputError : public Error {
 public:
  using Error::Error;
};

/// The numerical machinery failed to reach the requested accuracy.
class SolverError : public Error {
 public:
  using Error::Error;
};

struct Edge {
  std::string id;
  NodeIndex tail = 0;
  NodeIndex head = 0;
  double a = 0.0;  // slope of the raw latency
  double b = 0.0;  // offset of the raw latency
  // Identical copies of this edge placed in series. Integral and >= 1; kept
  // in floating point because compressed paths reach 2^200 copies.
  double series_count = 1.0;

  double raw_latency(double x) const { return a * x + b; }
  /// Averaged latency experienced by a user at total flow x.
  double latency(double x) const { return 0.5 * a * x + b; }
};

struct Commodity {
  NodeIndex source = 0;
  NodeIndex sink = 0;
  double demand = 0.0;
};

/// Directed multigraph with linear latencies and a list of commodities.
/// Validated on construction; immutable afterwards.
class Instance {
 public:
  Instance() = default;
  Instance(std::vector<std::string> nodes, std::vector<Edge> edges,
           std::vector<Commodity> commodities);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_commodities() const { return commodities_.size(); }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Commodity>& commodities() const { return commodities_; }
  const Edge& edge(EdgeIndex e) const { return edges_[e]; }
  const Commodity& commodity(CommodityIndex i) const { return commodities_[i]; }

  std::span<const EdgeIndex> out_edges(NodeIndex v) const { return out_[v]; }
  std::optional<EdgeIndex> find_edge(const std::string& id) const;
  std::optional<NodeIndex> find_node(const std::string& name) const;
  /// Position of each edge in the lexicographic order of edge ids.
  std::span<const std::size_t> id_rank() const { return id_rank_; }

  double total_demand() const;
  bool all_strictly_increasing() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::vector<Commodity> commodities_;
  std::vector<std::vector<EdgeIndex>> out_;
  std::vector<std::size_t> id_rank_;
};

/// Per-edge priority fees. Edges without a priority option carry an
/// infinite fee, which makes the priority lane unattractive at any flow.
class PriceVector {
 public:
  PriceVector() = default;
  /// All edges start with priority disabled.
  explicit PriceVector(std::size_t num_edges) : fees_(num_edges, kInfinity) {}

  static PriceVector disabled(std::size_t num_edges) { return PriceVector(num_edges); }
  static PriceVector uniform(std::size_t num_edges, double fee);
  static PriceVector uniform_on(std::size_t num_edges, std::span<const EdgeIndex> subset,
                                double fee);

  void set_fee(EdgeIndex e, double fee);
  void disable(EdgeIndex e) { fees_.at(e) = kInfinity; }

  bool enabled(EdgeIndex e) const { return fees_[e] != kInfinity; }
  double fee(EdgeIndex e) const { return fees_[e]; }
  std::size_t size() const { return fees_.size(); }
  std::span<const double> fees() const { return fees_; }

  friend bool operator==(const PriceVector&, const PriceVector&) = default;

 private:
  std::vector<double> fees_;
};

struct LaneFlow {
  double regular = 0.0;
  double priority = 0.0;

  double total() const { return regular + priority; }
};

/// Flow on the extended network where every edge is split into a regular and
/// a priority lane.
struct ExtendedFlow {
  std::vector<LaneFlow> edges;
  std::vector<std::vector<LaneFlow>> by_commodity;  // [commodity][edge]

  std::vector<double> totals() const;
};

struct PathFlow {
  std::vector<EdgeIndex> edges;
  double flow = 0.0;
};

/// Aggregate edge flows plus their per-commodity decomposition. `paths` is
/// optional bookkeeping kept by the solver; it may be empty for flows read
/// from files.
struct TotalFlow {
  std::vector<double> edges;
  std::vector<std::vector<double>> by_commodity;  // [commodity][edge]
  std::vector<std::vector<PathFlow>> paths;       // [commodity]
};

struct CostInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool singleton() const { return lo == hi; }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  double midpoint() const { return 0.5 * (lo + hi); }
};

enum class Lane { regular, priority };

struct LanedEdge {
  EdgeIndex edge = 0;
  Lane lane = Lane::regular;
};

using ExtendedPath = std::vector<LanedEdge>;

/// Perceived cost of one priority user on one copy of `e`:
/// 0.5*a*fV + b + fee. At fV = 0 this is b + fee.
double perceived_cost_priority(const Edge& e, double priority_flow, double fee);

/// Perceived cost of one regular user on one copy of `e`:
/// a*fV + 0.5*a*fR + b. At fR = 0 this is the raw latency a*fV + b.
double perceived_cost_regular(const Edge& e, double regular_flow, double priority_flow);

/// Total flow 2*fee/a at which users are indifferent between the lanes.
/// None on constant-latency edges and on edges without a priority option.
std::optional<double> critical_threshold(const Edge& e, double fee);

/// Effective per-copy equilibrium cost of an edge carrying total flow x.
/// Single-valued off the threshold, the interval [fee + b, 2*fee + b] on it.
CostInterval effective_cost(const Edge& e, double x, double fee,
                            double critical_tolerance = kDefaultCriticalTolerance);

bool near_threshold(double x, double theta, double critical_tolerance);

/// Sum of the perceived costs along `path`, each edge weighted by its series
/// count. Throws InputError when the path is not a source-sink walk of the
/// commodity or selects a disabled priority lane.
double path_perceived_cost(const Instance& instance, const PriceVector& prices,
                           const ExtendedFlow& flow, CommodityIndex commodity,
                           const ExtendedPath& path);

/// Total latency sum_e m_e * x_e * (0.5*a_e*x_e + b_e). Fees are transfers
/// and are not part of the social cost.
double total_cost(const Instance& instance, std::span<const double> edge_flows);
double total_cost(const Instance& instance, const TotalFlow& flow);

/// Throws InputError unless the per-commodity flows are nonnegative, conserve
/// flow with net supply equal to the demand, and add up to the edge totals.
void check_feasible(const Instance& instance, const TotalFlow& flow, double tol = 1e-7);

/// Greedy path peeling of one commodity's edge flows. Peels until the
/// remaining demand drops below `threshold`.
std::vector<PathFlow> decompose_paths(const Instance& instance, CommodityIndex commodity,
                                      std::span<const double> edge_flows,
                                      double threshold = 1e-12);

/// Points of the equilibrium cost of a single edge as a function of its total
/// flow, split into the branch below the threshold, the vertical interval at
/// it, and the branch above it.
struct EdgeCostCurve {
  std::optional<double> threshold;
  std::vector<std::pair<double, double>> below;
  std::vector<std::pair<double, double>> above;
  std::optional<CostInterval> interval;
};

EdgeCostCurve edge_cost_curve(const Edge& e, double fee, double max_flow, int samples);

}  // namespace prioroute
