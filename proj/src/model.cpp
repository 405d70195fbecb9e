#include "prioroute/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <unordered_set>

namespace prioroute {

namespace {

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || std::isnan(v)) {
    throw InputError(std::string(what) + " must be nonnegative, got " + std::to_string(v));
  }
}

bool reachable(const Instance& instance, NodeIndex from, NodeIndex to) {
  std::vector<char> seen(instance.num_nodes(), 0);
  std::queue<NodeIndex> queue;
  queue.push(from);
  seen[from] = 1;
  while (!queue.empty()) {
    NodeIndex v = queue.front();
    queue.pop();
    if (v == to) return true;
    for (EdgeIndex e : instance.out_edges(v)) {
      NodeIndex w = instance.edge(e).head;
      if (!seen[w]) {
        seen[w] = 1;
        queue.push(w);
      }
    }
  }
  return false;
}

}  // namespace

Instance::Instance(std::vector<std::string> nodes, std::vector<Edge> edges,
                   std::vector<Commodity> commodities)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), commodities_(std::move(commodities)) {
  std::unordered_set<std::string> names;
  for (const auto& n : nodes_) {
    if (!names.insert(n).second) throw InputError("duplicate node '" + n + "'");
  }
  std::unordered_set<std::string> ids;
  out_.assign(nodes_.size(), {});
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    if (!ids.insert(edge.id).second) throw InputError("duplicate edge id '" + edge.id + "'");
    if (edge.tail >= nodes_.size() || edge.head >= nodes_.size()) {
      throw InputError("edge '" + edge.id + "' references an unknown node");
    }
    if (!std::isfinite(edge.a) || !std::isfinite(edge.b) || edge.a < 0.0 || edge.b < 0.0) {
      throw InputError("edge '" + edge.id + "' needs finite a >= 0 and b >= 0");
    }
    if (!(edge.series_count >= 1.0) || !std::isfinite(edge.series_count) ||
        std::floor(edge.series_count) != edge.series_count) {
      throw InputError("edge '" + edge.id + "' needs an integral series count m >= 1");
    }
    out_[edge.tail].push_back(e);
  }
  std::vector<EdgeIndex> order(edges_.size());
  for (EdgeIndex e = 0; e < order.size(); ++e) order[e] = e;
  std::sort(order.begin(), order.end(),
            [&](EdgeIndex x, EdgeIndex y) { return edges_[x].id < edges_[y].id; });
  id_rank_.resize(edges_.size());
  for (std::size_t k = 0; k < order.size(); ++k) id_rank_[order[k]] = k;
  for (const Commodity& c : commodities_) {
    if (c.source >= nodes_.size() || c.sink >= nodes_.size()) {
      throw InputError("commodity references an unknown node");
    }
    if (c.source == c.sink) throw InputError("commodity source and sink coincide");
    if (!std::isfinite(c.demand) || c.demand < 0.0) {
      throw InputError("commodity demand must be finite and nonnegative");
    }
    if (!reachable(*this, c.source, c.sink)) {
      throw InputError("commodity " + nodes_[c.source] + " -> " + nodes_[c.sink] +
                       " has no path");
    }
  }
}

std::optional<EdgeIndex> Instance::find_edge(const std::string& id) const {
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    if (edges_[e].id == id) return e;
  }
  return std::nullopt;
}

std::optional<NodeIndex> Instance::find_node(const std::string& name) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), name);
  if (it == nodes_.end()) return std::nullopt;
  return static_cast<NodeIndex>(it - nodes_.begin());
}

double Instance::total_demand() const {
  double sum = 0.0;
  for (const auto& c : commodities_) sum += c.demand;
  return sum;
}

bool Instance::all_strictly_increasing() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.a > 0.0; });
}

PriceVector PriceVector::uniform(std::size_t num_edges, double fee) {
  PriceVector p(num_edges);
  for (EdgeIndex e = 0; e < num_edges; ++e) p.set_fee(e, fee);
  return p;
}

PriceVector PriceVector::uniform_on(std::size_t num_edges, std::span<const EdgeIndex> subset,
                                    double fee) {
  PriceVector p(num_edges);
  for (EdgeIndex e : subset) {
    if (e >= num_edges) throw InputError("priced edge index out of range");
    p.set_fee(e, fee);
  }
  return p;
}

void PriceVector::set_fee(EdgeIndex e, double fee) {
  if (!std::isfinite(fee) || fee < 0.0) {
    throw InputError("priority fee must be finite and nonnegative");
  }
  fees_.at(e) = fee;
}

std::vector<double> ExtendedFlow::totals() const {
  std::vector<double> t(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) t[e] = edges[e].total();
  return t;
}

double perceived_cost_priority(const Edge& e, double priority_flow, double fee) {
  require_nonnegative(priority_flow, "priority flow");
  require_nonnegative(fee, "priority fee");
  return 0.5 * e.a * priority_flow + e.b + fee;
}

double perceived_cost_regular(const Edge& e, double regular_flow, double priority_flow) {
  require_nonnegative(regular_flow, "regular flow");
  require_nonnegative(priority_flow, "priority flow");
  return e.a * priority_flow + 0.5 * e.a * regular_flow + e.b;
}

std::optional<double> critical_threshold(const Edge& e, double fee) {
  if (e.a <= 0.0 || fee == kInfinity) return std::nullopt;
  return 2.0 * fee / e.a;
}

bool near_threshold(double x, double theta, double critical_tolerance) {
  return std::abs(x - theta) <= critical_tolerance * std::max(1.0, theta);
}

CostInterval effective_cost(const Edge& e, double x, double fee, double critical_tolerance) {
  require_nonnegative(x, "total flow");
  if (e.a <= 0.0) return {e.b, e.b};
  const double base = e.latency(x);
  auto theta = critical_threshold(e, fee);
  if (!theta) return {base, base};
  if (near_threshold(x, *theta, critical_tolerance)) return {fee + e.b, 2.0 * fee + e.b};
  if (x < *theta) return {base, base};
  return {base + fee, base + fee};
}

double path_perceived_cost(const Instance& instance, const PriceVector& prices,
                           const ExtendedFlow& flow, CommodityIndex commodity,
                           const ExtendedPath& path) {
  if (commodity >= instance.num_commodities()) throw InputError("unknown commodity");
  const Commodity& c = instance.commodity(commodity);
  NodeIndex at = c.source;
  double cost = 0.0;
  for (const LanedEdge& step : path) {
    if (step.edge >= instance.num_edges()) throw InputError("path references unknown edge");
    const Edge& e = instance.edge(step.edge);
    if (e.tail != at) throw InputError("path is not a connected walk");
    const LaneFlow& lanes = flow.edges.at(step.edge);
    double per_copy = 0.0;
    if (step.lane == Lane::priority) {
      if (!prices.enabled(step.edge)) {
        throw InputError("path uses the priority lane of edge '" + e.id +
                         "' where priority is disabled");
      }
      per_copy = perceived_cost_priority(e, lanes.priority, prices.fee(step.edge));
    } else {
      per_copy = perceived_cost_regular(e, lanes.regular, lanes.priority);
    }
    cost += e.series_count * per_copy;
    at = e.head;
  }
  if (at != c.sink) throw InputError("path does not end at the commodity sink");
  return cost;
}

double total_cost(const Instance& instance, std::span<const double> edge_flows) {
  if (edge_flows.size() != instance.num_edges()) {
    throw InputError("flow vector size does not match the edge count");
  }
  double cost = 0.0;
  for (EdgeIndex e = 0; e < edge_flows.size(); ++e) {
    const double x = edge_flows[e];
    if (!(x >= 0.0)) throw InputError("negative or NaN edge flow");
    const Edge& edge = instance.edge(e);
    cost += edge.series_count * x * edge.latency(x);
  }
  return cost;
}

double total_cost(const Instance& instance, const TotalFlow& flow) {
  check_feasible(instance, flow);
  return total_cost(instance, flow.edges);
}

void check_feasible(const Instance& instance, const TotalFlow& flow, double tol) {
  const std::size_t n = instance.num_edges();
  if (flow.edges.size() != n || flow.by_commodity.size() != instance.num_commodities()) {
    throw InputError("flow dimensions do not match the instance");
  }
  std::vector<double> sum(n, 0.0);
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    const auto& fi = flow.by_commodity[i];
    if (fi.size() != n) throw InputError("commodity flow dimension mismatch");
    const Commodity& c = instance.commodity(i);
    const double scale = tol * std::max(1.0, c.demand);
    std::vector<double> net(instance.num_nodes(), 0.0);
    for (EdgeIndex e = 0; e < n; ++e) {
      if (fi[e] < -scale) throw InputError("negative commodity edge flow");
      net[instance.edge(e).tail] += fi[e];
      net[instance.edge(e).head] -= fi[e];
      sum[e] += fi[e];
    }
    for (NodeIndex v = 0; v < instance.num_nodes(); ++v) {
      double expected = v == c.source ? c.demand : (v == c.sink ? -c.demand : 0.0);
      if (std::abs(net[v] - expected) > scale) {
        throw InputError("flow conservation violated at node '" + instance.nodes()[v] + "'");
      }
    }
  }
  const double scale = tol * std::max(1.0, instance.total_demand());
  for (EdgeIndex e = 0; e < n; ++e) {
    if (std::abs(sum[e] - flow.edges[e]) > scale) {
      throw InputError("commodity flows do not add up on edge '" + instance.edge(e).id + "'");
    }
  }
}

std::vector<PathFlow> decompose_paths(const Instance& instance, CommodityIndex commodity,
                                      std::span<const double> edge_flows, double threshold) {
  const Commodity& c = instance.commodity(commodity);
  std::vector<double> rest(edge_flows.begin(), edge_flows.end());
  std::vector<PathFlow> paths;
  double remaining = c.demand;
  const double floor = threshold * std::max(1.0, c.demand);
  while (remaining > floor) {
    // Walk from the source along the heaviest remaining edge, never
    // revisiting a node, until the sink is reached.
    std::vector<char> visited(instance.num_nodes(), 0);
    std::vector<EdgeIndex> path;
    NodeIndex at = c.source;
    visited[at] = 1;
    bool stuck = false;
    while (at != c.sink) {
      EdgeIndex best = instance.num_edges();
      for (EdgeIndex e : instance.out_edges(at)) {
        if (rest[e] <= floor * 1e-3 || visited[instance.edge(e).head]) continue;
        if (best == instance.num_edges() || rest[e] > rest[best]) best = e;
      }
      if (best == instance.num_edges()) {
        stuck = true;
        break;
      }
      path.push_back(best);
      at = instance.edge(best).head;
      visited[at] = 1;
    }
    if (stuck || path.empty()) break;
    double bottleneck = remaining;
    for (EdgeIndex e : path) bottleneck = std::min(bottleneck, rest[e]);
    for (EdgeIndex e : path) rest[e] -= bottleneck;
    remaining -= bottleneck;
    paths.push_back({std::move(path), bottleneck});
  }
  return paths;
}

EdgeCostCurve edge_cost_curve(const Edge& e, double fee, double max_flow, int samples) {
  if (samples < 2) throw InputError("need at least two samples");
  if (!(max_flow > 0.0)) throw InputError("maximum flow must be positive");
  require_nonnegative(fee, "priority fee");
  EdgeCostCurve curve;
  curve.threshold = critical_threshold(e, fee);
  for (int k = 0; k < samples; ++k) {
    const double r = max_flow * k / (samples - 1);
    if (curve.threshold && r == *curve.threshold) continue;
    if (curve.threshold && r > *curve.threshold) {
      curve.above.emplace_back(r, e.latency(r) + fee);
    } else {
      curve.below.emplace_back(r, e.a > 0.0 ? e.latency(r) : e.b);
    }
  }
  if (curve.threshold && *curve.threshold <= max_flow) {
    curve.interval = CostInterval{fee + e.b, 2.0 * fee + e.b};
  }
  return curve;
}

}  // namespace prioroute
