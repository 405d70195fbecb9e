#include "prioroute/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <utility>

#include <Eigen/Dense>

namespace prioroute {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::iteration_limit: return "iteration_limit";
    case Termination::stalled: return "stalled";
  }
  return "unknown";
}

const char* to_string(Method m) {
  switch (m) {
    case Method::frank_wolfe: return "frank_wolfe";
    case Method::pairwise: return "pairwise";
    case Method::projected_newton: return "projected_newton";
  }
  return "unknown";
}

EdgePotential EdgePotential::social(const Edge& e) {
  EdgePotential p;
  p.slope = e.a;
  p.offset = e.b;
  return p;
}

EdgePotential EdgePotential::equilibrium(const Edge& e, double fee, double relative_smoothing) {
  EdgePotential p;
  p.slope = 0.5 * e.a;
  p.offset = e.b;
  if (auto theta = critical_threshold(e, fee); theta && fee > 0.0) {
    p.kink = *theta;
    p.jump = fee;
    p.smoothing = relative_smoothing * *theta;
  }
  return p;
}

double EdgePotential::value(double x) const {
  double v = 0.5 * slope * x * x + offset * x;
  if (!has_kink()) return v;
  const double lo = kink - smoothing;
  if (x <= lo) return v;
  if (smoothing > 0.0 && x < kink) return v + jump * (x - lo) * (x - lo) / (2.0 * smoothing);
  return v + jump * (0.5 * smoothing + (x - kink));
}

double EdgePotential::derivative(double x) const {
  double d = slope * x + offset;
  if (!has_kink()) return d;
  if (smoothing > 0.0) {
    const double lo = kink - smoothing;
    if (x <= lo) return d;
    if (x < kink) return d + jump * (x - lo) / smoothing;
    return d + jump;
  }
  return x <= kink ? d : d + jump;
}

double EdgePotential::curvature(double x, bool from_left) const {
  if (has_kink() && smoothing > 0.0) {
    const double lo = kink - smoothing;
    const bool ramp = from_left ? (x > lo && x <= kink) : (x >= lo && x < kink);
    if (ramp) return slope + jump / smoothing;
  }
  return slope;
}

std::vector<double> EdgePotential::breakpoints() const {
  if (!has_kink()) return {};
  if (smoothing > 0.0) return {kink - smoothing, kink};
  return {kink};
}

// ---------------------------------------------------------------------------
// Shortest paths

Path shortest_path(const Instance& instance, std::span<const double> edge_costs,
                   CommodityIndex commodity, std::span<const std::size_t> tie_rank) {
  const std::size_t n = instance.num_nodes();
  const std::size_t m = instance.num_edges();
  const Commodity& c = instance.commodity(commodity);
  std::vector<double> w(m);
  for (EdgeIndex e = 0; e < m; ++e) {
    w[e] = std::max(0.0, edge_costs[e]) * instance.edge(e).series_count;
  }
  if (tie_rank.empty()) tie_rank = instance.id_rank();
  auto rank = [&](EdgeIndex e) { return tie_rank[e]; };

  std::vector<double> dist(n, kInfinity);
  std::vector<EdgeIndex> pred(n, m);
  using Item = std::pair<double, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[c.source] = 0.0;
  heap.emplace(0.0, c.source);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (EdgeIndex e : instance.out_edges(u)) {
      const NodeIndex v = instance.edge(e).head;
      const double nd = d + w[e];
      if (nd < dist[v]) {
        dist[v] = nd;
        pred[v] = e;
        heap.emplace(nd, v);
      }
    }
  }
  if (dist[c.sink] == kInfinity) throw InputError("sink unreachable");

  auto tight = [&](EdgeIndex e) {
    const NodeIndex u = instance.edge(e).tail;
    const NodeIndex v = instance.edge(e).head;
    if (dist[u] == kInfinity) return false;
    return dist[u] + w[e] <= dist[v] + 1e-12 * std::max(1.0, std::abs(dist[v]));
  };

  // Nodes from which the sink is reachable through tight edges.
  std::vector<std::vector<EdgeIndex>> in_tight(n);
  for (EdgeIndex e = 0; e < m; ++e) {
    if (tight(e)) in_tight[instance.edge(e).head].push_back(e);
  }
  std::vector<char> reaches(n, 0);
  std::vector<NodeIndex> stack{c.sink};
  reaches[c.sink] = 1;
  while (!stack.empty()) {
    NodeIndex v = stack.back();
    stack.pop_back();
    for (EdgeIndex e : in_tight[v]) {
      NodeIndex u = instance.edge(e).tail;
      if (!reaches[u]) {
        reaches[u] = 1;
        stack.push_back(u);
      }
    }
  }

  Path path;
  std::vector<char> visited(n, 0);
  NodeIndex at = c.source;
  visited[at] = 1;
  bool greedy_ok = true;
  while (at != c.sink) {
    EdgeIndex best = m;
    for (EdgeIndex e : instance.out_edges(at)) {
      const NodeIndex v = instance.edge(e).head;
      if (visited[v] || !reaches[v] || !tight(e)) continue;
      if (best == m || rank(e) < rank(best)) best = e;
    }
    if (best == m) {
      greedy_ok = false;
      break;
    }
    path.edges.push_back(best);
    at = instance.edge(best).head;
    visited[at] = 1;
  }
  if (!greedy_ok) {
    // Zero-cost cycles can trap the greedy walk; fall back to the tree path.
    path.edges.clear();
    for (NodeIndex v = c.sink; v != c.source; v = instance.edge(pred[v]).tail) {
      path.edges.push_back(pred[v]);
    }
    std::reverse(path.edges.begin(), path.edges.end());
  }
  for (EdgeIndex e : path.edges) path.cost += w[e];
  return path;
}

// ---------------------------------------------------------------------------
// Potential helpers

double potential_value(const Instance& instance, std::span<const EdgePotential> potentials,
                       std::span<const double> edge_flows) {
  double v = 0.0;
  for (EdgeIndex e = 0; e < edge_flows.size(); ++e) {
    v += instance.edge(e).series_count * potentials[e].value(edge_flows[e]);
  }
  return v;
}

std::vector<double> potential_gradient(std::span<const EdgePotential> potentials,
                                       std::span<const double> edge_flows) {
  std::vector<double> g(edge_flows.size());
  for (std::size_t e = 0; e < g.size(); ++e) g[e] = potentials[e].derivative(edge_flows[e]);
  return g;
}

double duality_gap(const Instance& instance, std::span<const EdgePotential> potentials,
                   std::span<const double> edge_flows) {
  auto g = potential_gradient(potentials, edge_flows);
  double gap = 0.0;
  for (EdgeIndex e = 0; e < g.size(); ++e) {
    gap += instance.edge(e).series_count * g[e] * edge_flows[e];
  }
  for (CommodityIndex i = 0; i < instance.num_commodities(); ++i) {
    const double r = instance.commodity(i).demand;
    if (r > 0.0) gap -= r * shortest_path(instance, g, i).cost;
  }
  return gap;
}

double exact_line_search(const Instance& instance, std::span<const EdgePotential> potentials,
                         std::span<const double> edge_flows, std::span<const double> direction,
                         double max_step) {
  if (!(max_step > 0.0)) return 0.0;
  std::vector<EdgeIndex> active;
  for (EdgeIndex e = 0; e < direction.size(); ++e) {
    if (direction[e] != 0.0) active.push_back(e);
  }
  if (active.empty()) return 0.0;

  std::vector<double> ts{0.0, max_step};
  for (EdgeIndex e : active) {
    for (double bp : potentials[e].breakpoints()) {
      const double t = (bp - edge_flows[e]) / direction[e];
      if (t > 0.0 && t < max_step) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  // Linear form A + B t of phi'(t) on the segment (ts[j], ts[j+1]).
  auto segment = [&](std::size_t j) {
    const double mid = 0.5 * (ts[j] + ts[j + 1]);
    double A = 0.0, B = 0.0;
    for (EdgeIndex e : active) {
      const double m = instance.edge(e).series_count;
      const double d = direction[e];
      const double x = edge_flows[e];
      const double y = x + mid * d;
      const double s = potentials[e].curvature(y);
      const double c = potentials[e].derivative(y) - s * y;
      A += m * d * (s * x + c);
      B += m * d * d * s;
    }
    return std::pair{A, B};
  };

  const std::size_t segments = ts.size() - 1;
  std::size_t lo = 0, hi = segments;  // first segment with phi'(right end) >= 0
  while (lo < hi) {
    const std::size_t j = (lo + hi) / 2;
    auto [A, B] = segment(j);
    if (A + B * ts[j + 1] >= 0.0) {
      hi = j;
    } else {
      lo = j + 1;
    }
  }
  if (lo == segments) return max_step;
  auto [A, B] = segment(lo);
  if (A + B * ts[lo] >= 0.0) return ts[lo];
  return std::clamp(-A / B, ts[lo], ts[lo + 1]);
}

// ---------------------------------------------------------------------------
// Path-based minimizer

namespace {

class PathFlowSolver {
 public:
  PathFlowSolver(const Instance& instance, std::span<const EdgePotential> potentials,
                 const SolveOptions& options)
      : inst_(instance), pots_(potentials), opt_(options), atoms_(instance.num_commodities()),
        x_(instance.num_edges(), 0.0) {}

  SolveResult run(const TotalFlow* warm_start);

 private:
  double path_cost(const std::vector<EdgeIndex>& p) const {
    double c = 0.0;
    for (EdgeIndex e : p) c += inst_.edge(e).series_count * g_[e];
    return c;
  }
  void rebuild_flows();
  void refresh_gradient() { g_ = potential_gradient(pots_, x_); }
  std::size_t find_or_add(CommodityIndex i, const std::vector<EdgeIndex>& edges);
  void prune(CommodityIndex i);
  void initialize(const TotalFlow* warm_start);
  bool frank_wolfe_step(const std::vector<Path>& sp);
  bool pairwise_step(CommodityIndex i, std::size_t toward);
  bool newton_step();
  int newton_once();

  const Instance& inst_;
  std::span<const EdgePotential> pots_;
  const SolveOptions& opt_;
  std::vector<std::vector<PathFlow>> atoms_;
  std::vector<double> x_;
  std::vector<double> g_;
  std::vector<std::size_t> rank_;
};

void PathFlowSolver::rebuild_flows() {
  std::fill(x_.begin(), x_.end(), 0.0);
  for (auto& list : atoms_) {
    for (auto& a : list) {
      for (EdgeIndex e : a.edges) x_[e] += a.flow;
    }
  }
}

std::size_t PathFlowSolver::find_or_add(CommodityIndex i, const std::vector<EdgeIndex>& edges) {
  auto& list = atoms_[i];
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (list[k].edges == edges) return k;
  }
  list.push_back({edges, 0.0});
  return list.size() - 1;
}

void PathFlowSolver::prune(CommodityIndex i) {
  auto& list = atoms_[i];
  const double r = inst_.commodity(i).demand;
  std::erase_if(list, [](const PathFlow& a) { return !(a.flow > 0.0); });
  double sum = 0.0;
  for (const auto& a : list) sum += a.flow;
  if (sum > 0.0 && sum != r) {
    for (auto& a : list) a.flow *= r / sum;
  }
}

void PathFlowSolver::initialize(const TotalFlow* warm_start) {
  const std::size_t m = inst_.num_edges();
  rank_.assign(inst_.id_rank().begin(), inst_.id_rank().end());
  std::vector<double> start_costs(m);
  if (opt_.start_seed) {
    std::mt19937_64 rng(*opt_.start_seed);
    std::shuffle(rank_.begin(), rank_.end(), rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& c : start_costs) c = unit(rng);
  } else {
    std::vector<double> zero(m, 0.0);
    start_costs = potential_gradient(pots_, zero);
  }

  bool warm = warm_start && warm_start->paths.size() == inst_.num_commodities();
  for (CommodityIndex i = 0; i < inst_.num_commodities(); ++i) {
    const double r = inst_.commodity(i).demand;
    if (r <= 0.0) continue;
    if (warm) {
      for (const auto& a : warm_start->paths[i]) {
        if (a.flow > 0.0) atoms_[i].push_back(a);
      }
      prune(i);
      if (!atoms_[i].empty()) continue;
    }
    auto p = shortest_path(inst_, start_costs, i, rank_);
    atoms_[i].push_back({std::move(p.edges), r});
  }
  rebuild_flows();
  refresh_gradient();
}

bool PathFlowSolver::frank_wolfe_step(const std::vector<Path>& sp) {
  std::vector<double> d(x_.size(), 0.0);
  for (CommodityIndex i = 0; i < inst_.num_commodities(); ++i) {
    const double r = inst_.commodity(i).demand;
    if (r <= 0.0) continue;
    for (EdgeIndex e : sp[i].edges) d[e] += r;
  }
  for (EdgeIndex e = 0; e < d.size(); ++e) d[e] -= x_[e];
  const double t = exact_line_search(inst_, pots_, x_, d, 1.0);
  if (t <= 0.0) return false;
  for (CommodityIndex i = 0; i < inst_.num_commodities(); ++i) {
    const double r = inst_.commodity(i).demand;
    if (r <= 0.0) continue;
    for (auto& a : atoms_[i]) a.flow *= (1.0 - t);
    atoms_[i][find_or_add(i, sp[i].edges)].flow += t * r;
    prune(i);
  }
  rebuild_flows();
  refresh_gradient();
  return true;
}

bool PathFlowSolver::pairwise_step(CommodityIndex i, std::size_t toward) {
  auto& list = atoms_[i];
  std::size_t away = list.size();
  double worst = -kInfinity;
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (k == toward || !(list[k].flow > 0.0)) continue;
    const double c = path_cost(list[k].edges);
    if (c > worst) {
      worst = c;
      away = k;
    }
  }
  if (away == list.size() || worst <= path_cost(list[toward].edges)) return false;

  std::vector<double> d(x_.size(), 0.0);
  for (EdgeIndex e : list[toward].edges) d[e] += 1.0;
  for (EdgeIndex e : list[away].edges) d[e] -= 1.0;
  const double max_step = list[away].flow;
  const double t = exact_line_search(inst_, pots_, x_, d, max_step);
  if (t <= 0.0) return false;
  if (t >= max_step) {
    list[toward].flow += list[away].flow;
    list[away].flow = 0.0;
  } else {
    list[away].flow -= t;
    list[toward].flow += t;
  }
  for (EdgeIndex e = 0; e < d.size(); ++e) {
    if (d[e] != 0.0) {
      x_[e] = std::max(0.0, x_[e] + t * d[e]);
      g_[e] = pots_[e].derivative(x_[e]);
    }
  }
  return true;
}

// Blocked steps drop a path and re-solve on the smaller support.
bool PathFlowSolver::newton_step() {
  bool moved = false;
  for (int round = 0; round < 16; ++round) {
    const int r = newton_once();
    if (r == 0) break;
    moved = true;
    if (r == 1) break;
  }
  return moved;
}

int PathFlowSolver::newton_once() {
  struct Ref {
    CommodityIndex commodity;
    std::size_t atom;
  };
  const std::size_t K = inst_.num_commodities();
  std::vector<Ref> refs;
  for (CommodityIndex i = 0; i < K; ++i) {
    for (std::size_t k = 0; k < atoms_[i].size(); ++k) refs.push_back({i, k});
  }

  // Curvature per edge; at a breakpoint the piece depends on the direction
  // the step moves the edge, which is settled by re-solving once.
  std::vector<char> from_left(x_.size(), 0);
  std::vector<char> at_break(x_.size(), 0);
  for (EdgeIndex e = 0; e < x_.size(); ++e) {
    for (double bp : pots_[e].breakpoints()) {
      if (std::abs(x_[e] - bp) <= 1e-13 * std::max(1.0, bp)) at_break[e] = 1;
    }
  }

  for (int attempt = 0; attempt < 12 && !refs.empty(); ++attempt) {
    const std::size_t n = refs.size();
    // One reference path per commodity (its heaviest) is eliminated through
    // the demand constraint; the others are the free variables.
    std::vector<long> ref_of(K, -1);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& a = atoms_[refs[p].commodity][refs[p].atom];
      long& r = ref_of[refs[p].commodity];
      if (r < 0 || a.flow > atoms_[refs[r].commodity][refs[r].atom].flow) {
        r = static_cast<long>(p);
      }
    }
    std::vector<long> col(n, -1);
    long free_count = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (ref_of[refs[p].commodity] != static_cast<long>(p)) col[p] = free_count++;
    }
    if (free_count == 0) return 0;

    // Z maps free variables to path changes: +1 on the path, -1 on its
    // commodity's reference. Edge-level rows of A = E Z give the Hessian
    // Z^T E^T diag(h) E Z.
    std::vector<std::vector<std::pair<long, double>>> edge_cols(x_.size());
    for (std::size_t p = 0; p < n; ++p) {
      if (col[p] < 0) continue;
      const std::size_t r = static_cast<std::size_t>(ref_of[refs[p].commodity]);
      for (EdgeIndex e : atoms_[refs[p].commodity][refs[p].atom].edges) {
        edge_cols[e].push_back({col[p], 1.0});
      }
      for (EdgeIndex e : atoms_[refs[r].commodity][refs[r].atom].edges) {
        edge_cols[e].push_back({col[p], -1.0});
      }
    }
    Eigen::VectorXd grad(free_count);
    for (std::size_t p = 0; p < n; ++p) {
      if (col[p] < 0) continue;
      const std::size_t r = static_cast<std::size_t>(ref_of[refs[p].commodity]);
      double gp = 0.0;
      for (EdgeIndex e : atoms_[refs[p].commodity][refs[p].atom].edges) {
        gp += inst_.edge(e).series_count * g_[e];
      }
      for (EdgeIndex e : atoms_[refs[r].commodity][refs[r].atom].edges) {
        gp -= inst_.edge(e).series_count * g_[e];
      }
      grad(col[p]) = gp;
    }

    Eigen::VectorXd delta_free;
    for (int pass = 0; pass < 3; ++pass) {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(free_count, free_count);
      for (EdgeIndex e = 0; e < x_.size(); ++e) {
        if (edge_cols[e].empty()) continue;
        const double h =
            inst_.edge(e).series_count * pots_[e].curvature(x_[e], from_left[e] != 0);
        if (h == 0.0) continue;
        // Merge duplicate columns (a path and its reference sharing e).
        std::vector<std::pair<long, double>> merged;
        for (auto [c, v] : edge_cols[e]) {
          bool found = false;
          for (auto& [mc, mv] : merged) {
            if (mc == c) {
              mv += v;
              found = true;
            }
          }
          if (!found) merged.push_back({c, v});
        }
        for (auto [c1, v1] : merged) {
          if (v1 == 0.0) continue;
          for (auto [c2, v2] : merged) H(c1, c2) += h * v1 * v2;
        }
      }
      const double max_diag = H.diagonal().maxCoeff();
      double mu = max_diag > 0.0 ? 1e-13 * max_diag : 1.0;
      Eigen::LLT<Eigen::MatrixXd> llt;
      for (int tries = 0; tries < 8; ++tries) {
        llt.compute(H + mu * Eigen::MatrixXd::Identity(free_count, free_count));
        if (llt.info() == Eigen::Success) break;
        mu *= 100.0;
      }
      if (llt.info() != Eigen::Success) return 0;
      delta_free = -llt.solve(grad);

      bool changed = false;
      for (EdgeIndex e = 0; e < x_.size(); ++e) {
        if (!at_break[e]) continue;
        double d = 0.0;
        for (auto [c, v] : edge_cols[e]) d += v * delta_free(c);
        const char left = d < 0.0 ? 1 : 0;
        if (left != from_left[e]) {
          from_left[e] = left;
          changed = true;
        }
      }
      if (!changed) break;
    }

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
    for (std::size_t p = 0; p < n; ++p) {
      if (col[p] < 0) continue;
      delta(p) += delta_free(col[p]);
      delta(ref_of[refs[p].commodity]) -= delta_free(col[p]);
    }

    // Paths sitting at zero flow cannot shrink further.
    std::vector<Ref> kept;
    for (std::size_t p = 0; p < n; ++p) {
      const auto& a = atoms_[refs[p].commodity][refs[p].atom];
      if (!(a.flow > 0.0) && delta(p) < 0.0) continue;
      kept.push_back(refs[p]);
    }
    if (kept.size() != n) {
      refs = std::move(kept);
      continue;
    }
    if (grad.dot(delta_free) >= 0.0) return 0;

    double t_max = kInfinity;
    std::size_t blocking = n;
    for (std::size_t p = 0; p < n; ++p) {
      if (delta(p) < 0.0) {
        const double lim = atoms_[refs[p].commodity][refs[p].atom].flow / -delta(p);
        if (lim < t_max) {
          t_max = lim;
          blocking = p;
        }
      }
    }
    if (blocking == n) return 0;

    std::vector<double> d(x_.size(), 0.0);
    for (EdgeIndex e = 0; e < x_.size(); ++e) {
      for (auto [c, v] : edge_cols[e]) d[e] += v * delta_free(c);
    }
    const double t = exact_line_search(inst_, pots_, x_, d, t_max);
    if (!(t > 0.0)) return 0;
    for (std::size_t p = 0; p < n; ++p) {
      auto& a = atoms_[refs[p].commodity][refs[p].atom];
      if (p == blocking && t >= t_max) {
        a.flow = 0.0;
      } else {
        a.flow = std::max(0.0, a.flow + t * delta(p));
      }
    }
    for (CommodityIndex i = 0; i < K; ++i) prune(i);
    rebuild_flows();
    refresh_gradient();
    return t >= t_max ? 2 : 1;
  }
  return 0;
}

SolveResult PathFlowSolver::run(const TotalFlow* warm_start) {
  const auto started = std::chrono::steady_clock::now();
  initialize(warm_start);
  SolveReport report;
  report.method = opt_.method;
  const std::size_t K = inst_.num_commodities();
  double tolerance = opt_.gap_tolerance;
  long stalls = 0;
  constexpr double kEpsilon = std::numeric_limits<double>::epsilon();
  double total_demand = 0.0;
  for (CommodityIndex i = 0; i < K; ++i) total_demand += inst_.commodity(i).demand;

  for (long iter = 0;; ++iter) {
    std::vector<Path> sp(K);
    double gap = 0.0;
    for (EdgeIndex e = 0; e < x_.size(); ++e) gap += inst_.edge(e).series_count * g_[e] * x_[e];
    for (CommodityIndex i = 0; i < K; ++i) {
      const double r = inst_.commodity(i).demand;
      if (r <= 0.0) continue;
      sp[i] = shortest_path(inst_, g_, i, rank_);
      gap -= r * sp[i].cost;
    }
    const double phi = potential_value(inst_, pots_, x_);
    if (tolerance <= 0.0) tolerance = opt_.relative_gap * (1.0 + std::abs(phi));
    if (opt_.record_history) report.history.push_back(phi);
    report.iterations = iter;
    report.gap = std::max(0.0, gap);
    report.potential = phi;
    // Path costs move in steps of m h ulp(x) per edge, which on a narrow
    // ramp can exceed the requested gap; that much is accepted on top.
    double resolution = 0.0;
    for (EdgeIndex e = 0; e < x_.size(); ++e) {
      if (!(x_[e] > 0.0)) continue;
      const double h = std::max(pots_[e].curvature(x_[e]), pots_[e].curvature(x_[e], true));
      resolution += inst_.edge(e).series_count * h * 8.0 * kEpsilon * x_[e];
    }
    resolution *= total_demand;
    if (gap <= tolerance + resolution) {
      report.termination = Termination::converged;
      break;
    }
    if (iter >= opt_.max_iterations) {
      report.termination = Termination::iteration_limit;
      break;
    }

    bool moved = false;
    switch (opt_.method) {
      case Method::frank_wolfe:
        moved = frank_wolfe_step(sp);
        break;
      case Method::pairwise:
        for (CommodityIndex i = 0; i < K; ++i) {
          if (inst_.commodity(i).demand <= 0.0) continue;
          auto sp_i = i == 0 ? sp[i] : shortest_path(inst_, g_, i, rank_);
          moved |= pairwise_step(i, find_or_add(i, sp_i.edges));
          prune(i);
        }
        rebuild_flows();
        refresh_gradient();
        break;
      case Method::projected_newton:
        for (CommodityIndex i = 0; i < K; ++i) {
          if (inst_.commodity(i).demand <= 0.0) continue;
          // Column generation: pull each new shortest path into the active
          // set with one swap so that many columns enter per iteration.
          for (int c = 0; c < opt_.columns_per_iteration; ++c) {
            auto sp_i = c == 0 && i == 0 ? sp[i] : shortest_path(inst_, g_, i, rank_);
            const std::size_t before = atoms_[i].size();
            const std::size_t k = find_or_add(i, sp_i.edges);
            const bool fresh = atoms_[i].size() > before;
            moved |= pairwise_step(i, k);
            if (!fresh) break;
          }
          prune(i);
        }
        rebuild_flows();
        refresh_gradient();
        moved |= newton_step();
        break;
    }
    if (!moved) {
      if (++stalls >= 3) {
        report.termination = Termination::stalled;
        break;
      }
    } else {
      stalls = 0;
    }
  }

  report.gap_tolerance = tolerance;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  SolveResult result;
  result.flow.edges = x_;
  result.flow.by_commodity.assign(K, std::vector<double>(x_.size(), 0.0));
  for (CommodityIndex i = 0; i < K; ++i) {
    for (const auto& a : atoms_[i]) {
      for (EdgeIndex e : a.edges) result.flow.by_commodity[i][e] += a.flow;
    }
  }
  result.flow.paths = atoms_;
  result.report = std::move(report);
  return result;
}

}  // namespace

SolveResult minimize_potential(const Instance& instance,
                               std::span<const EdgePotential> potentials,
                               const SolveOptions& options, const TotalFlow* warm_start) {
  if (potentials.size() != instance.num_edges()) {
    throw InputError("one potential per edge required");
  }
  if (options.gap_tolerance < 0.0 || !(options.relative_gap > 0.0)) {
    throw InputError("gap tolerance must be positive");
  }
  PathFlowSolver solver(instance, potentials, options);
  return solver.run(warm_start);
}

}  // namespace prioroute
