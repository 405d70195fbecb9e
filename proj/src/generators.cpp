#include "prioroute/generators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "parallel.hpp"

namespace prioroute {

PricedInstance gen_single_edge(double a, double b, double fee, double r) {
  Instance inst({"s", "t"}, {{"e", 0, 1, a, b, 1.0}}, {{0, 1, r}});
  PriceVector p(1);
  p.set_fee(0, fee);
  return {std::move(inst), std::move(p)};
}

Instance gen_pigou(double r) {
  return Instance({"s", "t"}, {{"e1", 0, 1, 1.0, 0.0, 1.0}, {"e2", 0, 1, 0.0, 1.0, 1.0}},
                  {{0, 1, r}});
}

Instance gen_braess(double demand, bool shortcut) {
  std::vector<Edge> edges{{"su", 0, 1, 1.0, 0.0, 1.0},
                          {"sv", 0, 2, 0.0, 1.0, 1.0},
                          {"ut", 1, 3, 0.0, 1.0, 1.0},
                          {"vt", 2, 3, 1.0, 0.0, 1.0}};
  if (shortcut) edges.push_back({"uv", 1, 2, 0.0, 0.0, 1.0});
  return Instance({"s", "u", "v", "t"}, std::move(edges), {{0, 3, demand}});
}

Instance gen_gk(const GkSpec& spec) {
  if (spec.k < 0) throw InputError("k must be nonnegative");
  if (!spec.compressed && spec.k > 14) throw InputError("expanded G_k needs k <= 14");
  if (spec.k > 1000) throw InputError("k must be at most 1000");
  std::vector<std::string> nodes{"s", "t"};
  std::vector<Edge> edges{{"q", 0, 1, 0.0, 1.0, 1.0}};
  for (int i = 0; i <= spec.k; ++i) {
    const double a = std::ldexp(1.0, 1 - i);
    const std::string path = "p" + std::to_string(i);
    if (spec.compressed) {
      edges.push_back({path, 0, 1, a, 0.0, std::ldexp(1.0, i)});
      continue;
    }
    const long len = 1L << i;
    NodeIndex at = 0;
    for (long j = 0; j < len; ++j) {
      NodeIndex next = 1;
      if (j + 1 < len) {
        nodes.push_back(path + "_n" + std::to_string(j + 1));
        next = nodes.size() - 1;
      }
      edges.push_back({path + "_" + std::to_string(j), at, next, a, 0.0, 1.0});
      at = next;
    }
  }
  return Instance(std::move(nodes), std::move(edges), {{0, 1, spec.k + 1.0}});
}

double gk_closed_form_cost(int k, double omega) {
  if (k < 0) throw InputError("k must be nonnegative");
  if (!(omega >= 0.0) || std::isnan(omega)) throw InputError("fee must be nonnegative");
  const double demand = k + 1.0;
  if (omega == 0.0) return demand;
  // l = floor(log2(1/omega)), the largest l with omega <= 2^-l.
  int l = static_cast<int>(std::floor(-std::log2(omega)));
  while (omega <= std::ldexp(1.0, -(l + 1))) ++l;
  while (omega > std::ldexp(1.0, -l)) --l;
  const int istar = std::min(l - 1, k);

  double cost = 0.0, routed = 0.0;
  for (int i = 0; i <= istar; ++i) {
    const double f = 1.0 - std::ldexp(omega, i);
    cost += f * f;
    routed += f;
  }
  for (int i = std::max(0, istar + 1); i <= k; ++i) {
    // Paths with omega in [2^-(i+1), 2^-i] sit exactly at their threshold.
    if (omega >= std::ldexp(1.0, -(i + 1)) && omega <= std::ldexp(1.0, -i)) {
      const double f = std::ldexp(omega, i);
      cost += f * f;
      routed += f;
    }
  }
  return cost + (demand - routed);
}

Instance gen_random(const RandomSpec& spec) {
  if (spec.a_lo < 0.0 || spec.a_hi < spec.a_lo || spec.b_lo < 0.0 || spec.b_hi < spec.b_lo ||
      spec.demand_lo < 0.0 || spec.demand_hi < spec.demand_lo) {
    throw InputError("invalid coefficient ranges");
  }
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  std::vector<std::string> nodes{"s", "t"};
  std::vector<Edge> edges;
  auto add_edge = [&](NodeIndex u, NodeIndex v) {
    char id[16];
    std::snprintf(id, sizeof id, "e%03zu", edges.size());
    const double a = uniform(spec.a_lo, spec.a_hi);
    const double b = uniform(spec.b_lo, spec.b_hi);
    edges.push_back({id, u, v, a, b, 1.0});
  };
  std::vector<Commodity> commodities;

  if (spec.topology == RandomSpec::Topology::parallel) {
    if (spec.links < 1) throw InputError("need at least one link");
    for (int k = 0; k < spec.links; ++k) add_edge(0, 1);
    commodities.push_back({0, 1, uniform(spec.demand_lo, spec.demand_hi)});
    return Instance(std::move(nodes), std::move(edges), std::move(commodities));
  }

  if (spec.layers < 1 || spec.width < 1) throw InputError("need at least one layer and node");
  std::vector<std::vector<NodeIndex>> layer(spec.layers);
  for (int l = 0; l < spec.layers; ++l) {
    for (int j = 0; j < spec.width; ++j) {
      nodes.push_back("l" + std::to_string(l) + "_" + std::to_string(j));
      layer[l].push_back(nodes.size() - 1);
    }
  }
  for (NodeIndex v : layer.front()) add_edge(0, v);
  for (int l = 0; l + 1 < spec.layers; ++l) {
    const auto& from = layer[l];
    const auto& to = layer[l + 1];
    std::vector<char> has_in(to.size(), 0);
    for (NodeIndex u : from) {
      bool has_out = false;
      for (std::size_t j = 0; j < to.size(); ++j) {
        if (std::bernoulli_distribution(0.5)(rng)) {
          add_edge(u, to[j]);
          has_in[j] = 1;
          has_out = true;
        }
      }
      if (!has_out) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(0, to.size() - 1)(rng);
        add_edge(u, to[j]);
        has_in[j] = 1;
      }
    }
    for (std::size_t j = 0; j < to.size(); ++j) {
      if (!has_in[j]) {
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng);
        add_edge(from[i], to[j]);
      }
    }
  }
  for (NodeIndex u : layer.back()) add_edge(u, 1);
  commodities.push_back({0, 1, uniform(spec.demand_lo, spec.demand_hi)});
  for (int c = 0; c < spec.extra_commodities; ++c) {
    const std::size_t j =
        std::uniform_int_distribution<std::size_t>(0, layer.front().size() - 1)(rng);
    commodities.push_back({layer.front()[j], 1, uniform(spec.demand_lo, spec.demand_hi)});
  }
  return Instance(std::move(nodes), std::move(edges), std::move(commodities));
}

namespace {

// For each link and grid flow: the pure option (one lane used, spread 0)
// and the mixed option (both lanes, any base level in [lo, hi] with a fixed
// spread between them). Levels are path costs, i.e. multiplied by m.
struct LinkTable {
  std::vector<double> pure;
  std::vector<double> mixed_lo, mixed_hi, mixed_spread;
  bool has_mixed = false;
  double idle = 0.0;  // cost of the cheapest lane at zero flow
};

struct Best {
  double violation = std::numeric_limits<double>::infinity();
  std::vector<long> counts;
};

struct Search {
  const std::vector<LinkTable>& tables;
  long total;
  std::vector<long> counts;
  Best best;

  void run(std::size_t link, long left, double S, double A, double B) {
    if (std::max(S, A - B) >= best.violation) return;
    const std::size_t L = tables.size();
    if (link == L) {
      if (left != 0) return;
      best.violation = std::max(S, A - B);
      best.counts = counts;
      return;
    }
    const LinkTable& t = tables[link];
    const long lo = link + 1 == L ? left : 0;
    for (long n = lo; n <= left; ++n) {
      counts[link] = n;
      if (n == 0) {
        run(link + 1, left, S, A, std::min(B, t.idle));
        continue;
      }
      run(link + 1, left - n, S, std::max(A, t.pure[n]), std::min(B, t.pure[n]));
      if (t.has_mixed) {
        const double s = t.mixed_spread[n];
        run(link + 1, left - n, std::max(S, s), std::max(A, t.mixed_lo[n] + s),
            std::min(B, t.mixed_hi[n]));
      }
    }
  }
};

}  // namespace

BruteForceResult brute_force_equilibrium(const Instance& instance, const PriceVector& prices,
                                         double h, int jobs) {
  if (!(h > 0.0)) throw InputError("grid step must be positive");
  if (instance.num_commodities() != 1) throw InputError("oracle needs a single commodity");
  const Commodity& c = instance.commodity(0);
  const std::size_t L = instance.num_edges();
  if (L > 4) throw InputError("oracle supports at most four links");
  for (const Edge& e : instance.edges()) {
    if (e.tail != c.source || e.head != c.sink) {
      throw InputError("oracle needs parallel source-sink links");
    }
  }
  BruteForceResult result;
  result.flow.assign(L, 0.0);
  const long N = std::max(1L, std::lround(c.demand / h));
  if (c.demand <= 0.0) return result;
  const double step = c.demand / N;

  std::vector<LinkTable> tables(L);
  for (EdgeIndex e = 0; e < L; ++e) {
    const Edge& edge = instance.edge(e);
    const double m = edge.series_count;
    const bool enabled = prices.enabled(e);
    const double fee = enabled ? prices.fee(e) : 0.0;
    LinkTable& t = tables[e];
    t.idle = m * edge.b;
    t.has_mixed = enabled;
    t.pure.resize(N + 1);
    if (enabled) {
      t.mixed_lo.resize(N + 1);
      t.mixed_hi.resize(N + 1);
      t.mixed_spread.resize(N + 1);
    }
    for (long n = 0; n <= N; ++n) {
      const double x = n * step;
      const double regular = 0.5 * edge.a * x + edge.b;  // everyone regular
      if (!enabled) {
        t.pure[n] = m * regular;
        continue;
      }
      // Lane costs differ by D = fee - a x / 2 whatever the split.
      const double D = fee - 0.5 * edge.a * x;
      // Pure options: all regular leaves priority at b + fee, all priority
      // leaves regular at a x + b. Keep the one whose used lane is cheapest.
      t.pure[n] = m * (D >= 0.0 ? regular : regular + fee);
      t.mixed_lo[n] = m * (0.5 * edge.a * x + edge.b + std::min(D, 0.0));
      t.mixed_hi[n] = m * (edge.a * x + edge.b + std::min(D, 0.0));
      t.mixed_spread[n] = m * std::abs(D);
    }
  }

  std::vector<Best> chunks(static_cast<std::size_t>(N + 1));
  detail::parallel_for(chunks.size(), jobs, [&](std::size_t first) {
    Search s{tables, N, std::vector<long>(L, 0), {}};
    const LinkTable& t = tables[0];
    const long n = static_cast<long>(first);
    if (L == 1 && n != N) return;
    s.counts[0] = n;
    if (n == 0) {
      s.run(1, N, 0.0, -std::numeric_limits<double>::infinity(), t.idle);
    } else {
      s.run(1, N - n, 0.0, t.pure[n], t.pure[n]);
      if (t.has_mixed) {
        s.run(1, N - n, t.mixed_spread[n], t.mixed_lo[n] + t.mixed_spread[n], t.mixed_hi[n]);
      }
    }
    chunks[first] = std::move(s.best);
  });
  const Best* best = nullptr;
  for (const auto& b : chunks) {
    if (!b.counts.empty() && (!best || b.violation < best->violation)) best = &b;
  }
  if (!best) throw SolverError("oracle found no grid point");
  for (EdgeIndex e = 0; e < L; ++e) result.flow[e] = best->counts[e] * step;
  result.violation = best->violation;
  result.cost = total_cost(instance, result.flow);
  return result;
}

}  // namespace prioroute
