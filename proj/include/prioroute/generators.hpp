#pragma once

// Instance families and ground-truth oracles.

#include <cstdint>
#include <string>
#include <vector>

#include "prioroute/model.hpp"

namespace prioroute {

struct PricedInstance {
  Instance instance;
  PriceVector prices;
};

/// Nodes s, t and one edge "e" carrying demand r, priced at `fee`.
PricedInstance gen_single_edge(double a, double b, double fee, double r);

/// Links "e1" (a=1, b=0) and "e2" (a=0, b=1) from s to t.
Instance gen_pigou(double r);

/// Nodes s, u, v, t with edges su and vt (a=1, b=0), ut and sv (a=0, b=1)
/// and, when `shortcut` is set, a free edge uv.
Instance gen_braess(double demand = 1.0, bool shortcut = true);

struct GkSpec {
  int k = 0;
  bool compressed = true;
};

/// Parallel s-t paths: Q is edge "q" with constant cost 1, and P_i for
/// i = 0..k consists of 2^i edges of slope 2^(1-i). Compressed paths are a
/// single edge "p<i>" with series count 2^i; expanded paths use edges
/// "p<i>_<j>". Demand k + 1. Edge 0 is Q, followed by P_0, P_1, ...
Instance gen_gk(const GkSpec& spec);

/// Equilibrium total latency of G_k under the uniform fee omega.
double gk_closed_form_cost(int k, double omega);

struct RandomSpec {
  std::uint64_t seed = 1;
  enum class Topology { parallel, layered } topology = Topology::parallel;
  int links = 5;   // parallel
  int layers = 3;  // layered
  int width = 3;   // layered
  double a_lo = 0.1, a_hi = 2.0;
  double b_lo = 0.0, b_hi = 2.0;
  double demand_lo = 0.5, demand_hi = 3.0;
  /// Layered only: extra commodities from random first-layer nodes to t.
  int extra_commodities = 0;
};

Instance gen_random(const RandomSpec& spec);

struct BruteForceResult {
  std::vector<double> flow;
  double cost = 0.0;
  double violation = 0.0;  // smallest Wardrop violation found on the grid
};

/// Exhaustive search over the demand simplex and the lane splits at step h
/// for single-commodity instances of at most four parallel links. Returns
/// the grid point with the smallest Wardrop violation.
BruteForceResult brute_force_equilibrium(const Instance& instance, const PriceVector& prices,
                                         double h, int jobs = 1);

}  // namespace prioroute
