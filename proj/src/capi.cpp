#include "prioroute/prioroute.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <tuple>

#include "json.hpp"
#include "prioroute/equilibrium.hpp"
#include "prioroute/generators.hpp"
#include "prioroute/io.hpp"
#include "prioroute/pricing.hpp"

struct pr_instance {
  prioroute::Instance value;
};

struct pr_prices {
  prioroute::PriceVector value;
};

namespace {

thread_local std::string last_error;

using namespace prioroute;

template <class Fn>
pr_status guard(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const InputError& err) {
    last_error = err.what();
    return PR_INPUT_ERROR;
  } catch (const nlohmann::json::exception& err) {
    last_error = err.what();
    return PR_INPUT_ERROR;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PR_SOLVER_ERROR;
  } catch (const std::exception& err) {
    last_error = err.what();
    return PR_SOLVER_ERROR;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw InputError(std::string(what) + " must not be NULL");
}

EquilibriumOptions equilibrium_options(const pr_options* o) {
  pr_options defaults;
  pr_options_default(&defaults);
  if (!o) o = &defaults;
  if (!(o->relative_gap > 0.0) || !(o->critical_tolerance > 0.0) ||
      !(o->certify_epsilon > 0.0) || o->max_iterations < 1) {
    throw InputError("tolerances and the iteration cap must be positive");
  }
  EquilibriumOptions eq;
  eq.critical_tolerance = o->critical_tolerance;
  eq.certify_epsilon = o->certify_epsilon;
  eq.solve.relative_gap = o->relative_gap;
  eq.solve.max_iterations = o->max_iterations;
  switch (o->method) {
    case PR_METHOD_NEWTON: eq.solve.method = Method::projected_newton; break;
    case PR_METHOD_PAIRWISE: eq.solve.method = Method::pairwise; break;
    case PR_METHOD_FRANK_WOLFE: eq.solve.method = Method::frank_wolfe; break;
    default: throw InputError("unknown method");
  }
  // The finest ramp must stay inside the critical band.
  if (eq.smoothing_schedule.back() >= eq.critical_tolerance) {
    eq.smoothing_schedule.back() = 0.1 * eq.critical_tolerance;
  }
  return eq;
}

int jobs_of(const pr_options* o) { return o ? std::max(1, o->jobs) : 1; }

double get(const nlohmann::json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw InputError(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

extern "C" {

void pr_options_default(pr_options* options) {
  if (!options) return;
  options->relative_gap = 1e-8;
  options->critical_tolerance = kDefaultCriticalTolerance;
  options->certify_epsilon = 1e-6;
  options->max_iterations = 1000000;
  options->method = PR_METHOD_NEWTON;
  options->jobs = 1;
}

const char* pr_last_error(void) { return last_error.c_str(); }

void pr_string_free(char* s) { std::free(s); }

pr_status pr_instance_load(const char* path, pr_instance** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pr_instance{instance_from_json(read_file(path))};
    return PR_OK;
  });
}

pr_status pr_instance_from_json(const char* json, pr_instance** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    *out = new pr_instance{instance_from_json(json)};
    return PR_OK;
  });
}

pr_status pr_instance_to_json(const pr_instance* instance, char** out) {
  return guard([&] {
    require(instance, "instance");
    require(out, "out");
    *out = dup(instance_to_json(instance->value));
    return PR_OK;
  });
}

pr_status pr_instance_summary(const pr_instance* instance, size_t* nodes, size_t* edges,
                              double* demand) {
  return guard([&] {
    require(instance, "instance");
    if (nodes) *nodes = instance->value.num_nodes();
    if (edges) *edges = instance->value.num_edges();
    if (demand) *demand = instance->value.total_demand();
    return PR_OK;
  });
}

void pr_instance_free(pr_instance* instance) { delete instance; }

pr_status pr_generate(const char* spec_json, pr_instance** out, pr_prices** prices_out) {
  return guard([&] {
    require(spec_json, "spec");
    require(out, "out");
    const auto spec = nlohmann::json::parse(spec_json);
    if (!spec.is_object() || !spec.contains("family") || !spec["family"].is_string()) {
      throw InputError("generator spec needs a 'family'");
    }
    const auto family = spec["family"].get<std::string>();
    std::optional<PriceVector> prices;
    Instance inst;
    if (family == "single_edge") {
      auto p = gen_single_edge(get(spec, "a", 1.0), get(spec, "b", 0.0), get(spec, "omega", 1.0),
                               get(spec, "r", 2.0));
      inst = std::move(p.instance);
      prices = std::move(p.prices);
    } else if (family == "pigou") {
      inst = gen_pigou(get(spec, "r", 2.0));
    } else if (family == "braess") {
      inst = gen_braess(get(spec, "demand", 1.0), spec.value("shortcut", true));
    } else if (family == "gk") {
      const double k = get(spec, "k", 2.0);
      if (k != std::floor(k) || k < 0.0 || k > 1000.0) {
        throw InputError("k must be an integer in [0, 1000]");
      }
      inst = gen_gk({static_cast<int>(k), spec.value("compressed", true)});
    } else if (family == "random") {
      RandomSpec r;
      const double seed = get(spec, "seed", 1.0);
      if (seed < 0.0 || seed != std::floor(seed)) throw InputError("seed must be a nonnegative integer");
      r.seed = static_cast<std::uint64_t>(seed);
      const auto topo = spec.value("topology", std::string("parallel"));
      if (topo == "parallel") {
        r.topology = RandomSpec::Topology::parallel;
      } else if (topo == "layered") {
        r.topology = RandomSpec::Topology::layered;
      } else {
        throw InputError("topology must be 'parallel' or 'layered'");
      }
      r.links = static_cast<int>(get(spec, "links", r.links));
      r.layers = static_cast<int>(get(spec, "layers", r.layers));
      r.width = static_cast<int>(get(spec, "width", r.width));
      r.a_lo = get(spec, "a_lo", r.a_lo);
      r.a_hi = get(spec, "a_hi", r.a_hi);
      r.b_lo = get(spec, "b_lo", r.b_lo);
      r.b_hi = get(spec, "b_hi", r.b_hi);
      r.demand_lo = get(spec, "demand_lo", r.demand_lo);
      r.demand_hi = get(spec, "demand_hi", r.demand_hi);
      r.extra_commodities = static_cast<int>(get(spec, "extra_commodities", 0));
      inst = gen_random(r);
    } else {
      throw InputError("unknown generator family '" + family + "'");
    }
    *out = new pr_instance{std::move(inst)};
    if (prices_out) *prices_out = prices ? new pr_prices{std::move(*prices)} : nullptr;
    return PR_OK;
  });
}

pr_status pr_prices_parse(const pr_instance* instance, const char* spec,
                          const pr_options* options, pr_prices** out) {
  return guard([&] {
    require(instance, "instance");
    require(spec, "price spec");
    require(out, "out");
    const Instance& inst = instance->value;
    const std::string s = spec;
    PriceVector p;
    if (s == "marginal") {
      auto opt = social_optimum(inst, equilibrium_options(options).solve);
      p = marginal_cost_prices(inst, opt.flow.edges);
    } else if (s == "none" || s == "disabled") {
      p = PriceVector::disabled(inst.num_edges());
    } else if (s.rfind("uniform:", 0) == 0) {
      const std::string v = s.substr(8);
      char* end = nullptr;
      const double w = std::strtod(v.c_str(), &end);
      if (v.empty() || *end != '\0') throw InputError("bad uniform fee '" + v + "'");
      p = PriceVector::uniform(inst.num_edges(), w);
    } else if (s.rfind("sweep:", 0) == 0) {
      throw InputError("sweep specs are only valid for the sweep command");
    } else {
      p = prices_from_json(inst, read_file(s));
    }
    *out = new pr_prices{std::move(p)};
    return PR_OK;
  });
}

pr_status pr_prices_to_json(const pr_instance* instance, const pr_prices* prices, char** out) {
  return guard([&] {
    require(instance, "instance");
    require(prices, "prices");
    require(out, "out");
    *out = dup(prices_to_json(instance->value, prices->value));
    return PR_OK;
  });
}

void pr_prices_free(pr_prices* prices) { delete prices; }

pr_status pr_solve(const pr_instance* instance, const pr_prices* prices,
                   const pr_options* options, char** json_out, char** table_out) {
  return guard([&] {
    require(instance, "instance");
    require(prices, "prices");
    if (prices->value.size() != instance->value.num_edges()) {
      throw InputError("prices do not match the instance");
    }
    auto eq = solve_equilibrium(instance->value, prices->value, equilibrium_options(options));
    if (json_out) *json_out = dup(equilibrium_to_json(instance->value, eq));
    if (table_out) *table_out = dup(equilibrium_table(instance->value, prices->value, eq));
    return PR_OK;
  });
}

pr_status pr_poa(const pr_instance* instance, const pr_prices* prices,
                 const pr_options* options, char** json_out) {
  return guard([&] {
    require(instance, "instance");
    require(prices, "prices");
    require(json_out, "out");
    if (prices->value.size() != instance->value.num_edges()) {
      throw InputError("prices do not match the instance");
    }
    auto report = evaluate_prices(instance->value, prices->value, equilibrium_options(options));
    *json_out = dup(poa_to_json(instance->value, report));
    return PR_OK;
  });
}

pr_status pr_sweep(const pr_instance* instance, double lo, double hi, int n, int logarithmic,
                   const pr_options* options, char** csv_out, char** svg_out) {
  return guard([&] {
    require(instance, "instance");
    const Instance& inst = instance->value;
    if (lo < 0.0 || hi < 0.0) std::tie(lo, hi) = default_sweep_range(inst);
    if (lo > hi) throw InputError("sweep needs lo <= hi");
    SearchConfig cfg;
    cfg.lo = lo;
    cfg.hi = hi;
    cfg.points = n;
    cfg.logarithmic = logarithmic != 0 && lo > 0.0;
    const auto grid = price_grid(cfg);
    const auto eq_options = equilibrium_options(options);
    const auto curve = uniform_price_curve(inst, grid, eq_options, jobs_of(options));
    if (csv_out) *csv_out = dup(curve_to_csv(curve));
    if (svg_out) {
      const double opt = social_optimum(inst, eq_options.solve).cost;
      SvgSeries cost, best;
      for (const auto& pt : curve) {
        cost.points.emplace_back(pt.omega, pt.cost);
        best.points.emplace_back(pt.omega, opt);
      }
      best.color = "#888888";
      best.dashed = true;
      *svg_out = dup(svg_chart({cost, best}, "Equilibrium latency under a uniform fee",
                               "fee", "total latency", cfg.logarithmic));
    }
    return PR_OK;
  });
}

pr_status pr_verify(const pr_instance* instance, const pr_prices* prices, const char* flow_json,
                    double epsilon, char** report_out) {
  return guard([&] {
    require(instance, "instance");
    require(prices, "prices");
    require(flow_json, "flow");
    if (!(epsilon >= 0.0)) throw InputError("epsilon must be nonnegative");
    const auto flow = extended_flow_from_json(instance->value, flow_json);
    const auto report = verify_equilibrium(instance->value, prices->value, flow, epsilon);
    if (report_out) *report_out = dup(verification_to_json(instance->value, report));
    return report.is_equilibrium ? PR_OK : PR_VERIFY_FAILED;
  });
}

pr_status pr_figure1(double a, double b, double omega, double r_max, int samples,
                     char** svg_out, char** csv_out) {
  return guard([&] {
    if (!(a >= 0.0) || !(b >= 0.0)) throw InputError("a and b must be nonnegative");
    const Edge e{"e", 0, 1, a, b, 1.0};
    const auto curve = edge_cost_curve(e, omega, r_max, samples);
    SvgSeries below, above, interval;
    below.points = curve.below;
    above.points = curve.above;
    interval.color = "#d62728";
    std::string csv = "branch,r,cost\n";
    auto row = [&csv](const char* branch, double r, double c) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g\n", branch, r, c);
      csv += buf;
    };
    for (auto [r, c] : curve.below) row("below", r, c);
    if (curve.interval) {
      const double t = *curve.threshold;
      interval.points = {{t, curve.interval->lo}, {t, curve.interval->hi}};
      row("interval", t, curve.interval->lo);
      row("interval", t, curve.interval->hi);
    }
    for (auto [r, c] : curve.above) row("above", r, c);
    if (csv_out) *csv_out = dup(csv);
    if (svg_out) {
      *svg_out = dup(svg_chart({below, interval, above}, "Single-edge equilibrium cost",
                               "total flow r", "cost"));
    }
    return PR_OK;
  });
}

}  // extern "C"
