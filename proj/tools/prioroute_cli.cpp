// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "prioroute/prioroute.h"

namespace {

struct Failure {
  pr_status status;
};

void check(pr_status s) {
  if (s != PR_OK) throw Failure{s};
}

// Owning wrappers for the C handles.
struct Text {
  char* p = nullptr;
  ~Text() { pr_string_free(p); }
  std::string str() const { return p ? p : ""; }
};
struct InstanceHandle {
  pr_instance* p = nullptr;
  ~InstanceHandle() { pr_instance_free(p); }
};
struct PricesHandle {
  pr_prices* p = nullptr;
  ~PricesHandle() { pr_prices_free(p); }
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    throw Failure{PR_INPUT_ERROR};
  }
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    throw Failure{PR_INPUT_ERROR};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Common {
  std::string instance_path;
  std::string generate;
  std::string prices = "none";
  pr_options options{};
  std::string method = "newton";
};

void add_common(CLI::App* cmd, Common& c, bool with_prices) {
  auto* file = cmd->add_option("-i,--instance", c.instance_path, "Instance JSON file");
  auto* gen = cmd->add_option("--generate", c.generate,
                              "Generator spec as JSON, e.g. '{\"family\":\"pigou\",\"r\":2}'");
  file->excludes(gen);
  gen->excludes(file);
  if (with_prices) {
    cmd->add_option("-p,--prices", c.prices,
                    "marginal | none | uniform:<fee> | price file")
        ->capture_default_str();
  }
  cmd->add_option("--gap", c.options.relative_gap, "Duality-gap target relative to 1 + |potential|")
      ->capture_default_str();
  cmd->add_option("--critical-tol", c.options.critical_tolerance,
                  "Relative band around a threshold treated as critical")
      ->capture_default_str();
  cmd->add_option("--certify-eps", c.options.certify_epsilon,
                  "Accepted Wardrop violation, scaled by max(1, lambda)")
      ->capture_default_str();
  cmd->add_option("--max-iter", c.options.max_iterations, "Iteration cap per solve")
      ->capture_default_str();
  cmd->add_option("--method", c.method, "newton | pairwise | frank-wolfe")
      ->check(CLI::IsMember({"newton", "pairwise", "frank-wolfe"}))
      ->capture_default_str();
  cmd->add_option("-j,--jobs", c.options.jobs, "Worker threads for sweeps")->capture_default_str();
}

void finish_options(Common& c) {
  c.options.method = c.method == "pairwise"      ? PR_METHOD_PAIRWISE
                     : c.method == "frank-wolfe" ? PR_METHOD_FRANK_WOLFE
                                                 : PR_METHOD_NEWTON;
}

void load(const Common& c, InstanceHandle& inst) {
  if (!c.generate.empty()) {
    check(pr_generate(c.generate.c_str(), &inst.p, nullptr));
  } else if (!c.instance_path.empty()) {
    check(pr_instance_load(c.instance_path.c_str(), &inst.p));
  } else {
    std::cerr << "error: give --instance or --generate\n";
    throw Failure{PR_INPUT_ERROR};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selfish routing with priced priority lanes"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Write a generated instance as JSON");
  std::string family;
  std::string gen_out;
  int k = 2;
  bool expanded = false;
  double r = 2.0, a = 1.0, b = 0.0, omega = 1.0, demand = 1.0;
  bool no_shortcut = false;
  unsigned long long seed = 1;
  std::string topology = "parallel";
  int links = 5, layers = 3, width = 3, extra = 0;
  double a_lo = 0.1, a_hi = 2.0, b_lo = 0.0, b_hi = 2.0, d_lo = 0.5, d_hi = 3.0;
  gen->add_option("family", family, "single_edge | pigou | braess | gk | random")
      ->required()
      ->check(CLI::IsMember({"single_edge", "pigou", "braess", "gk", "random"}));
  gen->add_option("-o,--output", gen_out, "Output file (stdout when omitted)");
  gen->add_option("--k", k, "G_k: index k")->capture_default_str();
  gen->add_flag("--compressed", "G_k: one edge with series count per path (default)");
  gen->add_flag("--expanded", expanded, "G_k: literal series edges (k <= 14)");
  gen->add_option("--r", r, "Demand of single_edge and pigou")->capture_default_str();
  gen->add_option("--a", a, "single_edge: slope")->capture_default_str();
  gen->add_option("--b", b, "single_edge: offset")->capture_default_str();
  gen->add_option("--omega", omega, "single_edge: fee")->capture_default_str();
  gen->add_option("--demand", demand, "braess: demand")->capture_default_str();
  gen->add_flag("--no-shortcut", no_shortcut, "braess: drop the free middle edge");
  gen->add_option("--seed", seed, "random: seed")->capture_default_str();
  gen->add_option("--topology", topology, "random: parallel | layered")
      ->check(CLI::IsMember({"parallel", "layered"}))
      ->capture_default_str();
  gen->add_option("--links", links, "random parallel: link count")->capture_default_str();
  gen->add_option("--layers", layers, "random layered: layer count")->capture_default_str();
  gen->add_option("--width", width, "random layered: nodes per layer")->capture_default_str();
  gen->add_option("--extra-commodities", extra, "random layered: extra commodities")
      ->capture_default_str();
  gen->add_option("--a-lo", a_lo)->capture_default_str();
  gen->add_option("--a-hi", a_hi)->capture_default_str();
  gen->add_option("--b-lo", b_lo)->capture_default_str();
  gen->add_option("--b-hi", b_hi)->capture_default_str();
  gen->add_option("--demand-lo", d_lo)->capture_default_str();
  gen->add_option("--demand-hi", d_hi)->capture_default_str();

  // solve
  Common solve_c;
  pr_options_default(&solve_c.options);
  auto* solve = app.add_subcommand("solve", "Compute and certify an equilibrium");
  add_common(solve, solve_c, true);
  std::string solve_out;
  bool solve_json = false;
  solve->add_option("-o,--output", solve_out, "Write the equilibrium JSON here");
  solve->add_flag("--json", solve_json, "Print JSON instead of the table");

  // poa
  Common poa_c;
  pr_options_default(&poa_c.options);
  auto* poa = app.add_subcommand("poa", "Equilibrium cost, optimal cost and their ratio");
  add_common(poa, poa_c, true);
  std::string poa_out;
  poa->add_option("-o,--output", poa_out, "Write the report here (stdout when omitted)");

  // sweep
  Common sweep_c;
  pr_options_default(&sweep_c.options);
  auto* sweep = app.add_subcommand("sweep", "Equilibrium cost over a grid of uniform fees");
  add_common(sweep, sweep_c, false);
  double lo = -1.0, hi = -1.0;
  int n = 400;
  bool linear = false;
  std::string range, csv_out, svg_out;
  sweep->add_option("--lo", lo, "Smallest fee (default from the instance)");
  sweep->add_option("--hi", hi, "Largest fee (default from the instance)");
  sweep->add_option("-n,--points", n, "Grid points")->capture_default_str();
  sweep->add_option("--range", range, "sweep:<lo>:<hi>:<n> instead of --lo/--hi/--points");
  sweep->add_flag("--linear", linear, "Linear instead of logarithmic spacing");
  sweep->add_option("--csv", csv_out, "CSV output (stdout when omitted)");
  sweep->add_option("--svg", svg_out, "SVG chart output");

  // figure1
  auto* fig = app.add_subcommand("figure1", "Single-edge equilibrium cost against total flow");
  double fa = 1.0, fb = 0.0, fw = 1.0, rmax = 4.0;
  int samples = 201;
  std::string fig_svg, fig_csv;
  fig->add_option("--a", fa)->capture_default_str();
  fig->add_option("--b", fb)->capture_default_str();
  fig->add_option("--omega", fw)->capture_default_str();
  fig->add_option("--r-max", rmax)->capture_default_str();
  fig->add_option("--samples", samples)->capture_default_str();
  fig->add_option("--svg", fig_svg, "SVG output (stdout when no CSV is requested)");
  fig->add_option("--csv", fig_csv, "CSV output");

  // verify
  Common verify_c;
  pr_options_default(&verify_c.options);
  auto* verify = app.add_subcommand("verify", "Check a flow file for the equilibrium condition");
  add_common(verify, verify_c, true);
  std::string flow_path;
  double eps = 1e-6;
  verify->add_option("-f,--flow", flow_path, "Equilibrium JSON written by solve")->required();
  verify->add_option("--eps", eps, "Accepted violation (absolute)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : PR_INPUT_ERROR;
  }

  try {
    if (gen->parsed()) {
      nlohmann::json spec{{"family", family}};
      if (family == "single_edge") {
        spec.update({{"a", a}, {"b", b}, {"omega", omega}, {"r", r}});
      } else if (family == "pigou") {
        spec["r"] = r;
      } else if (family == "braess") {
        spec.update({{"demand", demand}, {"shortcut", !no_shortcut}});
      } else if (family == "gk") {
        spec.update({{"k", k}, {"compressed", !expanded}});
      } else {
        spec.update({{"seed", seed},
                     {"topology", topology},
                     {"links", links},
                     {"layers", layers},
                     {"width", width},
                     {"extra_commodities", extra},
                     {"a_lo", a_lo},
                     {"a_hi", a_hi},
                     {"b_lo", b_lo},
                     {"b_hi", b_hi},
                     {"demand_lo", d_lo},
                     {"demand_hi", d_hi}});
      }
      InstanceHandle inst;
      PricesHandle prices;
      check(pr_generate(spec.dump().c_str(), &inst.p, &prices.p));
      Text json;
      check(pr_instance_to_json(inst.p, &json.p));
      write_or_print(gen_out, json.str());
      size_t nodes = 0, edges = 0;
      double total = 0.0;
      check(pr_instance_summary(inst.p, &nodes, &edges, &total));
      (gen_out.empty() ? std::cerr : std::cout)
          << family << ": " << nodes << " nodes, " << edges << " edges, demand " << total << "\n";
      return 0;
    }

    if (fig->parsed()) {
      Text svg, csv;
      check(pr_figure1(fa, fb, fw, rmax, samples, &svg.p, &csv.p));
      if (!fig_csv.empty()) write_or_print(fig_csv, csv.str());
      if (!fig_svg.empty() || fig_csv.empty()) write_or_print(fig_svg, svg.str());
      return 0;
    }

    Common& c = solve->parsed() ? solve_c : poa->parsed() ? poa_c : verify->parsed() ? verify_c : sweep_c;
    finish_options(c);
    InstanceHandle inst;
    load(c, inst);

    if (sweep->parsed()) {
      if (!range.empty()) {
        double rl = 0, rh = 0;
        int rn = 0;
        char tail = 0;
        if (std::sscanf(range.c_str(), "sweep:%lf:%lf:%d%c", &rl, &rh, &rn, &tail) != 3) {
          std::cerr << "error: --range must look like sweep:<lo>:<hi>:<n>\n";
          return PR_INPUT_ERROR;
        }
        lo = rl, hi = rh, n = rn;
      }
      if (lo >= 0.0 && hi >= 0.0 && lo > hi) {
        std::cerr << "error: lo must not exceed hi\n";
        return PR_INPUT_ERROR;
      }
      Text csv, svg;
      check(pr_sweep(inst.p, lo, hi, n, linear ? 0 : 1, &c.options, &csv.p,
                     svg_out.empty() ? nullptr : &svg.p));
      write_or_print(csv_out, csv.str());
      if (!svg_out.empty()) write_or_print(svg_out, svg.str());
      return 0;
    }

    PricesHandle prices;
    check(pr_prices_parse(inst.p, c.prices.c_str(), &c.options, &prices.p));

    if (solve->parsed()) {
      Text json, table;
      check(pr_solve(inst.p, prices.p, &c.options, &json.p, &table.p));
      if (!solve_out.empty()) write_or_print(solve_out, json.str());
      std::cout << (solve_json ? json.str() : table.str());
      return 0;
    }
    if (poa->parsed()) {
      Text json;
      check(pr_poa(inst.p, prices.p, &c.options, &json.p));
      write_or_print(poa_out, json.str());
      return 0;
    }
    if (verify->parsed()) {
      const std::string flow = read_text(flow_path);
      Text report;
      const pr_status s = pr_verify(inst.p, prices.p, flow.c_str(), eps, &report.p);
      if (s != PR_OK && s != PR_VERIFY_FAILED) throw Failure{s};
      std::cout << report.str();
      return s;
    }
  } catch (const Failure& f) {
    const char* msg = pr_last_error();
    if (msg && *msg) std::cerr << "error: " << msg << "\n";
    return f.status;
  }
  return 0;
}
