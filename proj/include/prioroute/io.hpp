#pragma once

// JSON, CSV and SVG serialization.

#include <string>
#include <vector>

#include "prioroute/equilibrium.hpp"
#include "prioroute/model.hpp"
#include "prioroute/pricing.hpp"

namespace prioroute {

std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

/// {"prices": {id: fee}, "disabled": [ids]}. Edges listed in neither are
/// read as disabled.
std::string prices_to_json(const Instance& instance, const PriceVector& prices);
PriceVector prices_from_json(const Instance& instance, const std::string& text);

std::string equilibrium_to_json(const Instance& instance, const ExtendedEquilibrium& eq);

/// Reads the lane flows of an equilibrium file. Per-commodity lane flows
/// come from "commodity_flows"; a single-commodity file may omit them.
ExtendedFlow extended_flow_from_json(const Instance& instance, const std::string& text);

std::string report_to_json(const SolveReport& report);
std::string poa_to_json(const Instance& instance, const PoAReport& report);
std::string verification_to_json(const Instance& instance, const VerificationReport& report);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);

/// Aligned text table of per-edge flows, splits, costs and latencies.
std::string equilibrium_table(const Instance& instance, const PriceVector& prices,
                              const ExtendedEquilibrium& eq);

struct SvgSeries {
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Self-contained line chart.
std::string svg_chart(const std::vector<SvgSeries>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      bool log_x = false);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace prioroute
