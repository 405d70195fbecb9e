#include "prioroute/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace prioroute {

using json = nlohmann::ordered_json;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& err) {
    throw InputError(std::string("malformed ") + what + ": " + err.what());
  }
}

NodeIndex node_ref(const std::vector<std::string>& nodes, const json& v) {
  if (v.is_number_unsigned()) return v.get<NodeIndex>();
  if (!v.is_string()) throw InputError("node references must be names or indices");
  const auto name = v.get<std::string>();
  auto it = std::find(nodes.begin(), nodes.end(), name);
  if (it == nodes.end()) throw InputError("unknown node '" + name + "'");
  return static_cast<NodeIndex>(it - nodes.begin());
}

double number(const json& obj, const char* key, double fallback, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw InputError(std::string("missing field '") + key + "'");
    return fallback;
  }
  if (!it->is_number()) throw InputError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

EdgeIndex edge_ref(const Instance& instance, const std::string& id) {
  auto e = instance.find_edge(id);
  if (!e) throw InputError("unknown edge id '" + id + "'");
  return *e;
}

json lanes(const LaneFlow& l) { return json{{"R", l.regular}, {"V", l.priority}}; }

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string instance_to_json(const Instance& instance) {
  json j;
  j["nodes"] = instance.nodes();
  json edges = json::array();
  for (const Edge& e : instance.edges()) {
    json m = e.series_count <= 9007199254740992.0
                 ? json(static_cast<std::uint64_t>(e.series_count))
                 : json(e.series_count);
    edges.push_back({{"id", e.id},
                     {"tail", instance.nodes()[e.tail]},
                     {"head", instance.nodes()[e.head]},
                     {"a", e.a},
                     {"b", e.b},
                     {"m", m}});
  }
  j["edges"] = std::move(edges);
  json comms = json::array();
  for (const Commodity& c : instance.commodities()) {
    comms.push_back({{"source", instance.nodes()[c.source]},
                     {"sink", instance.nodes()[c.sink]},
                     {"demand", c.demand}});
  }
  j["commodities"] = std::move(comms);
  return j.dump(2) + "\n";
}

Instance instance_from_json(const std::string& text) {
  const json j = parse(text, "instance");
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") ||
      !j.contains("commodities")) {
    throw InputError("instance needs 'nodes', 'edges' and 'commodities'");
  }
  std::vector<std::string> nodes;
  for (const auto& n : j["nodes"]) {
    if (!n.is_string()) throw InputError("node names must be strings");
    nodes.push_back(n.get<std::string>());
  }
  std::vector<Edge> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_object() || !e.contains("id") || !e["id"].is_string()) {
      throw InputError("every edge needs a string 'id'");
    }
    Edge edge;
    edge.id = e["id"].get<std::string>();
    if (!e.contains("tail") || !e.contains("head")) {
      throw InputError("edge '" + edge.id + "' needs 'tail' and 'head'");
    }
    edge.tail = node_ref(nodes, e["tail"]);
    edge.head = node_ref(nodes, e["head"]);
    edge.a = number(e, "a", 0.0, true);
    edge.b = number(e, "b", 0.0, true);
    edge.series_count = number(e, "m", 1.0, false);
    edges.push_back(std::move(edge));
  }
  std::vector<Commodity> comms;
  for (const auto& c : j["commodities"]) {
    if (!c.is_object() || !c.contains("source") || !c.contains("sink")) {
      throw InputError("every commodity needs 'source' and 'sink'");
    }
    comms.push_back({node_ref(nodes, c["source"]), node_ref(nodes, c["sink"]),
                     number(c, "demand", 0.0, true)});
  }
  return Instance(std::move(nodes), std::move(edges), std::move(comms));
}

std::string prices_to_json(const Instance& instance, const PriceVector& prices) {
  json fees = json::object();
  json disabled = json::array();
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    if (prices.enabled(e)) {
      fees[instance.edge(e).id] = prices.fee(e);
    } else {
      disabled.push_back(instance.edge(e).id);
    }
  }
  json j;
  j["prices"] = std::move(fees);
  j["disabled"] = std::move(disabled);
  return j.dump(2) + "\n";
}

PriceVector prices_from_json(const Instance& instance, const std::string& text) {
  const json j = parse(text, "price file");
  if (!j.is_object()) throw InputError("price file must be an object");
  PriceVector p(instance.num_edges());
  if (j.contains("prices")) {
    if (!j["prices"].is_object()) throw InputError("'prices' must map edge ids to fees");
    for (const auto& [id, fee] : j["prices"].items()) {
      if (!fee.is_number()) throw InputError("fee of edge '" + id + "' must be a number");
      p.set_fee(edge_ref(instance, id), fee.get<double>());
    }
  }
  if (j.contains("disabled")) {
    for (const auto& id : j["disabled"]) {
      if (!id.is_string()) throw InputError("'disabled' must list edge ids");
      const EdgeIndex e = edge_ref(instance, id.get<std::string>());
      if (p.enabled(e)) {
        throw InputError("edge '" + id.get<std::string>() + "' is both priced and disabled");
      }
    }
  }
  return p;
}

std::string report_to_json(const SolveReport& report) {
  json j{{"iterations", report.iterations},
         {"gap", report.gap},
         {"gap_tolerance", report.gap_tolerance},
         {"potential", report.potential},
         {"seconds", report.seconds},
         {"termination", to_string(report.termination)},
         {"method", to_string(report.method)}};
  return j.dump(2);
}

std::string equilibrium_to_json(const Instance& instance, const ExtendedEquilibrium& eq) {
  json total = json::object(), splits = json::object(), xi = json::object();
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    const auto& id = instance.edge(e).id;
    total[id] = eq.total.edges[e];
    splits[id] = lanes(eq.flow.edges[e]);
    xi[id] = eq.xi[e];
  }
  json comm = json::array();
  for (const auto& fi : eq.flow.by_commodity) {
    json c = json::object();
    for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
      if (fi[e].total() != 0.0) c[instance.edge(e).id] = lanes(fi[e]);
    }
    comm.push_back(std::move(c));
  }
  json j;
  j["total_flow"] = std::move(total);
  j["splits"] = std::move(splits);
  j["xi"] = std::move(xi);
  j["lambda"] = eq.lambda;
  j["epsilon"] = eq.epsilon;
  j["commodity_flows"] = std::move(comm);
  // Wall time is left out so that reruns write identical files.
  json solver = json::parse(report_to_json(eq.report));
  solver.erase("seconds");
  j["solver"] = std::move(solver);
  return j.dump(2) + "\n";
}

ExtendedFlow extended_flow_from_json(const Instance& instance, const std::string& text) {
  const json j = parse(text, "flow file");
  if (!j.is_object() || !j.contains("splits") || !j["splits"].is_object()) {
    throw InputError("flow file needs a 'splits' object");
  }
  auto read_lanes = [&](const json& obj) {
    std::vector<LaneFlow> out(instance.num_edges());
    for (const auto& [id, l] : obj.items()) {
      if (!l.is_object()) throw InputError("lane flows of edge '" + id + "' must be an object");
      out[edge_ref(instance, id)] = {number(l, "R", 0.0, false), number(l, "V", 0.0, false)};
    }
    return out;
  };
  ExtendedFlow flow;
  flow.edges = read_lanes(j["splits"]);
  if (j.contains("commodity_flows")) {
    for (const auto& c : j["commodity_flows"]) flow.by_commodity.push_back(read_lanes(c));
  } else if (instance.num_commodities() == 1) {
    flow.by_commodity.push_back(flow.edges);
  } else {
    throw InputError("flow file for several commodities needs 'commodity_flows'");
  }
  if (flow.by_commodity.size() != instance.num_commodities()) {
    throw InputError("flow file has the wrong number of commodities");
  }
  return flow;
}

std::string poa_to_json(const Instance& instance, const PoAReport& report) {
  json fees = json::object();
  json disabled = json::array();
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    if (report.prices.enabled(e)) {
      fees[instance.edge(e).id] = report.prices.fee(e);
    } else {
      disabled.push_back(instance.edge(e).id);
    }
  }
  json j;
  j["equilibrium_cost"] = report.equilibrium_cost;
  j["optimal_cost"] = report.optimal_cost;
  j["poa"] = report.ratio ? json(*report.ratio) : json(nullptr);
  j["revenue"] = report.revenue;
  j["epsilon"] = report.equilibrium.epsilon;
  j["prices"] = std::move(fees);
  j["disabled"] = std::move(disabled);
  return j.dump(2) + "\n";
}

std::string verification_to_json(const Instance& instance, const VerificationReport& report) {
  auto path = [&](const ExtendedPath& p) {
    json out = json::array();
    for (const auto& step : p) {
      out.push_back({{"edge", instance.edge(step.edge).id},
                     {"lane", step.lane == Lane::priority ? "V" : "R"}});
    }
    return out;
  };
  json j;
  j["is_equilibrium"] = report.is_equilibrium;
  j["violation"] = report.violation;
  j["epsilon"] = report.epsilon;
  if (report.commodity) {
    j["commodity"] = *report.commodity;
    j["used_path"] = path(report.used_path);
    j["used_cost"] = report.used_cost;
    j["cheaper_path"] = path(report.cheaper_path);
    j["cheaper_cost"] = report.cheaper_cost;
  }
  return j.dump(2) + "\n";
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "omega,cost,poa,converged\n";
  for (const auto& pt : curve) {
    out += fmt(pt.omega) + "," + fmt(pt.cost) + "," + fmt(pt.poa) + "," +
           (pt.converged ? "true" : "false") + "\n";
  }
  return out;
}

std::string equilibrium_table(const Instance& instance, const PriceVector& prices,
                              const ExtendedEquilibrium& eq) {
  static const char* names[] = {"disabled", "below", "critical", "above"};
  std::size_t width = 4;
  for (const Edge& e : instance.edges()) width = std::max(width, e.id.size());
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %12s %12s %12s %12s %12s %12s  %s\n",
                static_cast<int>(width), "edge", "fee", "flow", "regular", "priority", "xi",
                "latency", "regime");
  out += line;
  for (EdgeIndex e = 0; e < instance.num_edges(); ++e) {
    const Edge& edge = instance.edge(e);
    const std::string fee = prices.enabled(e) ? fmt(prices.fee(e)) : "-";
    std::snprintf(line, sizeof line, "%-*s %12.12s %12.6g %12.6g %12.6g %12.6g %12.6g  %s\n",
                  static_cast<int>(width), edge.id.c_str(), fee.c_str(), eq.total.edges[e],
                  eq.flow.edges[e].regular, eq.flow.edges[e].priority, eq.xi[e],
                  edge.latency(eq.total.edges[e]), names[static_cast<int>(eq.regime[e])]);
    out += line;
  }
  for (CommodityIndex i = 0; i < eq.lambda.size(); ++i) {
    std::snprintf(line, sizeof line, "lambda[%zu] = %.10g\n", i, eq.lambda[i]);
    out += line;
  }
  std::snprintf(line, sizeof line, "total latency %.10g, certified slack %.3g\n",
                total_cost(instance, eq.total.edges), eq.epsilon);
  out += line;
  return out;
}

std::string svg_chart(const std::vector<SvgSeries>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label, bool log_x) {
  const double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 55;
  double x0 = kInfinity, x1 = -kInfinity, y0 = kInfinity, y1 = -kInfinity;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (!std::isfinite(y) || (log_x && !(x > 0.0))) continue;
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right
      << "\" y2=\"" << H - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << H - bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double u = x0 + (x1 - x0) * k / 4.0;
    const double xv = log_x ? std::pow(10.0, u) : u;
    const double X = left + (W - left - right) * k / 4.0;
    out << "<line x1=\"" << X << "\" y1=\"" << H - bottom << "\" x2=\"" << X << "\" y2=\""
        << H - bottom + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << X << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"middle\">"
        << num(xv) << "</text>\n";
    const double yv = y0 + (y1 - y0) * k / 4.0;
    const double Y = py(yv);
    out << "<line x1=\"" << left - 5 << "\" y1=\"" << Y << "\" x2=\"" << left << "\" y2=\"" << Y
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">" << num(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << (top + H - bottom) / 2 << ")\">" << y_label
      << "</text>\n";
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
    if (s.dashed) out << " stroke-dasharray=\"6 4\"";
    out << " points=\"";
    bool first = true;
    for (auto [x, y] : s.points) {
      if (!std::isfinite(y) || (log_x && !(x > 0.0))) continue;
      if (!first) out << ' ';
      out << num(px(x)) << ',' << num(py(y));
      first = false;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace prioroute
