#include "navsec/route_map.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <sstream>

#include "navsec/error.hpp"
#include "navsec/lexicon.hpp"

namespace navsec {
namespace {

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
constexpr std::array<const char*, 3> kDashes = {"dashed", "dotted", "bold"};
constexpr const char* kGoldColor = "#2ca02c";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void check_nodes(const NavGraph& graph, const std::vector<int>& nodes) {
  for (int v : nodes) {
    if (v < 0 || v >= graph.size()) throw Error(ErrorCode::InvalidArgument, "trace node outside " + graph.id);
  }
}

std::string node_label(const NavGraph& g, int v) {
  const auto& lm = g.nodes[static_cast<std::size_t>(v)].landmarks;
  return lm.empty() ? std::to_string(v) : std::string(landmark_lexicon()[static_cast<std::size_t>(lm.front())]);
}

}  // namespace

TraceStyle trace_style(std::size_t index) {
  return {kColors[index % kColors.size()], kDashes[index % kDashes.size()]};
}

std::string route_map_dot(const NavGraph& graph, const RouteInstance& route, std::span<const LabeledTrace> traces) {
  check_nodes(graph, route.gold_nodes);
  for (const auto& t : traces) check_nodes(graph, t.visited);
  std::ostringstream out;
  out << "graph \"" << graph.id << "\" {\n"
      << "  graph [splines=false, label=\"" << route.id << "\"];\n"
      << "  node [shape=circle, width=0.12, fixedsize=true, fontsize=7, label=\"\"];\n";
  for (const auto& n : graph.nodes) {
    out << "  n" << n.id << " [pos=\"" << fmt(n.pos.x * 10) << "," << fmt(n.pos.y * 10) << "!\"";
    if (n.id == route.start.node) {
      out << ", shape=box, width=0.25, style=filled, fillcolor=\"#aec7e8\", xlabel=\"start\"";
    } else if (n.id == route.goal) {
      out << ", shape=doublecircle, width=0.25, style=filled, fillcolor=\"#98df8a\", xlabel=\"goal: "
          << node_label(graph, n.id) << "\"";
    } else if (n.hazard) {
      out << ", style=filled, fillcolor=\"#ff9896\"";
    } else if (!n.landmarks.empty()) {
      out << ", xlabel=\"" << node_label(graph, n.id) << "\"";
    }
    out << "];\n";
  }
  for (auto [a, b] : graph.edges) out << "  n" << a << " -- n" << b << " [color=\"#cccccc\"];\n";
  for (std::size_t i = 0; i + 1 < route.gold_nodes.size(); ++i) {
    out << "  n" << route.gold_nodes[i] << " -- n" << route.gold_nodes[i + 1] << " [color=\"" << kGoldColor
        << "\", penwidth=3, style=solid, class=\"gold\"];\n";
  }
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto style = trace_style(t);
    const auto& v = traces[t].visited;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      out << "  n" << v[i] << " -- n" << v[i + 1] << " [color=\"" << style.color << "\", penwidth=2, style="
          << style.dash << ", class=\"trace\", label=\"" << (i == 0 ? traces[t].label : "") << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string route_map_svg(const NavGraph& graph, const RouteInstance& route, std::span<const LabeledTrace> traces) {
  check_nodes(graph, route.gold_nodes);
  for (const auto& t : traces) check_nodes(graph, t.visited);
  double minx = std::numeric_limits<double>::max(), miny = minx;
  double maxx = std::numeric_limits<double>::lowest(), maxy = maxx;
  for (const auto& n : graph.nodes) {
    minx = std::min(minx, n.pos.x);
    miny = std::min(miny, n.pos.y);
    maxx = std::max(maxx, n.pos.x);
    maxy = std::max(maxy, n.pos.y);
  }
  const double scale = 40.0, margin = 40.0, legend = 20.0 * static_cast<double>(traces.size() + 1) + 10.0;
  const double width = (maxx - minx) * scale + 2 * margin;
  const double height = (maxy - miny) * scale + 2 * margin + legend;
  auto X = [&](int v) { return fmt((graph.nodes[static_cast<std::size_t>(v)].pos.x - minx) * scale + margin); };
  // SVG y grows downward; flip so the drawing matches the world frame.
  auto Y = [&](int v) { return fmt((maxy - graph.nodes[static_cast<std::size_t>(v)].pos.y) * scale + margin); };
  auto polyline = [&](const std::vector<int>& nodes) {
    std::string pts;
    for (int v : nodes) pts += X(v) + "," + Y(v) + " ";
    if (!pts.empty()) pts.pop_back();
    return pts;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n"
      << "  <title>" << graph.id << " " << route.id << "</title>\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n  <g class=\"streets\">\n";
  for (auto [a, b] : graph.edges) {
    out << "    <line x1=\"" << X(a) << "\" y1=\"" << Y(a) << "\" x2=\"" << X(b) << "\" y2=\"" << Y(b)
        << "\" stroke=\"#cccccc\" stroke-width=\"2\"/>\n";
  }
  out << "  </g>\n  <g class=\"nodes\">\n";
  for (const auto& n : graph.nodes) {
    const char* fill = n.hazard ? "#ff9896" : (n.landmarks.empty() ? "#999999" : "#555555");
    out << "    <circle cx=\"" << X(n.id) << "\" cy=\"" << Y(n.id) << "\" r=\"3\" fill=\"" << fill << "\"/>\n";
  }
  out << "  </g>\n";
  out << "  <polyline class=\"gold\" points=\"" << polyline(route.gold_nodes) << "\" fill=\"none\" stroke=\""
      << kGoldColor << "\" stroke-width=\"6\" stroke-opacity=\"0.6\"/>\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto style = trace_style(t);
    const char* dash = style.dash == "dashed" ? "8,4" : style.dash == "dotted" ? "2,4" : "none";
    out << "  <polyline class=\"trace\" data-label=\"" << traces[t].label << "\" points=\""
        << polyline(traces[t].visited) << "\" fill=\"none\" stroke=\"" << style.color
        << "\" stroke-width=\"3\" stroke-dasharray=\"" << dash << "\"/>\n";
  }
  out << "  <rect x=\"" << fmt(std::stod(X(route.start.node)) - 7) << "\" y=\"" << fmt(std::stod(Y(route.start.node)) - 7)
      << "\" width=\"14\" height=\"14\" fill=\"#aec7e8\" stroke=\"black\"/>\n"
      << "  <circle cx=\"" << X(route.goal) << "\" cy=\"" << Y(route.goal)
      << "\" r=\"8\" fill=\"#98df8a\" stroke=\"black\"/>\n"
      << "  <text x=\"" << X(route.goal) << "\" y=\"" << fmt(std::stod(Y(route.goal)) - 12)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << node_label(graph, route.goal) << "</text>\n";
  double ly = height - legend + 10;
  out << "  <g class=\"legend\" font-size=\"12\">\n"
      << "    <line x1=\"10\" y1=\"" << fmt(ly) << "\" x2=\"40\" y2=\"" << fmt(ly) << "\" stroke=\"" << kGoldColor
      << "\" stroke-width=\"6\"/><text x=\"48\" y=\"" << fmt(ly + 4) << "\">gold route</text>\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    ly += 20;
    out << "    <line x1=\"10\" y1=\"" << fmt(ly) << "\" x2=\"40\" y2=\"" << fmt(ly) << "\" stroke=\""
        << trace_style(t).color << "\" stroke-width=\"3\"/><text x=\"48\" y=\"" << fmt(ly + 4) << "\">"
        << traces[t].label << "</text>\n";
  }
  out << "  </g>\n</svg>\n";
  return out.str();
}

}  // namespace navsec
