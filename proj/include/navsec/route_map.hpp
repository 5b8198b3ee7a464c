#pragma once

#include <span>
#include <string>
#include <vector>

#include "navsec/world.hpp"

namespace navsec {

struct LabeledTrace {
  std::string label;
  std::vector<int> visited;
};

/// Drawing style assigned to the i-th trace (the gold route has its own).
struct TraceStyle {
  std::string color;
  std::string dash;  // DOT style name
};
TraceStyle trace_style(std::size_t index);

/// Graphviz description with fixed node positions (neato -n).
std::string route_map_dot(const NavGraph& graph, const RouteInstance& route, std::span<const LabeledTrace> traces);
/// Standalone SVG drawing of the same map.
std::string route_map_svg(const NavGraph& graph, const RouteInstance& route, std::span<const LabeledTrace> traces);

}  // namespace navsec
