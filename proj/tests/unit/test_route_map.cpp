#include <gtest/gtest.h>

#include <set>

#include "navsec/route_map.hpp"

using namespace navsec;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(RouteMap, DotListsEveryNodeAndTrace) {
  const NavGraph g = generate_world(3, {5, 5, 10.0, 0.5, 0.2, 0.1, true});
  const RouteInstance r = sample_route(g, 2, 6, 10);
  const std::vector<LabeledTrace> traces{{"clean", r.gold_nodes}, {"attacked", {r.start.node}}};
  const std::string dot = route_map_dot(g, r, traces);
  EXPECT_EQ(dot.rfind("graph", 0), 0u);
  for (const auto& n : g.nodes) EXPECT_NE(dot.find("n" + std::to_string(n.id) + " ["), std::string::npos);
  EXPECT_NE(dot.find("xlabel=\"start\""), std::string::npos);
  EXPECT_EQ(count(dot, "class=\"gold\""), r.gold_nodes.size() - 1);
  EXPECT_EQ(count(dot, "class=\"trace\""), r.gold_nodes.size() - 1);
  EXPECT_EQ(dot, route_map_dot(g, r, traces));
}

TEST(RouteMap, SvgIsSelfContained) {
  const NavGraph g = generate_world(3, {5, 5, 10.0, 0.5, 0.2, 0.1, true});
  const RouteInstance r = sample_route(g, 2, 6, 10);
  const std::vector<LabeledTrace> traces{{"clean", r.gold_nodes}};
  const std::string svg = route_map_svg(g, r, traces);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("clean"), std::string::npos);
}

TEST(RouteMap, TraceStylesAreDistinct) {
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto s = trace_style(i);
    EXPECT_TRUE(seen.emplace(s.color, s.dash).second) << i;
  }
}

TEST(RouteMap, UnknownNodeIsRejected) {
  const NavGraph g = generate_world(3, {5, 5, 10.0, 0.5, 0.2, 0.1, true});
  const RouteInstance r = sample_route(g, 2, 6, 10);
  const std::vector<LabeledTrace> traces{{"bad", {0, g.size() + 5}}};
  EXPECT_ANY_THROW(route_map_dot(g, r, traces));
  EXPECT_ANY_THROW(route_map_svg(g, r, traces));
}
