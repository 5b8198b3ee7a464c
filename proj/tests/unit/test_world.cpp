#include <gtest/gtest.h>

#include <set>

#include "navsec/error.hpp"
#include "navsec/io.hpp"
#include "navsec/world.hpp"
#include "test_support.hpp"

using namespace navsec;
using navsec::testing::make_graph;

namespace {

int count_crossings(const NavGraph& g) {
  int crossings = 0;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    for (std::size_t j = i + 1; j < g.edges.size(); ++j) {
      auto [a, b] = g.edges[i];
      auto [c, d] = g.edges[j];
      if (a == c || a == d || b == c || b == d) continue;
      const auto& n = g.nodes;
      crossings += navsec::testing::segments_cross(n[a].pos, n[b].pos, n[c].pos, n[d].pos);
    }
  }
  return crossings;
}

bool connected(const NavGraph& g) {
  for (int d : bfs_distances(g, 0)) {
    if (d < 0) return false;
  }
  return true;
}

}  // namespace

TEST(World, GridHasExpectedShape) {
  const NavGraph g = generate_world(7, 5, 5, 10.0, 0.5, 0.1);
  ASSERT_EQ(g.size(), 25);
  for (const auto& n : g.nodes) {
    const int r = n.id / 5, c = n.id % 5;
    const bool interior = r > 0 && r < 4 && c > 0 && c < 4;
    if (interior) EXPECT_EQ(g.degree(n.id), 4) << n.id;
    EXPECT_GE(g.degree(n.id), 2);
  }
}

TEST(World, GenerationIsDeterministic) {
  const WorldOptions opt{6, 7, 10.0, 0.5, 0.2, 0.15, true};
  const NavGraph a = generate_world(7, opt), b = generate_world(7, opt);
  EXPECT_EQ(a, b);
  EXPECT_EQ(world_to_json(a).dump(), world_to_json(b).dump());
  EXPECT_NE(world_to_json(a).dump(), world_to_json(generate_world(8, opt)).dump());
}

TEST(World, JitteredWorldsArePlanarAndConnected) {
  for (std::uint64_t seed : {1ULL, 7ULL, 42ULL, 1234ULL}) {
    for (bool street : {false, true}) {
      const NavGraph g = generate_world(seed, {7, 6, 10.0, 0.5, 0.1, 0.4, street});
      EXPECT_EQ(count_crossings(g), 0) << "seed " << seed;
      EXPECT_TRUE(connected(g));
      for (const auto& n : g.nodes) EXPECT_GE(g.degree(n.id), 1);
    }
  }
}

TEST(World, HazardsOnlyOnIntersections) {
  const NavGraph g = generate_world(3, {8, 8, 10.0, 0.5, 0.5, 0.1, true});
  int hazards = 0;
  for (const auto& n : g.nodes) {
    if (n.hazard) {
      ++hazards;
      EXPECT_TRUE(g.is_intersection(n.id));
    }
  }
  EXPECT_GT(hazards, 0);
}

TEST(World, LandmarksAreUnique) {
  const NavGraph g = generate_world(5, {8, 8, 10.0, 0.8, 0.1, 0.1, true});
  std::set<int> seen;
  for (const auto& n : g.nodes) {
    for (int l : n.landmarks) EXPECT_TRUE(seen.insert(l).second);
  }
  EXPECT_FALSE(seen.empty());
}

TEST(World, RejectsDegenerateDimensions) {
  try {
    generate_world(1, 1, 5, 10.0, 0.5, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDimensions);
  }
  EXPECT_THROW(generate_world(1, 5, 0, 10.0, 0.5, 0.1), Error);
}

TEST(Actions, ForwardFollowsTheOnlyAheadNeighbour) {
  const NavGraph g = make_graph({{0, 0}, {10, 0}, {20, 0}}, {{0, 1}, {1, 2}});
  const auto next = apply_action(g, {0, {1, 0}}, Action::Forward);
  const auto& s = std::get<AgentState>(next);
  EXPECT_EQ(s.node, 1);
  EXPECT_DOUBLE_EQ(s.heading.x, 1.0);
  EXPECT_DOUBLE_EQ(s.heading.y, 0.0);
}

TEST(Actions, TurnAroundIsAnInvolution) {
  const NavGraph g = generate_world(7, 4, 4, 10.0, 0.5, 0.1);
  for (int v = 0; v < g.size(); ++v) {
    const AgentState s{v, Vec2{0.6, 0.8}};
    const auto once = std::get<AgentState>(apply_action(g, s, Action::TurnAround));
    EXPECT_EQ(once.node, v);
    EXPECT_EQ(std::get<AgentState>(apply_action(g, once, Action::TurnAround)), s);
  }
}

TEST(Actions, LeftAndRightUseQuarterTurns) {
  // Plus-shaped crossing centred on node 0, heading east.
  const NavGraph g = make_graph({{0, 0}, {10, 0}, {0, 10}, {-10, 0}, {0, -10}}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const AgentState s{0, {1, 0}};
  EXPECT_EQ(std::get<AgentState>(apply_action(g, s, Action::Left)).node, 2);
  EXPECT_EQ(std::get<AgentState>(apply_action(g, s, Action::Right)).node, 4);
  EXPECT_EQ(std::get<AgentState>(apply_action(g, s, Action::Forward)).node, 1);
  EXPECT_EQ(std::get<Terminal>(apply_action(g, s, Action::Stop)).node, 0);
}

TEST(Actions, CornerHeadingOffGridHasNoForwardEdge) {
  const NavGraph g = make_graph({{0, 0}, {10, 0}, {0, 10}, {10, 10}}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  try {
    apply_action(g, {0, {-1, 0}}, Action::Forward);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoForwardEdge);
  }
  try {
    apply_action(g, {0, {-1, 0}}, Action::Left);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoTurnEdge);
  }
  EXPECT_FALSE(try_apply_action(g, {0, {-1, 0}}, Action::Forward).has_value());
}

TEST(Actions, ConeBoundaryIsFortyFiveDegrees) {
  const double inside = 44.0 * std::acos(-1.0) / 180.0, outside = 46.0 * std::acos(-1.0) / 180.0;
  const NavGraph in = make_graph({{0, 0}, {std::cos(inside), std::sin(inside)}}, {{0, 1}});
  const NavGraph out = make_graph({{0, 0}, {std::cos(outside), std::sin(outside)}}, {{0, 1}});
  EXPECT_TRUE(try_apply_action(in, {0, {1, 0}}, Action::Forward).has_value());
  EXPECT_FALSE(try_apply_action(out, {0, {1, 0}}, Action::Forward).has_value());
}

TEST(ShortestPath, LineGraph) {
  const NavGraph g = make_graph({{0, 0}, {1, 0}, {2, 0}, {3, 0}}, {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_EQ(shortest_path_len(g, 0, 3), 3);
  EXPECT_EQ(shortest_path_len(g, 2, 2), 0);
}

TEST(ShortestPath, UnreachableAcrossComponents) {
  const NavGraph g = make_graph({{0, 0}, {1, 0}, {5, 5}, {6, 5}}, {{0, 1}, {2, 3}});
  try {
    shortest_path_len(g, 0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unreachable);
  }
}

TEST(ShortestPath, MatchesExhaustiveEnumeration) {
  for (std::uint64_t seed : {2ULL, 9ULL}) {
    for (auto [rows, cols, street] : {std::tuple{3, 3, false}, std::tuple{2, 5, false}, std::tuple{3, 3, true},
                                      std::tuple{5, 6, false}}) {
      const NavGraph g = generate_world(seed, {rows, cols, 10.0, 0.5, 0.1, 0.1, street});
      ASSERT_LE(g.size(), 30);
      for (int u = 0; u < g.size(); u += 3) {
        for (int v = 0; v < g.size(); ++v) {
          EXPECT_EQ(shortest_path_len(g, u, v), navsec::testing::exhaustive_shortest_path(g, u, v));
        }
      }
    }
  }
}

class RouteSampling : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RouteSampling, RoutesSatisfyTheirContract) {
  const NavGraph g = generate_world(7, {12, 12, 10.0, 0.5, 0.1, 0.1, true});
  const RouteInstance r = sample_route(g, GetParam(), 8, 12);
  ASSERT_GE(r.gold_nodes.size(), 8u);
  ASSERT_LE(r.gold_nodes.size(), 12u);
  EXPECT_NE(r.gold_nodes.front(), r.gold_nodes.back());
  EXPECT_EQ(std::set<int>(r.gold_nodes.begin(), r.gold_nodes.end()).size(), r.gold_nodes.size());
  for (std::size_t i = 0; i + 1 < r.gold_nodes.size(); ++i) EXPECT_TRUE(g.adjacent(r.gold_nodes[i], r.gold_nodes[i + 1]));
  EXPECT_EQ(r.goal, r.gold_nodes.back());
  EXPECT_FALSE(g.nodes[static_cast<std::size_t>(r.goal)].hazard);

  // Replay oracle.
  AgentState s = r.start;
  std::vector<int> visited{s.node};
  ASSERT_EQ(r.gold_actions.back(), Action::Stop);
  for (std::size_t i = 0; i + 1 < r.gold_actions.size(); ++i) {
    const AgentState before = s;
    s = std::get<AgentState>(apply_action(g, s, r.gold_actions[i]));
    if (s.node != before.node) visited.push_back(s.node);
  }
  EXPECT_EQ(std::get<Terminal>(apply_action(g, s, Action::Stop)).node, r.goal);
  EXPECT_EQ(visited, r.gold_nodes);

  // Key points are exactly the intersections along the route.
  std::vector<int> expected;
  for (std::size_t i = 0; i < r.gold_nodes.size(); ++i) {
    if (g.is_intersection(r.gold_nodes[i])) expected.push_back(static_cast<int>(i));
  }
  EXPECT_EQ(r.key_point_indices, expected);
  EXPECT_EQ(r.landmark_plan.size(), r.key_point_indices.size());
}

INSTANTIATE_TEST_SUITE_P(Seeds, RouteSampling, ::testing::Values(1, 2, 3, 17, 99, 12345));

TEST(RouteSamplingErrors, TooShortGraphFails) {
  const NavGraph g = make_graph({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}});
  try {
    sample_route(g, 1, 8, 12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRouteFound);
  }
}

TEST(RouteSamplingErrors, SamplingIsDeterministic) {
  const NavGraph g = generate_world(4, {8, 8, 10.0, 0.5, 0.1, 0.1, true});
  EXPECT_EQ(sample_routes(g, 5, 6, 8, 12), sample_routes(g, 5, 6, 8, 12));
}
