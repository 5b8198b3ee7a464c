#include "navsec/world.hpp"

#include <algorithm>
#include <deque>
#include <numbers>
#include <numeric>
#include <random>
#include <unordered_map>

#include "navsec/error.hpp"
#include "navsec/lexicon.hpp"
#include "navsec/verbalizer.hpp"

namespace navsec {
namespace {

constexpr double kConeHalfAngle = std::numbers::pi / 4.0;
constexpr double kConeTolerance = 1e-9;
constexpr int kRouteRetries = 1000;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int pick(std::mt19937_64& rng, int n) {
  return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
}

/// Neighbour best aligned with `direction` inside the acceptance cone.
std::optional<int> neighbour_in_cone(const NavGraph& g, int v, Vec2 direction) {
  std::optional<int> best;
  double best_angle = kConeHalfAngle + kConeTolerance;
  for (int w : g.adjacency[v]) {
    const Vec2 d = g.nodes[w].pos - g.nodes[v].pos;
    const double angle = std::abs(signed_angle(direction, d));
    if (angle <= best_angle && (!best || angle < best_angle)) {
      best = w;
      best_angle = angle;
    }
  }
  return best;
}

bool route_is_ambiguous(const NavGraph& g, const RouteInstance& r) {
  // Directive landmark -> (key point index, side it is expected on).
  std::unordered_map<int, std::pair<int, Side>> expected;
  const int last = static_cast<int>(r.gold_nodes.size()) - 1;
  for (std::size_t k = 0; k < r.key_point_indices.size(); ++k) {
    const int idx = r.key_point_indices[k];
    if (idx == last) continue;
    const auto side = directive_side(r.gold_actions[idx]);
    if (!side) return true;
    expected[r.landmark_plan[k]] = {idx, *side};
  }
  const int goal_landmark = g.nodes[r.goal].landmarks.front();

  AgentState s = r.start;
  for (int i = 0; i <= last; ++i) {
    const Observation obs = observe(g, s, i);
    for (const auto& vis : obs.visible) {
      if (auto it = expected.find(vis.landmark); it != expected.end()) {
        const bool matches = vis.side == it->second.second;
        if (matches != (i == it->second.first)) return true;
      }
      if (vis.landmark == goal_landmark && vis.side == Side::Behind && i != last) return true;
    }
    if (i < last) s = std::get<AgentState>(apply_action(g, s, r.gold_actions[i]));
  }
  return false;
}

}  // namespace

bool NavGraph::adjacent(int u, int v) const {
  const auto& a = adjacency.at(u);
  return std::binary_search(a.begin(), a.end(), v);
}

std::optional<int> NavGraph::landmark_node(int landmark) const {
  for (const auto& n : nodes) {
    if (std::find(n.landmarks.begin(), n.landmarks.end(), landmark) != n.landmarks.end()) {
      return n.id;
    }
  }
  return std::nullopt;
}

void NavGraph::rebuild_adjacency() {
  adjacency.assign(nodes.size(), {});
  for (auto [a, b] : edges) {
    adjacency.at(a).push_back(b);
    adjacency.at(b).push_back(a);
  }
  for (auto& a : adjacency) std::sort(a.begin(), a.end());
}

void NavGraph::validate() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != static_cast<int>(i)) {
      throw Error(ErrorCode::InvalidArgument, "node ids must be dense and ordered");
    }
  }
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= size() || b >= size() || a == b) {
      throw Error(ErrorCode::InvalidArgument, "edge references a missing node");
    }
  }
}

std::string_view action_word(Action a) noexcept {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::Left: return "left";
    case Action::Right: return "right";
    case Action::TurnAround: return "turn_around";
    case Action::Stop: return "stop";
  }
  return "stop";
}

std::optional<Action> parse_action(std::string_view word) noexcept {
  for (Action a : kAllActions) {
    if (action_word(a) == word) return a;
  }
  return std::nullopt;
}

std::optional<StepResult> try_apply_action(const NavGraph& graph, const AgentState& state,
                                           Action action) {
  const int v = state.node;
  switch (action) {
    case Action::Stop: return StepResult{Terminal{v}};
    case Action::TurnAround: return StepResult{AgentState{v, -1.0 * state.heading}};
    case Action::Forward:
    case Action::Left:
    case Action::Right: {
      const Vec2 dir = action == Action::Forward ? state.heading
                       : action == Action::Left  ? rotate_ccw(state.heading)
                                                 : rotate_cw(state.heading);
      const auto w = neighbour_in_cone(graph, v, dir);
      if (!w) return std::nullopt;
      return StepResult{AgentState{*w, (graph.nodes[*w].pos - graph.nodes[v].pos).normalized()}};
    }
  }
  return std::nullopt;
}

StepResult apply_action(const NavGraph& graph, const AgentState& state, Action action) {
  if (auto r = try_apply_action(graph, state, action)) return *r;
  throw Error(action == Action::Forward ? ErrorCode::NoForwardEdge : ErrorCode::NoTurnEdge,
              "no street within 45 degrees for '" + std::string(action_word(action)) +
                  "' at node " + std::to_string(state.node));
}

NavGraph generate_world(std::uint64_t seed, const WorldOptions& o) {
  if (o.rows < 2 || o.cols < 2) {
    throw Error(ErrorCode::InvalidDimensions, "rows and cols must be at least 2");
  }
  if (o.landmark_density < 0.0 || o.landmark_density > 1.0 || o.hazard_density < 0.0 ||
      o.hazard_density > 1.0 || !(o.spacing > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "densities must lie in [0,1] and spacing be positive");
  }
  std::mt19937_64 rng(seed);
  const double jitter = std::clamp(o.jitter, 0.0, 0.15) * o.spacing;
  std::uniform_real_distribution<double> offset(-jitter, jitter);

  NavGraph g;
  g.seed = seed;
  g.id = "world-" + std::to_string(seed) + "-" + std::to_string(o.rows) + "x" +
         std::to_string(o.cols) + (o.street_nodes ? "s" : "");
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      Node n;
      n.id = r * o.cols + c;
      const double jx = jitter > 0 ? offset(rng) : 0.0;
      const double jy = jitter > 0 ? offset(rng) : 0.0;
      n.pos = {c * o.spacing + jx, r * o.spacing + jy};
      g.nodes.push_back(n);
    }
  }
  auto link = [&](int a, int b) {
    if (!o.street_nodes) {
      g.edges.emplace_back(a, b);
      return;
    }
    Node m;
    m.id = g.size();
    m.pos = 0.5 * (g.nodes[a].pos + g.nodes[b].pos);
    g.nodes.push_back(m);
    g.edges.emplace_back(a, m.id);
    g.edges.emplace_back(m.id, b);
  };
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      const int v = r * o.cols + c;
      if (c + 1 < o.cols) link(v, v + 1);
      if (r + 1 < o.rows) link(v, v + o.cols);
    }
  }
  g.rebuild_adjacency();

  std::vector<int> carriers;
  for (const auto& n : g.nodes) {
    if (!o.street_nodes || g.degree(n.id) == 2) carriers.push_back(n.id);
  }
  if (o.street_nodes) {
    // Grid corners have degree 2 too; landmarks belong to mid-street nodes only.
    std::erase_if(carriers, [&](int v) { return v < o.rows * o.cols; });
  }
  std::shuffle(carriers.begin(), carriers.end(), rng);
  std::vector<int> names(landmark_lexicon().size());
  std::iota(names.begin(), names.end(), 0);
  std::shuffle(names.begin(), names.end(), rng);
  const auto n_landmarks = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(o.landmark_density * static_cast<double>(carriers.size()))),
      names.size());
  for (std::size_t i = 0; i < n_landmarks; ++i) g.nodes[carriers[i]].landmarks.push_back(names[i]);

  std::vector<int> crossings;
  for (const auto& n : g.nodes) {
    if (g.degree(n.id) >= 3) crossings.push_back(n.id);
  }
  std::shuffle(crossings.begin(), crossings.end(), rng);
  const auto n_hazards = static_cast<std::size_t>(
      std::llround(o.hazard_density * static_cast<double>(crossings.size())));
  for (std::size_t i = 0; i < n_hazards; ++i) g.nodes[crossings[i]].hazard = true;
  return g;
}

NavGraph generate_world(std::uint64_t seed, int rows, int cols, double spacing,
                        double landmark_density, double hazard_density) {
  WorldOptions o;
  o.rows = rows;
  o.cols = cols;
  o.spacing = spacing;
  o.landmark_density = landmark_density;
  o.hazard_density = hazard_density;
  return generate_world(seed, o);
}

std::vector<int> bfs_distances(const NavGraph& graph, int source) {
  std::vector<int> dist(graph.nodes.size(), -1);
  std::deque<int> queue{source};
  dist.at(source) = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : graph.adjacency[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

int shortest_path_len(const NavGraph& graph, int u, int v) {
  if (u < 0 || v < 0 || u >= graph.size() || v >= graph.size()) {
    throw Error(ErrorCode::InvalidArgument, "node id out of range");
  }
  const int d = bfs_distances(graph, u)[v];
  if (d < 0) {
    throw Error(ErrorCode::Unreachable, "no path between " + std::to_string(u) + " and " + std::to_string(v));
  }
  return d;
}

int planned_landmark(const NavGraph& graph, const std::vector<int>& gold_nodes, int index) {
  const int last = static_cast<int>(gold_nodes.size()) - 1;
  const int carrier = index == last ? gold_nodes[last] : gold_nodes[index + 1];
  const auto& lm = graph.nodes[carrier].landmarks;
  return lm.empty() ? -1 : lm.front();
}

RouteInstance sample_route(const NavGraph& graph, std::uint64_t seed, int min_len, int max_len) {
  if (min_len < 3 || max_len < min_len) {
    throw Error(ErrorCode::InvalidArgument, "need max_len >= min_len >= 3");
  }
  std::vector<int> starts;
  for (const auto& n : graph.nodes) {
    if (graph.is_intersection(n.id)) starts.push_back(n.id);
  }
  if (starts.empty()) {
    for (const auto& n : graph.nodes) starts.push_back(n.id);
  }
  auto has_landmark = [&](int v) { return !graph.nodes[v].landmarks.empty(); };

  for (int attempt = 0; attempt < kRouteRetries; ++attempt) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    const int start = starts[pick(rng, static_cast<int>(starts.size()))];

    std::vector<int> first;
    for (int w : graph.adjacency[start]) {
      if (!graph.is_intersection(start) || has_landmark(w)) first.push_back(w);
    }
    if (first.empty()) continue;
    std::vector<int> path{start, first[pick(rng, static_cast<int>(first.size()))]};
    std::vector<Action> actions{Action::Forward};
    std::vector<char> visited(graph.nodes.size(), 0);
    visited[path[0]] = visited[path[1]] = 1;
    const Vec2 start_heading = (graph.nodes[path[1]].pos - graph.nodes[start].pos).normalized();
    AgentState s{path[1], start_heading};

    while (static_cast<int>(path.size()) < max_len) {
      std::vector<std::pair<Action, AgentState>> options;
      for (Action a : {Action::Forward, Action::Left, Action::Right}) {
        const auto r = try_apply_action(graph, s, a);
        if (!r) continue;
        const auto next = std::get<AgentState>(*r);
        if (visited[next.node]) continue;
        if (graph.is_intersection(s.node) && !has_landmark(next.node)) continue;
        options.emplace_back(a, next);
      }
      if (options.empty()) break;
      const auto& [a, next] = options[pick(rng, static_cast<int>(options.size()))];
      actions.push_back(a);
      path.push_back(next.node);
      visited[next.node] = 1;
      s = next;
    }

    std::vector<int> ends;
    for (int e = min_len - 1; e < static_cast<int>(path.size()); ++e) {
      if (has_landmark(path[e]) && !graph.nodes[path[e]].hazard) ends.push_back(e);
    }
    if (ends.empty()) continue;
    const int end = ends[pick(rng, static_cast<int>(ends.size()))];

    RouteInstance r;
    r.id = "route-" + std::to_string(seed);
    r.graph_id = graph.id;
    r.start = AgentState{start, start_heading};
    r.gold_nodes.assign(path.begin(), path.begin() + end + 1);
    r.gold_actions.assign(actions.begin(), actions.begin() + end);
    r.gold_actions.push_back(Action::Stop);
    r.goal = r.gold_nodes.back();
    for (int i = 0; i <= end; ++i) {
      if (graph.is_intersection(r.gold_nodes[i])) {
        r.key_point_indices.push_back(i);
        r.landmark_plan.push_back(planned_landmark(graph, r.gold_nodes, i));
      }
    }
    r.instruction = generate_instruction(graph, r);
    if (route_is_ambiguous(graph, r)) continue;
    return r;
  }
  throw Error(ErrorCode::NoRouteFound, "no route of " + std::to_string(min_len) + ".." +
                                           std::to_string(max_len) + " nodes after " +
                                           std::to_string(kRouteRetries) + " attempts");
}

std::vector<RouteInstance> sample_routes(const NavGraph& graph, std::uint64_t seed, int count,
                                         int min_len, int max_len) {
  std::vector<RouteInstance> routes;
  routes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    RouteInstance r = sample_route(graph, mix_seed(seed, 1000003ULL + static_cast<std::uint64_t>(i)),
                                   min_len, max_len);
    r.id = "r" + std::to_string(i);
    routes.push_back(std::move(r));
  }
  return routes;
}

}  // namespace navsec
