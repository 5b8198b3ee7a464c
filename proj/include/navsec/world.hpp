#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace navsec {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    const double n = norm();
    return {x / n, y / n};
  }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
/// Counter-clockwise rotation by a quarter turn ("left" in the world frame).
inline Vec2 rotate_ccw(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 rotate_cw(Vec2 v) { return {v.y, -v.x}; }
/// Signed angle in radians from `from` to `to`, positive counter-clockwise.
inline double signed_angle(Vec2 from, Vec2 to) { return std::atan2(cross(from, to), dot(from, to)); }

struct Node {
  int id = 0;
  Vec2 pos;
  std::vector<int> landmarks;  // ids into landmark_lexicon()
  bool hazard = false;

  friend bool operator==(const Node&, const Node&) = default;
};

/// Planar street graph. Immutable once built; adjacency lists are sorted.
struct NavGraph {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> adjacency;

  int size() const { return static_cast<int>(nodes.size()); }
  int degree(int v) const { return static_cast<int>(adjacency.at(v).size()); }
  bool adjacent(int u, int v) const;
  bool is_intersection(int v) const { return degree(v) >= 3; }
  /// Node carrying the landmark, if the landmark is placed in this world.
  std::optional<int> landmark_node(int landmark) const;

  void rebuild_adjacency();
  /// Throws InvalidArgument when an edge references a missing node.
  void validate() const;

  friend bool operator==(const NavGraph& a, const NavGraph& b) {
    return a.id == b.id && a.seed == b.seed && a.nodes == b.nodes && a.edges == b.edges;
  }
};

enum class Action : std::uint8_t { Forward = 0, Left = 1, Right = 2, TurnAround = 3, Stop = 4 };

inline constexpr std::array<Action, 5> kAllActions = {Action::Forward, Action::Left, Action::Right,
                                                      Action::TurnAround, Action::Stop};
inline constexpr int kNumActions = 5;

std::string_view action_word(Action a) noexcept;
std::optional<Action> parse_action(std::string_view word) noexcept;
inline int index_of(Action a) noexcept { return static_cast<int>(a); }

struct AgentState {
  int node = 0;
  Vec2 heading{1.0, 0.0};

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct Terminal {
  int node = 0;
};

using StepResult = std::variant<AgentState, Terminal>;

/// Action semantics: forward/left/right move to the neighbour whose direction is
/// closest to the heading (rotated a quarter turn for left/right), provided it
/// lies inside the 45 degree cone; turn_around flips the heading in place; stop
/// yields Terminal. Throws NoForwardEdge / NoTurnEdge when the cone is empty.
StepResult apply_action(const NavGraph& graph, const AgentState& state, Action action);

/// Non-throwing variant used by the episode runner.
std::optional<StepResult> try_apply_action(const NavGraph& graph, const AgentState& state,
                                           Action action);

struct WorldOptions {
  int rows = 5;
  int cols = 5;
  double spacing = 10.0;
  double landmark_density = 0.5;
  double hazard_density = 0.1;
  /// Maximum intersection displacement as a fraction of spacing; clamped to 0.15.
  double jitter = 0.1;
  /// Split every street into two segments with a mid-street node.
  bool street_nodes = false;
};

NavGraph generate_world(std::uint64_t seed, const WorldOptions& options);
NavGraph generate_world(std::uint64_t seed, int rows, int cols, double spacing,
                        double landmark_density, double hazard_density);

/// Hop distances from `source`; -1 marks unreachable nodes.
std::vector<int> bfs_distances(const NavGraph& graph, int source);
int shortest_path_len(const NavGraph& graph, int u, int v);

struct RouteInstance {
  std::string id;
  std::string graph_id;
  AgentState start;
  int goal = 0;
  std::vector<int> gold_nodes;
  std::vector<Action> gold_actions;
  std::vector<int> key_point_indices;
  std::string instruction;
  std::vector<int> landmark_plan;

  friend bool operator==(const RouteInstance&, const RouteInstance&) = default;
};

/// Landmark a key point's directive refers to: the landmark on the next gold
/// node, or the goal landmark when the key point is the goal itself.
int planned_landmark(const NavGraph& graph, const std::vector<int>& gold_nodes, int index);

RouteInstance sample_route(const NavGraph& graph, std::uint64_t seed, int min_len, int max_len);
std::vector<RouteInstance> sample_routes(const NavGraph& graph, std::uint64_t seed, int count,
                                         int min_len, int max_len);

}  // namespace navsec
