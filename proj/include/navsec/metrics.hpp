#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navsec/world.hpp"

namespace navsec {

enum class Termination { Stop, StepCap, ActionError, ContextOverflow };

std::string_view termination_name(Termination t) noexcept;
std::optional<Termination> parse_termination(std::string_view s) noexcept;

/// What an agent did on one route. `visited` starts with the start node and
/// gains a node for every successful move (turn_around adds none). `actions`
/// lists every predicted action, including a final stop or the action that
/// failed.
struct EpisodeTrace {
  std::string route_id;
  std::vector<int> visited;
  std::vector<Action> actions;
  Termination termination = Termination::StepCap;
  std::optional<int> stop_node;
  int steps = 0;
  std::string defense = "none";
  std::string attack = "none";

  int final_node() const { return visited.back(); }
  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

struct EpisodeRecord {
  std::string route_id;
  int spd = 0;
  int key_correct = 0;
  int key_total = 0;
  bool tc = false;
  bool tc1 = false;
  int pl = 0;
  bool first_key_wrong = false;
  bool hazard_stop = false;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct MetricsReport {
  int n_episodes = 0;
  double spd = 0.0;
  double kpa = 0.0;
  double tc = 0.0;
  double tc1 = 0.0;
  int fkpe = 0;
  int di = 0;
  double pl = 0.0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Replays the trace against the graph; throws InconsistentTrace on mismatch.
void check_trace(const EpisodeTrace& trace, const NavGraph& graph, const RouteInstance& route);

EpisodeRecord per_episode(const EpisodeTrace& trace, const NavGraph& graph, const RouteInstance& route);
MetricsReport aggregate(std::span<const EpisodeRecord> records);

enum class Direction { LowerBetter, HigherBetter };

/// Relative change rendered as "↑X.XX%", "↓X.XX%" or
/// "0.00%", rounded half-up to two decimals. The direction does not change
/// the arrow, which always follows the sign of the change.
std::string pct_change(double before, double after, Direction direction);

}  // namespace navsec
