#include "navsec/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "navsec/error.hpp"

namespace navsec {

std::string_view termination_name(Termination t) noexcept {
  switch (t) {
    case Termination::Stop: return "stop";
    case Termination::StepCap: return "step_cap";
    case Termination::ActionError: return "action_error";
    case Termination::ContextOverflow: return "context_overflow";
  }
  return "step_cap";
}

std::optional<Termination> parse_termination(std::string_view s) noexcept {
  for (Termination t : {Termination::Stop, Termination::StepCap, Termination::ActionError,
                        Termination::ContextOverflow}) {
    if (termination_name(t) == s) return t;
  }
  return std::nullopt;
}

void check_trace(const EpisodeTrace& trace, const NavGraph& graph, const RouteInstance& route) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InconsistentTrace, "trace " + trace.route_id + ": " + why);
  };
  if (trace.visited.empty() || trace.visited.front() != route.start.node) fail("does not begin at the start node");
  if (trace.steps != static_cast<int>(trace.actions.size())) fail("step count differs from action count");
  for (int v : trace.visited) {
    if (v < 0 || v >= graph.size()) fail("visits a node outside the graph");
  }
  AgentState s = route.start;
  std::size_t at = 0;
  for (std::size_t i = 0; i < trace.actions.size(); ++i) {
    const bool last = i + 1 == trace.actions.size();
    const Action a = trace.actions[i];
    if (a == Action::Stop) {
      if (!last || trace.termination != Termination::Stop) fail("stop action before the end of the trace");
      if (!trace.stop_node || *trace.stop_node != s.node) fail("stop node differs from the replayed position");
      break;
    }
    const auto r = try_apply_action(graph, s, a);
    if (!r) {
      if (!last || trace.termination != Termination::ActionError) fail("infeasible action inside the trace");
      break;
    }
    const auto next = std::get<AgentState>(*r);
    if (next.node != s.node) {
      ++at;
      if (at >= trace.visited.size() || trace.visited[at] != next.node) fail("visited sequence differs from replay");
    }
    s = next;
  }
  if (at + 1 != trace.visited.size()) fail("visited sequence has extra nodes");
  if (trace.termination == Termination::Stop && (trace.actions.empty() || trace.actions.back() != Action::Stop)) {
    fail("stop termination without a stop action");
  }
}

EpisodeRecord per_episode(const EpisodeTrace& trace, const NavGraph& graph, const RouteInstance& route) {
  check_trace(trace, graph, route);
  EpisodeRecord r;
  r.route_id = trace.route_id;
  const int final_node = trace.final_node();
  r.spd = shortest_path_len(graph, final_node, route.goal);
  std::size_t mismatch = 0;
  while (mismatch < trace.actions.size() && mismatch < route.gold_actions.size() &&
         trace.actions[mismatch] == route.gold_actions[mismatch]) {
    ++mismatch;
  }
  r.key_total = static_cast<int>(route.key_point_indices.size());
  for (int k : route.key_point_indices) {
    if (static_cast<std::size_t>(k) < mismatch) ++r.key_correct;
  }
  const bool stopped = trace.termination == Termination::Stop;
  r.tc = stopped && final_node == route.goal;
  r.tc1 = stopped && r.spd <= 1;
  r.pl = static_cast<int>(trace.visited.size());
  r.first_key_wrong = r.key_total > 0 && static_cast<std::size_t>(route.key_point_indices.front()) >= mismatch;
  r.hazard_stop = graph.nodes[static_cast<std::size_t>(final_node)].hazard;
  return r;
}

MetricsReport aggregate(std::span<const EpisodeRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptySet, "no episodes to aggregate");
  long spd = 0, pl = 0, key_correct = 0, key_total = 0, tc = 0, tc1 = 0;
  MetricsReport m;
  m.n_episodes = static_cast<int>(records.size());
  for (const auto& r : records) {
    spd += r.spd;
    pl += r.pl;
    key_correct += r.key_correct;
    key_total += r.key_total;
    tc += r.tc;
    tc1 += r.tc1;
    m.fkpe += r.first_key_wrong;
    m.di += r.hazard_stop;
  }
  const auto n = static_cast<double>(records.size());
  m.spd = static_cast<double>(spd) / n;
  m.pl = static_cast<double>(pl) / n;
  m.kpa = key_total == 0 ? 100.0 : 100.0 * static_cast<double>(key_correct) / static_cast<double>(key_total);
  m.tc = 100.0 * static_cast<double>(tc) / n;
  m.tc1 = 100.0 * static_cast<double>(tc1) / n;
  return m;
}

std::string pct_change(double before, double after, Direction /*direction*/) {
  if (before == 0.0) throw Error(ErrorCode::DivisionByZero, "relative change from zero");
  const double pct = (after - before) / before * 100.0;
  // Half-up at two decimals; the epsilon absorbs representation error such as 84.075 stored as 84.07499...
  const double hundredths = std::floor(std::abs(pct) * 100.0 + 0.5 + 1e-7);
  if (hundredths == 0.0) return "0.00%";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.2f%%", pct > 0 ? "↑" : "↓", hundredths / 100.0);
  return buf;
}

}  // namespace navsec
