#include "navsec/verbalizer.hpp"

#include <algorithm>
#include <numbers>

#include "navsec/error.hpp"
#include "navsec/lexicon.hpp"

namespace navsec {
namespace {

constexpr double kQuarter = std::numbers::pi / 4.0;

Side side_of(Vec2 heading, Vec2 to) {
  const double theta = signed_angle(heading, to);
  if (std::abs(theta) <= kQuarter) return Side::Ahead;
  if (theta > kQuarter && theta <= 3.0 * kQuarter) return Side::Left;
  if (theta < -kQuarter && theta >= -3.0 * kQuarter) return Side::Right;
  return Side::Behind;
}

std::string intersection_clause(const Observation& obs, const Templates& templates) {
  return fill(fill(templates.observation, "t", std::to_string(obs.t)), "k",
              std::to_string(obs.out_degree));
}

std::string landmark_clause(const VisibleLandmark& v, const Templates& templates) {
  return fill(fill(templates.landmark_clause, "name", landmark_lexicon()[static_cast<std::size_t>(v.landmark)]),
              "side", side_word(v.side));
}

std::string_view directive_word(Action a) {
  switch (a) {
    case Action::Left: return "left";
    case Action::Right: return "right";
    default: return "forward";
  }
}

bool is_landmark_token(const Vocab& vocab, int id) {
  return landmark_id(vocab.token(id)).has_value();
}

struct Builder {
  const Vocab& vocab;
  Prompt prompt;

  void append(std::string_view text, SpanKind kind, int step, bool landmark_words,
              WordCategory base = WordCategory::Other) {
    const auto ids = vocab.tokenize(text);
    Span s{kind, step, prompt.size(), prompt.size() + static_cast<int>(ids.size()), {}};
    for (int id : ids) {
      prompt.tokens.push_back(id);
      prompt.categories.push_back(landmark_words && is_landmark_token(vocab, id) ? WordCategory::Landmark
                                                                                 : base);
    }
    prompt.spans.push_back(std::move(s));
  }

  void append_observation(const Observation& obs, const Templates& templates) {
    append(intersection_clause(obs, templates), SpanKind::Observation, obs.t, false,
           WordCategory::Intersection);
    Span& s = prompt.spans.back();
    for (const auto& v : obs.visible) {
      for (int id : vocab.tokenize(landmark_clause(v, templates))) {
        prompt.tokens.push_back(id);
        prompt.categories.push_back(is_landmark_token(vocab, id) ? WordCategory::Landmark
                                                                 : WordCategory::Other);
      }
    }
    s.end = prompt.size();
  }
};

}  // namespace

std::string_view side_word(Side s) noexcept {
  switch (s) {
    case Side::Ahead: return "ahead";
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Behind: return "behind";
  }
  return "ahead";
}

std::optional<Side> directive_side(Action a) noexcept {
  switch (a) {
    case Action::Forward: return Side::Ahead;
    case Action::Left: return Side::Left;
    case Action::Right: return Side::Right;
    default: return std::nullopt;
  }
}

Visibility score_visibility(const NavGraph& graph, const AgentState& state, int landmark) {
  const auto where = graph.landmark_node(landmark);
  if (!where) {
    throw Error(ErrorCode::UnknownLandmark, "landmark " + std::to_string(landmark) + " is not in " + graph.id);
  }
  if (*where == state.node) return {true, Side::Behind};
  if (!graph.adjacent(state.node, *where)) return {false, Side::Ahead};
  return {true, side_of(state.heading, graph.nodes[*where].pos - graph.nodes[state.node].pos)};
}

Observation observe(const NavGraph& graph, const AgentState& state, int t) {
  Observation obs;
  obs.node = state.node;
  obs.t = t;
  obs.out_degree = graph.degree(state.node);
  obs.is_intersection = graph.is_intersection(state.node);
  auto add = [&](int v) {
    for (int lm : graph.nodes[v].landmarks) {
      obs.visible.push_back({lm, score_visibility(graph, state, lm).side});
    }
  };
  add(state.node);
  for (int w : graph.adjacency[state.node]) add(w);
  std::sort(obs.visible.begin(), obs.visible.end(),
            [](const VisibleLandmark& a, const VisibleLandmark& b) { return a.landmark < b.landmark; });
  return obs;
}

std::string verbalize(const Observation& obs, const Templates& templates) {
  std::string text = intersection_clause(obs, templates);
  for (const auto& v : obs.visible) text += " " + landmark_clause(v, templates);
  return text;
}

std::vector<int> extract_landmarks(std::string_view instruction) {
  std::vector<int> out;
  for (const auto& w : Vocab::split_words(instruction)) {
    if (auto id = landmark_id(w); id && std::find(out.begin(), out.end(), *id) == out.end()) {
      out.push_back(*id);
    }
  }
  return out;
}

std::string generate_instruction(const NavGraph& graph, const RouteInstance& route,
                                 const Templates& templates) {
  const auto names = landmark_lexicon();
  const int last = static_cast<int>(route.gold_nodes.size()) - 1;
  std::string text;
  for (std::size_t k = 0; k < route.key_point_indices.size(); ++k) {
    const int idx = route.key_point_indices[k];
    if (idx == last) continue;
    const int lm = route.landmark_plan.at(k);
    if (lm < 0) throw Error(ErrorCode::UnknownLandmark, "key point without a landmark in " + route.id);
    if (!text.empty()) text += ' ';
    text += fill(fill(templates.directive, "landmark", names[static_cast<std::size_t>(lm)]), "dir",
                 directive_word(route.gold_actions.at(static_cast<std::size_t>(idx))));
  }
  const auto& goal_lm = graph.nodes.at(static_cast<std::size_t>(route.goal)).landmarks;
  if (goal_lm.empty()) throw Error(ErrorCode::UnknownLandmark, "goal without a landmark in " + route.id);
  if (!text.empty()) text += ' ';
  text += fill(templates.stop_directive, "landmark", names[static_cast<std::size_t>(goal_lm.front())]);
  return text;
}

std::string_view span_kind_name(SpanKind k) noexcept {
  switch (k) {
    case SpanKind::TaskDescription: return "task_description";
    case SpanKind::Instruction: return "instruction";
    case SpanKind::Observation: return "observation";
    case SpanKind::Action: return "action";
    case SpanKind::Suffix: return "suffix";
    case SpanKind::Defense: return "defense";
  }
  return "unknown";
}

const Span* Prompt::find(SpanKind kind, int step) const {
  for (const auto& s : spans) {
    if (s.kind == kind && (step < 0 || s.step == step)) return &s;
  }
  return nullptr;
}

const Span* Prompt::current_observation() const {
  for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
    if (it->kind == SpanKind::Observation) return &*it;
  }
  return nullptr;
}

Prompt build_prompt(const Vocab& vocab, std::string_view task_description, std::string_view instruction,
                    std::span<const std::pair<Observation, Action>> history, const Observation& current,
                    const Templates& templates) {
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].first.t != static_cast<int>(i)) {
      throw Error(ErrorCode::TimestepMismatch, "history step " + std::to_string(i) + " carries t=" +
                                                   std::to_string(history[i].first.t));
    }
  }
  if (current.t != static_cast<int>(history.size())) {
    throw Error(ErrorCode::TimestepMismatch, "current observation t=" + std::to_string(current.t) +
                                                 " after " + std::to_string(history.size()) + " steps");
  }
  Builder b{vocab, {}};
  b.prompt.vocab_digest = vocab.digest();
  b.append(task_description, SpanKind::TaskDescription, -1, false);
  b.append(instruction, SpanKind::Instruction, -1, true);
  for (const auto& [obs, act] : history) {
    b.append_observation(obs, templates);
    b.append(action_word(act), SpanKind::Action, obs.t, false);
  }
  b.append_observation(current, templates);
  return std::move(b.prompt);
}

Prompt insert_span(const Prompt& prompt, int index, std::span<const int> ids, SpanKind kind,
                   std::string label) {
  if (index < 0 || index > prompt.size()) {
    throw Error(ErrorCode::InvalidArgument, "insertion index out of range");
  }
  const int n = static_cast<int>(ids.size());
  Prompt out;
  out.vocab_digest = prompt.vocab_digest;
  out.tokens = prompt.tokens;
  out.tokens.insert(out.tokens.begin() + index, ids.begin(), ids.end());
  out.categories = prompt.categories;
  out.categories.insert(out.categories.begin() + index, ids.size(), WordCategory::Other);

  Span inserted{kind, -1, index, index + n, std::move(label)};
  bool placed = false;
  for (const auto& s : prompt.spans) {
    if (s.end <= index) {
      out.spans.push_back(s);
      continue;
    }
    if (s.begin >= index) {
      if (!placed) out.spans.push_back(inserted), placed = true;
      Span moved = s;
      moved.begin += n;
      moved.end += n;
      out.spans.push_back(moved);
      continue;
    }
    Span head = s, tail = s;
    head.end = index;
    tail.begin = index + n;
    tail.end = s.end + n;
    out.spans.push_back(head);
    out.spans.push_back(inserted);
    out.spans.push_back(tail);
    placed = true;
  }
  if (!placed) out.spans.push_back(inserted);
  return out;
}

std::string check_spans(const Prompt& prompt) {
  if (prompt.categories.size() != prompt.tokens.size()) return "category count differs from token count";
  int cursor = 0;
  for (const auto& s : prompt.spans) {
    if (s.begin > s.end) return "span with negative length";
    if (s.begin != cursor) return "gap or overlap at token " + std::to_string(cursor);
    cursor = s.end;
  }
  if (cursor != prompt.size()) return "tokens after the last span";
  return {};
}

}  // namespace navsec
