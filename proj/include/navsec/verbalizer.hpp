#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "navsec/templates.hpp"
#include "navsec/vocab.hpp"
#include "navsec/world.hpp"

namespace navsec {

enum class Side : std::uint8_t { Ahead, Left, Right, Behind };

std::string_view side_word(Side s) noexcept;
/// Side on which a landmark appears when the given action is the correct turn.
std::optional<Side> directive_side(Action a) noexcept;

struct Visibility {
  bool visible = false;
  Side side = Side::Ahead;

  friend bool operator==(const Visibility&, const Visibility&) = default;
};

/// Deterministic stand-in for an image-text landmark scorer: a landmark is
/// visible when it sits on the current node or on a neighbour; its side is the
/// heading-relative quadrant of the landmark node (on-node landmarks read
/// "behind"). Throws UnknownLandmark if the landmark is not placed in `graph`.
Visibility score_visibility(const NavGraph& graph, const AgentState& state, int landmark);

struct VisibleLandmark {
  int landmark = 0;
  Side side = Side::Ahead;

  friend bool operator==(const VisibleLandmark&, const VisibleLandmark&) = default;
};

struct Observation {
  int node = 0;
  int t = 0;
  int out_degree = 0;
  std::vector<VisibleLandmark> visible;  // sorted by landmark id
  bool is_intersection = false;

  friend bool operator==(const Observation&, const Observation&) = default;
};

Observation observe(const NavGraph& graph, const AgentState& state, int t);

std::string verbalize(const Observation& obs, const Templates& templates = default_templates());

/// Landmark ids in order of first mention.
std::vector<int> extract_landmarks(std::string_view instruction);

/// One directive per key point (the goal excluded) followed by the stop directive.
std::string generate_instruction(const NavGraph& graph, const RouteInstance& route,
                                 const Templates& templates = default_templates());

enum class SpanKind : std::uint8_t { TaskDescription, Instruction, Observation, Action, Suffix, Defense };
enum class WordCategory : std::uint8_t { Other, Intersection, Landmark };

std::string_view span_kind_name(SpanKind k) noexcept;

struct Span {
  SpanKind kind = SpanKind::TaskDescription;
  int step = -1;      // timestep for observation/action spans
  int begin = 0;      // token range [begin, end)
  int end = 0;
  std::string label;  // defense tag for Defense spans

  int size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Token sequence plus provenance. Spans are ordered and disjoint; every token
/// outside a Suffix span belongs to exactly one other span.
struct Prompt {
  std::vector<int> tokens;
  std::vector<Span> spans;
  std::vector<WordCategory> categories;
  std::uint64_t vocab_digest = 0;

  int size() const { return static_cast<int>(tokens.size()); }
  const Span* find(SpanKind kind, int step = -1) const;
  /// Last observation span (the current observation before any suffix).
  const Span* current_observation() const;
  std::span<const int> span_tokens(const Span& s) const {
    return std::span<const int>(tokens).subspan(static_cast<std::size_t>(s.begin),
                                                static_cast<std::size_t>(s.size()));
  }
  bool has_suffix() const { return find(SpanKind::Suffix) != nullptr; }

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// x_t = d (+) n (+) [o_i, a_i]_{i<t} (+) o_t. History timesteps must be
/// strictly increasing from 0 and `current.t` must follow the last one.
Prompt build_prompt(const Vocab& vocab, std::string_view task_description,
                    std::string_view instruction,
                    std::span<const std::pair<Observation, Action>> history,
                    const Observation& current, const Templates& templates = default_templates());

/// Inserts `ids` at `index` as a new span of `kind`, splitting the span that
/// contains `index` when needed. Categories of new tokens are Other.
Prompt insert_span(const Prompt& prompt, int index, std::span<const int> ids, SpanKind kind,
                   std::string label = {});

/// Checks span ordering, disjointness and coverage. Returns an empty string
/// when the prompt is well formed, otherwise a description of the defect.
std::string check_spans(const Prompt& prompt);

}  // namespace navsec
