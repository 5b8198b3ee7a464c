#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navsec/reasoner.hpp"
#include "navsec/verbalizer.hpp"
#include "navsec/vocab.hpp"

namespace navsec {

enum class AttackMode { NPI, NPS };
enum class InsertPos { End, Start, Middle };
enum class Objective { SuppressGold, ForceAction };
enum class CategoryFilter { None, Intersection, Landmark };

std::string_view attack_mode_name(AttackMode m) noexcept;
std::string_view insert_pos_name(InsertPos p) noexcept;
std::string_view objective_name(Objective o) noexcept;
std::string_view category_filter_name(CategoryFilter f) noexcept;
std::optional<AttackMode> parse_attack_mode(std::string_view s) noexcept;
std::optional<InsertPos> parse_insert_pos(std::string_view s) noexcept;
std::optional<Objective> parse_objective(std::string_view s) noexcept;
std::optional<CategoryFilter> parse_category_filter(std::string_view s) noexcept;

struct AttackConfig {
  AttackMode mode = AttackMode::NPI;
  int suffix_len = 16;
  int iterations = 100;
  int k = 64;
  int batch = 128;
  InsertPos insert_pos = InsertPos::End;
  Objective objective = Objective::ForceAction;
  Action target = Action::Stop;
  CategoryFilter category_filter = CategoryFilter::None;
  std::uint64_t seed = 0;
  int filler = -1;  // suffix initialization token, normally Vocab::filler()

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

/// Structural location of a perturbation, so it can be re-applied to later
/// prompts of the same episode and to prompts of another model.
/// For observation anchors `step` is -1: the swap targets the current observation.
struct Anchor {
  SpanKind kind = SpanKind::Instruction;
  int step = -1;
  int offset = 0;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct AttackResult {
  AttackConfig cfg;
  Prompt prompt;                 // perturbed prompt
  std::vector<int> perturbation; // inserted ids (NPI) or the replacement id (NPS)
  std::vector<int> positions;    // suffix indices (NPI) or the swapped index (NPS)
  int original_token = -1;       // NPS only
  Anchor anchor;
  std::vector<double> trajectory;
  double initial_objective = 0.0;
  double objective = 0.0;
  std::uint64_t gradient_queries = 0;
  std::uint64_t forward_queries = 0;
  std::uint64_t vocab_digest = 0;
};

/// The k ids maximizing -row, ties broken by ascending id.
std::vector<int> topk_candidates(std::span<const double> row, int k);

/// L2 norm of each one-hot gradient row; zero on suffix tokens.
std::vector<double> word_importance(const ReasonerParams& params, const Prompt& prompt, Action gold);

/// Objective value (minimized) for an action distribution.
double objective_value(const ActionDist& dist, Objective objective, Action target, Action gold);

AttackResult npi_attack(const ReasonerParams& params, const Prompt& prompt, Action gold, const AttackConfig& cfg);
AttackResult nps_attack(const ReasonerParams& params, const Prompt& prompt, Action gold, const AttackConfig& cfg);
AttackResult run_attack(const ReasonerParams& params, const Prompt& prompt, Action gold, const AttackConfig& cfg);

/// Re-applies a stored perturbation to another prompt without querying any model.
Prompt transfer_apply(const AttackResult& result, const Prompt& victim_prompt);

}  // namespace navsec
