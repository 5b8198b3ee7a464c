#include "navsec/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "navsec/error.hpp"
#include "navsec/kernels.hpp"

namespace navsec {
namespace {

template <typename E, std::size_t N>
std::optional<E> lookup_name(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

constexpr std::array<std::pair<AttackMode, std::string_view>, 2> kModes = {{{AttackMode::NPI, "npi"},
                                                                            {AttackMode::NPS, "nps"}}};
constexpr std::array<std::pair<InsertPos, std::string_view>, 3> kPositions = {
    {{InsertPos::End, "end"}, {InsertPos::Start, "start"}, {InsertPos::Middle, "middle"}}};
constexpr std::array<std::pair<Objective, std::string_view>, 2> kObjectives = {
    {{Objective::SuppressGold, "suppress_gold"}, {Objective::ForceAction, "force_action"}}};
constexpr std::array<std::pair<CategoryFilter, std::string_view>, 3> kFilters = {
    {{CategoryFilter::None, "none"}, {CategoryFilter::Intersection, "intersection"},
     {CategoryFilter::Landmark, "landmark"}}};

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "?";
}

ObjectiveSpec objective_spec(const AttackConfig& cfg, Action gold) {
  if (cfg.objective == Objective::ForceAction) {
    if (cfg.target == gold) {
      throw Error(ErrorCode::NPIConfigInvalid, "target action equals the gold action");
    }
    return {true, index_of(cfg.target)};
  }
  return {false, index_of(gold)};
}

/// One-hot gradient of the attack objective (one gradient query).
OneHotGradient objective_gradient(const ReasonerParams& params, std::span<const int> tokens, const ObjectiveSpec& obj) {
  OneHotGradient g = grad_onehot(params, tokens, static_cast<Action>(obj.target));
  if (!obj.force) {
    for (auto& v : g.data) v = -v;
  }
  return g;
}

/// Top-k with PAD and `exclude` removed; returns at most k ids.
std::vector<int> filtered_topk(std::span<const double> row, int k, int exclude) {
  const int vsz = static_cast<int>(row.size());
  if (k > vsz) throw Error(ErrorCode::KTooLarge, "k exceeds vocabulary size");
  std::vector<int> ids = topk_candidates(row, std::min(vsz, k + 2));
  std::erase_if(ids, [&](int id) { return id == Vocab::kPad || id == exclude; });
  if (static_cast<int>(ids.size()) > k) ids.resize(static_cast<std::size_t>(k));
  return ids;
}

int insertion_index(const Prompt& prompt, InsertPos pos) {
  if (pos == InsertPos::End) return prompt.size();
  const Span* instr = prompt.find(SpanKind::Instruction);
  if (instr == nullptr) throw Error(ErrorCode::InvalidArgument, "prompt has no instruction span");
  return pos == InsertPos::Start ? instr->begin : instr->begin + instr->size() / 2;
}

void validate(const ReasonerParams& params, const AttackConfig& cfg) {
  if (cfg.k < 1) throw Error(ErrorCode::KTooLarge, "k must be at least 1");
  if (cfg.k > params.vocab_size) throw Error(ErrorCode::KTooLarge, "k exceeds vocabulary size");
  if (cfg.batch < 1 || cfg.iterations < 0) throw Error(ErrorCode::NPIConfigInvalid, "batch must be >= 1");
  if (cfg.mode == AttackMode::NPI && cfg.suffix_len < 1) {
    throw Error(ErrorCode::NPIConfigInvalid, "suffix length must be >= 1");
  }
}

const Span* span_at(const Prompt& p, int index) {
  for (const auto& s : p.spans) {
    if (index >= s.begin && index < s.end) return &s;
  }
  return nullptr;
}

}  // namespace

std::string_view attack_mode_name(AttackMode m) noexcept { return name_of(m, kModes); }
std::string_view insert_pos_name(InsertPos p) noexcept { return name_of(p, kPositions); }
std::string_view objective_name(Objective o) noexcept { return name_of(o, kObjectives); }
std::string_view category_filter_name(CategoryFilter f) noexcept { return name_of(f, kFilters); }
std::optional<AttackMode> parse_attack_mode(std::string_view s) noexcept { return lookup_name(s, kModes); }
std::optional<InsertPos> parse_insert_pos(std::string_view s) noexcept { return lookup_name(s, kPositions); }
std::optional<Objective> parse_objective(std::string_view s) noexcept { return lookup_name(s, kObjectives); }
std::optional<CategoryFilter> parse_category_filter(std::string_view s) noexcept {
  return lookup_name(s, kFilters);
}

std::vector<int> topk_candidates(std::span<const double> row, int k) {
  const int vsz = static_cast<int>(row.size());
  if (k < 1 || k > vsz) throw Error(ErrorCode::KTooLarge, "k must lie in [1, |V|]");
  std::vector<int> ids(static_cast<std::size_t>(vsz));
  std::iota(ids.begin(), ids.end(), 0);
  auto better = [&](int a, int b) {
    if (row[static_cast<std::size_t>(a)] != row[static_cast<std::size_t>(b)]) {
      return -row[static_cast<std::size_t>(a)] > -row[static_cast<std::size_t>(b)];
    }
    return a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), better);
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

std::vector<double> word_importance(const ReasonerParams& params, const Prompt& prompt, Action gold) {
  const OneHotGradient g = grad_onehot(params, prompt.tokens, gold);
  std::vector<double> scores(static_cast<std::size_t>(prompt.size()), 0.0);
  for (int i = 0; i < prompt.size(); ++i) {
    double s = 0.0;
    for (double v : g.row(i)) s += v * v;
    scores[static_cast<std::size_t>(i)] = std::sqrt(s);
  }
  for (const auto& s : prompt.spans) {
    if (s.kind != SpanKind::Suffix) continue;
    for (int i = s.begin; i < s.end; ++i) scores[static_cast<std::size_t>(i)] = 0.0;
  }
  return scores;
}

double objective_value(const ActionDist& dist, Objective objective, Action target, Action gold) {
  const ObjectiveSpec spec{objective == Objective::ForceAction,
                           index_of(objective == Objective::ForceAction ? target : gold)};
  return spec(dist);
}

AttackResult npi_attack(const ReasonerParams& params, const Prompt& prompt, Action gold, const AttackConfig& cfg) {
  if (cfg.mode != AttackMode::NPI) throw Error(ErrorCode::NPIConfigInvalid, "configuration is not an NPI attack");
  validate(params, cfg);
  if (cfg.filler <= Vocab::kPad || cfg.filler >= params.vocab_size) {
    throw Error(ErrorCode::NPIConfigInvalid, "filler token id is not set");
  }
  const ObjectiveSpec obj = objective_spec(cfg, gold);

  const int at = insertion_index(prompt, cfg.insert_pos);
  const std::vector<int> filler(static_cast<std::size_t>(cfg.suffix_len), cfg.filler);
  AttackResult result;
  result.cfg = cfg;
  result.vocab_digest = prompt.vocab_digest;
  result.anchor = {SpanKind::Suffix, -1, 0};
  result.prompt = insert_span(prompt, at, filler, SpanKind::Suffix);
  for (int i = 0; i < cfg.suffix_len; ++i) result.positions.push_back(at + i);

  std::vector<int> current = result.prompt.tokens;
  std::vector<int> best = current;
  {
    const CandidateEvaluator eval(params, current, at, at + cfg.suffix_len);
    result.initial_objective = obj(eval.evaluate(std::span<const int>(current)));
  }
  double best_value = result.initial_objective;

  std::mt19937_64 rng(cfg.seed);
  std::vector<Candidate> batch(static_cast<std::size_t>(cfg.batch));
  for (int it = 0; it < cfg.iterations; ++it) {
    const OneHotGradient g = objective_gradient(params, current, obj);
    ++result.gradient_queries;
    std::vector<std::vector<int>> top;
    top.reserve(result.positions.size());
    for (int pos : result.positions) top.push_back(filtered_topk(g.row(pos), cfg.k, -1));
    std::uniform_int_distribution<int> pick_pos(0, cfg.suffix_len - 1);
    for (auto& c : batch) {
      const int slot = pick_pos(rng);
      const auto& options = top[static_cast<std::size_t>(slot)];
      std::uniform_int_distribution<std::size_t> pick_tok(0, options.size() - 1);
      c = {result.positions[static_cast<std::size_t>(slot)], options[pick_tok(rng)]};
    }
    const CandidateEvaluator eval(params, current, at, at + cfg.suffix_len);
    const auto scores = score_candidates_parallel(eval, batch, obj);
    result.forward_queries += batch.size();
    const std::size_t winner = argmin_stable(scores);
    current[static_cast<std::size_t>(batch[winner].position)] = batch[winner].token;
    if (scores[winner] < best_value) {
      best_value = scores[winner];
      best = current;
    }
    result.trajectory.push_back(best_value);
  }

  result.prompt.tokens = best;
  result.perturbation.assign(best.begin() + at, best.begin() + at + cfg.suffix_len);
  result.objective = best_value;
  return result;
}

AttackResult nps_attack(const ReasonerParams& params, const Prompt& prompt, Action gold, const AttackConfig& cfg) {
  if (cfg.mode != AttackMode::NPS) throw Error(ErrorCode::NPIConfigInvalid, "configuration is not an NPS attack");
  validate(params, cfg);
  const ObjectiveSpec obj = objective_spec(cfg, gold);

  std::vector<char> eligible(static_cast<std::size_t>(prompt.size()), 1);
  for (const auto& s : prompt.spans) {
    if (s.kind != SpanKind::Suffix) continue;
    for (int i = s.begin; i < s.end; ++i) eligible[static_cast<std::size_t>(i)] = 0;
  }
  for (int i = 0; i < prompt.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (prompt.tokens[idx] == Vocab::kPad) eligible[idx] = 0;
    if (cfg.category_filter == CategoryFilter::Intersection && prompt.categories[idx] != WordCategory::Intersection) {
      eligible[idx] = 0;
    }
    if (cfg.category_filter == CategoryFilter::Landmark && prompt.categories[idx] != WordCategory::Landmark) {
      eligible[idx] = 0;
    }
  }
  if (std::none_of(eligible.begin(), eligible.end(), [](char c) { return c != 0; })) {
    throw Error(ErrorCode::EmptyCategory,
                "prompt has no " + std::string(category_filter_name(cfg.category_filter)) + " tokens");
  }

  const OneHotGradient g = objective_gradient(params, prompt.tokens, obj);
  std::uint64_t forward_queries = 0;
  int pos = -1;
  double best_importance = -1.0;
  for (int i = 0; i < prompt.size(); ++i) {
    if (!eligible[static_cast<std::size_t>(i)]) continue;
    double s = 0.0;
    for (double v : g.row(i)) s += v * v;
    if (s > best_importance) {
      best_importance = s;
      pos = i;
    }
  }

  const int original = prompt.tokens[static_cast<std::size_t>(pos)];
  const CandidateEvaluator eval(params, prompt.tokens, pos, pos + 1);
  const double original_value = obj(eval.evaluate(std::span<const int>(prompt.tokens)));

  auto as_candidates = [&](const std::vector<int>& ids) {
    std::vector<Candidate> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back({pos, id});
    return out;
  };
  auto candidates = as_candidates(filtered_topk(g.row(pos), cfg.k, original));
  auto scores = score_candidates_parallel(eval, candidates, obj);
  forward_queries += candidates.size();
  if (candidates.empty() || scores[argmin_stable(scores)] > original_value) {
    std::vector<int> all;
    for (int id = 1; id < params.vocab_size; ++id) {
      if (id != original) all.push_back(id);
    }
    candidates = as_candidates(all);
    scores = score_candidates_parallel(eval, candidates, obj);
    forward_queries += candidates.size();
  }
  const std::size_t winner = argmin_stable(scores);

  AttackResult result;
  result.cfg = cfg;
  result.vocab_digest = prompt.vocab_digest;
  result.prompt = prompt;
  result.prompt.tokens[static_cast<std::size_t>(pos)] = candidates[winner].token;
  result.perturbation = {candidates[winner].token};
  result.positions = {pos};
  result.original_token = original;
  const Span* span = span_at(prompt, pos);
  const bool current_obs = span == prompt.current_observation();
  result.anchor = {span->kind, current_obs ? -1 : span->step, pos - span->begin};
  result.initial_objective = original_value;
  result.objective = scores[winner];
  result.trajectory = {scores[winner]};
  result.gradient_queries = 1;
  result.forward_queries = forward_queries;
  return result;
}

AttackResult run_attack(const ReasonerParams& params, const Prompt& prompt, Action gold, const AttackConfig& cfg) {
  return cfg.mode == AttackMode::NPI ? npi_attack(params, prompt, gold, cfg) : nps_attack(params, prompt, gold, cfg);
}

Prompt transfer_apply(const AttackResult& result, const Prompt& victim_prompt) {
  if (result.vocab_digest != victim_prompt.vocab_digest) {
    throw Error(ErrorCode::VocabMismatch, "perturbation was crafted with a different vocabulary");
  }
  if (result.cfg.mode == AttackMode::NPI) {
    return insert_span(victim_prompt, insertion_index(victim_prompt, result.cfg.insert_pos), result.perturbation,
                       SpanKind::Suffix);
  }
  const Span* span = nullptr;
  if (result.anchor.kind == SpanKind::Observation && result.anchor.step < 0) {
    span = victim_prompt.current_observation();
  } else {
    span = victim_prompt.find(result.anchor.kind, result.anchor.step);
  }
  if (span == nullptr || result.anchor.offset >= span->size() || result.perturbation.empty()) return victim_prompt;
  Prompt out = victim_prompt;
  out.tokens[static_cast<std::size_t>(span->begin + result.anchor.offset)] = result.perturbation.front();
  return out;
}

}  // namespace navsec
