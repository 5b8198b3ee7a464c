#include "navsec/defense.hpp"

#include <array>
#include <memory>

#include "navsec/error.hpp"

namespace navsec {
namespace {

constexpr std::array<std::pair<DefenseTag, std::string_view>, 6> kNames = {{{DefenseTag::None, "none"},
                                                                            {DefenseTag::CoT, "NPE-CoT"},
                                                                            {DefenseTag::PS, "NPE-PS"},
                                                                            {DefenseTag::RP, "NPE-RP"},
                                                                            {DefenseTag::ASP, "ASP"},
                                                                            {DefenseTag::AdvTrain, "AdvTrain"}}};

}  // namespace

std::string_view defense_name(DefenseTag t) noexcept {
  for (const auto& [tag, name] : kNames) {
    if (tag == t) return name;
  }
  return "none";
}

std::optional<DefenseTag> parse_defense(std::string_view name) noexcept {
  for (const auto& [tag, n] : kNames) {
    if (n == name) return tag;
  }
  if (name == "cot") return DefenseTag::CoT;
  if (name == "ps") return DefenseTag::PS;
  if (name == "rp") return DefenseTag::RP;
  if (name == "asp") return DefenseTag::ASP;
  if (name == "advtrain" || name == "at") return DefenseTag::AdvTrain;
  return std::nullopt;
}

DefenseStrategy DefenseStrategy::from(DefenseTag tag, const Templates& templates) {
  switch (tag) {
    case DefenseTag::CoT: return {tag, templates.cot};
    case DefenseTag::PS: return {tag, templates.ps};
    case DefenseTag::RP: return {tag, templates.rp};
    case DefenseTag::ASP: return {tag, templates.asp};
    default: return {tag, {}};
  }
}

Prompt npe_wrap(const Vocab& vocab, const Prompt& prompt, const DefenseStrategy& strategy) {
  if (!strategy.is_prompt_transform()) {
    throw Error(ErrorCode::NotAPromptTransform,
                std::string(defense_name(strategy.tag)) + " is not a prompt transform");
  }
  if (strategy.text.empty()) throw Error(ErrorCode::ConfigError, "empty defense template");
  const std::string label(defense_name(strategy.tag));
  for (const auto& s : prompt.spans) {
    if (s.kind == SpanKind::Defense && s.label == label) return prompt;
  }
  const auto ids = vocab.tokenize(strategy.text);
  const int at = strategy.tag == DefenseTag::CoT ? prompt.size() : 0;
  return insert_span(prompt, at, ids, SpanKind::Defense, label);
}

TrainingSet augment_with_attacks(const ReasonerParams& victim, const TrainingSet& clean,
                                 const AttackConfig& attack_cfg) {
  TrainingSet out = clean;
  out.episodes.reserve(clean.episodes.size() * 2);
  for (std::size_t e = 0; e < clean.episodes.size(); ++e) {
    const auto& ep = clean.episodes[e];
    const Prompt p0 = clean.prompt(e, 0, ep.actions, false);
    AttackConfig cfg = attack_cfg;
    cfg.seed = attack_cfg.seed + e;
    if (cfg.filler < 0) cfg.filler = clean.vocab.filler();
    auto result = std::make_shared<const AttackResult>(run_attack(victim, p0, ep.actions.front(), cfg));

    TrainingEpisode adv = ep;
    adv.tag = ep.tag.empty() ? "adv" : ep.tag + "+adv";
    // The perturbation goes into the plain prompt before any wrapper, as at evaluation time.
    adv.transform = [result, inner = ep.transform](const Prompt& p) {
      Prompt q = transfer_apply(*result, p);
      return inner ? inner(q) : q;
    };
    out.episodes.push_back(std::move(adv));
  }
  return out;
}

ReasonerParams adversarial_training(const ReasonerParams& victim, const ReasonerParams& init,
                                    const TrainingSet& clean, const AttackConfig& attack_cfg,
                                    const TrainConfig& train_cfg, TrainingSet* augmented_out) {
  if (clean.episodes.empty()) throw Error(ErrorCode::EmptyDataset, "clean training set is empty");
  TrainingSet augmented = augment_with_attacks(victim, clean, attack_cfg);
  ReasonerParams params = train(init, augmented, train_cfg);
  params.training_mode = "adversarial";
  if (augmented_out) *augmented_out = std::move(augmented);
  return params;
}

}  // namespace navsec
