#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "navsec/attack.hpp"
#include "navsec/templates.hpp"
#include "navsec/training.hpp"
#include "navsec/verbalizer.hpp"
#include "navsec/vocab.hpp"

namespace navsec {

enum class DefenseTag { None, CoT, PS, RP, ASP, AdvTrain };

std::string_view defense_name(DefenseTag t) noexcept;
std::optional<DefenseTag> parse_defense(std::string_view name) noexcept;

struct DefenseStrategy {
  DefenseTag tag = DefenseTag::None;
  std::string text;

  bool is_prompt_transform() const {
    return tag == DefenseTag::CoT || tag == DefenseTag::PS || tag == DefenseTag::RP || tag == DefenseTag::ASP;
  }
  static DefenseStrategy from(DefenseTag tag, const Templates& templates = default_templates());
};

/// CoT appends its directive after the prompt; PS, RP and ASP prepend theirs.
/// Wrapping twice with the same strategy returns the prompt unchanged.
Prompt npe_wrap(const Vocab& vocab, const Prompt& prompt, const DefenseStrategy& strategy);

/// Crafts one perturbation per clean episode against `victim` (on the step-0
/// prompt), adds the perturbed copy of every episode with gold labels kept,
/// then trains from `init` on the doubled set.
ReasonerParams adversarial_training(const ReasonerParams& victim, const ReasonerParams& init,
                                    const TrainingSet& clean, const AttackConfig& attack_cfg,
                                    const TrainConfig& train_cfg, TrainingSet* augmented_out = nullptr);

/// The augmented set alone (clean episodes followed by their perturbed copies).
TrainingSet augment_with_attacks(const ReasonerParams& victim, const TrainingSet& clean,
                                 const AttackConfig& attack_cfg);

}  // namespace navsec
