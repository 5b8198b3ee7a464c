#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "navsec/reasoner.hpp"
#include "navsec/templates.hpp"
#include "navsec/verbalizer.hpp"
#include "navsec/vocab.hpp"
#include "navsec/world.hpp"

namespace navsec {

enum class TrainingMode { Teacher, Mixed };

std::string_view training_mode_name(TrainingMode m) noexcept;
std::optional<TrainingMode> parse_training_mode(std::string_view s) noexcept;

struct TrainConfig {
  int epochs = 30;
  double lr = 0.05;
  double momentum = 0.9;
  int batch = 32;
  double clip_norm = 5.0;
  double student_fraction = 0.5;
  TrainingMode mode = TrainingMode::Mixed;
  std::uint64_t seed = 1;
};

/// Gold script of one route: observations along the gold route and the gold
/// action at each of them. `transform` post-processes every prompt built for
/// the episode (wrapping, perturbation); it must be a pure function.
struct TrainingEpisode {
  std::string route_id;
  std::string instruction;
  std::vector<Observation> observations;
  std::vector<Action> actions;
  std::string tag;
  std::function<Prompt(const Prompt&)> transform;
};

struct TrainingSet {
  Vocab vocab;
  Templates templates;
  std::vector<TrainingEpisode> episodes;

  std::size_t num_examples() const;
  /// Prompt for step `t` given an action history (gold or predicted).
  Prompt prompt(std::size_t episode, int t, std::span<const Action> history, bool apply_transform = true) const;
};

/// Replays the gold actions of `route` and records the observation at each step.
TrainingEpisode script_episode(const NavGraph& graph, const RouteInstance& route);

struct TrainingWorld {
  NavGraph graph;
  std::vector<RouteInstance> routes;
};

/// Builds the stock training set: every route as a plain episode, with a
/// `wrap_fraction` share of episodes wrapped by a random prompt defense.
TrainingSet make_training_set(const Vocab& vocab, const Templates& templates,
                              const std::vector<TrainingWorld>& worlds, double wrap_fraction,
                              std::uint64_t seed);

/// Mini-batch SGD with momentum on the cross-entropy of the gold actions.
/// Mixed mode rebuilds `student_fraction` of the episodes each epoch with the
/// model's own chained argmax actions as history (labels stay gold).
/// `epoch_losses`, when given, receives the mean training loss per epoch.
ReasonerParams train(const ReasonerParams& init, const TrainingSet& data, const TrainConfig& cfg,
                     std::vector<double>* epoch_losses = nullptr);

}  // namespace navsec
