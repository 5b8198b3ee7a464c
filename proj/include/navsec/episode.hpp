#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "navsec/attack.hpp"
#include "navsec/defense.hpp"
#include "navsec/metrics.hpp"
#include "navsec/reasoner.hpp"
#include "navsec/templates.hpp"
#include "navsec/vocab.hpp"
#include "navsec/world.hpp"

namespace navsec {

inline constexpr int kDefaultMaxSteps = 40;

struct EpisodeOptions {
  int max_steps = kDefaultMaxSteps;
  std::optional<DefenseStrategy> defense;
  Templates templates = default_templates();
};

/// Chooses the next action from the final prompt (after perturbation and wrapping).
using Policy = std::function<Action(const Prompt& prompt, int step)>;

/// The navigation loop: observe, build the prompt, apply the perturbation and the
/// defense wrapper, choose an action, move. Ends on stop, on an infeasible
/// action, on context overflow or after `max_steps` actions.
EpisodeTrace run_episode(const Policy& policy, const Vocab& vocab, const NavGraph& graph, const RouteInstance& route,
                         const EpisodeOptions& options, const AttackResult* perturbation = nullptr);

EpisodeTrace run_episode(const ReasonerParams& params, const Vocab& vocab, const NavGraph& graph,
                         const RouteInstance& route, const EpisodeOptions& options,
                         const AttackResult* perturbation = nullptr);

/// Runs every route; perturbations[i] (may be empty) applies to routes[i].
/// Results are ordered like `routes` whatever the worker count.
std::vector<EpisodeTrace> run_episodes(const ReasonerParams& params, const Vocab& vocab, const NavGraph& graph,
                                       std::span<const RouteInstance> routes, const EpisodeOptions& options,
                                       std::span<const std::optional<AttackResult>> perturbations = {});
/// Serial reference for run_episodes.
std::vector<EpisodeTrace> run_episodes_serial(const ReasonerParams& params, const Vocab& vocab,
                                              const NavGraph& graph, std::span<const RouteInstance> routes,
                                              const EpisodeOptions& options,
                                              std::span<const std::optional<AttackResult>> perturbations = {});

/// The clean step-0 prompt of a route (what the attacker crafts against).
Prompt initial_prompt(const Vocab& vocab, const NavGraph& graph, const RouteInstance& route,
                      const Templates& templates = default_templates());

/// Crafts one perturbation per route on its step-0 prompt; attack seeds are
/// derived from cfg.seed and the route index. Routes run in parallel.
std::vector<std::optional<AttackResult>> craft_perturbations(const ReasonerParams& params, const Vocab& vocab,
                                                             const NavGraph& graph,
                                                             std::span<const RouteInstance> routes,
                                                             const AttackConfig& cfg,
                                                             const Templates& templates = default_templates());

MetricsReport evaluate_traces(std::span<const EpisodeTrace> traces, const NavGraph& graph,
                              std::span<const RouteInstance> routes);

}  // namespace navsec
