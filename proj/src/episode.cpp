#include "navsec/episode.hpp"

#include <exception>

#include "navsec/error.hpp"

namespace navsec {
namespace {

std::uint64_t route_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const AttackResult* perturbation_at(std::span<const std::optional<AttackResult>> perturbations, std::size_t i) {
  if (perturbations.empty()) return nullptr;
  if (perturbations.size() <= i) throw Error(ErrorCode::InvalidArgument, "fewer perturbations than routes");
  return perturbations[i] ? &*perturbations[i] : nullptr;
}

}  // namespace

EpisodeTrace run_episode(const Policy& policy, const Vocab& vocab, const NavGraph& graph, const RouteInstance& route,
                         const EpisodeOptions& options, const AttackResult* perturbation) {
  if (options.max_steps < 1) throw Error(ErrorCode::ConfigError, "max_steps must be at least 1");
  if (route.graph_id != graph.id) throw Error(ErrorCode::ConfigError, "route " + route.id + " is not on " + graph.id);
  EpisodeTrace trace;
  trace.route_id = route.id;
  trace.visited.push_back(route.start.node);
  if (options.defense) trace.defense = std::string(defense_name(options.defense->tag));
  if (perturbation) trace.attack = std::string(attack_mode_name(perturbation->cfg.mode));

  AgentState state = route.start;
  std::vector<std::pair<Observation, Action>> history;
  for (int t = 0; t < options.max_steps; ++t) {
    const Observation obs = observe(graph, state, t);
    Prompt prompt = build_prompt(vocab, options.templates.task_description, route.instruction, history, obs,
                                 options.templates);
    if (perturbation) prompt = transfer_apply(*perturbation, prompt);
    if (options.defense) prompt = npe_wrap(vocab, prompt, *options.defense);
    if (prompt.size() > kMaxContext) {
      trace.termination = Termination::ContextOverflow;
      break;
    }
    const Action a = policy(prompt, t);
    trace.actions.push_back(a);
    if (a == Action::Stop) {
      trace.termination = Termination::Stop;
      trace.stop_node = state.node;
      break;
    }
    const auto result = try_apply_action(graph, state, a);
    if (!result) {
      trace.termination = Termination::ActionError;
      break;
    }
    const auto next = std::get<AgentState>(*result);
    if (next.node != state.node) trace.visited.push_back(next.node);
    state = next;
    history.emplace_back(obs, a);
  }
  trace.steps = static_cast<int>(trace.actions.size());
  return trace;
}

EpisodeTrace run_episode(const ReasonerParams& params, const Vocab& vocab, const NavGraph& graph,
                         const RouteInstance& route, const EpisodeOptions& options, const AttackResult* perturbation) {
  if (params.vocab_size != vocab.size()) throw Error(ErrorCode::VocabMismatch, "model and vocabulary sizes differ");
  const Policy policy = [&params](const Prompt& p, int) { return predict(params, p.tokens); };
  return run_episode(policy, vocab, graph, route, options, perturbation);
}

std::vector<EpisodeTrace> run_episodes_serial(const ReasonerParams& params, const Vocab& vocab,
                                              const NavGraph& graph, std::span<const RouteInstance> routes,
                                              const EpisodeOptions& options,
                                              std::span<const std::optional<AttackResult>> perturbations) {
  std::vector<EpisodeTrace> out;
  out.reserve(routes.size());
  for (std::size_t i = 0; i < routes.size(); ++i) {
    out.push_back(run_episode(params, vocab, graph, routes[i], options, perturbation_at(perturbations, i)));
  }
  return out;
}

std::vector<EpisodeTrace> run_episodes(const ReasonerParams& params, const Vocab& vocab, const NavGraph& graph,
                                       std::span<const RouteInstance> routes, const EpisodeOptions& options,
                                       std::span<const std::optional<AttackResult>> perturbations) {
  std::vector<EpisodeTrace> out(routes.size());
  std::exception_ptr failure;
  const auto n = static_cast<long>(routes.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      out[idx] = run_episode(params, vocab, graph, routes[idx], options, perturbation_at(perturbations, idx));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Prompt initial_prompt(const Vocab& vocab, const NavGraph& graph, const RouteInstance& route,
                      const Templates& templates) {
  return build_prompt(vocab, templates.task_description, route.instruction, {}, observe(graph, route.start, 0),
                      templates);
}

std::vector<std::optional<AttackResult>> craft_perturbations(const ReasonerParams& params, const Vocab& vocab,
                                                             const NavGraph& graph,
                                                             std::span<const RouteInstance> routes,
                                                             const AttackConfig& cfg, const Templates& templates) {
  std::vector<std::optional<AttackResult>> out(routes.size());
  std::exception_ptr failure;
  const auto n = static_cast<long>(routes.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      AttackConfig c = cfg;
      c.seed = route_seed(cfg.seed, idx);
      if (c.filler < 0) c.filler = vocab.filler();
      out[idx] = run_attack(params, initial_prompt(vocab, graph, routes[idx], templates),
                            routes[idx].gold_actions.front(), c);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

MetricsReport evaluate_traces(std::span<const EpisodeTrace> traces, const NavGraph& graph,
                              std::span<const RouteInstance> routes) {
  if (traces.size() != routes.size()) throw Error(ErrorCode::InvalidArgument, "trace and route counts differ");
  std::vector<EpisodeRecord> records;
  records.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) records.push_back(per_episode(traces[i], graph, routes[i]));
  return aggregate(records);
}

}  // namespace navsec
