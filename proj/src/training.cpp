#include "navsec/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "navsec/defense.hpp"
#include "navsec/error.hpp"

namespace navsec {

std::string_view training_mode_name(TrainingMode m) noexcept {
  return m == TrainingMode::Teacher ? "teacher" : "mixed";
}

std::optional<TrainingMode> parse_training_mode(std::string_view s) noexcept {
  if (s == "teacher") return TrainingMode::Teacher;
  if (s == "mixed") return TrainingMode::Mixed;
  return std::nullopt;
}

std::size_t TrainingSet::num_examples() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.actions.size();
  return n;
}

Prompt TrainingSet::prompt(std::size_t episode, int t, std::span<const Action> history,
                           bool apply_transform) const {
  const auto& ep = episodes.at(episode);
  std::vector<std::pair<Observation, Action>> hist;
  hist.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) hist.emplace_back(ep.observations[static_cast<std::size_t>(i)], history[static_cast<std::size_t>(i)]);
  Prompt p = build_prompt(vocab, templates.task_description, ep.instruction, hist,
                          ep.observations.at(static_cast<std::size_t>(t)), templates);
  return apply_transform && ep.transform ? ep.transform(p) : p;
}

TrainingEpisode script_episode(const NavGraph& graph, const RouteInstance& route) {
  TrainingEpisode ep;
  ep.route_id = route.id;
  ep.instruction = route.instruction;
  ep.actions = route.gold_actions;
  AgentState s = route.start;
  for (std::size_t t = 0; t < route.gold_actions.size(); ++t) {
    ep.observations.push_back(observe(graph, s, static_cast<int>(t)));
    if (route.gold_actions[t] == Action::Stop) break;
    s = std::get<AgentState>(apply_action(graph, s, route.gold_actions[t]));
  }
  return ep;
}

TrainingSet make_training_set(const Vocab& vocab, const Templates& templates,
                              const std::vector<TrainingWorld>& worlds, double wrap_fraction,
                              std::uint64_t seed) {
  TrainingSet set{vocab, templates, {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  constexpr std::array<DefenseTag, 4> kWrappers = {DefenseTag::CoT, DefenseTag::PS, DefenseTag::RP,
                                                   DefenseTag::ASP};
  for (const auto& w : worlds) {
    for (const auto& r : w.routes) {
      TrainingEpisode ep = script_episode(w.graph, r);
      if (coin(rng) < wrap_fraction) {
        const auto strategy = DefenseStrategy::from(kWrappers[rng() % kWrappers.size()], templates);
        ep.tag = std::string(defense_name(strategy.tag));
        ep.transform = [vocab, strategy](const Prompt& p) { return npe_wrap(vocab, p, strategy); };
      }
      set.episodes.push_back(std::move(ep));
    }
  }
  return set;
}

namespace {

double global_norm(const ReasonerParams& g) {
  double s = 0.0;
  for (const auto* t : g.tensors()) {
    for (double v : *t) s += v * v;
  }
  return std::sqrt(s);
}

}  // namespace

ReasonerParams train(const ReasonerParams& init, const TrainingSet& data, const TrainConfig& cfg,
                     std::vector<double>* epoch_losses) {
  if (data.episodes.empty() || data.num_examples() == 0) {
    throw Error(ErrorCode::EmptyDataset, "training set has no examples");
  }
  if (cfg.epochs < 0 || cfg.batch < 1 || !(cfg.lr > 0.0)) {
    throw Error(ErrorCode::ConfigError, "invalid training configuration");
  }
  struct Example {
    std::size_t episode;
    int step;
  };
  std::vector<Example> examples;
  std::vector<std::vector<int>> teacher_tokens;
  std::vector<std::size_t> first_example(data.episodes.size());
  for (std::size_t e = 0; e < data.episodes.size(); ++e) {
    first_example[e] = examples.size();
    const auto& ep = data.episodes[e];
    for (int t = 0; t < static_cast<int>(ep.actions.size()); ++t) {
      examples.push_back({e, t});
      teacher_tokens.push_back(data.prompt(e, t, ep.actions).tokens);
    }
  }

  ReasonerParams params = init;
  params.training_mode = std::string(training_mode_name(cfg.mode));
  ReasonerParams velocity = params.zeros_like();
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(examples.size());
  std::vector<std::size_t> episode_order(data.episodes.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::vector<int>> tokens = teacher_tokens;
    if (cfg.mode == TrainingMode::Mixed) {
      std::iota(episode_order.begin(), episode_order.end(), 0);
      std::shuffle(episode_order.begin(), episode_order.end(), rng);
      const auto n_student = static_cast<std::size_t>(
          std::llround(cfg.student_fraction * static_cast<double>(episode_order.size())));
      for (std::size_t i = 0; i < n_student; ++i) {
        const std::size_t e = episode_order[i];
        const auto& ep = data.episodes[e];
        std::vector<Action> history;
        for (int t = 0; t < static_cast<int>(ep.actions.size()); ++t) {
          auto toks = data.prompt(e, t, history).tokens;
          history.push_back(predict(params, toks));
          tokens[first_example[e] + static_cast<std::size_t>(t)] = std::move(toks);
        }
      }
    }

    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch));
      ReasonerParams grads = params.zeros_like();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& ex = examples[order[i]];
        epoch_loss += accumulate_gradients(params, tokens[order[i]],
                                           data.episodes[ex.episode].actions[static_cast<std::size_t>(ex.step)], grads);
      }
      double scale = 1.0 / static_cast<double>(end - begin);
      const double norm = global_norm(grads) * scale;
      if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) scale *= cfg.clip_norm / norm;
      auto pt = params.tensors();
      auto gt = grads.tensors();
      auto vt = velocity.tensors();
      for (std::size_t k = 0; k < pt.size(); ++k) {
        auto& p = *pt[k];
        const auto& g = *gt[k];
        auto& v = *vt[k];
        for (std::size_t j = 0; j < p.size(); ++j) {
          v[j] = cfg.momentum * v[j] + g[j] * scale;
          p[j] -= cfg.lr * v[j];
        }
      }
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(examples.size()));
  }
  params.queries.reset();
  return params;
}

}  // namespace navsec
