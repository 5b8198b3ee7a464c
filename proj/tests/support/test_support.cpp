#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace navsec::testing {

NavGraph make_graph(std::initializer_list<Vec2> positions, std::initializer_list<std::pair<int, int>> edges,
                    std::vector<std::vector<int>> landmarks) {
  NavGraph g;
  g.id = "hand";
  int id = 0;
  for (Vec2 p : positions) {
    Node n{id, p, {}, false};
    if (static_cast<std::size_t>(id) < landmarks.size()) n.landmarks = landmarks[static_cast<std::size_t>(id)];
    g.nodes.push_back(n);
    ++id;
  }
  g.edges.assign(edges.begin(), edges.end());
  g.rebuild_adjacency();
  return g;
}

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return cross(q - p, r - p); };
  const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) || (d3 == 0 && on_segment(a, b, c)) ||
         (d4 == 0 && on_segment(a, b, d));
}

int exhaustive_shortest_path(const NavGraph& g, int u, int v) {
  int best = std::numeric_limits<int>::max();
  std::vector<char> on_path(static_cast<std::size_t>(g.size()), 0);
  std::function<void(int, int)> walk = [&](int node, int depth) {
    if (depth >= best) return;
    if (node == v) {
      best = depth;
      return;
    }
    on_path[static_cast<std::size_t>(node)] = 1;
    for (int n : g.adjacency[static_cast<std::size_t>(node)]) {
      if (!on_path[static_cast<std::size_t>(n)]) walk(n, depth + 1);
    }
    on_path[static_cast<std::size_t>(node)] = 0;
  };
  walk(u, 0);
  return best == std::numeric_limits<int>::max() ? -1 : best;
}

ReasonerParams random_params(Arch arch, int vocab_size, int dim, int hidden, int window_token, std::uint64_t seed,
                             double scale) {
  ReasonerParams p = init_params({arch, dim, hidden, 4, seed}, vocab_size, window_token);
  std::mt19937_64 rng(seed * 7919 + 3);
  std::normal_distribution<double> normal(0.0, scale);
  for (auto* t : p.tensors()) {
    for (double& v : *t) v = normal(rng);
  }
  return p;
}

std::vector<int> random_tokens(int vocab_size, int length, int window_token, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, vocab_size - 1);
  std::vector<int> out(static_cast<std::size_t>(length));
  for (int& t : out) t = pick(rng);
  out[static_cast<std::size_t>(length / 3)] = window_token;
  return out;
}

namespace {

double nll(const ActionDist& d, Action a) { return -std::log(d[static_cast<std::size_t>(index_of(a))]); }

GradCheck compare(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  return {denom == 0.0 ? 0.0 : std::sqrt(diff) / denom, analytic.size()};
}

}  // namespace

GradCheck check_parameter_gradient(const ReasonerParams& params, std::span<const int> tokens, Action action,
                                   double eps) {
  ReasonerParams grads = params.zeros_like();
  accumulate_gradients(params, tokens, action, grads);
  ReasonerParams probe = params;
  std::vector<double> analytic, numeric;
  const auto g = grads.tensors();
  const auto t = probe.tensors();
  for (std::size_t k = 0; k < t.size(); ++k) {
    for (std::size_t i = 0; i < t[k]->size(); ++i) {
      double& w = (*t[k])[i];
      const double saved = w;
      w = saved + eps;
      const double up = loss(probe, tokens, action);
      w = saved - eps;
      const double down = loss(probe, tokens, action);
      w = saved;
      analytic.push_back((*g[k])[i]);
      numeric.push_back((up - down) / (2 * eps));
    }
  }
  return compare(analytic, numeric);
}

GradCheck check_embedding_gradient(const ReasonerParams& params, std::span<const int> tokens, Action action,
                                   double eps) {
  const int d = params.dim;
  std::vector<double> x(tokens.size() * static_cast<std::size_t>(d), 0.0);
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    if (tokens[p] == Vocab::kPad) continue;
    for (int j = 0; j < d; ++j) {
      x[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] =
          params.emb[static_cast<std::size_t>(tokens[p]) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
    }
  }
  const auto analytic = embedding_gradient(params, tokens, action);
  std::vector<double> numeric(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = nll(forward_from_embeddings(params, tokens, x), action);
    x[i] = saved - eps;
    const double down = nll(forward_from_embeddings(params, tokens, x), action);
    x[i] = saved;
    numeric[i] = (up - down) / (2 * eps);
  }
  return compare(analytic, numeric);
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.world = {6, 6, 10.0, 0.5, 0.1, 0.1, true};
  cfg.n_routes = 12;
  cfg.n_attack_routes = 6;
  cfg.min_len = 6;
  cfg.max_len = 10;
  cfg.train_worlds = 1;
  cfg.train_routes_per_world = 12;
  cfg.train.epochs = 2;
  cfg.attack.iterations = 3;
  cfg.attack.batch = 8;
  cfg.attack.k = 8;
  cfg.attack.suffix_len = 4;
  cfg.adv_attack = cfg.attack;
  cfg.adv_train.epochs = 1;
  cfg.sweep = {0.0, 0.2};
  cfg.sweep_routes = 4;
  return cfg;
}

}  // namespace navsec::testing
