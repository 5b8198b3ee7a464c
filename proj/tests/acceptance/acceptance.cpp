// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <queue>
#include <random>
#include <sstream>
#include <string>

#include "navsec/episode.hpp"
#include "navsec/experiment.hpp"
#include "navsec/kernels.hpp"
#include "navsec/metrics.hpp"
#include "test_support.hpp"

using namespace navsec;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion_1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int cases = 0;
  for (Arch arch : {Arch::Attention, Arch::Linear}) {
    for (std::uint64_t c = 0; c < 20; ++c) {
      const auto p = navsec::testing::random_params(arch, 40, 8, 6, 5, 1000 + c);
      const auto tokens = navsec::testing::random_tokens(40, 12 + static_cast<int>(c % 8), 5, 2000 + c);
      const Action a = kAllActions[c % kNumActions];
      worst = std::max(worst, navsec::testing::check_parameter_gradient(p, tokens, a, 1e-3).relative_error);
      worst = std::max(worst, navsec::testing::check_embedding_gradient(p, tokens, a, 1e-3).relative_error);
      ++cases;
    }
  }
  const double secs = seconds_since(t0);
  verdict(1, worst < 1e-4 && secs < 5.0,
          fmt("%d cases over 2 architectures, worst relative error %.2e, %.2fs", cases, worst, secs));
}

std::vector<int> bfs(const NavGraph& g, int src) {
  std::vector<int> dist(static_cast<std::size_t>(g.size()), -1);
  std::queue<int> q;
  dist[static_cast<std::size_t>(src)] = 0;
  q.push(src);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const auto& [a, b] : g.edges) {
      const int v = a == u ? b : b == u ? a : -1;
      if (v >= 0 && dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

void criterion_2() {
  const Vocab vocab = Vocab::standard();
  const NavGraph g = generate_world(31, {6, 6, 10.0, 0.5, 0.2, 0.1, true});
  const auto routes = sample_routes(g, 32, 20, 6, 12);
  std::mt19937_64 rng(77);
  std::discrete_distribution<int> pick({6, 2, 2, 1, 1});
  EpisodeOptions opts;
  opts.max_steps = 20;
  int mismatches = 0, implication_violations = 0, traces = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& r = routes[static_cast<std::size_t>(trial) % routes.size()];
    // Follow the gold route for a random prefix, then act randomly.
    const int follow = static_cast<int>(rng() % (r.gold_actions.size() + 1));
    auto policy = [&](const Prompt&, int t) {
      if (t < follow) return r.gold_actions[static_cast<std::size_t>(t)];
      return kAllActions[static_cast<std::size_t>(pick(rng))];
    };
    const auto t = run_episode(policy, vocab, g, r, opts);
    const auto rec = per_episode(t, g, r);
    ++traces;

    // Independent recomputation from the raw trace.
    const int final_node = t.visited.back();
    const int spd = bfs(g, final_node)[static_cast<std::size_t>(r.goal)];
    const bool stopped = !t.actions.empty() && t.actions.back() == Action::Stop;
    const bool tc = stopped && final_node == r.goal;
    const bool tc1 = stopped && spd <= 1;
    int key_correct = 0;
    bool on_route = true;
    for (std::size_t i = 0; i < r.gold_actions.size(); ++i) {
      on_route = on_route && i < t.actions.size() && t.actions[i] == r.gold_actions[i];
      if (std::find(r.key_point_indices.begin(), r.key_point_indices.end(), static_cast<int>(i)) !=
          r.key_point_indices.end()) {
        key_correct += on_route;
      }
    }
    const bool first_wrong = !r.key_point_indices.empty() &&
                             !(static_cast<std::size_t>(r.key_point_indices.front()) < t.actions.size() &&
                               std::equal(r.gold_actions.begin(), r.gold_actions.begin() + r.key_point_indices.front() + 1,
                                          t.actions.begin()));
    const bool hazard = g.nodes[static_cast<std::size_t>(final_node)].hazard;
    const bool ok = rec.spd == spd && rec.tc == tc && rec.tc1 == tc1 && rec.pl == static_cast<int>(t.visited.size()) &&
                    rec.key_correct == key_correct && rec.key_total == static_cast<int>(r.key_point_indices.size()) &&
                    (r.key_point_indices.empty() || rec.first_key_wrong == first_wrong) && rec.hazard_stop == hazard;
    mismatches += !ok;
    implication_violations += rec.tc && !rec.tc1;
  }
  verdict(2, mismatches == 0 && implication_violations == 0,
          fmt("%d random traces, %d metric mismatches, %d TC-without-TC-1", traces, mismatches,
              implication_violations));
}

void criterion_3() {
  const std::string a = pct_change(15.6, 28.9, Direction::LowerBetter);
  const std::string b = pct_change(24.5, 3.9, Direction::HigherBetter);
  verdict(3, a == "↑85.26%" && b == "↓84.08%", "15.6->28.9 gives " + a + ", 24.5->3.9 gives " + b);
}

struct Trained {
  ExperimentConfig cfg;
  ExperimentData data;
  ReasonerParams a, b;
};

Trained criterion_4() {
  const ExperimentConfig cfg;
  Trained t{cfg, make_data(cfg), {}, {}};
  const auto t0 = Clock::now();
  t.a = train_stock_model(t.cfg, t.data, t.cfg.model_a);
  const double secs = seconds_since(t0);
  EpisodeOptions opts;
  opts.templates = t.data.templates;
  opts.max_steps = t.cfg.max_steps;
  const auto traces = run_episodes(t.a, t.data.vocab, t.data.eval_world, t.data.eval_routes, opts);
  const auto m = evaluate_traces(traces, t.data.eval_world, t.data.eval_routes);
  verdict(4, m.tc >= 90.0 && secs < 300.0,
          fmt("held-out TC %.2f%% on %d routes (gate 90%%), training %.1fs (limit 300s)", m.tc, m.n_episodes, secs));
  t.b = train_stock_model(t.cfg, t.data, t.cfg.model_b);
  return t;
}

double rel_drop(double before, double after) { return before > 0 ? (before - after) / before : 0.0; }

void criteria_5_to_9(const Trained& t) {
  ExperimentConfig cfg = t.cfg;
  cfg.n_attack_routes = 50;
  cfg.sweep_routes = 30;
  const json r = evaluate_conditions(cfg, t.data, t.a, t.b);
  auto metric = [&](const json& m, const char* k) { return m.at(k).get<double>(); };

  const json& clean = r.at("clean");
  const json& attacked = r.at("attacked");
  const bool monotone = r.at("attack_stats").at("npi").at("trajectories_non_increasing").get<bool>();
  const double drop = rel_drop(metric(clean, "tc"), metric(attacked, "tc"));
  verdict(5, drop >= 0.30 && metric(attacked, "spd") > metric(clean, "spd") && monotone,
          fmt("TC %.2f -> %.2f (relative drop %.1f%%), SPD %.3f -> %.3f, trajectories non-increasing: %s",
              metric(clean, "tc"), metric(attacked, "tc"), 100 * drop, metric(clean, "spd"), metric(attacked, "spd"),
              monotone ? "yes" : "no"));

  const json& tb = r.at("transfer");
  const double tc_b = metric(tb.at("clean"), "tc"), tc_ba = metric(tb.at("attacked"), "tc");
  const double kpa_b = metric(tb.at("clean"), "kpa"), kpa_ba = metric(tb.at("attacked"), "kpa");
  verdict(6, tc_ba < tc_b && kpa_ba < kpa_b,
          fmt("model B: TC %.2f -> %.2f, KPA %.2f -> %.2f", tc_b, tc_ba, kpa_b, kpa_ba));

  const json& nps = r.at("nps");
  const int f_int = nps.at("intersection").at("fkpe").get<int>();
  const int f_lm = nps.at("landmark").at("fkpe").get<int>();
  const bool h_int = r.at("attack_stats").at("nps_intersection").at("hamming_one").get<bool>();
  const bool h_lm = r.at("attack_stats").at("nps_landmark").at("hamming_one").get<bool>();
  verdict(7, f_int >= f_lm && h_int && h_lm,
          fmt("FKPE intersection %d vs landmark %d, Hamming distance 1: %s/%s", f_int, f_lm, h_int ? "yes" : "no",
              h_lm ? "yes" : "no"));

  std::string best = "none";
  std::string detail;
  for (const char* name : {"NPE-CoT", "NPE-PS", "NPE-RP"}) {
    const json& d = r.at("defended").at(name);
    detail += fmt("%s TC %.2f KPA %.2f; ", name, metric(d, "tc"), metric(d, "kpa"));
    if (best == "none" && metric(d, "tc") > metric(attacked, "tc") && metric(d, "kpa") > metric(attacked, "kpa")) {
      best = name;
    }
  }
  const double at_tc = metric(r.at("defended").at("AdvTrain"), "tc");
  verdict(8, best != "none" && at_tc >= metric(attacked, "tc"),
          fmt("attacked TC %.2f KPA %.2f; ", metric(attacked, "tc"), metric(attacked, "kpa")) + detail +
              fmt("AdvTrain TC %.2f; improving NPE: %s", at_tc, best.c_str()));

  // The sweep runs on the first sweep_routes routes; clean must be recomputed on that prefix.
  EpisodeOptions opts;
  opts.templates = t.data.templates;
  opts.max_steps = cfg.max_steps;
  const std::span<const RouteInstance> subset(t.data.eval_routes.data(), static_cast<std::size_t>(cfg.sweep_routes));
  const auto clean_subset =
      evaluate_traces(run_episodes(t.a, t.data.vocab, t.data.eval_world, subset, opts), t.data.eval_world, subset);
  const json& sweep = r.at("sweep");
  const json& first = sweep.front();
  const json& last = sweep.back();
  const bool zero_is_clean = first.at("percentage").get<double>() == 0.0 &&
                             metrics_from_json(first.at("metrics")) == clean_subset;
  const double tc0 = metric(first.at("metrics"), "tc"), tcmax = metric(last.at("metrics"), "tc");
  verdict(9, zero_is_clean && tcmax <= tc0,
          fmt("0%% point equals clean: %s; TC at 0%% %.2f, at %.0f%% %.2f", zero_is_clean ? "yes" : "no", tc0,
              100 * last.at("percentage").get<double>(), tcmax));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_10() {
  const auto root = std::filesystem::temp_directory_path() / "navsec_acceptance";
  std::filesystem::remove_all(root);
  ExperimentConfig cfg = navsec::testing::tiny_config();
  std::vector<std::string> json_runs, csv_runs;
  for (const char* threads : {"1", "2", "1"}) {
    setenv("NAVSEC_THREADS", threads, 1);
    configure_threads();
    cfg.out_dir = (root / (std::string("run") + std::to_string(json_runs.size()))).string();
    run_experiment(cfg);
    json_runs.push_back(slurp(std::filesystem::path(cfg.out_dir) / "report.json"));
    csv_runs.push_back(slurp(std::filesystem::path(cfg.out_dir) / "report.csv"));
  }
  unsetenv("NAVSEC_THREADS");
  bool same = !json_runs.front().empty();
  for (std::size_t i = 1; i < json_runs.size(); ++i) {
    same = same && json_runs[i] == json_runs[0] && csv_runs[i] == csv_runs[0];
  }
  verdict(10, same,
          fmt("3 runs with NAVSEC_THREADS=1,2,1: report.json (%zu bytes) and report.csv identical: %s",
              json_runs.front().size(), same ? "yes" : "no"));
}

}  // namespace

int main() {
  configure_threads();
  criterion_1();
  criterion_2();
  criterion_3();
  const Trained t = criterion_4();
  criteria_5_to_9(t);
  criterion_10();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
