#include "navsec/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "navsec/error.hpp"
#include "navsec/kernels.hpp"

namespace navsec {
namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Error config_error(const std::string& what) { return Error(ErrorCode::ConfigError, what); }

template <typename Fn>
void for_each_key(const json& j, const char* section, Fn&& fn) {
  if (!j.is_object()) throw config_error(std::string(section) + " must be an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (!fn(key, v)) throw config_error(std::string("unknown ") + section + " setting '" + key + "'");
    } catch (const json::exception& e) {
      throw config_error(std::string("invalid ") + section + " setting '" + key + "': " + e.what());
    }
  }
}

json world_options_to_json(const WorldOptions& w) {
  return {{"rows", w.rows},
          {"cols", w.cols},
          {"spacing", w.spacing},
          {"landmark_density", w.landmark_density},
          {"hazard_density", w.hazard_density},
          {"jitter", w.jitter},
          {"street_nodes", w.street_nodes}};
}

WorldOptions world_options_from_json(const json& j, WorldOptions w) {
  for_each_key(j, "world", [&](const std::string& k, const json& v) {
    if (k == "rows") w.rows = v.get<int>();
    else if (k == "cols") w.cols = v.get<int>();
    else if (k == "spacing") w.spacing = v.get<double>();
    else if (k == "landmark_density") w.landmark_density = v.get<double>();
    else if (k == "hazard_density") w.hazard_density = v.get<double>();
    else if (k == "jitter") w.jitter = v.get<double>();
    else if (k == "street_nodes") w.street_nodes = v.get<bool>();
    else return false;
    return true;
  });
  return w;
}

json model_to_json(const ReasonerConfig& m) {
  return {{"arch", std::string(arch_name(m.arch))},
          {"dim", m.dim},
          {"hidden", m.hidden},
          {"taps", m.taps},
          {"seed", m.seed}};
}

ReasonerConfig model_from_json(const json& j, ReasonerConfig m) {
  for_each_key(j, "model", [&](const std::string& k, const json& v) {
    if (k == "arch") {
      const auto a = parse_arch(v.get<std::string>());
      if (!a) throw config_error("unknown arch " + v.dump());
      m.arch = *a;
    } else if (k == "dim") {
      m.dim = v.get<int>();
    } else if (k == "hidden") {
      m.hidden = v.get<int>();
    } else if (k == "taps") {
      m.taps = v.get<int>();
    } else if (k == "seed") {
      m.seed = v.get<std::uint64_t>();
    } else {
      return false;
    }
    return true;
  });
  if (m.dim < 1 || m.hidden < 1 || m.taps < 1) throw config_error("model sizes must be positive");
  return m;
}

json train_to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"lr", t.lr},
          {"momentum", t.momentum},
          {"batch", t.batch},
          {"clip_norm", t.clip_norm},
          {"student_fraction", t.student_fraction},
          {"mode", std::string(training_mode_name(t.mode))},
          {"seed", t.seed}};
}

TrainConfig train_from_json(const json& j, TrainConfig t) {
  for_each_key(j, "train", [&](const std::string& k, const json& v) {
    if (k == "epochs") t.epochs = v.get<int>();
    else if (k == "lr") t.lr = v.get<double>();
    else if (k == "momentum") t.momentum = v.get<double>();
    else if (k == "batch") t.batch = v.get<int>();
    else if (k == "clip_norm") t.clip_norm = v.get<double>();
    else if (k == "student_fraction") t.student_fraction = v.get<double>();
    else if (k == "seed") t.seed = v.get<std::uint64_t>();
    else if (k == "mode") {
      const auto m = parse_training_mode(v.get<std::string>());
      if (!m) throw config_error("unknown training mode " + v.dump());
      t.mode = *m;
    } else {
      return false;
    }
    return true;
  });
  if (t.epochs < 0 || t.batch < 1) throw config_error("train.epochs must be >= 0 and train.batch >= 1");
  return t;
}

struct MetricSpec {
  const char* name;
  double MetricsReport::*real;
  int MetricsReport::*count;
  Direction direction;
};

const std::vector<MetricSpec>& metric_specs() {
  static const std::vector<MetricSpec> specs = {
      {"spd", &MetricsReport::spd, nullptr, Direction::LowerBetter},
      {"kpa", &MetricsReport::kpa, nullptr, Direction::HigherBetter},
      {"tc", &MetricsReport::tc, nullptr, Direction::HigherBetter},
      {"tc1", &MetricsReport::tc1, nullptr, Direction::HigherBetter},
      {"fkpe", nullptr, &MetricsReport::fkpe, Direction::LowerBetter},
      {"di", nullptr, &MetricsReport::di, Direction::LowerBetter},
      {"pl", &MetricsReport::pl, nullptr, Direction::LowerBetter},
  };
  return specs;
}

double metric_value(const MetricsReport& m, const MetricSpec& s) {
  return s.real ? m.*(s.real) : static_cast<double>(m.*(s.count));
}

json attack_stats(std::span<const std::optional<AttackResult>> results) {
  double init = 0, fin = 0, fq = 0, gq = 0;
  int n = 0;
  bool monotone = true;
  for (const auto& r : results) {
    if (!r) continue;
    ++n;
    init += r->initial_objective;
    fin += r->objective;
    fq += static_cast<double>(r->forward_queries);
    gq += static_cast<double>(r->gradient_queries);
    for (std::size_t i = 1; i < r->trajectory.size(); ++i) {
      if (r->trajectory[i] > r->trajectory[i - 1]) monotone = false;
    }
  }
  const double d = n > 0 ? n : 1;
  return {{"n", n},
          {"mean_initial_objective", init / d},
          {"mean_objective", fin / d},
          {"mean_forward_queries", fq / d},
          {"mean_gradient_queries", gq / d},
          {"trajectories_non_increasing", monotone}};
}

void write_traces(const std::string& dir, const std::string& name, const std::vector<EpisodeTrace>& traces) {
  if (dir.empty()) return;
  json arr = json::array();
  for (const auto& t : traces) arr.push_back(trace_to_json(t));
  write_json_file((std::filesystem::path(dir) / ("traces_" + name + ".json")).string(),
                  {{"schema_version", kSchemaVersion}, {"kind", "traces"}, {"condition", name}, {"traces", arr}});
}

std::string condition_file_name(std::string name) {
  for (char& c : name) {
    if (c == '-' || c == ' ') c = '_';
  }
  return name;
}

}  // namespace

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json defenses = json::array();
  for (auto d : cfg.defenses) defenses.push_back(std::string(defense_name(d)));
  return {{"seed", cfg.seed},
          {"world", world_options_to_json(cfg.world)},
          {"n_routes", cfg.n_routes},
          {"n_attack_routes", cfg.n_attack_routes},
          {"min_len", cfg.min_len},
          {"max_len", cfg.max_len},
          {"train_worlds", cfg.train_worlds},
          {"train_routes_per_world", cfg.train_routes_per_world},
          {"wrap_fraction", cfg.wrap_fraction},
          {"model_a", model_to_json(cfg.model_a)},
          {"model_b", model_to_json(cfg.model_b)},
          {"train", train_to_json(cfg.train)},
          {"attack", attack_config_to_json(cfg.attack)},
          {"adv_attack", attack_config_to_json(cfg.adv_attack)},
          {"adv_train", train_to_json(cfg.adv_train)},
          {"defenses", defenses},
          {"run_nps", cfg.run_nps},
          {"sweep", cfg.sweep},
          {"sweep_routes", cfg.sweep_routes},
          {"max_steps", cfg.max_steps},
          {"templates_path", cfg.templates_path}};
}

ExperimentConfig experiment_config_from_json(const json& j, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  for_each_key(j, "experiment", [&](const std::string& k, const json& v) {
    if (k == "seed") cfg.seed = v.get<std::uint64_t>();
    else if (k == "world") cfg.world = world_options_from_json(v, cfg.world);
    else if (k == "n_routes") cfg.n_routes = v.get<int>();
    else if (k == "n_attack_routes") cfg.n_attack_routes = v.get<int>();
    else if (k == "min_len") cfg.min_len = v.get<int>();
    else if (k == "max_len") cfg.max_len = v.get<int>();
    else if (k == "train_worlds") cfg.train_worlds = v.get<int>();
    else if (k == "train_routes_per_world") cfg.train_routes_per_world = v.get<int>();
    else if (k == "wrap_fraction") cfg.wrap_fraction = v.get<double>();
    else if (k == "model_a") cfg.model_a = model_from_json(v, cfg.model_a);
    else if (k == "model_b") cfg.model_b = model_from_json(v, cfg.model_b);
    else if (k == "train") cfg.train = train_from_json(v, cfg.train);
    else if (k == "attack") cfg.attack = attack_config_from_json(v, cfg.attack);
    else if (k == "adv_attack") cfg.adv_attack = attack_config_from_json(v, cfg.adv_attack);
    else if (k == "adv_train") cfg.adv_train = train_from_json(v, cfg.adv_train);
    else if (k == "run_nps") cfg.run_nps = v.get<bool>();
    else if (k == "sweep") cfg.sweep = v.get<std::vector<double>>();
    else if (k == "sweep_routes") cfg.sweep_routes = v.get<int>();
    else if (k == "max_steps") cfg.max_steps = v.get<int>();
    else if (k == "templates_path") cfg.templates_path = v.get<std::string>();
    else if (k == "defenses") {
      cfg.defenses.clear();
      for (const auto& d : v) {
        const auto tag = parse_defense(d.get<std::string>());
        if (!tag || *tag == DefenseTag::None) throw config_error("unknown defense " + d.dump());
        cfg.defenses.push_back(*tag);
      }
    } else {
      return false;
    }
    return true;
  });
  if (cfg.n_routes < 1 || cfg.n_attack_routes < 0 || cfg.n_attack_routes > cfg.n_routes) {
    throw config_error("need 1 <= n_routes and 0 <= n_attack_routes <= n_routes");
  }
  if (cfg.min_len < 2 || cfg.max_len < cfg.min_len) throw config_error("need 2 <= min_len <= max_len");
  if (cfg.train_worlds < 1 || cfg.train_routes_per_world < 1) throw config_error("training worlds must be non-empty");
  if (cfg.wrap_fraction < 0 || cfg.wrap_fraction > 1) throw config_error("wrap_fraction must lie in [0, 1]");
  if (cfg.max_steps < 1) throw config_error("max_steps must be at least 1");
  if (cfg.sweep_routes < 0) throw config_error("sweep_routes must be non-negative");
  for (double p : cfg.sweep) {
    if (!(p >= 0.0) || p > 10.0) throw config_error("sweep percentages must lie in [0, 10]");
  }
  return cfg;
}

std::string config_digest(const ExperimentConfig& cfg) {
  const std::string text = experiment_config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentData make_data(const ExperimentConfig& cfg) {
  Templates templates = cfg.templates_path.empty() ? default_templates() : load_templates(cfg.templates_path);
  Vocab vocab = Vocab::standard(templates);
  auto with_templates = [&](const NavGraph& g, std::vector<RouteInstance> routes) {
    for (auto& r : routes) r.instruction = generate_instruction(g, r, templates);
    return routes;
  };
  NavGraph eval_world = generate_world(cfg.seed, cfg.world);
  auto eval_routes =
      with_templates(eval_world, sample_routes(eval_world, mix(cfg.seed, 1), cfg.n_routes, cfg.min_len, cfg.max_len));
  std::vector<TrainingWorld> train_worlds;
  for (int i = 0; i < cfg.train_worlds; ++i) {
    NavGraph g = generate_world(mix(cfg.seed, 100 + static_cast<std::uint64_t>(i)), cfg.world);
    auto routes = with_templates(g, sample_routes(g, mix(cfg.seed, 200 + static_cast<std::uint64_t>(i)),
                                                  cfg.train_routes_per_world, cfg.min_len, cfg.max_len));
    train_worlds.push_back({std::move(g), std::move(routes)});
  }
  return {std::move(templates), std::move(vocab), std::move(eval_world), std::move(eval_routes),
          std::move(train_worlds)};
}

TrainingSet stock_training_set(const ExperimentConfig& cfg, const ExperimentData& data) {
  return make_training_set(data.vocab, data.templates, data.train_worlds, cfg.wrap_fraction, mix(cfg.seed, 300));
}

ReasonerParams train_stock_model(const ExperimentConfig& cfg, const ExperimentData& data, const ReasonerConfig& model,
                                 std::vector<double>* epoch_losses) {
  const ReasonerParams init = init_params(model, data.vocab.size(), data.vocab.step_marker());
  TrainConfig tc = cfg.train;
  tc.seed = mix(cfg.train.seed, model.seed);
  return train(init, stock_training_set(cfg, data), tc, epoch_losses);
}

std::vector<SweepPoint> length_sweep(const ReasonerParams& params, const Vocab& vocab, const NavGraph& graph,
                                     std::span<const RouteInstance> routes, const AttackConfig& cfg,
                                     std::span<const double> percentages, const EpisodeOptions& options) {
  std::vector<SweepPoint> out;
  for (double p : percentages) {
    if (p < 0.0) throw config_error("sweep percentage must be non-negative");
    std::vector<std::optional<AttackResult>> perts(routes.size());
    std::exception_ptr failure;
    const auto n = static_cast<long>(routes.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      try {
        const auto idx = static_cast<std::size_t>(i);
        const auto& route = routes[idx];
        const auto len = static_cast<int>(std::llround(p * static_cast<double>(vocab.tokenize(route.instruction).size())));
        if (len == 0) continue;
        AttackConfig c = cfg;
        c.mode = AttackMode::NPI;
        c.suffix_len = len;
        c.seed = mix(cfg.seed, idx);
        if (c.filler < 0) c.filler = vocab.filler();
        perts[idx] = run_attack(params, initial_prompt(vocab, graph, route, options.templates),
                                route.gold_actions.front(), c);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    const auto traces = run_episodes(params, vocab, graph, routes, options, perts);
    out.push_back({p, evaluate_traces(traces, graph, routes)});
  }
  return out;
}

json metric_deltas(const MetricsReport& before, const MetricsReport& after) {
  json out = json::object();
  for (const auto& s : metric_specs()) {
    try {
      out[s.name] = pct_change(metric_value(before, s), metric_value(after, s), s.direction);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DivisionByZero) throw;
      out[s.name] = "n/a";
    }
  }
  return out;
}

json evaluate_conditions(const ExperimentConfig& cfg, const ExperimentData& data, const ReasonerParams& model_a,
                         const ReasonerParams& model_b, const std::string& trace_dir) {
  const Vocab& vocab = data.vocab;
  const NavGraph& graph = data.eval_world;
  const std::span<const RouteInstance> all(data.eval_routes);
  const auto attack_routes = all.first(static_cast<std::size_t>(cfg.n_attack_routes));
  EpisodeOptions options;
  options.max_steps = cfg.max_steps;
  options.templates = data.templates;

  json report = {{"schema_version", kSchemaVersion},
                 {"kind", "report"},
                 {"config_digest", config_digest(cfg)},
                 {"config", experiment_config_to_json(cfg)},
                 {"world", graph.id},
                 {"vocab_digest", vocab.digest()}};
  json stats = json::object();
  json deltas = json::object();
  auto run = [&](const std::string& name, const ReasonerParams& params, std::span<const RouteInstance> routes,
                 const EpisodeOptions& opts, std::span<const std::optional<AttackResult>> perts) {
    const auto traces = run_episodes(params, vocab, graph, routes, opts, perts);
    write_traces(trace_dir, condition_file_name(name), traces);
    return evaluate_traces(traces, graph, routes);
  };

  report["clean_all"] = metrics_to_json(run("clean_all", model_a, all, options, {}));
  const MetricsReport clean = run("clean", model_a, attack_routes, options, {});
  report["clean"] = metrics_to_json(clean);

  const auto perts = craft_perturbations(model_a, vocab, graph, attack_routes, cfg.attack, data.templates);
  stats["npi"] = attack_stats(perts);
  const MetricsReport attacked = run("attacked", model_a, attack_routes, options, perts);
  report["attacked"] = metrics_to_json(attacked);
  deltas["attacked"] = metric_deltas(clean, attacked);

  const MetricsReport clean_b = run("transfer_clean", model_b, attack_routes, options, {});
  const MetricsReport attacked_b = run("transfer_attacked", model_b, attack_routes, options, perts);
  report["transfer"] = {{"clean", metrics_to_json(clean_b)}, {"attacked", metrics_to_json(attacked_b)}};
  deltas["transfer"] = metric_deltas(clean_b, attacked_b);

  json defended = json::object();
  json defended_deltas = json::object();
  for (DefenseTag tag : cfg.defenses) {
    const std::string name(defense_name(tag));
    if (tag == DefenseTag::AdvTrain) {
      const TrainingSet set = stock_training_set(cfg, data);
      const ReasonerParams hardened = adversarial_training(model_a, model_a, set, cfg.adv_attack, cfg.adv_train);
      const MetricsReport hardened_clean = run("AdvTrain_clean", hardened, attack_routes, options, {});
      const MetricsReport hardened_transfer = run("AdvTrain_transfer", hardened, attack_routes, options, perts);
      report["adv_train"] = {{"clean", metrics_to_json(hardened_clean)},
                             {"stale_perturbations", metrics_to_json(hardened_transfer)}};
      const auto fresh = craft_perturbations(hardened, vocab, graph, attack_routes, cfg.attack, data.templates);
      stats["AdvTrain"] = attack_stats(fresh);
      const MetricsReport m = run(name, hardened, attack_routes, options, fresh);
      defended[name] = metrics_to_json(m);
      defended_deltas[name] = metric_deltas(attacked, m);
    } else {
      EpisodeOptions opts = options;
      opts.defense = DefenseStrategy::from(tag, data.templates);
      const MetricsReport m = run(name, model_a, attack_routes, opts, perts);
      defended[name] = metrics_to_json(m);
      defended_deltas[name] = metric_deltas(attacked, m);
    }
  }
  report["defended"] = defended;
  deltas["defended"] = defended_deltas;

  if (cfg.run_nps) {
    json nps = json::object();
    json nps_deltas = json::object();
    for (CategoryFilter filter : {CategoryFilter::Intersection, CategoryFilter::Landmark}) {
      AttackConfig c = cfg.attack;
      c.mode = AttackMode::NPS;
      c.category_filter = filter;
      const std::string name(category_filter_name(filter));
      const auto swaps = craft_perturbations(model_a, vocab, graph, attack_routes, c, data.templates);
      json s = attack_stats(swaps);
      bool hamming_one = true;
      for (std::size_t i = 0; i < swaps.size(); ++i) {
        if (!swaps[i]) continue;
        const Prompt base = initial_prompt(vocab, graph, attack_routes[i], data.templates);
        const auto& t = swaps[i]->prompt.tokens;
        int diff = t.size() == base.tokens.size() ? 0 : -1;
        for (std::size_t p = 0; diff >= 0 && p < t.size(); ++p) diff += t[p] != base.tokens[p];
        hamming_one = hamming_one && diff == 1;
      }
      s["hamming_one"] = hamming_one;
      stats["nps_" + name] = s;
      const MetricsReport m = run("nps_" + name, model_a, attack_routes, options, swaps);
      nps[name] = metrics_to_json(m);
      nps_deltas[name] = metric_deltas(clean, m);
    }
    report["nps"] = nps;
    deltas["nps"] = nps_deltas;
  }

  json sweep = json::array();
  if (!cfg.sweep.empty()) {
    const auto routes = all.first(std::min(all.size(), static_cast<std::size_t>(cfg.sweep_routes)));
    for (const auto& point : length_sweep(model_a, vocab, graph, routes, cfg.attack, cfg.sweep, options)) {
      sweep.push_back({{"percentage", point.percentage}, {"metrics", metrics_to_json(point.metrics)}});
    }
  }
  report["sweep"] = sweep;
  report["attack_stats"] = stats;
  report["deltas"] = deltas;
  return report;
}

json run_experiment(const ExperimentConfig& cfg) {
  const ExperimentData data = make_data(cfg);
  const ReasonerParams a = train_stock_model(cfg, data, cfg.model_a);
  const ReasonerParams b = train_stock_model(cfg, data, cfg.model_b);
  std::string trace_dir;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(std::filesystem::path(cfg.out_dir) / "traces");
    trace_dir = (std::filesystem::path(cfg.out_dir) / "traces").string();
    save_checkpoint((std::filesystem::path(cfg.out_dir) / "model_a.ckpt").string(), a, data.vocab);
    save_checkpoint((std::filesystem::path(cfg.out_dir) / "model_b.ckpt").string(), b, data.vocab);
  }
  json report = evaluate_conditions(cfg, data, a, b, trace_dir);
  if (!cfg.out_dir.empty()) {
    write_json_file((std::filesystem::path(cfg.out_dir) / "report.json").string(), report);
    write_text_file((std::filesystem::path(cfg.out_dir) / "report.csv").string(), report_csv(report));
  }
  return report;
}

std::string report_csv(const json& report) {
  std::ostringstream out;
  out << "condition,metric,value\n";
  auto number = [](const json& v) {
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v.get<double>());
    return std::string(buf);
  };
  auto is_metrics = [](const json& v) { return v.is_object() && v.contains("n_episodes"); };
  auto rows = [&](const std::string& cond, const json& metrics) {
    for (const auto& [metric, value] : metrics.items()) out << cond << "," << metric << "," << number(value) << "\n";
  };
  for (const auto& [key, value] : report.items()) {
    if (key == "config" || key == "attack_stats" || key == "deltas" || key == "sweep") continue;
    if (is_metrics(value)) {
      rows(key, value);
    } else if (value.is_object()) {
      for (const auto& [sub, metrics] : value.items()) {
        if (is_metrics(metrics)) rows(key + "/" + sub, metrics);
      }
    }
  }
  for (const auto& point : report.at("sweep")) {
    char cond[32];
    std::snprintf(cond, sizeof cond, "sweep/%.2f", point.at("percentage").get<double>());
    rows(cond, point.at("metrics"));
  }
  return out.str();
}

}  // namespace navsec
