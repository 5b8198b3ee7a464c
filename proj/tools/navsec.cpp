#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "navsec/error.hpp"
#include "navsec/experiment.hpp"
#include "navsec/io.hpp"
#include "navsec/kernels.hpp"
#include "navsec/route_map.hpp"

namespace {

using namespace navsec;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSchema = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd->add_option("--config", c.config, "Experiment config (JSON)");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    json j;
    try {
      j = json::parse(read_text_file(c.config));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, c.config + ": " + e.what());
    }
    if (j.is_object() && j.contains("schema_version")) {
      check_schema(j, "");
      j.erase("schema_version");
    }
    cfg = experiment_config_from_json(j);
  }
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

Templates config_templates(const ExperimentConfig& cfg) {
  return cfg.templates_path.empty() ? default_templates() : load_templates(cfg.templates_path);
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_json(const std::string& path, const json& j) {
  ensure_parent(path);
  write_json_file(path, j);
}

json evaluation_json(const MetricsReport& m, const std::vector<EpisodeTrace>& traces) {
  json arr = json::array();
  for (const auto& t : traces) arr.push_back(trace_to_json(t));
  return {{"schema_version", kSchemaVersion}, {"kind", "evaluation"}, {"metrics", metrics_to_json(m)}, {"traces", arr}};
}

struct Inputs {
  std::string checkpoint;
  std::string world;
  std::string routes;
  std::string attacks;
  std::string defense = "none";
  int limit = -1;
};

void add_inputs(CLI::App* cmd, Inputs& in, bool attacks) {
  cmd->add_option("--checkpoint", in.checkpoint, "Model checkpoint")->required();
  cmd->add_option("--world", in.world, "World JSON")->required();
  cmd->add_option("--routes", in.routes, "Routes JSON")->required();
  cmd->add_option("--limit", in.limit, "Use only the first N routes");
  if (attacks) {
    cmd->add_option("--attacks", in.attacks, "Perturbations JSON (from the attack command)");
    cmd->add_option("--defense", in.defense, "none, NPE-CoT, NPE-PS, NPE-RP or ASP");
  }
}

struct Loaded {
  ReasonerParams params;
  Vocab vocab;
  NavGraph graph;
  std::vector<RouteInstance> routes;
};

Loaded load_inputs(const Inputs& in) {
  auto [params, vocab] = load_checkpoint(in.checkpoint);
  NavGraph graph = world_from_json(read_json_file(in.world, "world"));
  auto routes = routes_from_json(read_json_file(in.routes, "routes"));
  if (in.limit >= 0 && static_cast<std::size_t>(in.limit) < routes.size()) routes.resize(static_cast<std::size_t>(in.limit));
  return {std::move(params), std::move(vocab), std::move(graph), std::move(routes)};
}

EpisodeOptions episode_options(const ExperimentConfig& cfg, const std::string& defense) {
  EpisodeOptions o;
  o.max_steps = cfg.max_steps;
  o.templates = config_templates(cfg);
  const auto tag = parse_defense(defense);
  if (!tag) throw Error(ErrorCode::ConfigError, "unknown defense '" + defense + "'");
  if (*tag != DefenseTag::None) {
    DefenseStrategy s = DefenseStrategy::from(*tag, o.templates);
    if (!s.is_prompt_transform()) {
      throw Error(ErrorCode::ConfigError, defense + " is not a prompt transform; use the defend command to train it");
    }
    o.defense = s;
  }
  return o;
}

std::vector<std::optional<AttackResult>> load_attacks(const std::string& path, const std::vector<RouteInstance>& routes) {
  if (path.empty()) return {};
  return attack_results_from_json(read_json_file(path, "attacks"), routes);
}

int map_error(const Error& e) {
  std::fprintf(stderr, "navsec: %s: %s\n", to_string(e.code()), e.what());
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::KTooLarge:
    case ErrorCode::NPIConfigInvalid:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidDimensions:
      return kExitConfig;
    case ErrorCode::SchemaMismatch:
    case ErrorCode::CorruptFile:
    case ErrorCode::VocabMismatch:
      return kExitSchema;
    default:
      return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"navsec: attacks and defenses on a token-level navigation reasoner"};
  app.require_subcommand(1);

  Common c_world, c_routes, c_train, c_attack, c_defend, c_eval, c_sweep, c_report, c_map, c_dump;

  auto* gen_world = app.add_subcommand("gen-world", "Generate a street world");
  add_common(gen_world, c_world);

  auto* gen_routes = app.add_subcommand("gen-routes", "Sample gold routes on a world");
  add_common(gen_routes, c_routes);
  std::string routes_world;
  int routes_count = -1;
  gen_routes->add_option("--world", routes_world, "World JSON (generated from the config when omitted)");
  gen_routes->add_option("--count", routes_count, "Number of routes (default: n_routes)");

  auto* train_cmd = app.add_subcommand("train", "Train a stock reasoner and write a checkpoint");
  add_common(train_cmd, c_train);
  std::string train_model = "a", train_mode;
  int train_epochs = -1;
  train_cmd->add_option("--model", train_model, "Stock variant: a or b")->check(CLI::IsMember({"a", "b"}));
  train_cmd->add_option("--mode", train_mode, "teacher or mixed");
  train_cmd->add_option("--epochs", train_epochs, "Override the epoch count");

  auto* attack_cmd = app.add_subcommand("attack", "Craft one perturbation per route on its first prompt");
  add_common(attack_cmd, c_attack);
  Inputs attack_in;
  add_inputs(attack_cmd, attack_in, false);
  std::string attack_mode, attack_filter;
  attack_cmd->add_option("--mode", attack_mode, "npi or nps");
  attack_cmd->add_option("--filter", attack_filter, "NPS category filter: none, intersection or landmark");

  auto* defend_cmd = app.add_subcommand("defend", "Evaluate a prompt defense, or adversarially train a model");
  add_common(defend_cmd, c_defend);
  Inputs defend_in;
  add_inputs(defend_cmd, defend_in, true);

  auto* eval_cmd = app.add_subcommand("evaluate", "Run episodes and compute the navigation metrics");
  add_common(eval_cmd, c_eval);
  Inputs eval_in;
  add_inputs(eval_cmd, eval_in, true);

  auto* sweep_cmd = app.add_subcommand("sweep-length", "Metrics as a function of suffix length");
  add_common(sweep_cmd, c_sweep);
  Inputs sweep_in;
  add_inputs(sweep_cmd, sweep_in, false);

  auto* report_cmd = app.add_subcommand("report", "Run the whole pipeline and write report.json and report.csv");
  add_common(report_cmd, c_report);

  auto* map_cmd = app.add_subcommand("route-map", "Draw a route with episode traces (SVG or DOT)");
  add_common(map_cmd, c_map);
  std::string map_world, map_routes, map_route_id, map_format = "svg";
  std::vector<std::string> map_evals;
  map_cmd->add_option("--world", map_world, "World JSON")->required();
  map_cmd->add_option("--routes", map_routes, "Routes JSON")->required();
  map_cmd->add_option("--route-id", map_route_id, "Route to draw")->required();
  map_cmd->add_option("--evaluation", map_evals, "Evaluation JSON files whose traces to overlay");
  map_cmd->add_option("--format", map_format, "svg or dot")->check(CLI::IsMember({"svg", "dot"}));

  auto* dump_cmd = app.add_subcommand("dump-templates", "Write the active text templates");
  add_common(dump_cmd, c_dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    configure_threads();

    if (*gen_world) {
      const auto cfg = load_config(c_world);
      write_json(c_world.out, world_to_json(generate_world(cfg.seed, cfg.world)));
    } else if (*gen_routes) {
      const auto cfg = load_config(c_routes);
      const NavGraph graph = routes_world.empty() ? generate_world(cfg.seed, cfg.world)
                                                  : world_from_json(read_json_file(routes_world, "world"));
      auto routes = sample_routes(graph, cfg.seed, routes_count >= 0 ? routes_count : cfg.n_routes, cfg.min_len,
                                  cfg.max_len);
      const Templates templates = config_templates(cfg);
      for (auto& r : routes) r.instruction = generate_instruction(graph, r, templates);
      write_json(c_routes.out, routes_to_json(routes));
    } else if (*train_cmd) {
      auto cfg = load_config(c_train);
      if (!train_mode.empty()) {
        const auto m = parse_training_mode(train_mode);
        if (!m) throw Error(ErrorCode::ConfigError, "unknown training mode '" + train_mode + "'");
        cfg.train.mode = *m;
      }
      if (train_epochs >= 0) cfg.train.epochs = train_epochs;
      const auto data = make_data(cfg);
      std::vector<double> losses;
      const auto params = train_stock_model(cfg, data, train_model == "a" ? cfg.model_a : cfg.model_b, &losses);
      for (std::size_t e = 0; e < losses.size(); ++e) std::printf("epoch %zu loss %.6f\n", e + 1, losses[e]);
      ensure_parent(c_train.out);
      save_checkpoint(c_train.out, params, data.vocab);
    } else if (*attack_cmd) {
      const auto cfg = load_config(c_attack);
      const auto in = load_inputs(attack_in);
      AttackConfig ac = cfg.attack;
      if (c_attack.seed) ac.seed = *c_attack.seed;
      if (!attack_mode.empty()) {
        const auto m = parse_attack_mode(attack_mode);
        if (!m) throw Error(ErrorCode::ConfigError, "unknown attack mode '" + attack_mode + "'");
        ac.mode = *m;
      }
      if (!attack_filter.empty()) {
        const auto f = parse_category_filter(attack_filter);
        if (!f) throw Error(ErrorCode::ConfigError, "unknown category filter '" + attack_filter + "'");
        ac.category_filter = *f;
      }
      const auto results = craft_perturbations(in.params, in.vocab, in.graph, in.routes, ac, config_templates(cfg));
      write_json(c_attack.out, attack_results_to_json(results, in.routes, in.vocab));
    } else if (*defend_cmd) {
      const auto cfg = load_config(c_defend);
      const auto tag = parse_defense(defend_in.defense);
      if (tag == DefenseTag::AdvTrain) {
        const auto [victim, vocab] = load_checkpoint(defend_in.checkpoint);
        const auto data = make_data(cfg);
        if (!(vocab == data.vocab)) throw Error(ErrorCode::VocabMismatch, "checkpoint vocabulary differs from config");
        const auto hardened =
            adversarial_training(victim, victim, stock_training_set(cfg, data), cfg.adv_attack, cfg.adv_train);
        ensure_parent(c_defend.out);
        save_checkpoint(c_defend.out, hardened, vocab);
      } else {
        const auto in = load_inputs(defend_in);
        const auto perts = load_attacks(defend_in.attacks, in.routes);
        const auto traces =
            run_episodes(in.params, in.vocab, in.graph, in.routes, episode_options(cfg, defend_in.defense), perts);
        write_json(c_defend.out, evaluation_json(evaluate_traces(traces, in.graph, in.routes), traces));
      }
    } else if (*eval_cmd) {
      const auto cfg = load_config(c_eval);
      const auto in = load_inputs(eval_in);
      const auto perts = load_attacks(eval_in.attacks, in.routes);
      const auto traces =
          run_episodes(in.params, in.vocab, in.graph, in.routes, episode_options(cfg, eval_in.defense), perts);
      const auto m = evaluate_traces(traces, in.graph, in.routes);
      std::printf("episodes %d  SPD %.3f  KPA %.2f  TC %.2f  TC-1 %.2f  FKPE %d  DI %d  PL %.3f\n", m.n_episodes, m.spd,
                  m.kpa, m.tc, m.tc1, m.fkpe, m.di, m.pl);
      write_json(c_eval.out, evaluation_json(m, traces));
    } else if (*sweep_cmd) {
      const auto cfg = load_config(c_sweep);
      const auto in = load_inputs(sweep_in);
      AttackConfig ac = cfg.attack;
      if (c_sweep.seed) ac.seed = *c_sweep.seed;
      const auto points =
          length_sweep(in.params, in.vocab, in.graph, in.routes, ac, cfg.sweep, episode_options(cfg, "none"));
      json arr = json::array();
      for (const auto& p : points) arr.push_back({{"percentage", p.percentage}, {"metrics", metrics_to_json(p.metrics)}});
      write_json(c_sweep.out, {{"schema_version", kSchemaVersion}, {"kind", "sweep"}, {"points", arr}});
    } else if (*report_cmd) {
      auto cfg = load_config(c_report);
      cfg.out_dir = c_report.out;
      const json report = run_experiment(cfg);
      std::cout << report_csv(report);
    } else if (*map_cmd) {
      load_config(c_map);
      const NavGraph graph = world_from_json(read_json_file(map_world, "world"));
      const auto routes = routes_from_json(read_json_file(map_routes, "routes"));
      const RouteInstance* route = nullptr;
      for (const auto& r : routes) {
        if (r.id == map_route_id) route = &r;
      }
      if (!route) throw Error(ErrorCode::ConfigError, "no route '" + map_route_id + "' in " + map_routes);
      std::vector<LabeledTrace> traces;
      for (const auto& path : map_evals) {
        const json ev = read_json_file(path, "evaluation");
        for (const auto& t : ev.at("traces")) {
          const EpisodeTrace trace = trace_from_json(t);
          if (trace.route_id != route->id) continue;
          std::string label = std::filesystem::path(path).stem().string();
          if (trace.attack != "none") label += " " + trace.attack;
          if (trace.defense != "none") label += " " + trace.defense;
          traces.push_back({label, trace.visited});
        }
      }
      ensure_parent(c_map.out);
      write_text_file(c_map.out, map_format == "dot" ? route_map_dot(graph, *route, traces)
                                                     : route_map_svg(graph, *route, traces));
    } else if (*dump_cmd) {
      const auto cfg = load_config(c_dump);
      ensure_parent(c_dump.out);
      write_text_file(c_dump.out, dump_templates(config_templates(cfg)));
    }
  } catch (const Error& e) {
    return map_error(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "navsec: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
