#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "navsec/attack.hpp"
#include "navsec/defense.hpp"
#include "navsec/episode.hpp"
#include "navsec/io.hpp"
#include "navsec/metrics.hpp"
#include "navsec/reasoner.hpp"
#include "navsec/training.hpp"
#include "navsec/world.hpp"

namespace navsec {

struct ExperimentConfig {
  std::uint64_t seed = 7;
  WorldOptions world{12, 12, 10.0, 0.5, 0.1, 0.1, true};
  int n_routes = 200;
  int n_attack_routes = 100;
  int min_len = 8;
  int max_len = 14;
  int train_worlds = 4;
  int train_routes_per_world = 60;
  double wrap_fraction = 0.3;
  ReasonerConfig model_a{Arch::Attention, 32, 64, 4, 11};
  ReasonerConfig model_b{Arch::Attention, 48, 64, 4, 23};
  TrainConfig train{};
  AttackConfig attack{};
  /// Attack used to build the adversarial-training set (crafted per training episode).
  AttackConfig adv_attack{AttackMode::NPI, 16, 20, 64, 32};
  TrainConfig adv_train{10, 0.05, 0.9, 32, 5.0, 0.5, TrainingMode::Mixed, 5};
  std::vector<DefenseTag> defenses{DefenseTag::CoT, DefenseTag::PS, DefenseTag::RP, DefenseTag::ASP,
                                   DefenseTag::AdvTrain};
  bool run_nps = true;
  std::vector<double> sweep{0.0, 0.1, 0.2, 0.3, 0.4};
  int sweep_routes = 50;
  int max_steps = kDefaultMaxSteps;
  std::string templates_path;
  std::string out_dir;
};

json experiment_config_to_json(const ExperimentConfig& cfg);
/// Overlays the keys present in `j` on `base`; unknown keys raise ConfigError.
ExperimentConfig experiment_config_from_json(const json& j, const ExperimentConfig& base = {});
std::string config_digest(const ExperimentConfig& cfg);

struct ExperimentData {
  Templates templates;
  Vocab vocab;
  NavGraph eval_world;
  std::vector<RouteInstance> eval_routes;
  std::vector<TrainingWorld> train_worlds;
};

ExperimentData make_data(const ExperimentConfig& cfg);
TrainingSet stock_training_set(const ExperimentConfig& cfg, const ExperimentData& data);
ReasonerParams train_stock_model(const ExperimentConfig& cfg, const ExperimentData& data, const ReasonerConfig& model,
                                 std::vector<double>* epoch_losses = nullptr);

struct SweepPoint {
  double percentage = 0.0;
  MetricsReport metrics;
};

/// For each percentage p, every route gets a suffix of round(p * instruction
/// tokens) crafted on its step-0 prompt (no suffix when that length is 0).
std::vector<SweepPoint> length_sweep(const ReasonerParams& params, const Vocab& vocab, const NavGraph& graph,
                                     std::span<const RouteInstance> routes, const AttackConfig& cfg,
                                     std::span<const double> percentages, const EpisodeOptions& options);

/// Full pipeline: data, stock models A and B, clean / white-box / transfer /
/// defended / NPS / sweep conditions. Writes report.json, report.csv and
/// per-condition traces to cfg.out_dir when it is set. Returns the report.
json run_experiment(const ExperimentConfig& cfg);

/// Runs every condition given trained models (skips training).
json evaluate_conditions(const ExperimentConfig& cfg, const ExperimentData& data, const ReasonerParams& model_a,
                         const ReasonerParams& model_b, const std::string& trace_dir = {});

/// Metric deltas of `after` relative to `before`, formatted per metric.
json metric_deltas(const MetricsReport& before, const MetricsReport& after);
std::string report_csv(const json& report);

}  // namespace navsec
