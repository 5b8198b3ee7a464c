#include <gtest/gtest.h>

#include <sstream>

#include "navsec/error.hpp"
#include "navsec/experiment.hpp"
#include "test_support.hpp"

using namespace navsec;

namespace {

ErrorCode config_error_of(const json& j) {
  try {
    experiment_config_from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ExperimentConfig, JsonRoundTrip) {
  auto cfg = navsec::testing::tiny_config();
  cfg.sweep = {0.0, 0.25};
  cfg.defenses = {DefenseTag::RP};
  const json j = experiment_config_to_json(cfg);
  const auto back = experiment_config_from_json(j);
  EXPECT_EQ(experiment_config_to_json(back), j);
  EXPECT_EQ(config_digest(back), config_digest(cfg));
}

TEST(ExperimentConfig, PartialOverlayKeepsDefaults) {
  const auto cfg = experiment_config_from_json(json{{"seed", 99}, {"train", {{"epochs", 3}}}});
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.train.epochs, 3);
  EXPECT_EQ(cfg.train.lr, ExperimentConfig{}.train.lr);
  EXPECT_EQ(cfg.n_routes, ExperimentConfig{}.n_routes);
}

TEST(ExperimentConfig, RejectsUnknownKeysAndBadTypes) {
  EXPECT_EQ(config_error_of(json{{"sed", 1}}), ErrorCode::ConfigError);
  EXPECT_EQ(config_error_of(json{{"train", {{"epoch", 1}}}}), ErrorCode::ConfigError);
  EXPECT_EQ(config_error_of(json{{"n_routes", "many"}}), ErrorCode::ConfigError);
  EXPECT_EQ(config_error_of(json{{"defenses", {"XYZ"}}}), ErrorCode::ConfigError);
}

TEST(ExperimentConfig, DigestTracksContent) {
  auto a = navsec::testing::tiny_config();
  auto b = a;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.seed += 1;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 16u);
}

TEST(MetricDeltas, FormatsEachMetricAndHandlesZeroBaselines) {
  MetricsReport before{}, after{};
  before.n_episodes = after.n_episodes = 10;
  before.spd = 15.6;
  after.spd = 28.9;
  before.tc = 24.5;
  after.tc = 3.9;
  before.kpa = 0.0;
  after.kpa = 5.0;
  const json d = metric_deltas(before, after);
  EXPECT_EQ(d.at("spd"), "↑85.26%");
  EXPECT_EQ(d.at("tc"), "↓84.08%");
  EXPECT_EQ(d.at("kpa"), "n/a");
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { report_ = new json(run_experiment(navsec::testing::tiny_config())); }
  static void TearDownTestSuite() {
    delete report_;
    report_ = nullptr;
  }
  static json* report_;
};
json* PipelineTest::report_ = nullptr;

TEST_F(PipelineTest, ReportHasEveryCondition) {
  const json& r = *report_;
  for (const char* key : {"schema_version", "config_digest", "clean", "attacked", "transfer", "defended", "nps",
                          "sweep", "deltas"}) {
    EXPECT_TRUE(r.contains(key)) << key;
  }
  for (const char* name : {"NPE-CoT", "NPE-PS", "NPE-RP", "ASP", "AdvTrain"}) EXPECT_TRUE(r.at("defended").contains(name)) << name;
  EXPECT_EQ(r.at("config_digest"), config_digest(navsec::testing::tiny_config()));
  EXPECT_EQ(r.at("sweep").size(), navsec::testing::tiny_config().sweep.size());
}

TEST_F(PipelineTest, ZeroLengthSweepPointEqualsClean) {
  const json& r = *report_;
  const json& zero = r.at("sweep").at(0);
  EXPECT_EQ(zero.at("percentage"), 0.0);
  // The sweep runs on a prefix of the routes; recompute clean on that prefix.
  const auto cfg = navsec::testing::tiny_config();
  const auto data = make_data(cfg);
  const auto model = train_stock_model(cfg, data, cfg.model_a);
  EpisodeOptions opts;
  opts.templates = data.templates;
  opts.max_steps = cfg.max_steps;
  const std::span<const RouteInstance> subset(data.eval_routes.data(), static_cast<std::size_t>(cfg.sweep_routes));
  const auto clean = evaluate_traces(run_episodes(model, data.vocab, data.eval_world, subset, opts), data.eval_world,
                                     subset);
  EXPECT_EQ(metrics_from_json(zero.at("metrics")), clean);
}

TEST_F(PipelineTest, CsvHasOneRowPerConditionMetric) {
  const std::string csv = report_csv(*report_);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "condition,metric,value");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2) << line;
  }
  EXPECT_GT(rows, 20);
}

TEST(Pipeline, RunsAreReproducible) {
  const auto cfg = navsec::testing::tiny_config();
  EXPECT_EQ(run_experiment(cfg).dump(), run_experiment(cfg).dump());
}
