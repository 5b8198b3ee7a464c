// Candidate scoring and episode rollout: full-forward reference, cached serial
// kernel and cached OpenMP kernel. The outputs are compared before timing.

#include <benchmark/benchmark.h>

#include <cstdio>
#include <random>

#include "navsec/attack.hpp"
#include "navsec/episode.hpp"
#include "navsec/kernels.hpp"

using namespace navsec;

namespace {

struct Fixture {
  Vocab vocab = Vocab::standard();
  NavGraph graph = generate_world(7, {12, 12, 10.0, 0.5, 0.1, 0.1, true});
  std::vector<RouteInstance> routes = sample_routes(graph, 11, 32, 8, 14);
  ReasonerParams params = init_params({Arch::Attention, 32, 64, 4, 1}, vocab.size(), vocab.step_marker());
  Prompt prompt;
  int vb = 0, ve = 0;

  Fixture() {
    const Prompt base = initial_prompt(vocab, graph, routes.front());
    vb = base.size();
    ve = vb + 16;
    prompt = insert_span(base, vb, std::vector<int>(16, vocab.filler()), SpanKind::Suffix);
  }

  std::vector<Candidate> candidates(int n) const {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pos(vb, ve - 1), tok(1, vocab.size() - 1);
    std::vector<Candidate> out(static_cast<std::size_t>(n));
    for (auto& c : out) c = {pos(rng), tok(rng)};
    return out;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

const ObjectiveSpec kObjective{true, index_of(Action::Stop)};

void BM_ScoreReference(benchmark::State& state) {
  const auto& f = fixture();
  const auto cands = f.candidates(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_candidates_reference(f.params, f.prompt.tokens, cands, kObjective));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreSerial(benchmark::State& state) {
  const auto& f = fixture();
  const auto cands = f.candidates(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const CandidateEvaluator eval(f.params, f.prompt.tokens, f.vb, f.ve);
    benchmark::DoNotOptimize(score_candidates_serial(eval, cands, kObjective));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto& f = fixture();
  const auto cands = f.candidates(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const CandidateEvaluator eval(f.params, f.prompt.tokens, f.vb, f.ve);
    benchmark::DoNotOptimize(score_candidates_parallel(eval, cands, kObjective));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EpisodesSerial(benchmark::State& state) {
  const auto& f = fixture();
  const EpisodeOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(run_episodes_serial(f.params, f.vocab, f.graph, f.routes, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.routes.size()));
}

void BM_EpisodesParallel(benchmark::State& state) {
  const auto& f = fixture();
  const EpisodeOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(run_episodes(f.params, f.vocab, f.graph, f.routes, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.routes.size()));
}

BENCHMARK(BM_ScoreReference)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EpisodesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EpisodesParallel)->Unit(benchmark::kMillisecond);

bool kernels_agree() {
  const auto& f = fixture();
  const auto cands = f.candidates(256);
  const CandidateEvaluator eval(f.params, f.prompt.tokens, f.vb, f.ve);
  const auto ref = score_candidates_reference(f.params, f.prompt.tokens, cands, kObjective);
  return score_candidates_serial(eval, cands, kObjective) == ref &&
         score_candidates_parallel(eval, cands, kObjective) == ref;
}

}  // namespace

int main(int argc, char** argv) {
  std::printf("workers: %d\n", configure_threads());
  if (!kernels_agree()) {
    std::fprintf(stderr, "cached kernels disagree with the reference\n");
    return 1;
  }
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
