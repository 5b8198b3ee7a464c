#include <gtest/gtest.h>

#include <omp.h>

#include <random>

#include "navsec/error.hpp"
#include "navsec/kernels.hpp"
#include "test_support.hpp"

using namespace navsec;

namespace {

constexpr int kVocab = 50;
constexpr int kWindow = 4;

std::vector<Candidate> random_candidates(int begin, int end, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pos(begin, end - 1), tok(0, kVocab - 1);
  std::vector<Candidate> out(static_cast<std::size_t>(count));
  for (auto& c : out) c = {pos(rng), tok(rng)};
  return out;
}

class KernelTest : public ::testing::TestWithParam<std::tuple<Arch, int, int>> {};

}  // namespace

TEST_P(KernelTest, CachedEvaluationIsBitIdenticalToForward) {
  const auto [arch, vb, ve] = GetParam();
  const auto p = navsec::testing::random_params(arch, kVocab, 8, 6, kWindow, 17);
  const auto base = navsec::testing::random_tokens(kVocab, 30, kWindow, 5);
  const CandidateEvaluator eval(p, base, vb, ve);
  EXPECT_EQ(eval.evaluate(std::span<const int>(base)), forward(p, base));
  for (const auto& c : random_candidates(vb, ve, 40, 9)) {
    auto tokens = base;
    tokens[static_cast<std::size_t>(c.position)] = c.token;
    ASSERT_EQ(eval.evaluate(c), forward(p, tokens)) << c.position << " " << c.token;
  }
}

TEST_P(KernelTest, SerialParallelAndReferenceAgree) {
  const auto [arch, vb, ve] = GetParam();
  const auto p = navsec::testing::random_params(arch, kVocab, 8, 6, kWindow, 21);
  const auto base = navsec::testing::random_tokens(kVocab, 30, kWindow, 6);
  const auto cands = random_candidates(vb, ve, 64, 10);
  const ObjectiveSpec obj{true, 2};
  const CandidateEvaluator eval(p, base, vb, ve);
  const auto ref = score_candidates_reference(p, base, cands, obj);
  EXPECT_EQ(score_candidates_serial(eval, cands, obj), ref);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    EXPECT_EQ(score_candidates_parallel(eval, cands, obj), ref) << threads << " threads";
  }
  omp_set_num_threads(saved);
}

// The marker sits at index 10 of the random base: ranges before, across and inside the window.
INSTANTIATE_TEST_SUITE_P(Ranges, KernelTest,
                         ::testing::Combine(::testing::Values(Arch::Attention, Arch::Linear),
                                            ::testing::Values(0, 3, 12), ::testing::Values(30)));

TEST(Kernels, NarrowRangesInsideTheSequence) {
  const auto p = navsec::testing::random_params(Arch::Attention, kVocab, 8, 6, kWindow, 2);
  const auto base = navsec::testing::random_tokens(kVocab, 25, kWindow, 3);
  for (auto [vb, ve] : {std::pair{2, 4}, std::pair{9, 11}, std::pair{20, 21}}) {
    const CandidateEvaluator eval(p, base, vb, ve);
    for (const auto& c : random_candidates(vb, ve, 20, 4)) {
      auto tokens = base;
      tokens[static_cast<std::size_t>(c.position)] = c.token;
      EXPECT_EQ(eval.evaluate(c), forward(p, tokens));
    }
  }
}

TEST(Kernels, CandidateOutsideRangeIsRejected) {
  const auto p = navsec::testing::random_params(Arch::Attention, kVocab, 8, 6, kWindow, 2);
  const auto base = navsec::testing::random_tokens(kVocab, 12, kWindow, 3);
  const CandidateEvaluator eval(p, base, 4, 6);
  EXPECT_THROW(eval.evaluate(Candidate{7, 1}), Error);
  EXPECT_THROW(CandidateEvaluator(p, base, 5, 13), Error);
}

TEST(Kernels, ArgminPrefersLowestIndexOnTies) {
  const std::vector<double> s{3.0, 1.0, 2.0, 1.0};
  EXPECT_EQ(argmin_stable(s), 1u);
  const std::vector<double> one{5.0};
  EXPECT_EQ(argmin_stable(one), 0u);
}

TEST(Kernels, ObjectiveSigns) {
  ActionDist d{0.1, 0.2, 0.3, 0.25, 0.15};
  EXPECT_NEAR((ObjectiveSpec{true, 1})(d), -std::log(0.2), 1e-12);
  EXPECT_NEAR((ObjectiveSpec{false, 1})(d), std::log(0.2), 1e-12);
}
