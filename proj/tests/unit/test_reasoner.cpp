#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "navsec/reasoner.hpp"
#include "navsec/vocab.hpp"
#include "test_support.hpp"

using namespace navsec;
using navsec::testing::random_params;
using navsec::testing::random_tokens;

namespace {

constexpr int kVocab = 40;
constexpr int kWindow = 5;

class GradientCheck : public ::testing::TestWithParam<std::tuple<Arch, std::uint64_t>> {};

}  // namespace

TEST_P(GradientCheck, ParametersMatchCentralDifferences) {
  const auto [arch, seed] = GetParam();
  const auto p = random_params(arch, kVocab, 6, 5, kWindow, seed);
  const auto tokens = random_tokens(kVocab, 14, kWindow, seed + 100);
  for (Action a : {Action::Forward, Action::Stop}) {
    const auto r = navsec::testing::check_parameter_gradient(p, tokens, a, 1e-3);
    EXPECT_LT(r.relative_error, 1e-4) << arch_name(arch) << " seed " << seed;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST_P(GradientCheck, EmbeddingsMatchCentralDifferences) {
  const auto [arch, seed] = GetParam();
  const auto p = random_params(arch, kVocab, 6, 5, kWindow, seed);
  const auto tokens = random_tokens(kVocab, 14, kWindow, seed + 200);
  const auto r = navsec::testing::check_embedding_gradient(p, tokens, Action::Left, 1e-3);
  EXPECT_LT(r.relative_error, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Archs, GradientCheck,
                         ::testing::Combine(::testing::Values(Arch::Attention, Arch::Linear),
                                            ::testing::Values(1u, 2u, 3u)));

TEST(Reasoner, OneHotGradientIsEmbeddingGradientThroughTheTable) {
  const auto p = random_params(Arch::Attention, kVocab, 6, 5, kWindow, 9);
  const auto tokens = random_tokens(kVocab, 12, kWindow, 4);
  const auto eg = embedding_gradient(p, tokens, Action::Right);
  const auto oh = grad_onehot(p, tokens, Action::Right);
  ASSERT_EQ(oh.positions, 12);
  ASSERT_EQ(oh.vocab, kVocab);
  for (int pos = 0; pos < 12; ++pos) {
    for (int v = 0; v < kVocab; ++v) {
      double expect = 0.0;
      for (int j = 0; j < p.dim; ++j) expect += p.emb[static_cast<std::size_t>(v * p.dim + j)] * eg[static_cast<std::size_t>(pos * p.dim + j)];
      EXPECT_NEAR(oh.row(pos)[static_cast<std::size_t>(v)], expect, 1e-12);
    }
  }
}

TEST(Reasoner, PadEmbeddingIsIgnored) {
  auto p = random_params(Arch::Attention, kVocab, 6, 5, kWindow, 3);
  auto tokens = random_tokens(kVocab, 12, kWindow, 8);
  tokens[2] = Vocab::kPad;
  tokens[9] = Vocab::kPad;
  const auto before = forward(p, tokens);
  for (int j = 0; j < p.dim; ++j) p.emb[static_cast<std::size_t>(j)] += 3.0;
  EXPECT_EQ(forward(p, tokens), before);
}

TEST(Reasoner, OutputIsADistribution) {
  for (Arch arch : {Arch::Attention, Arch::Linear}) {
    const auto p = random_params(arch, kVocab, 6, 5, kWindow, 11, 2.0);
    const auto d = forward(p, random_tokens(kVocab, 20, kWindow, 1));
    EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
    for (double x : d) EXPECT_GT(x, 0.0);
  }
}

TEST(Reasoner, ZeroHeadGivesUniform) {
  auto p = random_params(Arch::Attention, kVocab, 6, 5, kWindow, 2);
  std::fill(p.w2.begin(), p.w2.end(), 0.0);
  std::fill(p.b2.begin(), p.b2.end(), 0.0);
  for (double x : forward(p, random_tokens(kVocab, 10, kWindow, 2))) EXPECT_DOUBLE_EQ(x, 1.0 / kNumActions);
}

TEST(Reasoner, InitIsDeterministicPerSeed) {
  const ReasonerConfig cfg{Arch::Attention, 8, 6, 4, 42};
  const auto a = init_params(cfg, kVocab, kWindow);
  const auto b = init_params(cfg, kVocab, kWindow);
  EXPECT_EQ(a.tensors().size(), b.tensors().size());
  for (std::size_t i = 0; i < a.tensors().size(); ++i) EXPECT_EQ(*a.tensors()[i], *b.tensors()[i]);
  auto other = cfg;
  other.seed = 43;
  EXPECT_NE(init_params(other, kVocab, kWindow).emb, a.emb);
  EXPECT_TRUE(a.all_finite());
}

TEST(Reasoner, WindowStartsAtLastMarker) {
  const auto p = random_params(Arch::Attention, kVocab, 6, 5, kWindow, 1);
  const std::vector<int> two{7, kWindow, 8, 9, kWindow, 10};
  EXPECT_EQ(window_start(p, two), 4);
  const std::vector<int> none{7, 8, 9};
  EXPECT_EQ(window_start(p, none), 0);
}

TEST(Reasoner, AttentionSeesTokensBeforeTheWindowLinearDoesNot) {
  const std::vector<int> base{7, 8, 9, 11, 12, kWindow, 13, 14};
  auto changed = base;
  changed[1] = 20;
  const auto att = random_params(Arch::Attention, kVocab, 6, 5, kWindow, 5);
  const auto lin = random_params(Arch::Linear, kVocab, 6, 5, kWindow, 5);
  EXPECT_NE(forward(att, base), forward(att, changed));
  EXPECT_EQ(forward(lin, base), forward(lin, changed));
}

TEST(Reasoner, LossIsNegativeLogLikelihood) {
  const auto p = random_params(Arch::Attention, kVocab, 6, 5, kWindow, 6);
  const auto tokens = random_tokens(kVocab, 10, kWindow, 6);
  const auto d = forward(p, tokens);
  for (Action a : kAllActions) EXPECT_NEAR(loss(p, tokens, a), -std::log(d[static_cast<std::size_t>(index_of(a))]), 1e-12);
  EXPECT_EQ(predict(p, tokens), predict_action(d));
}
