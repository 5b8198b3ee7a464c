#include <gtest/gtest.h>

#include "navsec/defense.hpp"
#include "navsec/episode.hpp"
#include "navsec/error.hpp"
#include "test_support.hpp"

using namespace navsec;

namespace {

class DefenseTest : public ::testing::Test {
 protected:
  Vocab vocab = Vocab::standard();
  NavGraph g = generate_world(7, {8, 8, 10.0, 0.5, 0.1, 0.1, true});
  RouteInstance route = sample_route(g, 3, 8, 12);
  Prompt prompt = initial_prompt(vocab, g, route);
};

}  // namespace

TEST_F(DefenseTest, CotAppendsOthersPrepend) {
  for (DefenseTag tag : {DefenseTag::CoT, DefenseTag::PS, DefenseTag::RP, DefenseTag::ASP}) {
    const auto s = DefenseStrategy::from(tag);
    const auto ids = vocab.tokenize(s.text);
    const Prompt w = npe_wrap(vocab, prompt, s);
    ASSERT_EQ(w.size(), prompt.size() + static_cast<int>(ids.size()));
    EXPECT_EQ(check_spans(w), "");
    const Span* d = w.find(SpanKind::Defense);
    ASSERT_NE(d, nullptr);
    EXPECT_EQ(std::vector<int>(w.tokens.begin() + d->begin, w.tokens.begin() + d->end), ids);
    if (tag == DefenseTag::CoT) {
      EXPECT_EQ(d->end, w.size());
    } else {
      EXPECT_EQ(d->begin, 0);
    }
  }
}

TEST_F(DefenseTest, WrappingIsIdempotent) {
  for (DefenseTag tag : {DefenseTag::CoT, DefenseTag::PS, DefenseTag::RP, DefenseTag::ASP}) {
    const auto s = DefenseStrategy::from(tag);
    const Prompt once = npe_wrap(vocab, prompt, s);
    EXPECT_EQ(npe_wrap(vocab, once, s).tokens, once.tokens);
  }
  const Prompt two = npe_wrap(vocab, npe_wrap(vocab, prompt, DefenseStrategy::from(DefenseTag::PS)),
                              DefenseStrategy::from(DefenseTag::CoT));
  EXPECT_GT(two.size(), npe_wrap(vocab, prompt, DefenseStrategy::from(DefenseTag::PS)).size());
}

TEST_F(DefenseTest, NonPromptStrategiesAreRejected) {
  for (DefenseTag tag : {DefenseTag::None, DefenseTag::AdvTrain}) {
    try {
      npe_wrap(vocab, prompt, DefenseStrategy::from(tag));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NotAPromptTransform);
    }
  }
}

TEST(DefenseNames, RoundTrip) {
  for (DefenseTag tag : {DefenseTag::None, DefenseTag::CoT, DefenseTag::PS, DefenseTag::RP, DefenseTag::ASP,
                         DefenseTag::AdvTrain}) {
    EXPECT_EQ(parse_defense(defense_name(tag)), tag);
  }
  EXPECT_FALSE(parse_defense("nonsense").has_value());
}

TEST_F(DefenseTest, AugmentationAddsOnePerturbedCopyPerEpisode) {
  const auto routes = sample_routes(g, 5, 4, 8, 12);
  const TrainingSet clean = make_training_set(vocab, default_templates(), {{g, routes}}, 0.0, 1);
  const auto victim = navsec::testing::random_params(Arch::Attention, vocab.size(), 8, 6, vocab.step_marker(), 4);
  AttackConfig cfg{AttackMode::NPI, 3, 2, 4, 8};
  const TrainingSet aug = augment_with_attacks(victim, clean, cfg);
  ASSERT_EQ(aug.episodes.size(), 2 * clean.episodes.size());
  for (std::size_t e = 0; e < clean.episodes.size(); ++e) {
    const auto& adv = aug.episodes[clean.episodes.size() + e];
    EXPECT_EQ(adv.actions, clean.episodes[e].actions);
    const Prompt plain = aug.prompt(e, 0, {});
    const Prompt attacked = aug.prompt(clean.episodes.size() + e, 0, {});
    EXPECT_EQ(attacked.size(), plain.size() + 3);
    EXPECT_TRUE(attacked.has_suffix());
    // The perturbation follows the episode to later steps.
    EXPECT_TRUE(aug.prompt(clean.episodes.size() + e, 2, std::span(adv.actions).first(2)).has_suffix());
  }
}
