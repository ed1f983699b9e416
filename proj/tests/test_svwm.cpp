#include <gtest/gtest.h>

#include <cmath>

#include "mlonline/adversary.hpp"
#include "mlonline/harness.hpp"
#include "mlonline/svwm.hpp"
#include "support.hpp"

using namespace mlonline;
using mlonline::testing::h3;

namespace {

const LabelSet kS12 = LabelSet::of({0, 1});  // {1,2} = h3(x)

// E[W'] by enumerating the learner's draw instead of the closed form.
double enumerated_step(const SvwmLearner& svwm, const HypothesisClass& cls, InstanceId x, LabelSet S) {
  const auto p = svwm.predict(x);
  double e = 0.0;
  for (LabelId y = 0; y < cls.num_labels(); ++y) {
    if (p[y] == 0.0) continue;
    auto next = svwm;
    next.observe(x, y, SetFeedback{S});
    e += p[y] * next.total_weight();
  }
  return e;
}

// Classes passing the constant-regret condition: rejection sampling plus the "all but one label" family.
HypothesisClass condition_class(Rng& rng) {
  if (rng() % 2) {
    const std::size_t ny = 3 + uniform_index(rng, 4), nx = 1 + uniform_index(rng, 2), nh = 1 + uniform_index(rng, 5);
    std::vector<LabelSet> table;
    for (std::size_t i = 0; i < nh * nx; ++i)
      table.push_back(LabelSet::all(ny) - LabelSet::single(static_cast<LabelId>(uniform_index(rng, ny))));
    return HypothesisClass(mlonline::testing::names("y", ny), mlonline::testing::names("x", nx),
                           mlonline::testing::names("h", nh), std::move(table));
  }
  for (;;) {
    auto cls = mlonline::testing::random_class(rng, 5, 2, 5);
    if (check_svwm_condition(cls)) return cls;
  }
}

}  // namespace

TEST(Svwm, H3InitialPredictionIsUniform) {
  SvwmLearner svwm(h3());
  const auto v = svwm.votes(0);
  EXPECT_EQ(v, (std::vector<double>{2.0, 2.0, 2.0}));
  for (LabelId y = 0; y < 3; ++y) EXPECT_NEAR(svwm.predict(0)[y], 1.0 / 3.0, 1e-15);
}

TEST(Svwm, H3Updates) {
  SvwmLearner miss(h3());
  miss.observe(0, 2, SetFeedback{kS12});  // ŷ = 3 ∉ {1,2}
  EXPECT_EQ(miss.log2_weights(), (std::vector<std::int64_t>{0, 0, 1}));

  SvwmLearner hit(h3());
  hit.observe(0, 0, SetFeedback{kS12});  // ŷ = 1 ∈ {1,2}
  EXPECT_EQ(hit.log2_weights(), (std::vector<std::int64_t>{-1, -1, 0}));
  EXPECT_DOUBLE_EQ(hit.total_weight(), 2.0);
}

TEST(Svwm, ExpectedWeightStepH3) {
  // miss (prob 1/3) doubles h3: W' = 4; hit (prob 2/3) halves h1, h2: W' = 2. E[W'] = 8/3.
  SvwmLearner svwm(h3());
  EXPECT_NEAR(svwm.expected_weight_step(0, kS12), 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(enumerated_step(svwm, h3(), 0, kS12), 8.0 / 3.0, 1e-12);
  EXPECT_LT(svwm.expected_weight_step(0, kS12), 3.0);
}

TEST(Svwm, ExpectedWeightStepWhenEveryoneAgrees) {
  const HypothesisClass same({"a", "b", "c"}, {"x"}, {"g", "h"}, {LabelSet::of({0, 1}), LabelSet::of({0, 1})});
  SvwmLearner svwm(same);
  svwm.set_log2_weights({3, -2});
  EXPECT_NEAR(svwm.expected_weight_step(0, LabelSet::of({0, 1})), svwm.total_weight(), 1e-12);
}

TEST(Svwm, ExpectedWeightNeverIncreasesUnderTheCondition) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto cls = condition_class(rng);
    SvwmLearner svwm(cls);
    std::vector<std::int64_t> lw;
    for (std::size_t h = 0; h < cls.num_hypotheses(); ++h) lw.push_back(static_cast<std::int64_t>(uniform_index(rng, 9)) - 4);
    svwm.set_log2_weights(lw);
    const auto x = static_cast<InstanceId>(uniform_index(rng, cls.num_instances()));
    const LabelSet S = rng() % 4 ? cls.output(static_cast<HypothesisId>(uniform_index(rng, cls.num_hypotheses())), x)
                                 : LabelSet::from_bits(rng() & cls.alphabet().bits());
    const double W = svwm.total_weight(), step = svwm.expected_weight_step(x, S);
    EXPECT_LE(step, W + 1e-12) << serialize_class(cls);
    EXPECT_NEAR(step, enumerated_step(svwm, cls, x, S), 1e-9 * W);
  }
}

TEST(Svwm, RegretIdentity) {
  const auto cls = h3();
  Transcript empty;
  EXPECT_EQ(svwm_regret_identity(empty, cls, 0, {0, 0, 0}), 0);

  SvwmLearner svwm(cls);
  Transcript tr;
  Round r;
  r.x = 0;
  r.yhat = 2;
  r.truth = kS12;
  r.loss = true;
  tr.rounds.push_back(r);
  svwm.observe(0, 2, SetFeedback{kS12});
  EXPECT_EQ(svwm_regret_identity(tr, cls, 2, svwm.log2_weights()), 1);
  EXPECT_THROW(svwm_regret_identity(tr, cls, 2, {0, 0, 0}), Error);
}

TEST(Svwm, RegretIdentityOnRandomRuns) {
  const auto cls = h3();
  Rng rng(31);
  for (int run = 0; run < 200; ++run) {
    SvwmLearner svwm(cls);
    std::vector<StochasticAdversary::Outcome> outcomes;
    for (HypothesisId h = 0; h < 3; ++h) outcomes.push_back({0, cls.output(h, 0), 1.0 / 4});
    outcomes.push_back({0, LabelSet::of({2}), 1.0 / 4});
    StochasticAdversary adv(outcomes, rng());
    const auto tr = run_game(svwm, adv, FeedbackModel::Set, 50, rng());
    for (HypothesisId h = 0; h < 3; ++h) EXPECT_NO_THROW(svwm_regret_identity(tr, cls, h, svwm.log2_weights()));
  }
}

TEST(Svwm, LargeExponentsStayFinite) {
  SvwmLearner svwm(h3());
  svwm.set_log2_weights({5000, 4999, -5000});
  const auto p = svwm.predict(0);
  // votes (w2+w3, w1+w3, w1+w2) ≈ (1/2, 1, 3/2) relative to 2^5000
  EXPECT_NEAR(p[0], 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(p[1], 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(p[2], 3.0 / 6.0, 1e-12);
}

TEST(SvwmOracle, H3ExactValues) {
  // frozen from the expectimax; the ceiling is log2 3 at every horizon
  const double expect[] = {0.0, 1.0 / 3.0, 7.0 / 12.0, 0.75, 0.85, 0.90555555555555567, 0.93496732026143792};
  for (std::size_t T = 0; T <= 6; ++T) {
    const double v = svwm_worstcase_oracle(h3(), T);
    EXPECT_NEAR(v, expect[T], 1e-12) << "T=" << T;
    EXPECT_LE(v, std::log2(3.0) + 1e-9);
    EXPECT_NEAR(svwm_worstcase_oracle(h3(), T, {true}), v, 1e-12);
  }
  EXPECT_THROW(svwm_worstcase_oracle(h3(), 6, {false, 3}), Error);
}
