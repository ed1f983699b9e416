#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mlonline/agnostic.hpp"
#include "mlonline/harness.hpp"
#include "support.hpp"

using namespace mlonline;
using mlonline::testing::h3;

namespace {

PredictionDistribution point(LabelId y) { return PredictionDistribution::point_mass(3, y); }

// Exact expected regret of a learner against a fixed stream, by enumerating its draws.
double exact_expected_loss(const Learner& learner, const std::vector<std::pair<LabelSet, LabelId>>& stream,
                           FeedbackModel model, std::size_t t = 0) {
  if (t == stream.size()) return 0.0;
  const auto [S, y] = stream[t];
  const auto p = learner.predict(0);
  double total = 0.0;
  for (LabelId yhat = 0; yhat < p.size(); ++yhat) {
    if (p[yhat] == 0.0) continue;
    auto next = learner.clone();
    next->observe(0, yhat, make_feedback(model, S, y, yhat));
    total += p[yhat] * ((S.contains(yhat) ? 0.0 : 1.0) + exact_expected_loss(*next, stream, model, t + 1));
  }
  return total;
}

}  // namespace

TEST(Exp4, DefaultGamma) {
  const double g = exp4_default_gamma(3, 100, 1000);
  EXPECT_NEAR(g, std::sqrt(3 * std::log(100.0) / ((std::numbers::e - 1) * 1000)), 1e-15);
  EXPECT_EQ(exp4_default_gamma(3, 100, 1), 1.0);
  EXPECT_EQ(exp4_default_gamma(3, 1, 100), 1.0);
  EXPECT_EQ(exp4_default_gamma(3, 5, 0), 1.0);
  EXPECT_THROW(Exp4(2, 3, 0.0), Error);
  EXPECT_THROW(Exp4(2, 3, 1.5), Error);
}

TEST(Exp4, IdenticalAdviceMixture) {
  Exp4 e(4, 3, 0.3);
  const std::vector<PredictionDistribution> advice(4, point(1));
  const auto p = e.mix(advice);
  EXPECT_NEAR(p[1], 0.7 + 0.1, 1e-15);
  EXPECT_NEAR(p[0], 0.1, 1e-15);
}

TEST(Exp4, ZeroRewardLeavesWeights) {
  Exp4 e(2, 3, 0.5);
  const std::vector<PredictionDistribution> advice{point(0), point(1)};
  e.update(advice, e.mix(advice), 0, 0.0);
  EXPECT_EQ(e.log_weights(), (std::vector<double>{0.0, 0.0}));
}

TEST(Exp4, HandComputedStep) {
  // N = 2, K = 3, γ = 1/2, advice on labels 1 and 2; ŷ = 1 with reward 1.
  Exp4 e(2, 3, 0.5);
  const std::vector<PredictionDistribution> advice{point(0), point(1)};
  const auto p = e.mix(advice);
  EXPECT_NEAR(p[0], 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(p[1], 5.0 / 12.0, 1e-15);
  EXPECT_NEAR(p[2], 1.0 / 6.0, 1e-15);
  e.update(advice, p, 0, 1.0);
  // x̂_1 = 12/5, so ln w_1 += (1/2)(12/5)/3 = 2/5
  EXPECT_NEAR(e.log_weights()[0], 0.4, 1e-15);
  EXPECT_EQ(e.log_weights()[1], 0.0);
  const double w1 = std::exp(0.4) / (std::exp(0.4) + 1.0);
  const auto q = e.mix(advice);
  EXPECT_NEAR(q[0], 1.0 / 6.0 + 0.5 * w1, 1e-12);
  EXPECT_NEAR(q[1], 1.0 / 6.0 + 0.5 * (1.0 - w1), 1e-12);
}

TEST(Exp4, EstimatorIsUnbiased) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> m(4);
    for (auto& v : m) v = 0.05 + uniform01(rng);
    const auto p = PredictionDistribution::from_masses(m);
    std::vector<double> reward(4);
    for (auto& r : reward) r = static_cast<double>(rng() % 2);
    std::vector<double> mean(4, 0.0);
    for (LabelId a = 0; a < 4; ++a) {
      const auto x = exp4_reward_estimate(p, a, reward[a]);
      for (LabelId j = 0; j < 4; ++j) mean[j] += p[a] * x[j];
    }
    for (LabelId j = 0; j < 4; ++j) EXPECT_NEAR(mean[j], reward[j], 1e-12);
  }
}

TEST(Exp4, LargeWeightsStayFinite) {
  Exp4 e(2, 2, 1.0);
  const std::vector<PredictionDistribution> advice{PredictionDistribution::point_mass(2, 0),
                                                   PredictionDistribution::point_mass(2, 1)};
  for (int i = 0; i < 2000; ++i) e.update(advice, e.mix(advice), 0, 1.0);
  const auto p = e.mix(advice);
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_NEAR(p[0], 0.5, 1e-12);  // γ = 1: pure exploration
  Exp4 f(2, 2, 0.5);
  for (int i = 0; i < 2000; ++i) f.update(advice, f.mix(advice), 0, 1.0);
  EXPECT_NEAR(f.weights()[0], 1.0, 1e-12);
}

TEST(ExpertPool, Counts) {
  auto eng = std::make_shared<DimensionEngine>(h3());
  EXPECT_EQ(ExpertPool(eng, FeedbackModel::Known, 4, 1, true).size(), 6u);
  EXPECT_EQ(ExpertPool(eng, FeedbackModel::Known, 4, 0, true).size(), 2u);
  EXPECT_EQ(ExpertPool(eng, FeedbackModel::Set, 10, 2, false).size(), 56u);
  EXPECT_EQ(subset_count(4, 1), 5u);
  EXPECT_EQ(subset_count(3, 10), 8u);
  EXPECT_EQ(subset_count(100000, 40), SIZE_MAX);
  EXPECT_THROW(ExpertPool(eng, FeedbackModel::Known, 1000, 3, true, 1000), Error);
  EXPECT_THROW(ExpertPool(eng, FeedbackModel::Unknown, 4, 1, true), Error);
}

TEST(ExpertPool, IndexSetsOrderedAndFed) {
  auto eng = std::make_shared<DimensionEngine>(h3());
  ExpertPool pool(eng, FeedbackModel::Set, 3, 1, false);
  ASSERT_EQ(pool.num_core(), 4u);
  EXPECT_TRUE(pool.index_set(0).empty());
  EXPECT_EQ(pool.index_set(2), (std::vector<std::uint32_t>{1}));
  pool.update(0, SetFeedback{h3().output(0, 0)});  // round 0 reaches only E_{0}
  EXPECT_EQ(pool.version_space(0), h3().everyone());
  EXPECT_EQ(pool.version_space(1), HypSet::of(3, {0}));
  EXPECT_EQ(pool.version_space(2), h3().everyone());
  // the memoryless expert E_∅ behaves like a fresh SOA
  EXPECT_EQ(pool.advise(0)[0], soa::predict_set(*eng, h3().everyone(), 0));
}

TEST(Exp4Learner, PoolAndGamma) {
  auto eng = std::make_shared<DimensionEngine>(h3());
  Exp4Learner l(eng, FeedbackModel::Known, 100);
  EXPECT_EQ(l.pool().size(), 1 + 100 + 1u);
  EXPECT_NEAR(l.core().gamma(), exp4_default_gamma(3, 102, 100), 1e-15);
  EXPECT_THROW(Exp4Learner(eng, FeedbackModel::Set, 10), Error);
  Exp4Learner zero(eng, FeedbackModel::Known, 10, {0, std::nullopt});
  EXPECT_EQ(zero.pool().size(), 2u);
}

TEST(Exp4Learner, SmallHorizonExactExpectation) {
  // T = 6 on H3: exact expected regret over the learner's draws against every fixed stream
  // drawn below stays under LDK + 4√((e−1)·K·T·LDK·ln(eT/LDK)).
  auto eng = std::make_shared<DimensionEngine>(h3());
  const double T = 6, bound = 1 + 4 * std::sqrt((std::numbers::e - 1) * 3 * T * std::log(std::numbers::e * T));
  Rng rng(8);
  for (int s = 0; s < 20; ++s) {
    std::vector<std::pair<LabelSet, LabelId>> stream;
    std::vector<std::size_t> miss(3, 0);
    for (int t = 0; t < 6; ++t) {
      const auto h = static_cast<HypothesisId>(uniform_index(rng, 3));
      const LabelSet S = h3().output(h, 0);
      stream.emplace_back(S, uniform_member(S, rng));
      for (HypothesisId g = 0; g < 3; ++g) miss[g] += g != h;
    }
    Exp4Learner l(eng, FeedbackModel::Known, 6);
    const double regret = exact_expected_loss(l, stream, FeedbackModel::Known) - *std::min_element(miss.begin(), miss.end());
    EXPECT_LE(regret, bound);
    EXPECT_LE(regret, 6.0);
  }
}

TEST(Wmu, DefaultEta) {
  EXPECT_NEAR(wmu_default_eta(10, 100), std::sqrt(2 * std::log(10.0) / 100), 1e-15);
  EXPECT_THROW(wmu_default_eta(10, 4), Error);
  auto eng = std::make_shared<DimensionEngine>(h3());
  EXPECT_THROW(WmuLearner(eng, 1), Error);
  EXPECT_NO_THROW(WmuLearner(eng, 1, {std::nullopt, 0.5}));
}

TEST(Wmu, ExactOneStep) {
  auto eng = std::make_shared<DimensionEngine>(h3());
  WmuLearner w(eng, 20);
  const auto labels = w.pool().advise(0);
  const LabelSet S = h3().output(1, 0);
  w.observe(0, 0, SetFeedback{S});
  for (std::size_t i = 0; i < labels.size(); ++i)
    EXPECT_DOUBLE_EQ(w.log_weights()[i], S.contains(labels[i]) ? 0.0 : -w.eta());
  // prediction mass on a label = normalized weight of the experts advising it
  const auto next = w.pool().advise(0);
  const auto p = w.predict(0);
  std::vector<double> mass(3, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) total += std::exp(w.log_weights()[i]), mass[next[i]] += std::exp(w.log_weights()[i]);
  for (LabelId y = 0; y < 3; ++y) EXPECT_NEAR(p[y], mass[y] / total, 1e-12);
}

TEST(Wmu, AllExpertsCorrectKeepsWeightsEqual) {
  const HypothesisClass one({"a", "b"}, {"x"}, {"h"}, {LabelSet::of({1})});
  auto eng = std::make_shared<DimensionEngine>(one);
  WmuLearner w(eng, 30, {std::nullopt, 0.3});
  EXPECT_EQ(w.pool().size(), 1u);  // LDS = 0: only the memoryless expert
  for (int t = 0; t < 30; ++t) {
    EXPECT_EQ(w.predict(0)[1], 1.0);
    w.observe(0, 1, SetFeedback{LabelSet::of({1})});
  }
  EXPECT_EQ(w.log_weights()[0], 0.0);
}
