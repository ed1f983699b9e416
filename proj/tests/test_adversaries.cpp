#include <gtest/gtest.h>

#include "mlonline/harness.hpp"
#include "mlonline/soa.hpp"
#include "support.hpp"

using namespace mlonline;
using mlonline::testing::binary4;
using mlonline::testing::h3;

namespace {

constexpr FeedbackModel kModels[] = {FeedbackModel::Unknown, FeedbackModel::Known, FeedbackModel::Set};

class ConstantLearner final : public Learner {
 public:
  ConstantLearner(std::size_t k, LabelId y, FeedbackModel m) : k_(k), y_(y), m_(m) {}
  std::string name() const override { return "constant"; }
  FeedbackModel model() const override { return m_; }
  PredictionDistribution predict(InstanceId) const override { return PredictionDistribution::point_mass(k_, y_); }
  void observe(InstanceId, LabelId, const Feedback&) override {}
  std::unique_ptr<Learner> clone() const override { return std::make_unique<ConstantLearner>(*this); }
  bool adapts_to_own_predictions() const override { return false; }

 private:
  std::size_t k_;
  LabelId y_;
  FeedbackModel m_;
};

// Deterministic learner with a fixed random lookup table over (round, instance).
class TableLearner final : public Learner {
 public:
  TableLearner(std::size_t k, FeedbackModel m, std::uint64_t seed) : k_(k), m_(m), seed_(seed) {}
  std::string name() const override { return "table"; }
  FeedbackModel model() const override { return m_; }
  PredictionDistribution predict(InstanceId x) const override {
    return PredictionDistribution::point_mass(k_, static_cast<LabelId>(mix_seed(seed_, t_ * 131 + x) % k_));
  }
  void observe(InstanceId, LabelId, const Feedback&) override { ++t_; }
  std::unique_ptr<Learner> clone() const override { return std::make_unique<TableLearner>(*this); }

 private:
  std::size_t k_;
  FeedbackModel m_;
  std::uint64_t seed_;
  std::size_t t_ = 0;
};

}  // namespace

TEST(Replay, MatchingSoaMakesExactlyDMistakes) {
  Rng rng(4);
  for (int i = 0; i < 60; ++i) {
    const auto cls = mlonline::testing::random_class(rng);
    auto eng = std::make_shared<DimensionEngine>(cls);
    for (auto model : kModels) {
      const auto cert = extract_certificate(*eng, cls.everyone(), model);
      for (std::size_t T : {static_cast<std::size_t>(cert.value), static_cast<std::size_t>(cert.value) + 5}) {
        SoaLearner soa(eng, model);
        ReplayAdversary adv(cls, cert);
        const auto tr = run_game(soa, adv, model, T, 1);
        EXPECT_EQ(tr.total_loss(), std::min<std::size_t>(cert.value, T)) << to_string(model) << "\n" << serialize_class(cls);
        EXPECT_EQ(regret_of(tr, cls).comparator, 0u) << "replayed stream must be realizable";
      }
    }
  }
}

TEST(Replay, EveryDeterministicLearnerIsForced) {
  for (const auto& cls : {h3(), binary4()}) {
    DimensionEngine eng(cls);
    for (auto model : kModels) {
      const auto cert = extract_certificate(eng, cls.everyone(), model);
      for (std::uint64_t s = 0; s < 50; ++s) {
        TableLearner learner(cls.num_labels(), model, s);
        ReplayAdversary adv(cls, cert);
        const auto tr = run_game(learner, adv, model, cert.value + 3, s);
        EXPECT_GE(tr.total_loss(), cert.value);
        EXPECT_EQ(regret_of(tr, cls).comparator, 0u);
      }
    }
  }
}

TEST(Replay, DepthZeroIsPurePadding) {
  const auto cls = mlonline::testing::singleton();
  DimensionEngine eng(cls);
  auto soa_eng = std::make_shared<DimensionEngine>(cls);
  for (auto model : kModels) {
    const auto cert = extract_certificate(eng, cls.everyone(), model);
    EXPECT_EQ(cert.value, 0u);
    SoaLearner soa(soa_eng, model);
    ReplayAdversary adv(cls, cert);
    EXPECT_EQ(run_game(soa, adv, model, 10, 0).total_loss(), 0u);
  }
}

TEST(Replay, ModelMismatch) {
  const auto cls = h3();
  DimensionEngine eng(cls);
  ReplayAdversary adv(cls, extract_certificate(eng, cls.everyone(), FeedbackModel::Set));
  UniformLearner u(3, FeedbackModel::Known);
  EXPECT_THROW(run_game(u, adv, FeedbackModel::Known, 3, 0), Error);
}

TEST(H3Linear, ConstantLearnerHandComputed) {
  // find a seed whose 9 labels hold three of each
  for (std::uint64_t seed = 0;; ++seed) {
    H3LinearAdversary adv(h3(), seed);
    ConstantLearner one(3, 0, FeedbackModel::Unknown);
    adv.prepare(one, FeedbackModel::Unknown, 9);
    const auto& ys = adv.labels();
    if (std::count(ys.begin(), ys.end(), 0u) != 3 || std::count(ys.begin(), ys.end(), 1u) != 3) continue;
    EXPECT_TRUE(adv.exact_probe());
    EXPECT_EQ(adv.target(), 0u);
    EXPECT_DOUBLE_EQ(adv.expected_learner_loss(), 6.0);
    EXPECT_DOUBLE_EQ(adv.comparator_loss(), 3.0);

    H3LinearAdversary again(h3(), seed);
    ConstantLearner learner(3, 0, FeedbackModel::Unknown);
    const auto r = regret_of(run_game(learner, again, FeedbackModel::Unknown, 9, 0), h3());
    EXPECT_EQ(r.loss, 6u);
    EXPECT_EQ(r.comparator, 3u);
    EXPECT_EQ(r.regret, 3);
    break;
  }
}

TEST(H3Linear, ExpectedLossMatchesTranscript) {
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (auto rule : {TargetRule::ArgmaxLoad, TargetRule::MaxRegret}) {
      H3LinearAdversary adv(h3(), seed, rule);
      UniformLearner u(3, FeedbackModel::Unknown);
      const auto tr = run_game(u, adv, FeedbackModel::Unknown, 30, seed);
      EXPECT_NEAR(tr.expected_loss(), adv.expected_learner_loss(), 1e-9);
      EXPECT_DOUBLE_EQ(static_cast<double>(regret_of(tr, h3()).comparator), adv.comparator_loss());
      for (const auto& r : tr.rounds) EXPECT_TRUE(r.truth.contains(*r.y));
      for (double L : adv.loads()) EXPECT_NEAR(L, 10.0, 1e-9);
    }
}

TEST(H3Linear, RulesPickTheirTargets) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    FollowLastLabel f(3, FeedbackModel::Unknown);
    H3LinearAdversary a(h3(), seed, TargetRule::MaxRegret), b(h3(), seed, TargetRule::MaxRegret);
    a.prepare(f, FeedbackModel::Unknown, 40);
    b.prepare(f, FeedbackModel::Unknown, 40);
    EXPECT_EQ(a.target(), b.target());
    EXPECT_EQ(a.labels(), b.labels());

    H3LinearAdversary c(h3(), seed, TargetRule::ArgmaxLoad);
    c.prepare(f, FeedbackModel::Unknown, 40);
    const auto& L = c.loads();
    EXPECT_EQ(c.target(), static_cast<LabelId>(std::max_element(L.begin(), L.end()) - L.begin()));
    // the regret-maximizing target is never worse for the adversary
    EXPECT_GE(a.expected_learner_loss() - a.comparator_loss(), c.expected_learner_loss() - c.comparator_loss() - 1e-9);
  }
}

TEST(H3Linear, ShapeAndModelChecks) {
  EXPECT_THROW(H3LinearAdversary(binary4(), 0), Error);
  H3LinearAdversary adv(h3(), 0);
  UniformLearner u(3, FeedbackModel::Known);
  EXPECT_THROW(adv.prepare(u, FeedbackModel::Known, 5), Error);
  EXPECT_THROW(H3LinearAdversary(h3(), 0, TargetRule::ArgmaxLoad, 0), Error);
}

TEST(Realizable, ComparatorIsZeroAndLabelsInside) {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const auto cls = mlonline::testing::random_class(rng);
    const auto h = static_cast<HypothesisId>(uniform_index(rng, cls.num_hypotheses()));
    for (auto model : kModels) {
      RealizableAdversary adv(cls, h, InstanceRule::Uniform, LabelRule::Uniform, rng());
      UniformLearner u(cls.num_labels(), model);
      const auto tr = run_game(u, adv, model, 30, rng());
      EXPECT_EQ(regret_of(tr, cls).comparator, 0u);
      for (const auto& r : tr.rounds) EXPECT_EQ(r.truth, cls.output(h, r.x));
    }
  }
}

TEST(Realizable, EmptyTruthUnderLabelFeedback) {
  const HypothesisClass cls({"a"}, {"x"}, {"h"}, {LabelSet()});
  RealizableAdversary adv(cls, 0, InstanceRule::Cycle, LabelRule::Lowest, 0);
  UniformLearner u(1, FeedbackModel::Unknown);
  EXPECT_THROW(run_game(u, adv, FeedbackModel::Unknown, 2, 0), Error);
  RealizableAdversary set_adv(cls, 0, InstanceRule::Cycle, LabelRule::Lowest, 0);
  UniformLearner us(1, FeedbackModel::Set);
  EXPECT_EQ(run_game(us, set_adv, FeedbackModel::Set, 2, 0).total_loss(), 2u);
  EXPECT_THROW(RealizableAdversary(cls, 3, InstanceRule::Cycle, LabelRule::Lowest, 0), Error);
}

TEST(Stochastic, FrequenciesAndValidation) {
  const std::vector<StochasticAdversary::Outcome> outcomes{{0, LabelSet::of({0}), 0.2}, {0, LabelSet::of({1, 2}), 0.8}};
  StochasticAdversary adv(outcomes, 5);
  UniformLearner u(3, FeedbackModel::Set);
  const auto tr = run_game(u, adv, FeedbackModel::Set, 5000, 0);
  std::size_t first = 0;
  for (const auto& r : tr.rounds) first += r.truth == LabelSet::of({0});
  EXPECT_NEAR(first / 5000.0, 0.2, 0.03);
  EXPECT_THROW(StochasticAdversary({{0, LabelSet::of({0}), 0.5}}, 0), Error);
  EXPECT_THROW(StochasticAdversary({}, 0), Error);
}

TEST(Greedy, ReadsOnlyTheDistribution) {
  const auto cls = h3();
  GreedyAdversary a(cls, 1), b(cls, 1);
  UniformLearner u(3, FeedbackModel::Set);
  a.prepare(u, FeedbackModel::Set, 10);
  b.prepare(u, FeedbackModel::Set, 10);
  const PredictionDistribution p({0.6, 0.3, 0.1});
  for (LabelId yhat = 0; yhat < 3; ++yhat) {
    const auto ra = a.resolve(RoundView{0, 0, p, yhat});
    const auto rb = b.resolve(RoundView{0, 0, p, 0});
    EXPECT_EQ(ra.truth, rb.truth);
    // the set most likely to be missed excludes the heaviest label
    EXPECT_EQ(ra.truth, cls.output(0, 0));
  }
}
