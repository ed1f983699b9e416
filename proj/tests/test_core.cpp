#include <gtest/gtest.h>

#include "mlonline/class_io.hpp"
#include "mlonline/csv.hpp"
#include "support.hpp"

using namespace mlonline;
using mlonline::testing::h3;

namespace {

RawClass raw_h3() {
  RawClass raw;
  raw.labels = {"1", "2", "3"};
  raw.instances = {"x"};
  raw.hypotheses = {{"h1", {{"x", {"2", "3"}}}}, {"h2", {{"x", {"1", "3"}}}}, {"h3", {{"x", {"1", "2"}}}}};
  return raw;
}

// naive re-implementation of 2|h'(x) \ h(x)| <= |h(x)|
bool naive_condition(const HypothesisClass& cls) {
  for (InstanceId x = 0; x < cls.num_instances(); ++x)
    for (HypothesisId a = 0; a < cls.num_hypotheses(); ++a)
      for (HypothesisId b = 0; b < cls.num_hypotheses(); ++b) {
        const auto ha = cls.output(a, x).members(), hb = cls.output(b, x).members();
        std::size_t extra = 0;
        for (auto y : hb)
          if (std::find(ha.begin(), ha.end(), y) == ha.end()) ++extra;
        if (2 * extra > ha.size()) return false;
      }
  return true;
}

}  // namespace

TEST(ClassValidation, H3IsValid) {
  const auto cls = validate_class(raw_h3());
  EXPECT_EQ(cls, h3());
  EXPECT_EQ(cls.output(0, 0), LabelSet::of({1, 2}));
  EXPECT_TRUE(cls.warnings().empty());
}

TEST(ClassValidation, MissingCell) {
  auto raw = raw_h3();
  raw.instances.push_back("x2");
  try {
    validate_class(raw);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::UndefinedCell));
  }
}

TEST(ClassValidation, DuplicateHypothesisName) {
  auto raw = raw_h3();
  raw.hypotheses[1].name = "h1";
  try {
    validate_class(raw);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::DuplicateName));
  }
}

TEST(ClassValidation, ReportsEveryViolation) {
  auto raw = raw_h3();
  raw.hypotheses[0].cells[0].second.push_back("9");
  raw.hypotheses[1].cells[0].first = "nowhere";
  raw.labels.push_back("1");
  try {
    validate_class(raw);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::UnknownLabel));
    EXPECT_TRUE(e.has(ErrorCode::UnknownInstance));
    EXPECT_TRUE(e.has(ErrorCode::DuplicateName));
    EXPECT_GE(e.violations().size(), 3u);
  }
}

TEST(ClassValidation, EmptyAndOversizedAlphabets) {
  RawClass raw;
  EXPECT_THROW(validate_class(raw), ValidationError);
  raw = raw_h3();
  raw.labels.clear();
  for (int i = 0; i < 65; ++i) raw.labels.push_back("l" + std::to_string(i));
  raw.hypotheses = {{"h", {{"x", {"l0"}}}}};
  try {
    validate_class(raw);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::AlphabetTooLarge));
  }
}

TEST(ClassValidation, EmptyCellIsAllowedWithWarning) {
  auto raw = raw_h3();
  raw.hypotheses[0].cells[0].second.clear();
  const auto cls = validate_class(raw);
  EXPECT_TRUE(cls.output(0, 0).empty());
  EXPECT_EQ(cls.warnings().size(), 1u);
}

TEST(Intersection, Examples) {
  const auto cls = h3();
  EXPECT_TRUE(intersection_at(cls, cls.everyone(), 0).empty());
  EXPECT_EQ(intersection_at(cls, HypSet::of(3, {0}), 0), cls.output(0, 0));
  EXPECT_EQ(intersection_at(cls, HypSet::of(3, {0, 1}), 0), LabelSet::of({2}));
  EXPECT_FALSE(all_points_intersect(cls, cls.everyone()));
  for (HypothesisId h = 0; h < 3; ++h) EXPECT_TRUE(all_points_intersect(cls, HypSet::of(3, {h})));
  EXPECT_THROW(intersection_at(cls, HypSet(3), 0), Error);
}

TEST(SvwmCondition, Examples) {
  EXPECT_TRUE(check_svwm_condition(h3()));
  const HypothesisClass bad({"1"}, {"x"}, {"h", "g"}, {LabelSet(), LabelSet::of({0})});
  EXPECT_FALSE(check_svwm_condition(bad));
}

TEST(SvwmCondition, AgreesWithNaiveChecker) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto cls = mlonline::testing::random_class(rng, 5, 2, 5);
    EXPECT_EQ(check_svwm_condition(cls), naive_condition(cls)) << serialize_class(cls);
  }
}

TEST(PredictionDistribution, Validation) {
  EXPECT_THROW(PredictionDistribution({0.5, 0.6}), Error);
  EXPECT_THROW(PredictionDistribution({-0.1, 1.1}), Error);
  EXPECT_NO_THROW(PredictionDistribution({0.25, 0.75}));
  const auto u = PredictionDistribution::uniform(4);
  EXPECT_DOUBLE_EQ(u.mass_outside(LabelSet::of({0, 1})), 0.5);
  EXPECT_EQ(PredictionDistribution::point_mass(3, 2).point(), std::optional<LabelId>(2));
  EXPECT_FALSE(u.point());
  EXPECT_EQ(u.sample_with(0.0), 0u);
  EXPECT_EQ(u.sample_with(0.99), 3u);
}

TEST(Seeds, MixIsStableAndSpreads) {
  EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
  EXPECT_NE(mix_seed(0, 0), mix_seed(0, 1));
}

TEST(ClassIo, RoundTrip) {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto cls = mlonline::testing::random_class(rng);
    EXPECT_EQ(parse_class(serialize_class(cls)), cls);
  }
  const auto text = serialize_class(h3());
  EXPECT_EQ(serialize_class(parse_class(text)), text);
}

TEST(ClassIo, Rejections) {
  EXPECT_THROW(parse_class("{"), Error);
  EXPECT_THROW(parse_class(R"({"labels":["a"],"instances":["x"],"hypotheses":{},"extra":1})"), Error);
  EXPECT_THROW(parse_class(R"({"labels":["a"],"instances":["x"]})"), Error);
  EXPECT_THROW(parse_class(R"({"labels":"a","instances":["x"],"hypotheses":{}})"), Error);
  try {
    parse_class(R"({"labels":["a"],"instances":["x"],"hypotheses":{"h":{"x":["a"]},"h":{"x":["a"]}}})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ErrorCode::DuplicateName));
  }
}

TEST(ClassIo, FileOrderDefinesIndices) {
  const auto cls = parse_class(R"({"labels":["z","a"],"instances":["q","p"],
    "hypotheses":{"second":{"p":["a"],"q":["z"]},"first":{"q":["a"],"p":["z","a"]}}})");
  EXPECT_EQ(cls.label_names()[0], "z");
  EXPECT_EQ(cls.instance_names()[0], "q");
  EXPECT_EQ(cls.hypothesis_names()[0], "second");
  EXPECT_EQ(cls.output(0, 0), LabelSet::of({0}));
  EXPECT_EQ(cls.output(1, 1), LabelSet::of({0, 1}));
}

TEST(Csv, QuotingAndRoundTrip) {
  csv::Table t({"a", "b"});
  t.row({"plain", "with,comma"});
  t.row({"say \"hi\"", "line\nbreak"});
  EXPECT_EQ(t.text(), "a,b\r\nplain,\"with,comma\"\r\n\"say \"\"hi\"\"\",\"line\nbreak\"\r\n");
  const auto rows = csv::parse(t.text());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][1], "with,comma");
  EXPECT_EQ(rows[2][0], "say \"hi\"");
  EXPECT_EQ(rows[2][1], "line\nbreak");
  EXPECT_THROW(t.row({"only one"}), Error);
  EXPECT_EQ(csv::number(0.1), "0.1");
}
