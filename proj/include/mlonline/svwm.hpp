#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mlonline/learner.hpp"

namespace mlonline {

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
    else comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Set-valued weighted majority. Weights are powers of two, stored as exact integer exponents.
class SvwmLearner final : public Learner {
 public:
  explicit SvwmLearner(HypothesisClass cls) : cls_(std::move(cls)), lw_(cls_.num_hypotheses(), 0) {}

  std::string name() const override { return "svwm"; }
  FeedbackModel model() const override { return FeedbackModel::Set; }

  /// v(y) = Σ_{h: y ∈ h(x)} w(h), scaled by 2^{-max lw} so large exponents cannot overflow.
  std::vector<double> votes(InstanceId x) const {
    const auto top = *std::max_element(lw_.begin(), lw_.end());
    std::vector<CompensatedSum> acc(cls_.num_labels());
    for (HypothesisId h = 0; h < cls_.num_hypotheses(); ++h) {
      const double w = std::ldexp(1.0, static_cast<int>(lw_[h] - top));
      cls_.output(h, x).for_each([&](LabelId y) { acc[y].add(w); });
    }
    std::vector<double> v;
    for (const auto& a : acc) v.push_back(a.value());
    return v;
  }

  PredictionDistribution predict(InstanceId x) const override { return PredictionDistribution::from_masses(votes(x)); }

  void observe(InstanceId x, LabelId yhat, const Feedback& fb) override {
    require_model(fb, FeedbackModel::Set);
    const LabelSet S = std::get<SetFeedback>(fb).truth;
    const bool mistake = !S.contains(yhat);
    for (HypothesisId h = 0; h < cls_.num_hypotheses(); ++h) {
      const bool exact = cls_.output(h, x) == S;
      if (mistake && exact) ++lw_[h];
      else if (!mistake && !exact) --lw_[h];
    }
  }

  std::unique_ptr<Learner> clone() const override { return std::make_unique<SvwmLearner>(*this); }

  const std::vector<std::int64_t>& log2_weights() const { return lw_; }
  void set_log2_weights(std::vector<std::int64_t> lw) {
    if (lw.size() != cls_.num_hypotheses()) throw Error(ErrorCode::InvalidArgument, "one log-weight per hypothesis");
    lw_ = std::move(lw);
  }

  double total_weight() const {
    CompensatedSum s;
    for (auto l : lw_) s.add(std::ldexp(1.0, static_cast<int>(l)));
    return s.value();
  }

  /// Exact E[W'] for the next round given (x, S), in closed form over the learner's own draw:
  /// W + P(miss)·Σ_{h(x)=S} w(h) − P(hit)·Σ_{h(x)≠S} w(h)/2.
  double expected_weight_step(InstanceId x, LabelSet S) const {
    const auto p = predict(x);
    const double miss = p.mass_outside(S);
    CompensatedSum same, other;
    for (HypothesisId h = 0; h < cls_.num_hypotheses(); ++h) {
      const double w = std::ldexp(1.0, static_cast<int>(lw_[h]));
      (cls_.output(h, x) == S ? same : other).add(w);
    }
    CompensatedSum next;
    next.add(total_weight());
    next.add(miss * same.value());
    next.add(-(1.0 - miss) * other.value() / 2.0);
    return next.value();
  }

 private:
  HypothesisClass cls_;
  std::vector<std::int64_t> lw_;
};

/// Σ_t (1[ŷ_t ∉ S_t] − 1[h(x_t) ≠ S_t]); throws IdentityViolation unless it equals the
/// final log₂-weight of h.
inline std::int64_t svwm_regret_identity(const Transcript& tr, const HypothesisClass& cls, HypothesisId h,
                                         const std::vector<std::int64_t>& final_log2_weights) {
  std::int64_t r = 0;
  for (const auto& round : tr.rounds)
    r += (round.truth.contains(round.yhat) ? 0 : 1) - (cls.output(h, round.x) != round.truth ? 1 : 0);
  if (r != final_log2_weights.at(h))
    throw Error(ErrorCode::IdentityViolation, "regret " + std::to_string(r) + " vs log2 weight " +
                                                  std::to_string(final_log2_weights.at(h)));
  return r;
}

}  // namespace mlonline
