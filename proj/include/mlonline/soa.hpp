#pragma once

#include <cstdint>
#include <limits>
#include <memory>

#include "mlonline/dimensions.hpp"
#include "mlonline/learner.hpp"

namespace mlonline {

// Pure SOA decision rules: the prediction is a function of (V, μ, x) only, which is what lets
// expert pools share one cache across thousands of experts.
namespace soa {

// max over nonempty children; -1 when there are none.
using Score = std::int64_t;

inline Score as_score(Dimension d) { return d == kUnbounded ? std::numeric_limits<Score>::max() / 2 : Score{d}; }

inline LabelId argmin_label(const std::vector<Score>& scores) {
  LabelId best = 0;
  for (LabelId y = 1; y < scores.size(); ++y)
    if (scores[y] < scores[best]) best = y;
  return best;
}

inline std::optional<LabelId> intersection_label(const DimensionEngine& eng, const HypSet& V, InstanceId x) {
  return intersection_at(eng.hypothesis_class(), V, x).lowest();
}

inline LabelId predict_unknown(DimensionEngine& eng, const HypSet& V, const Offsets& mu, InstanceId x) {
  const auto ny = eng.hypothesis_class().num_labels();
  std::vector<Score> scores(ny, -1);
  for (LabelId yhat = 0; yhat < ny; ++yhat)
    for (LabelId r = 0; r < ny; ++r) {
      HypSet child = eng.unknown_child(V, x, r);
      if (child.empty()) continue;
      scores[yhat] = std::max(scores[yhat], as_score(eng.ldu(child, eng.bump_offsets(child, mu, x, yhat))));
    }
  return argmin_label(scores);
}

inline LabelId predict_known(DimensionEngine& eng, const HypSet& V, InstanceId x) {
  if (eng.ldk(V) == 0)
    if (auto y = intersection_label(eng, V, x)) return *y;
  const auto ny = eng.hypothesis_class().num_labels();
  std::vector<Score> scores(ny, -1);
  for (LabelId yhat = 0; yhat < ny; ++yhat)
    for (LabelId r = 0; r < ny; ++r) {
      HypSet child = eng.known_child(V, x, r, yhat, true);
      if (!child.empty()) scores[yhat] = std::max(scores[yhat], as_score(eng.ldk(child)));
    }
  return argmin_label(scores);
}

inline LabelId predict_set(DimensionEngine& eng, const HypSet& V, InstanceId x) {
  if (eng.lds(V) == 0)
    if (auto y = intersection_label(eng, V, x)) return *y;
  const auto ny = eng.hypothesis_class().num_labels();
  std::vector<Score> scores(ny, -1);
  for (const auto& [out, members] : eng.output_groups(x)) {
    HypSet child = V & members;
    if (child.empty()) continue;
    const Score s = as_score(eng.lds(child));
    for (LabelId yhat = 0; yhat < ny; ++yhat)
      if (!out.contains(yhat)) scores[yhat] = std::max(scores[yhat], s);
  }
  return argmin_label(scores);
}

// V^{(S, ŷ)} on a mistake equals {h : h(x) = S}, and a correct round keeps exactly those
// hypotheses too, so the set-valued update does not depend on ŷ.
inline HypSet update_set(const DimensionEngine& eng, const HypSet& V, InstanceId x, LabelSet S) {
  return eng.set_child(V, x, S);
}

}  // namespace soa

/// Deterministic SOA learner for one feedback model. With `agnostic` set, an emptied version
/// space restarts from the full class instead of raising RealizabilityViolated.
class SoaLearner final : public Learner {
 public:
  SoaLearner(std::shared_ptr<DimensionEngine> engine, FeedbackModel model, bool agnostic = false)
      : eng_(std::move(engine)), model_(model), agnostic_(agnostic) {
    reset();
  }

  std::string name() const override { return "soa"; }
  FeedbackModel model() const override { return model_; }

  PredictionDistribution predict(InstanceId x) const override {
    return PredictionDistribution::point_mass(num_labels(), predict_label(x));
  }

  LabelId predict_label(InstanceId x) const {
    switch (model_) {
      case FeedbackModel::Unknown: return soa::predict_unknown(*eng_, V_, mu_, x);
      case FeedbackModel::Known: return soa::predict_known(*eng_, V_, x);
      case FeedbackModel::Set: return soa::predict_set(*eng_, V_, x);
    }
    return 0;
  }

  void observe(InstanceId x, LabelId yhat, const Feedback& fb) override {
    require_model(fb, model_);
    HypSet next;
    Offsets next_mu;
    if (auto* u = std::get_if<UnknownFeedback>(&fb)) {
      next = eng_->unknown_child(V_, x, u->y);
      next_mu = eng_->bump_offsets(next, mu_, x, yhat);
    } else if (auto* k = std::get_if<KnownFeedback>(&fb)) {
      next = eng_->known_child(V_, x, k->y, yhat, k->mistake);
    } else {
      next = soa::update_set(*eng_, V_, x, std::get<SetFeedback>(fb).truth);
    }
    if (next.empty()) {
      if (!agnostic_)
        throw Error(ErrorCode::RealizabilityViolated, "feedback is inconsistent with every surviving hypothesis");
      ++restarts_;
      reset();
      return;
    }
    V_ = std::move(next);
    if (model_ == FeedbackModel::Unknown) mu_ = std::move(next_mu);
  }

  std::unique_ptr<Learner> clone() const override { return std::make_unique<SoaLearner>(*this); }

  const HypSet& version_space() const { return V_; }
  const Offsets& offsets() const { return mu_; }
  std::size_t restarts() const { return restarts_; }

  /// The potential the mistake bound is proved with: LDU(V, μ), LDK(V) or LDS(V).
  Dimension potential() const { return eng_->dimension(model_, V_, &mu_); }

 private:
  void reset() {
    V_ = eng_->hypothesis_class().everyone();
    mu_.assign(eng_->hypothesis_class().num_hypotheses(), 0);
  }
  std::size_t num_labels() const { return eng_->hypothesis_class().num_labels(); }

  std::shared_ptr<DimensionEngine> eng_;
  FeedbackModel model_;
  bool agnostic_;
  HypSet V_;
  Offsets mu_;
  std::size_t restarts_ = 0;
};

}  // namespace mlonline
