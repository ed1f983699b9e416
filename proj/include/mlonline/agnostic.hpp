#pragma once

#include <cmath>
#include <memory>
#include <optional>

#include "mlonline/exp4.hpp"
#include "mlonline/experts.hpp"
#include "mlonline/learner.hpp"

namespace mlonline {

/// EXP4 over mistake-known SOA experts plus the uniform expert.
///
/// Under mistake-known feedback the reward is 1 − b. Under mistake-unknown feedback the bit is
/// not available and the reward used is 1[ŷ = y], a lower bound on 1[ŷ ∈ S].
struct Exp4Params {
  std::optional<std::size_t> d;   // default: LDK of the class
  std::optional<double> gamma;    // default: exp4_default_gamma
  std::size_t max_experts = kDefaultMaxExperts;
};

/// Point-mass advice from core experts, followed by the uniform expert.
struct LabelAdvice {
  const std::vector<LabelId>& labels;
  std::size_t K;
  double operator()(std::size_t i, LabelId j) const {
    if (i >= labels.size()) return 1.0 / static_cast<double>(K);
    return labels[i] == j ? 1.0 : 0.0;
  }
};

class Exp4Learner final : public Learner {
 public:
  using Params = Exp4Params;

  Exp4Learner(std::shared_ptr<DimensionEngine> engine, FeedbackModel model, std::size_t horizon, Params params = {})
      : model_(model),
        K_(engine->hypothesis_class().num_labels()),
        pool_(engine, FeedbackModel::Known, horizon,
              params.d ? *params.d : engine->ldk(engine->hypothesis_class().everyone()), true, params.max_experts),
        exp4_(pool_.size(), K_, params.gamma ? *params.gamma : exp4_default_gamma(K_, pool_.size(), horizon)) {
    if (model == FeedbackModel::Set) throw Error(ErrorCode::ModelMismatch, "EXP4 pipeline expects label feedback");
  }

  std::string name() const override { return "exp4"; }
  FeedbackModel model() const override { return model_; }

  PredictionDistribution predict(InstanceId x) const override { return cached(x).p; }

  void observe(InstanceId x, LabelId yhat, const Feedback& fb) override {
    require_model(fb, model_);
    const Round r = cached(x);
    cache_.reset();
    const auto& labels = r.labels;
    const auto& p = r.p;
    double reward = 0.0;
    if (auto* k = std::get_if<KnownFeedback>(&fb)) reward = k->mistake ? 0.0 : 1.0;
    else reward = std::get<UnknownFeedback>(fb).y == yhat ? 1.0 : 0.0;
    exp4_.update(LabelAdvice{labels, K_}, p, yhat, reward);
    pool_.update(x, fb);
  }

  std::unique_ptr<Learner> clone() const override { return std::make_unique<Exp4Learner>(*this); }

  const ExpertPool& pool() const { return pool_; }
  const Exp4& core() const { return exp4_; }

 private:
  struct Round {
    InstanceId x;
    std::vector<LabelId> labels;
    PredictionDistribution p;
  };

  // predict and observe see the same state within a round; compute the mixture once
  const Round& cached(InstanceId x) const {
    if (!cache_ || cache_->x != x) {
      auto labels = pool_.advise(x);
      auto p = exp4_.mix(LabelAdvice{labels, K_});
      cache_ = Round{x, std::move(labels), std::move(p)};
    }
    return *cache_;
  }

  FeedbackModel model_;
  std::size_t K_;
  ExpertPool pool_;
  Exp4 exp4_;
  mutable std::optional<Round> cache_;
};

/// η = √(2 ln N / T); needs T > 2 ln N.
inline double wmu_default_eta(std::size_t N, std::size_t T) {
  const double lnN = std::log(static_cast<double>(N));
  if (!(static_cast<double>(T) > 2.0 * lnN))
    throw Error(ErrorCode::HorizonTooShort, "T = " + std::to_string(T) + " <= 2 ln N = " + std::to_string(2.0 * lnN) +
                                                "; pass an explicit eta");
  return std::sqrt(2.0 * lnN / static_cast<double>(T));
}

/// Exponential weights over set-valued SOA experts. S_t reveals every expert's loss, so all
/// weights are updated each round: w_i ← w_i · e^{−η·1[E_i(x) ∉ S]}.
struct WmuParams {
  std::optional<std::size_t> d;  // default: LDS of the class
  std::optional<double> eta;     // default: wmu_default_eta
  std::size_t max_experts = kDefaultMaxExperts;
};

class WmuLearner final : public Learner {
 public:
  using Params = WmuParams;

  WmuLearner(std::shared_ptr<DimensionEngine> engine, std::size_t horizon, Params params = {})
      : K_(engine->hypothesis_class().num_labels()),
        pool_(engine, FeedbackModel::Set, horizon, params.d ? *params.d : default_d(*engine), false, params.max_experts),
        log_w_(pool_.size(), 0.0),
        eta_(params.eta ? *params.eta : wmu_default_eta(pool_.size(), horizon)) {
    if (!(eta_ >= 0.0) || !std::isfinite(eta_)) throw Error(ErrorCode::InvalidArgument, "eta must be finite and >= 0");
  }

  std::string name() const override { return "wmu"; }
  FeedbackModel model() const override { return FeedbackModel::Set; }

  PredictionDistribution predict(InstanceId x) const override {
    const auto labels = pool_.advise(x);
    const double top = *std::max_element(log_w_.begin(), log_w_.end());
    std::vector<double> mass(K_, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) mass[labels[i]] += std::exp(log_w_[i] - top);
    return PredictionDistribution::from_masses(std::move(mass));
  }

  void observe(InstanceId x, LabelId, const Feedback& fb) override {
    require_model(fb, FeedbackModel::Set);
    const LabelSet S = std::get<SetFeedback>(fb).truth;
    const auto labels = pool_.advise(x);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!S.contains(labels[i])) log_w_[i] -= eta_;
    pool_.update(x, fb);
  }

  std::unique_ptr<Learner> clone() const override { return std::make_unique<WmuLearner>(*this); }
  bool adapts_to_own_predictions() const override { return false; }

  double eta() const { return eta_; }
  const std::vector<double>& log_weights() const { return log_w_; }
  const ExpertPool& pool() const { return pool_; }

 private:
  static std::size_t default_d(DimensionEngine& eng) {
    const auto d = eng.lds(eng.hypothesis_class().everyone());
    if (d == kUnbounded) throw Error(ErrorCode::UnboundedDimension, "set-valued dimension is unbounded; pass d");
    return d;
  }

  std::size_t K_;
  ExpertPool pool_;
  std::vector<double> log_w_;
  double eta_;
};

}  // namespace mlonline
