#pragma once

#include <memory>
#include <string>

#include "mlonline/core.hpp"

namespace mlonline {

/// The learner side of the game. predict() must not change state; observe() is called once per
/// round, after predict(), with the realized prediction and the model's feedback view.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string name() const = 0;
  virtual FeedbackModel model() const = 0;
  virtual PredictionDistribution predict(InstanceId x) const = 0;
  virtual void observe(InstanceId x, LabelId yhat, const Feedback& fb) = 0;
  virtual std::unique_ptr<Learner> clone() const = 0;

  /// False when future predictions depend only on instances and feedback, never on the
  /// learner's own realized predictions. Lets probes skip Monte Carlo resampling.
  virtual bool adapts_to_own_predictions() const { return true; }
};

class UniformLearner final : public Learner {
 public:
  UniformLearner(std::size_t num_labels, FeedbackModel model) : num_labels_(num_labels), model_(model) {}

  std::string name() const override { return "uniform"; }
  FeedbackModel model() const override { return model_; }
  PredictionDistribution predict(InstanceId) const override { return PredictionDistribution::uniform(num_labels_); }
  void observe(InstanceId, LabelId, const Feedback& fb) override { require_model(fb, model_); }
  std::unique_ptr<Learner> clone() const override { return std::make_unique<UniformLearner>(*this); }
  bool adapts_to_own_predictions() const override { return false; }

 private:
  std::size_t num_labels_;
  FeedbackModel model_;
};

/// Repeats the last revealed label (lowest member of the last revealed set); label 0 before any feedback.
class FollowLastLabel final : public Learner {
 public:
  FollowLastLabel(std::size_t num_labels, FeedbackModel model) : num_labels_(num_labels), model_(model) {}

  std::string name() const override { return "follow_last"; }
  FeedbackModel model() const override { return model_; }
  PredictionDistribution predict(InstanceId) const override { return PredictionDistribution::point_mass(num_labels_, last_); }

  void observe(InstanceId, LabelId, const Feedback& fb) override {
    require_model(fb, model_);
    if (auto* u = std::get_if<UnknownFeedback>(&fb)) last_ = u->y;
    else if (auto* k = std::get_if<KnownFeedback>(&fb)) last_ = k->y;
    else if (auto low = std::get<SetFeedback>(fb).truth.lowest()) last_ = *low;
  }

  std::unique_ptr<Learner> clone() const override { return std::make_unique<FollowLastLabel>(*this); }
  bool adapts_to_own_predictions() const override { return false; }

 private:
  std::size_t num_labels_;
  FeedbackModel model_;
  LabelId last_ = 0;
};

}  // namespace mlonline
