#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mlonline/learner.hpp"

namespace mlonline {

/// One labeled example: the instance, its acceptable set, and (for label feedback) a revealed label.
struct Example {
  InstanceId x = 0;
  LabelSet truth;
  std::optional<LabelId> y;
};

inline Feedback feedback_for(FeedbackModel model, const Example& e, LabelId yhat) {
  if (model == FeedbackModel::Set) return SetFeedback{e.truth};
  if (!e.y) throw Error(ErrorCode::InvalidArgument, "label feedback needs a revealed label");
  if (model == FeedbackModel::Known) return KnownFeedback{*e.y, !e.truth.contains(yhat)};
  return UnknownFeedback{*e.y};
}

/// (1 + Σℓ + 12 ln(2 ln m / δ)) / m. ln m is floored at 1 so the bound stays defined for m < e.
inline double o2b_bound(std::size_t m, double online_loss, double delta) {
  if (m == 0) throw Error(ErrorCode::EmptySample, "bound needs m >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  const double lnm = std::max(1.0, std::log(static_cast<double>(m)));
  return (1.0 + online_loss + 12.0 * std::log(2.0 * lnm / delta)) / static_cast<double>(m);
}

/// The averaged predictor x ↦ Unif(f_1(x), …, f_m(x)), where f_t is the online learner after the
/// first t−1 examples. Holds every prefix predictor's distribution on the (finite) domain.
class O2bPredictor {
 public:
  O2bPredictor(std::vector<std::vector<PredictionDistribution>> table, std::vector<bool> online_losses)
      : table_(std::move(table)), losses_(std::move(online_losses)) {}

  std::size_t m() const { return table_.size(); }
  const std::vector<bool>& online_losses() const { return losses_; }
  std::size_t total_online_loss() const { return static_cast<std::size_t>(std::count(losses_.begin(), losses_.end(), true)); }
  const PredictionDistribution& prefix(std::size_t t, InstanceId x) const { return table_.at(t).at(x); }

  PredictionDistribution predict(InstanceId x) const {
    std::vector<double> p(table_.front()[x].size(), 0.0);
    for (const auto& row : table_)
      for (std::size_t y = 0; y < p.size(); ++y) p[y] += row[x][y];
    for (auto& v : p) v /= static_cast<double>(table_.size());
    return PredictionDistribution::from_masses(std::move(p));
  }

  /// Draws t uniformly, then a label from f_t(x).
  LabelId sample(InstanceId x, Rng& rng) const {
    const auto t = uniform_index(rng, table_.size());
    return mlonline::sample(table_[t][x], rng);
  }

  /// Exact probability (over the predictor's randomness) of a label outside `truth`.
  double error_on(InstanceId x, LabelSet truth) const { return predict(x).mass_outside(truth); }

 private:
  std::vector<std::vector<PredictionDistribution>> table_;  // [t][x]
  std::vector<bool> losses_;
};

/// Runs a fresh copy of `prototype` through the sample, recording f_t on the whole domain before
/// each step and the online loss 1[ŷ_t ∉ S_t] of the sampled prediction.
inline O2bPredictor o2b_wrap(const Learner& prototype, std::size_t num_instances, const std::vector<Example>& sample,
                             Rng& rng) {
  if (sample.empty()) throw Error(ErrorCode::EmptySample, "online-to-batch needs at least one example");
  auto learner = prototype.clone();
  std::vector<std::vector<PredictionDistribution>> table;
  std::vector<bool> losses;
  table.reserve(sample.size());
  for (const auto& e : sample) {
    std::vector<PredictionDistribution> row;
    row.reserve(num_instances);
    for (InstanceId x = 0; x < num_instances; ++x) row.push_back(learner->predict(x));
    const LabelId yhat = mlonline::sample(row[e.x], rng);
    losses.push_back(!e.truth.contains(yhat));
    learner->observe(e.x, yhat, feedback_for(learner->model(), e, yhat));
    table.push_back(std::move(row));
  }
  return O2bPredictor(std::move(table), std::move(losses));
}

}  // namespace mlonline
