#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "mlonline/core.hpp"

namespace mlonline {

/// γ = √(K ln N / ((e−1) T)), clipped into (0, 1].
inline double exp4_default_gamma(std::size_t K, std::size_t N, std::size_t T) {
  if (T == 0 || N <= 1) return 1.0;
  const double g = std::sqrt(static_cast<double>(K) * std::log(static_cast<double>(N)) /
                             ((std::numbers::e - 1.0) * static_cast<double>(T)));
  return std::clamp(g, 1e-9, 1.0);
}

/// EXP4 over N experts and K actions: mixture with γ-uniform exploration, importance-weighted
/// reward estimate on the played action, multiplicative update. Weights are kept as natural logs.
class Exp4 {
 public:
  Exp4(std::size_t num_experts, std::size_t num_actions, double gamma)
      : log_w_(num_experts, 0.0), lin_w_(num_experts, 1.0), K_(num_actions), gamma_(gamma) {
    if (num_experts == 0 || num_actions == 0) throw Error(ErrorCode::InvalidArgument, "EXP4 needs experts and actions");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
  }

  double gamma() const { return gamma_; }
  std::size_t num_experts() const { return log_w_.size(); }
  const std::vector<double>& log_weights() const { return log_w_; }

  /// Normalized expert weights w_i / W.
  std::vector<double> weights() const {
    std::vector<double> w = lin_w_;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= total;
    return w;
  }

  /// `advice(i, j)`: probability expert i puts on action j.
  template <class Advice>
  PredictionDistribution mix(Advice&& advice) const {
    std::vector<double> p(K_, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < lin_w_.size(); ++i) {
      total += lin_w_[i];
      for (std::size_t j = 0; j < K_; ++j) p[j] += lin_w_[i] * advice(i, static_cast<LabelId>(j));
    }
    for (auto& v : p) v = gamma_ / static_cast<double>(K_) + (1.0 - gamma_) * v / total;
    return PredictionDistribution(std::move(p));
  }

  PredictionDistribution mix(const std::vector<PredictionDistribution>& advice) const {
    check(advice.size());
    return mix([&](std::size_t i, LabelId j) { return advice[i][j]; });
  }

  /// ln w_i += γ · advice_i(ŷ) · reward / (p_ŷ K), i.e. γ⟨advice_i, x̂⟩/K with x̂_j = reward·1[j=ŷ]/p_j.
  template <class Advice>
  void update(Advice&& advice, const PredictionDistribution& p, LabelId yhat, double reward) {
    if (reward == 0.0) return;
    if (!(p[yhat] > 0.0)) throw Error(ErrorCode::DegenerateProbability, "played an action of probability 0");
    const double scale = gamma_ * reward / (p[yhat] * static_cast<double>(K_));
    // advice values repeat across experts, so reuse the last factor
    double last_a = 0.0, last_f = 1.0, top = 0.0;
    for (std::size_t i = 0; i < log_w_.size(); ++i) {
      const double a = advice(i, yhat);
      if (a != last_a) last_a = a, last_f = std::exp(scale * a);
      log_w_[i] += scale * a;
      top = std::max(top, lin_w_[i] *= last_f);
    }
    if (top > 1e100) rescale();
  }

  void update(const std::vector<PredictionDistribution>& advice, const PredictionDistribution& p, LabelId yhat,
              double reward) {
    check(advice.size());
    update([&](std::size_t i, LabelId j) { return advice[i][j]; }, p, yhat, reward);
  }

 private:
  void check(std::size_t n) const {
    if (n != log_w_.size()) throw Error(ErrorCode::InvalidArgument, "advice count differs from expert count");
  }

  void rescale() {
    const double top = *std::max_element(log_w_.begin(), log_w_.end());
    for (std::size_t i = 0; i < log_w_.size(); ++i) lin_w_[i] = std::exp(log_w_[i] - top);
  }

  std::vector<double> log_w_;
  std::vector<double> lin_w_;  // e^{log_w − c} for a shared c, kept in range by rescale()
  std::size_t K_;
  double gamma_;
};

/// The importance-weighted reward estimate x̂ for a played action.
inline std::vector<double> exp4_reward_estimate(const PredictionDistribution& p, LabelId yhat, double reward) {
  std::vector<double> x(p.size(), 0.0);
  if (!(p[yhat] > 0.0)) throw Error(ErrorCode::DegenerateProbability, "played an action of probability 0");
  x[yhat] = reward / p[yhat];
  return x;
}

}  // namespace mlonline
