#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlonline/certificate.hpp"
#include "mlonline/learner.hpp"
#include "mlonline/svwm.hpp"

namespace mlonline {

/// What an adaptive adversary may look at when fixing S_t: the instance, the learner's mixed
/// prediction, and the realized label. The built-in adaptive adversaries read only `p`.
struct RoundView {
  std::size_t t;
  InstanceId x;
  const PredictionDistribution& p;
  LabelId yhat;
};

struct Resolution {
  LabelSet truth;
  std::optional<LabelId> y;
};

class Adversary {
 public:
  virtual ~Adversary() = default;

  virtual std::string name() const = 0;
  /// True when outputs never depend on the learner's realized predictions.
  virtual bool oblivious() const = 0;

  /// Called once before round 0 with a copy of the learner it will face (used by probes).
  virtual void prepare(const Learner&, FeedbackModel, std::size_t /*horizon*/) {}

  virtual InstanceId next_instance(std::size_t t) = 0;
  virtual Resolution resolve(const RoundView& view) = 0;

  /// Truth sets fixed after the game (one per round), for adversaries that commit to the
  /// realizing hypothesis only once the learner's path is known. The revealed labels are unchanged.
  virtual std::optional<std::vector<LabelSet>> revised_truth() const { return std::nullopt; }
};

inline LabelId uniform_member(LabelSet s, Rng& rng) {
  const auto members = s.members();
  return members[uniform_index(rng, members.size())];
}

// ---------------------------------------------------------------------------------------------

/// Walks a shattering certificate along the learner's realized predictions, then pads with the
/// truth of the first surviving witness. Streams are realizable by construction.
class ReplayAdversary final : public Adversary {
 public:
  ReplayAdversary(HypothesisClass cls, ShatteringCertificate cert) : cls_(std::move(cls)), cert_(std::move(cert)) {
    if (cert_.version_space.universe() != cls_.num_hypotheses() || cert_.offsets.size() != cls_.num_hypotheses())
      throw Error(ErrorCode::MalformedCertificate, "certificate does not belong to this class");
    node_ = &cert_.root;
    alive_.assign(cls_.num_hypotheses(), 0);
    cert_.version_space.for_each([&](HypothesisId h) { alive_[h] = 1; });
    mistakes_.assign(cls_.num_hypotheses(), 0);
    for (HypothesisId h = 0; h < cls_.num_hypotheses(); ++h) mistakes_[h] = cert_.offsets[h];
  }

  std::string name() const override { return "replay"; }
  bool oblivious() const override { return false; }

  void prepare(const Learner&, FeedbackModel model, std::size_t) override {
    if (model != cert_.model)
      throw Error(ErrorCode::ModelMismatch, "certificate is for the " + std::string(to_string(cert_.model)) +
                                                " model, game is " + std::string(to_string(model)));
  }

  InstanceId next_instance(std::size_t) override {
    InstanceId x = node_->leaf() ? padding_instance() : *node_->x;
    xs_.push_back(x);
    return x;
  }

  Resolution resolve(const RoundView& v) override {
    if (node_->leaf()) {
      const LabelSet S = cls_.output(witness(), v.x);
      if (cert_.model == FeedbackModel::Set) return {S, std::nullopt};
      return {S, S.lowest()};
    }
    const CertChild& c = node_->children.at(v.yhat);
    for (HypothesisId h = 0; h < cls_.num_hypotheses(); ++h) {
      if (!alive_[h]) continue;
      const LabelSet out = cls_.output(h, v.x);
      const bool miss = !out.contains(v.yhat);
      switch (cert_.model) {
        case FeedbackModel::Set: alive_[h] = out == c.truth && miss; break;
        case FeedbackModel::Known: alive_[h] = out.contains(c.y) && miss; break;
        case FeedbackModel::Unknown:
          alive_[h] = out.contains(c.y);
          mistakes_[h] += miss ? 1U : 0U;
          break;
      }
    }
    node_ = &c.node;
    if (cert_.model == FeedbackModel::Set) return {c.truth, std::nullopt};
    // Provisional truth; the final witness is fixed in revised_truth().
    return {cls_.output(witness(), v.x), c.y};
  }

  std::optional<std::vector<LabelSet>> revised_truth() const override {
    if (cert_.model == FeedbackModel::Set) return std::nullopt;
    std::vector<LabelSet> out;
    const HypothesisId h = witness();
    for (auto x : xs_) out.push_back(cls_.output(h, x));
    return out;
  }

  /// The surviving hypothesis with the most charged mistakes (lowest index on ties).
  HypothesisId witness() const {
    std::optional<HypothesisId> best;
    for (HypothesisId h = 0; h < cls_.num_hypotheses(); ++h)
      if (alive_[h] && (!best || mistakes_[h] > mistakes_[*best])) best = h;
    if (!best) throw Error(ErrorCode::MalformedCertificate, "no hypothesis realizes the replayed path");
    return *best;
  }

 private:
  InstanceId padding_instance() const {
    const HypothesisId h = witness();
    if (cert_.root.x && !cls_.output(h, *cert_.root.x).empty()) return *cert_.root.x;
    for (InstanceId x = 0; x < cls_.num_instances(); ++x)
      if (!cls_.output(h, x).empty()) return x;
    if (cert_.model == FeedbackModel::Set) return cert_.root.x.value_or(0);
    throw Error(ErrorCode::EmptyTruthSet, "witness maps every instance to the empty set");
  }

  HypothesisClass cls_;
  ShatteringCertificate cert_;
  const CertNode* node_;
  std::vector<char> alive_;
  std::vector<std::uint32_t> mistakes_;
  std::vector<InstanceId> xs_;
};

// ---------------------------------------------------------------------------------------------

enum class InstanceRule { Cycle, Uniform };
enum class LabelRule { Uniform, Lowest };

/// S_t = h*(x_t) for a fixed h*.
class RealizableAdversary final : public Adversary {
 public:
  RealizableAdversary(HypothesisClass cls, HypothesisId target, InstanceRule instances, LabelRule labels,
                      std::uint64_t seed)
      : cls_(std::move(cls)), h_(target), instances_(instances), labels_(labels), rng_(seed) {
    if (h_ >= cls_.num_hypotheses()) throw Error(ErrorCode::InvalidArgument, "hypothesis index out of range");
  }

  std::string name() const override { return "realizable"; }
  bool oblivious() const override { return true; }
  void prepare(const Learner&, FeedbackModel model, std::size_t) override { model_ = model; }

  InstanceId next_instance(std::size_t t) override {
    return instances_ == InstanceRule::Cycle ? static_cast<InstanceId>(t % cls_.num_instances())
                                             : static_cast<InstanceId>(uniform_index(rng_, cls_.num_instances()));
  }

  Resolution resolve(const RoundView& v) override {
    const LabelSet S = cls_.output(h_, v.x);
    if (model_ == FeedbackModel::Set) return {S, std::nullopt};
    if (S.empty()) throw Error(ErrorCode::EmptyTruthSet, "h*(x) is empty; no label can be revealed");
    return {S, labels_ == LabelRule::Lowest ? *S.lowest() : uniform_member(S, rng_)};
  }

 private:
  HypothesisClass cls_;
  HypothesisId h_;
  InstanceRule instances_;
  LabelRule labels_;
  Rng rng_;
  FeedbackModel model_ = FeedbackModel::Set;
};

// ---------------------------------------------------------------------------------------------

/// I.i.d. draws of (x, S) from a finite distribution; the revealed label is uniform in S.
class StochasticAdversary final : public Adversary {
 public:
  struct Outcome {
    InstanceId x;
    LabelSet truth;
    double p;
  };

  StochasticAdversary(std::vector<Outcome> outcomes, std::uint64_t seed) : outcomes_(std::move(outcomes)), rng_(seed) {
    if (outcomes_.empty()) throw Error(ErrorCode::InvalidArgument, "stochastic adversary needs outcomes");
    std::vector<double> p;
    for (const auto& o : outcomes_) p.push_back(o.p);
    dist_ = PredictionDistribution(std::move(p));
  }

  std::string name() const override { return "stochastic"; }
  bool oblivious() const override { return true; }
  void prepare(const Learner&, FeedbackModel model, std::size_t) override {
    model_ = model;
    if (model != FeedbackModel::Set)
      for (const auto& o : outcomes_)
        if (o.p > 0 && o.truth.empty()) throw Error(ErrorCode::EmptyTruthSet, "an outcome has an empty set");
  }

  InstanceId next_instance(std::size_t) override {
    current_ = mlonline::sample(dist_, rng_);
    return outcomes_[current_].x;
  }

  Resolution resolve(const RoundView&) override {
    const LabelSet S = outcomes_[current_].truth;
    if (model_ == FeedbackModel::Set) return {S, std::nullopt};
    return {S, uniform_member(S, rng_)};
  }

 private:
  std::vector<Outcome> outcomes_;
  PredictionDistribution dist_;
  Rng rng_;
  std::size_t current_ = 0;
  FeedbackModel model_ = FeedbackModel::Set;
};

// ---------------------------------------------------------------------------------------------

/// Adaptive heuristic: cycle instances, and pick the hypothesis output S that the learner's
/// current distribution is most likely to miss. Reads p_t only, never the realized ŷ_t.
class GreedyAdversary final : public Adversary {
 public:
  GreedyAdversary(HypothesisClass cls, std::uint64_t seed) : cls_(std::move(cls)), rng_(seed) {}

  std::string name() const override { return "greedy"; }
  bool oblivious() const override { return false; }
  void prepare(const Learner&, FeedbackModel model, std::size_t) override { model_ = model; }

  InstanceId next_instance(std::size_t t) override { return static_cast<InstanceId>(t % cls_.num_instances()); }

  Resolution resolve(const RoundView& v) override {
    std::optional<LabelSet> best;
    double best_miss = -1.0;
    for (HypothesisId h = 0; h < cls_.num_hypotheses(); ++h) {
      const LabelSet S = cls_.output(h, v.x);
      if (model_ != FeedbackModel::Set && S.empty()) continue;
      const double miss = v.p.mass_outside(S);
      if (miss > best_miss + 1e-15) {
        best_miss = miss;
        best = S;
      }
    }
    if (!best) throw Error(ErrorCode::EmptyTruthSet, "every hypothesis output at x is empty");
    if (model_ == FeedbackModel::Set) return {*best, std::nullopt};
    return {*best, uniform_member(*best, rng_)};
  }

 private:
  HypothesisClass cls_;
  Rng rng_;
  FeedbackModel model_ = FeedbackModel::Set;
};

// ---------------------------------------------------------------------------------------------

/// Target choice for the linear-regret construction.
enum class TargetRule {
  ArgmaxLoad,  // ŷ = argmax_y L_y, the textbook rule
  MaxRegret,   // ŷ maximizing the learner's expected regret on the drawn y-sequence
};

/// The linear-regret adversary on a singleton-domain class with complement hypotheses
/// h_i(x) = Y \ {i}. Draws y_1..y_T uniformly, probes the learner on that y-stream for
/// L_y = Σ_t Pr[ŷ_t = y], fixes a target ŷ, then plays S_t = {ŷ} if y_t = ŷ else h_ŷ(x).
///
/// Under mistake-unknown feedback the learner only sees y_t, so its behavior during the real game
/// has the same law as during the probe; the adversary is oblivious.
class H3LinearAdversary final : public Adversary {
 public:
  H3LinearAdversary(HypothesisClass cls, std::uint64_t seed, TargetRule rule = TargetRule::ArgmaxLoad,
                    std::size_t probe_runs = 200)
      : cls_(std::move(cls)), rng_(seed), rule_(rule), probe_runs_(probe_runs) {
    if (cls_.num_instances() != 1) throw Error(ErrorCode::ShapeMismatch, "needs a singleton domain");
    const auto ny = cls_.num_labels();
    for (LabelId i = 0; i < ny; ++i) {
      const LabelSet want = cls_.alphabet() - LabelSet::single(i);
      std::optional<HypothesisId> found;
      for (HypothesisId h = 0; h < cls_.num_hypotheses() && !found; ++h)
        if (cls_.output(h, 0) == want) found = h;
      if (!found) throw Error(ErrorCode::ShapeMismatch, "no hypothesis excludes exactly label " + cls_.label_names()[i]);
      complement_.push_back(*found);
    }
    if (probe_runs_ == 0) throw Error(ErrorCode::InvalidArgument, "probe_runs must be positive");
  }

  std::string name() const override { return "h3_linear"; }
  bool oblivious() const override { return true; }

  void prepare(const Learner& learner, FeedbackModel model, std::size_t horizon) override {
    if (model != FeedbackModel::Unknown) throw Error(ErrorCode::ModelMismatch, "the construction is for mistake-unknown feedback");
    const auto ny = cls_.num_labels();
    ys_.clear();
    for (std::size_t t = 0; t < horizon; ++t) ys_.push_back(static_cast<LabelId>(uniform_index(rng_, ny)));
    probe(learner, horizon);

    L_.assign(ny, 0.0);
    for (const auto& p : probs_)
      for (LabelId y = 0; y < ny; ++y) L_[y] += p[y];
    std::vector<double> score(ny);
    for (LabelId y = 0; y < ny; ++y) score[y] = rule_ == TargetRule::ArgmaxLoad ? L_[y] : expected_loss_for(y) - count(y);
    target_ = 0;
    for (LabelId y = 1; y < ny; ++y)
      if (score[y] > score[target_] + 1e-12) target_ = y;
  }

  InstanceId next_instance(std::size_t) override { return 0; }

  Resolution resolve(const RoundView& v) override {
    const LabelId y = ys_.at(v.t);
    const LabelSet S = y == target_ ? LabelSet::single(target_) : cls_.output(complement_[target_], 0);
    return {S, y};
  }

  LabelId target() const { return target_; }
  const std::vector<double>& loads() const { return L_; }
  const std::vector<LabelId>& labels() const { return ys_; }
  /// Whether the probe was exact (deterministic or prediction-independent learner).
  bool exact_probe() const { return exact_; }

  /// Σ_t [1[y_t ≠ ŷ] p_t(ŷ) + 1[y_t = ŷ] (1 − p_t(ŷ))] for the chosen target.
  double expected_learner_loss() const { return expected_loss_for(target_); }
  /// Σ_t 1[y_t = ŷ], the loss of h_ŷ on the stream.
  double comparator_loss() const { return count(target_); }

 private:
  void probe(const Learner& learner, std::size_t horizon) {
    const auto ny = cls_.num_labels();
    probs_.assign(horizon, std::vector<double>(ny, 0.0));
    Rng probe_rng(rng_());
    auto run = [&](bool& all_points) {
      auto copy = learner.clone();
      for (std::size_t t = 0; t < horizon; ++t) {
        const auto p = copy->predict(0);
        all_points = all_points && p.point().has_value();
        for (LabelId y = 0; y < ny; ++y) probs_[t][y] += p[y];
        copy->observe(0, mlonline::sample(p, probe_rng), UnknownFeedback{ys_[t]});
      }
    };
    bool all_points = true;
    run(all_points);
    exact_ = all_points || !learner.adapts_to_own_predictions();
    if (exact_) return;
    for (std::size_t r = 1; r < probe_runs_; ++r) {
      bool ignored = true;
      run(ignored);
    }
    for (auto& row : probs_)
      for (auto& v : row) v /= static_cast<double>(probe_runs_);
  }

  double count(LabelId y) const { return static_cast<double>(std::count(ys_.begin(), ys_.end(), y)); }

  double expected_loss_for(LabelId target) const {
    double total = 0.0;
    for (std::size_t t = 0; t < ys_.size(); ++t)
      total += ys_[t] == target ? 1.0 - probs_[t][target] : probs_[t][target];
    return total;
  }

  HypothesisClass cls_;
  Rng rng_;
  TargetRule rule_;
  std::size_t probe_runs_;
  std::vector<HypothesisId> complement_;
  std::vector<LabelId> ys_;
  std::vector<std::vector<double>> probs_;
  std::vector<double> L_;
  LabelId target_ = 0;
  bool exact_ = true;
};

// ---------------------------------------------------------------------------------------------

struct SvwmOracleOptions {
  bool all_sets = false;  // let the adversary use every S ⊆ Y, not only realized outputs
  std::size_t max_states = 2'000'000;
};

/// Exact worst-case expected regret of SVWM over T rounds by expectimax: the adversary picks
/// (x, S) knowing the weights, the learner's draw resolves to a miss or a hit. Since
/// regret = max_h log₂ w_T(h) on every path, that is the terminal value.
inline double svwm_worstcase_oracle(const HypothesisClass& cls, std::size_t T, SvwmOracleOptions opt = {}) {
  std::vector<std::vector<LabelSet>> choices(cls.num_instances());
  for (InstanceId x = 0; x < cls.num_instances(); ++x) {
    if (opt.all_sets) {
      if (cls.num_labels() > 16) throw Error(ErrorCode::StateBudgetExceeded, "too many labels for all-sets search");
      for (std::uint64_t b = 0; b < (std::uint64_t{1} << cls.num_labels()); ++b) choices[x].push_back(LabelSet::from_bits(b));
    } else {
      for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h) {
        const LabelSet S = cls.output(h, x);
        if (std::find(choices[x].begin(), choices[x].end(), S) == choices[x].end()) choices[x].push_back(S);
      }
    }
  }

  std::map<std::pair<std::vector<std::int64_t>, std::size_t>, double> memo;
  SvwmLearner svwm(cls);
  auto value = [&](auto&& self, const std::vector<std::int64_t>& lw, std::size_t left) -> double {
    if (left == 0) return static_cast<double>(*std::max_element(lw.begin(), lw.end()));
    auto key = std::make_pair(lw, left);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() >= opt.max_states) throw Error(ErrorCode::StateBudgetExceeded, "SVWM oracle state budget");
    svwm.set_log2_weights(lw);
    std::vector<PredictionDistribution> preds;
    for (InstanceId x = 0; x < cls.num_instances(); ++x) preds.push_back(svwm.predict(x));
    double best = -1e300;
    for (InstanceId x = 0; x < cls.num_instances(); ++x)
      for (const LabelSet S : choices[x]) {
        const double miss = preds[x].mass_outside(S);
        std::vector<std::int64_t> on_miss(lw), on_hit(lw);
        for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h) {
          if (cls.output(h, x) == S) ++on_miss[h];
          else --on_hit[h];
        }
        double v = 0.0;
        if (miss > 0.0) v += miss * self(self, on_miss, left - 1);
        if (miss < 1.0) v += (1.0 - miss) * self(self, on_hit, left - 1);
        best = std::max(best, v);
      }
    memo.emplace(std::move(key), best);
    return best;
  };
  return value(value, std::vector<std::int64_t>(cls.num_hypotheses(), 0), T);
}

}  // namespace mlonline
