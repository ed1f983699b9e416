#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mlonline/core.hpp"

namespace mlonline {

using Dimension = std::uint32_t;
inline constexpr Dimension kUnbounded = std::numeric_limits<Dimension>::max();

/// Per-hypothesis mistake offsets, indexed by hypothesis id over the whole class.
using Offsets = std::vector<std::uint32_t>;

inline std::uint32_t ceil_log2(std::size_t n) {
  return n <= 1 ? 0U : static_cast<std::uint32_t>(std::bit_width(n - 1));
}

inline std::uint32_t floor_log2(std::size_t n) {
  return n == 0 ? 0U : static_cast<std::uint32_t>(std::bit_width(n) - 1);
}

struct EngineLimits {
  std::size_t max_states = 5'000'000;
};

/// Memo key for the mistake-unknown game: version space plus capped offsets on its members.
struct GameState {
  HypSet members;
  std::vector<std::uint32_t> offsets;  // one entry per member, in increasing id order
  std::uint32_t cap = 0;

  bool operator==(const GameState&) const = default;
};

struct GameStateHash {
  std::size_t operator()(const GameState& s) const {
    std::size_t h = s.members.hash() ^ (static_cast<std::size_t>(s.cap) * 0x9E3779B97F4A7C15ULL);
    for (auto o : s.offsets) h = (h ^ o) * 0x100000001B3ULL;
    return h;
  }
};

/// Exact LDS / LDK / LDU(·, μ) of a finite class by memoized least-fixpoint recursion.
///
/// Children of a state are subsets of it (and, for LDU, carry pointwise larger offsets), so
/// the state graph is a DAG apart from self-loops. Each state's value is the least fixpoint of
/// its one-step backup with the already-exact values of its proper children.
///
/// The memo tables persist for the engine's lifetime and are shared by every caller, including
/// the SOA learners. Public queries are serialized by an internal mutex.
class DimensionEngine {
 public:
  explicit DimensionEngine(HypothesisClass cls, EngineLimits limits = {})
      : cls_(std::move(cls)), limits_(limits) {
    const auto nx = cls_.num_instances();
    const auto ny = cls_.num_labels();
    const auto nh = cls_.num_hypotheses();
    containing_.assign(nx * ny, HypSet(nh));
    groups_.resize(nx);
    for (InstanceId x = 0; x < nx; ++x) {
      for (HypothesisId h = 0; h < nh; ++h) {
        const LabelSet out = cls_.output(h, x);
        out.for_each([&](LabelId y) { containing_[x * ny + y].insert(h); });
        auto it = std::find_if(groups_[x].begin(), groups_[x].end(), [&](const auto& g) { return g.first == out; });
        if (it == groups_[x].end()) {
          groups_[x].emplace_back(out, HypSet(nh));
          it = groups_[x].end() - 1;
        }
        it->second.insert(h);
      }
      std::sort(groups_[x].begin(), groups_[x].end(),
                [](const auto& a, const auto& b) { return a.first.bits() < b.first.bits(); });
    }
  }

  DimensionEngine(const DimensionEngine&) = delete;
  DimensionEngine& operator=(const DimensionEngine&) = delete;

  const HypothesisClass& hypothesis_class() const { return cls_; }
  const EngineLimits& limits() const { return limits_; }

  /// {h : y ∈ h(x)} over the whole class.
  const HypSet& containing(InstanceId x, LabelId y) const { return containing_[x * cls_.num_labels() + y]; }

  /// Distinct outputs at x with the hypotheses producing each, ordered by set encoding.
  const std::vector<std::pair<LabelSet, HypSet>>& output_groups(InstanceId x) const { return groups_[x]; }

  HypSet unknown_child(const HypSet& V, InstanceId x, LabelId y) const { return V & containing(x, y); }

  HypSet known_child(const HypSet& V, InstanceId x, LabelId y, LabelId yhat, bool mistake) const {
    return mistake ? (V & containing(x, y)) - containing(x, yhat) : V & containing(x, y) & containing(x, yhat);
  }

  HypSet set_child(const HypSet& V, InstanceId x, LabelSet s) const {
    for (const auto& [out, members] : groups_[x])
      if (out == s) return V & members;
    return HypSet(cls_.num_hypotheses());
  }

  /// μ^(ŷ) restricted to V: μ(h) + 1[ŷ ∉ h(x)] on members, zero elsewhere.
  Offsets bump_offsets(const HypSet& V, const Offsets& mu, InstanceId x, LabelId yhat) const {
    Offsets out(cls_.num_hypotheses(), 0);
    V.for_each([&](HypothesisId h) { out[h] = mu[h] + (cls_.output(h, x).contains(yhat) ? 0U : 1U); });
    return out;
  }

  Dimension lds(const HypSet& V) {
    require_nonempty(V);
    std::lock_guard lock(mutex_);
    bool empty_output = false;
    V.for_each([&](HypothesisId h) {
      for (InstanceId x = 0; x < cls_.num_instances(); ++x)
        if (cls_.output(h, x).empty()) empty_output = true;
    });
    // A hypothesis with h(x) = ∅ can be charged a mistake at x forever.
    if (empty_output) return kUnbounded;
    return lds_rec(V);
  }

  Dimension ldk(const HypSet& V) {
    require_nonempty(V);
    std::lock_guard lock(mutex_);
    return ldk_rec(V);
  }

  Dimension ldu(const HypSet& V, const Offsets& mu) {
    require_nonempty(V);
    if (mu.size() != cls_.num_hypotheses())
      throw Error(ErrorCode::InvalidArgument, "offset vector must have one entry per hypothesis");
    std::uint32_t max_mu = 0;
    V.for_each([&](HypothesisId h) { max_mu = std::max(max_mu, mu[h]); });
    // LDU(V, μ) <= log2|V| + max μ, so saturating offsets above this cap leaves the value unchanged.
    const std::uint32_t cap = ceil_log2(V.count()) + max_mu + 1;
    Offsets capped(cls_.num_hypotheses(), 0);
    V.for_each([&](HypothesisId h) { capped[h] = std::min(mu[h], cap); });
    std::lock_guard lock(mutex_);
    return ldu_rec(V, capped, cap);
  }

  Dimension ldu(const HypSet& V) { return ldu(V, Offsets(cls_.num_hypotheses(), 0)); }

  Dimension dimension(FeedbackModel model, const HypSet& V, const Offsets* mu = nullptr) {
    switch (model) {
      case FeedbackModel::Set: return lds(V);
      case FeedbackModel::Known: return ldk(V);
      case FeedbackModel::Unknown: return mu ? ldu(V, *mu) : ldu(V);
    }
    return 0;
  }

  std::size_t state_count() const {
    std::lock_guard lock(mutex_);
    return lds_memo_.size() + ldk_memo_.size() + ldu_memo_.size();
  }

 private:
  static void require_nonempty(const HypSet& V) {
    if (V.empty()) throw Error(ErrorCode::EmptyVersionSpace, "dimension of an empty version space");
  }

  void charge_state() const {
    if (lds_memo_.size() + ldk_memo_.size() + ldu_memo_.size() >= limits_.max_states)
      throw Error(ErrorCode::StateBudgetExceeded, "more than " + std::to_string(limits_.max_states) + " memo states");
  }

  // A child value, or "the state itself" when the child equals the parent.
  struct Child {
    bool self;
    Dimension value;
  };

  template <class Backup>
  static Dimension least_fixpoint(Dimension start, Dimension guard, Backup&& backup) {
    Dimension f = start;
    for (;;) {
      const Dimension g = backup(f);
      if (g == f) return f;
      f = g;
      if (f > guard) throw Error(ErrorCode::UnboundedDimension, "value iteration did not stabilize");
    }
  }

  // Combines max over x, min over ŷ, max over children; a ŷ with no children contributes `floor`.
  static Dimension backup_value(const std::vector<std::vector<std::vector<Child>>>& table, Dimension self_value,
                                Dimension floor, Dimension step) {
    Dimension best = floor;
    for (const auto& per_x : table) {
      Dimension worst = std::numeric_limits<Dimension>::max();
      for (const auto& per_yhat : per_x) {
        Dimension m = floor;
        for (const auto& c : per_yhat) m = std::max(m, (c.self ? self_value : c.value) + step);
        worst = std::min(worst, m);
      }
      best = std::max(best, worst);
    }
    return best;
  }

  Dimension ldk_rec(const HypSet& V) {
    if (auto it = ldk_memo_.find(V); it != ldk_memo_.end()) return it->second;
    const auto nx = cls_.num_instances();
    const auto ny = cls_.num_labels();
    std::vector<std::vector<std::vector<Child>>> table(nx, std::vector<std::vector<Child>>(ny));
    for (InstanceId x = 0; x < nx; ++x)
      for (LabelId yhat = 0; yhat < ny; ++yhat)
        for (LabelId y = 0; y < ny; ++y) {
          HypSet child = known_child(V, x, y, yhat, true);
          if (child.empty()) continue;
          if (child == V) table[x][yhat].push_back({true, 0});
          else table[x][yhat].push_back({false, ldk_rec(child)});
        }
    const Dimension value = least_fixpoint(0, 64, [&](Dimension f) { return backup_value(table, f, 0, 1); });
    charge_state();
    ldk_memo_.emplace(V, value);
    return value;
  }

  Dimension lds_rec(const HypSet& V) {
    if (auto it = lds_memo_.find(V); it != lds_memo_.end()) return it->second;
    const auto nx = cls_.num_instances();
    const auto ny = cls_.num_labels();
    std::vector<std::vector<std::vector<Child>>> table(nx, std::vector<std::vector<Child>>(ny));
    for (InstanceId x = 0; x < nx; ++x)
      for (const auto& [out, members] : groups_[x]) {
        HypSet child = V & members;
        if (child.empty()) continue;
        const Child c = child == V ? Child{true, 0} : Child{false, lds_rec(child)};
        for (LabelId yhat = 0; yhat < ny; ++yhat)
          if (!out.contains(yhat)) table[x][yhat].push_back(c);
      }
    const Dimension value = least_fixpoint(0, 64, [&](Dimension f) { return backup_value(table, f, 0, 1); });
    charge_state();
    lds_memo_.emplace(V, value);
    return value;
  }

  Dimension ldu_rec(const HypSet& V, const Offsets& mu, std::uint32_t cap) {
    GameState key{V, {}, cap};
    std::uint32_t base = 0;
    V.for_each([&](HypothesisId h) {
      key.offsets.push_back(mu[h]);
      base = std::max(base, mu[h]);
    });
    if (auto it = ldu_memo_.find(key); it != ldu_memo_.end()) return it->second;

    const auto nx = cls_.num_instances();
    const auto ny = cls_.num_labels();
    std::vector<std::vector<std::vector<Child>>> table(nx, std::vector<std::vector<Child>>(ny));
    for (InstanceId x = 0; x < nx; ++x)
      for (LabelId y = 0; y < ny; ++y) {
        HypSet child = unknown_child(V, x, y);
        if (child.empty()) continue;
        for (LabelId yhat = 0; yhat < ny; ++yhat) {
          Offsets next(cls_.num_hypotheses(), 0);
          bool same = child == V;
          child.for_each([&](HypothesisId h) {
            next[h] = std::min(cap, mu[h] + (cls_.output(h, x).contains(yhat) ? 0U : 1U));
            if (next[h] != mu[h]) same = false;
          });
          if (same) table[x][yhat].push_back({true, 0});
          else table[x][yhat].push_back({false, ldu_rec(child, next, cap)});
        }
      }
    const Dimension value =
        least_fixpoint(base, cap + 64, [&](Dimension f) { return backup_value(table, f, base, 0); });
    charge_state();
    ldu_memo_.emplace(std::move(key), value);
    return value;
  }

  HypothesisClass cls_;
  EngineLimits limits_;
  std::vector<HypSet> containing_;
  std::vector<std::vector<std::pair<LabelSet, HypSet>>> groups_;
  std::unordered_map<HypSet, Dimension, HypSetHash> lds_memo_;
  std::unordered_map<HypSet, Dimension, HypSetHash> ldk_memo_;
  std::unordered_map<GameState, Dimension, GameStateHash> ldu_memo_;
  mutable std::mutex mutex_;
};

}  // namespace mlonline
