#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mlonline/dimensions.hpp"
#include "mlonline/soa.hpp"

namespace mlonline {

inline constexpr std::size_t kDefaultMaxExperts = 100'000;

/// Σ_{i ≤ d} C(T, i), saturating at SIZE_MAX.
inline std::size_t subset_count(std::size_t T, std::size_t d) {
  std::size_t total = 0;
  long double c = 1;  // C(T, i)
  for (std::size_t i = 0; i <= std::min(d, T); ++i) {
    if (i > 0) c = c * static_cast<long double>(T - i + 1) / static_cast<long double>(i);
    if (c + total > static_cast<long double>(SIZE_MAX) / 2) return SIZE_MAX;
    total += static_cast<std::size_t>(std::llround(c));
  }
  return total;
}

/// The experts E_I, I ⊆ [T] with |I| ≤ d, each an SOA core (mistake-known or set-valued) that only
/// ever sees the rounds in I. Optionally followed by the uniform expert E_U.
///
/// Experts whose histories lead to the same version space predict identically, so states are
/// interned and each distinct (state, x) is decided once. Clones share the interning table.
class ExpertPool {
 public:
  ExpertPool(std::shared_ptr<DimensionEngine> engine, FeedbackModel model, std::size_t horizon, std::size_t d,
             bool with_uniform, std::size_t max_experts = kDefaultMaxExperts)
      : with_uniform_(with_uniform) {
    if (model == FeedbackModel::Unknown)
      throw Error(ErrorCode::InvalidArgument, "expert cores are mistake-known or set-valued SOAs");
    const std::size_t n = subset_count(horizon, d);
    if (n == SIZE_MAX || n + (with_uniform ? 1 : 0) > max_experts)
      throw Error(ErrorCode::ExpertBudgetExceeded,
                  "pool of " + (n == SIZE_MAX ? std::string("overflowing") : std::to_string(n)) + " experts exceeds cap " +
                      std::to_string(max_experts));
    table_ = std::make_shared<Table>(std::move(engine), model);
    auto sets = std::make_shared<std::vector<std::vector<std::uint32_t>>>();
    sets->reserve(n);
    std::vector<std::uint32_t> cur;
    for (std::size_t k = 0; k <= std::min(d, horizon); ++k) enumerate(horizon, k, 0, cur, *sets);
    sets_ = std::move(sets);
    const std::uint32_t root = table_->intern(table_->eng->hypothesis_class().everyone());
    state_.assign(sets_->size(), root);
    cursor_.assign(sets_->size(), 0);
  }

  std::size_t size() const { return sets_->size() + (with_uniform_ ? 1 : 0); }
  std::size_t num_core() const { return sets_->size(); }
  bool has_uniform() const { return with_uniform_; }
  bool is_uniform(std::size_t i) const { return i >= sets_->size(); }
  const std::vector<std::uint32_t>& index_set(std::size_t i) const { return (*sets_)[i]; }
  std::size_t round() const { return t_; }
  FeedbackModel model() const { return table_->model; }
  const HypothesisClass& hypothesis_class() const { return table_->eng->hypothesis_class(); }

  /// Label advice of every core expert at x (the uniform expert, if any, is not included).
  std::vector<LabelId> advise(InstanceId x) const {
    std::vector<LabelId> out(state_.size());
    // few distinct states are live at once; a linear scan beats hashing here
    std::vector<std::pair<std::uint32_t, LabelId>> local;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      auto it = std::find_if(local.begin(), local.end(), [&](const auto& e) { return e.first == state_[i]; });
      if (it == local.end()) {
        local.emplace_back(state_[i], table_->decide(state_[i], x));
        it = local.end() - 1;
      }
      out[i] = it->second;
    }
    return out;
  }

  LabelId advise_one(std::size_t i, InstanceId x) const { return table_->decide(state_[i], x); }

  /// Feeds round t = round() to every expert whose index set contains t. Mistake-known cores get
  /// (x, y, b = 1) with their own prediction; set-valued cores get (x, S).
  void update(InstanceId x, const Feedback& fb) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> next_of;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      const auto& I = (*sets_)[i];
      if (cursor_[i] >= I.size() || I[cursor_[i]] != t_) continue;
      ++cursor_[i];
      auto it = std::find_if(next_of.begin(), next_of.end(), [&](const auto& e) { return e.first == state_[i]; });
      if (it == next_of.end()) {
        next_of.emplace_back(state_[i], table_->step(state_[i], x, fb));
        it = next_of.end() - 1;
      }
      state_[i] = it->second;
    }
    ++t_;
  }

  HypSet version_space(std::size_t i) const { return table_->state(state_[i]); }

 private:
  struct Table {
    Table(std::shared_ptr<DimensionEngine> e, FeedbackModel m) : eng(std::move(e)), model(m) {}

    std::uint32_t intern(const HypSet& V) {
      std::lock_guard lock(mu);
      auto [it, inserted] = ids.emplace(V, static_cast<std::uint32_t>(states.size()));
      if (inserted) {
        states.push_back(V);
        decisions.emplace_back(eng->hypothesis_class().num_instances(), -1);
      }
      return it->second;
    }

    HypSet state(std::uint32_t id) {
      std::lock_guard lock(mu);
      return states[id];
    }

    LabelId decide(std::uint32_t id, InstanceId x) {
      HypSet V;
      {
        std::lock_guard lock(mu);
        if (decisions[id][x] >= 0) return static_cast<LabelId>(decisions[id][x]);
        V = states[id];
      }
      const LabelId y = model == FeedbackModel::Known ? soa::predict_known(*eng, V, x) : soa::predict_set(*eng, V, x);
      std::lock_guard lock(mu);
      decisions[id][x] = static_cast<std::int32_t>(y);
      return y;
    }

    std::uint32_t step(std::uint32_t id, InstanceId x, const Feedback& fb) {
      const HypSet V = state(id);
      HypSet next;
      if (model == FeedbackModel::Known) {
        LabelId y = 0;
        if (auto* k = std::get_if<KnownFeedback>(&fb)) y = k->y;
        else if (auto* u = std::get_if<UnknownFeedback>(&fb)) y = u->y;
        else throw Error(ErrorCode::ModelMismatch, "mistake-known experts need a revealed label");
        next = eng->known_child(V, x, y, decide(id, x), true);
      } else {
        require_model(fb, FeedbackModel::Set);
        next = soa::update_set(*eng, V, x, std::get<SetFeedback>(fb).truth);
      }
      // An expert whose history is not realizable starts over rather than dying.
      if (next.empty()) next = eng->hypothesis_class().everyone();
      return intern(next);
    }

    std::shared_ptr<DimensionEngine> eng;
    FeedbackModel model;
    std::mutex mu;
    std::vector<HypSet> states;
    std::unordered_map<HypSet, std::uint32_t, HypSetHash> ids;
    std::vector<std::vector<std::int32_t>> decisions;  // [state][x], -1 = not yet decided
  };

  static void enumerate(std::size_t T, std::size_t k, std::uint32_t from, std::vector<std::uint32_t>& cur,
                        std::vector<std::vector<std::uint32_t>>& out) {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (std::uint32_t s = from; s < T; ++s) {
      cur.push_back(s);
      enumerate(T, k, s + 1, cur, out);
      cur.pop_back();
    }
  }

  bool with_uniform_;
  std::shared_ptr<Table> table_;
  std::shared_ptr<const std::vector<std::vector<std::uint32_t>>> sets_;
  std::vector<std::uint32_t> state_;   // per core expert
  std::vector<std::uint32_t> cursor_;  // next position in the expert's index set
  std::size_t t_ = 0;
};

}  // namespace mlonline
