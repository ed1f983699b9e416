#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <vector>

#include "mlonline/core.hpp"
#include "mlonline/dimensions.hpp"

namespace mlonline {

// Independent cross-check for DimensionEngine. Deliberately shares no code with it: states are
// explicit membership/offset vectors, the reachable graph is enumerated up front, and values come
// from finite-horizon backups (value after k rounds of play) iterated until they stop changing.
namespace oracle_detail {

struct State {
  std::vector<char> in;               // membership per hypothesis
  std::vector<std::uint32_t> mu;      // offsets (unknown model only; zeros otherwise)
  bool operator<(const State& o) const { return in != o.in ? in < o.in : mu < o.mu; }
};

struct Edge {
  std::size_t target;
  std::uint32_t step;  // 1 for set/known (every edge is a mistake), 0 for unknown
};

}  // namespace oracle_detail

inline Dimension brute_force_dimension(const HypothesisClass& cls, const HypSet& V, FeedbackModel model,
                                       const Offsets* offsets = nullptr, std::size_t horizon_cap = 64) {
  using namespace oracle_detail;
  if (V.empty()) throw Error(ErrorCode::EmptyVersionSpace, "oracle on an empty version space");
  const std::size_t nh = cls.num_hypotheses(), nx = cls.num_instances(), ny = cls.num_labels();

  State root{std::vector<char>(nh, 0), std::vector<std::uint32_t>(nh, 0)};
  std::uint32_t max_mu = 0;
  for (HypothesisId h = 0; h < nh; ++h) {
    root.in[h] = V.contains(h) ? 1 : 0;
    if (root.in[h] && model == FeedbackModel::Unknown && offsets) {
      root.mu[h] = (*offsets)[h];
      max_mu = std::max(max_mu, root.mu[h]);
    }
  }
  // Offsets beyond max μ + |H| cannot matter: no value exceeds log2|V| + max μ.
  const std::uint32_t cap = max_mu + static_cast<std::uint32_t>(nh) + 1;
  for (auto& m : root.mu) m = std::min(m, cap);

  std::map<State, std::size_t> index;
  std::vector<State> states;
  // edges[s][x][yhat] = list of children reachable by the adversary's choice
  std::vector<std::vector<std::vector<std::vector<Edge>>>> edges;

  auto intern = [&](State s) {
    auto [it, inserted] = index.emplace(s, states.size());
    if (inserted) {
      states.push_back(std::move(s));
      edges.emplace_back();
    }
    return it->second;
  };
  intern(root);

  for (std::size_t s = 0; s < states.size(); ++s) {
    std::vector<std::vector<std::vector<Edge>>> out(nx, std::vector<std::vector<Edge>>(ny));
    for (InstanceId x = 0; x < nx; ++x) {
      for (LabelId yhat = 0; yhat < ny; ++yhat) {
        if (model == FeedbackModel::Set) {
          // Adversary reveals S = h(x) for some live h with yhat ∉ h(x).
          std::vector<std::uint64_t> seen;
          for (HypothesisId h = 0; h < nh; ++h) {
            if (!states[s].in[h]) continue;
            const LabelSet S = cls.output(h, x);
            if (S.contains(yhat) || std::find(seen.begin(), seen.end(), S.bits()) != seen.end()) continue;
            seen.push_back(S.bits());
            State c{std::vector<char>(nh, 0), std::vector<std::uint32_t>(nh, 0)};
            for (HypothesisId g = 0; g < nh; ++g) c.in[g] = states[s].in[g] && cls.output(g, x) == S;
            out[x][yhat].push_back({intern(std::move(c)), 1});
          }
        } else {
          for (LabelId y = 0; y < ny; ++y) {
            State c{std::vector<char>(nh, 0), std::vector<std::uint32_t>(nh, 0)};
            bool any = false;
            for (HypothesisId g = 0; g < nh; ++g) {
              const LabelSet out_g = cls.output(g, x);
              bool keep = states[s].in[g] && out_g.contains(y);
              if (model == FeedbackModel::Known) keep = keep && !out_g.contains(yhat);
              c.in[g] = keep;
              if (keep && model == FeedbackModel::Unknown)
                c.mu[g] = std::min(cap, states[s].mu[g] + (out_g.contains(yhat) ? 0U : 1U));
              any = any || keep;
            }
            if (!any) continue;
            out[x][yhat].push_back({intern(std::move(c)), model == FeedbackModel::Unknown ? 0U : 1U});
          }
        }
      }
    }
    edges[s] = std::move(out);
  }

  auto base = [&](const State& s) {
    std::uint32_t b = 0;
    if (model == FeedbackModel::Unknown)
      for (std::size_t h = 0; h < nh; ++h)
        if (s.in[h]) b = std::max(b, s.mu[h]);
    return b;
  };

  std::vector<std::uint32_t> value(states.size());
  for (std::size_t s = 0; s < states.size(); ++s) value[s] = base(states[s]);

  for (std::size_t round = 0; round < horizon_cap; ++round) {
    std::vector<std::uint32_t> next(states.size());
    for (std::size_t s = 0; s < states.size(); ++s) {
      const std::uint32_t b = base(states[s]);
      std::uint32_t best = b;
      for (InstanceId x = 0; x < nx; ++x) {
        std::uint32_t worst = UINT32_MAX;
        for (LabelId yhat = 0; yhat < ny; ++yhat) {
          std::uint32_t m = b;
          for (const auto& e : edges[s][x][yhat]) m = std::max(m, value[e.target] + e.step);
          worst = std::min(worst, m);
        }
        best = std::max(best, worst);
      }
      next[s] = best;
    }
    if (next == value) return value[0];
    value = std::move(next);
  }
  throw Error(ErrorCode::HorizonCapExceeded, "finite-horizon values still changing after " +
                                                 std::to_string(horizon_cap) + " rounds");
}

}  // namespace mlonline
