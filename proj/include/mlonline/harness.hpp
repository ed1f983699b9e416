#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "mlonline/adversary.hpp"
#include "mlonline/learner.hpp"
#include "mlonline/o2b.hpp"

namespace mlonline {

inline Feedback make_feedback(FeedbackModel model, LabelSet truth, std::optional<LabelId> y, LabelId yhat) {
  switch (model) {
    case FeedbackModel::Unknown: return UnknownFeedback{*y};
    case FeedbackModel::Known: return KnownFeedback{*y, !truth.contains(yhat)};
    case FeedbackModel::Set: return SetFeedback{truth};
  }
  throw Error(ErrorCode::InvalidArgument, "bad model");
}

/// Plays T rounds. The learner's draws use the generator seeded with mix_seed(seed, 0); the
/// adversary owns its own generator.
inline Transcript run_game(Learner& learner, Adversary& adversary, FeedbackModel model, std::size_t T,
                           std::uint64_t seed) {
  if (learner.model() != model)
    throw Error(ErrorCode::ModelMismatch, learner.name() + " is a " + std::string(to_string(learner.model())) +
                                              " learner, game is " + std::string(to_string(model)));
  Transcript tr;
  tr.model = model;
  tr.horizon = T;
  tr.seed = seed;
  tr.rounds.reserve(T);
  Rng rng(mix_seed(seed, 0));
  adversary.prepare(learner, model, T);
  for (std::size_t t = 0; t < T; ++t) {
    Round r;
    r.x = adversary.next_instance(t);
    r.prediction = learner.predict(r.x);
    r.yhat = sample(r.prediction, rng);
    const Resolution res = adversary.resolve(RoundView{t, r.x, r.prediction, r.yhat});
    r.truth = res.truth;
    if (model != FeedbackModel::Set) {
      if (!res.y) throw Error(ErrorCode::ProtocolViolation, "adversary revealed no label");
      if (!res.truth.contains(*res.y)) throw Error(ErrorCode::ProtocolViolation, "revealed label is outside S_t");
      r.y = res.y;
    }
    r.loss = !r.truth.contains(r.yhat);
    r.shown = make_feedback(model, r.truth, r.y, r.yhat);
    learner.observe(r.x, r.yhat, r.shown);
    tr.rounds.push_back(std::move(r));
  }
  if (auto revised = adversary.revised_truth()) {
    if (revised->size() != T) throw Error(ErrorCode::ProtocolViolation, "revised truth has the wrong length");
    for (std::size_t t = 0; t < T; ++t) {
      Round& r = tr.rounds[t];
      const LabelSet S = (*revised)[t];
      if (r.y && !S.contains(*r.y)) throw Error(ErrorCode::ProtocolViolation, "revised S_t drops the revealed label");
      if (auto* k = std::get_if<KnownFeedback>(&r.shown); k && k->mistake != !S.contains(r.yhat))
        throw Error(ErrorCode::ProtocolViolation, "revised S_t contradicts the mistake bit already shown");
      r.truth = S;
      r.loss = !S.contains(r.yhat);
    }
  }
  return tr;
}

struct TrialResult {
  std::size_t loss = 0;
  double expected_loss = 0.0;  // Σ_t p_t(Y \ S_t)
  std::size_t comparator = 0;  // min_h Σ_t 1[h(x_t) ≠ S_t]
  long long regret = 0;        // loss − comparator
  double expected_regret = 0.0;
};

/// Regret against the best fixed hypothesis under exact set equality.
inline TrialResult regret_of(const Transcript& tr, const HypothesisClass& cls) {
  TrialResult r;
  r.loss = tr.total_loss();
  r.expected_loss = tr.expected_loss();
  std::size_t best = tr.rounds.size();
  for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h) {
    std::size_t l = 0;
    for (const auto& round : tr.rounds) l += cls.output(h, round.x) != round.truth ? 1 : 0;
    best = std::min(best, l);
  }
  r.comparator = best;
  r.regret = static_cast<long long>(r.loss) - static_cast<long long>(r.comparator);
  r.expected_regret = r.expected_loss - static_cast<double>(r.comparator);
  return r;
}

struct Summary {
  double mean = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  double total = 0.0;
  for (double v : xs) total += v;
  s.mean = total / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double v : xs) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  s.ci_low = s.mean - 1.96 * s.se;
  s.ci_high = s.mean + 1.96 * s.se;
  return s;
}

struct RegretReport {
  std::vector<TrialResult> trials;  // ordered by trial index
  std::vector<Transcript> transcripts;  // filled only when requested

  Summary regret() const { return over([](const TrialResult& r) { return static_cast<double>(r.regret); }); }
  Summary expected_regret() const { return over([](const TrialResult& r) { return r.expected_regret; }); }
  Summary loss() const { return over([](const TrialResult& r) { return static_cast<double>(r.loss); }); }

 private:
  template <class F>
  Summary over(F&& f) const {
    std::vector<double> xs;
    for (const auto& t : trials) xs.push_back(f(t));
    return summarize(xs);
  }
};

using LearnerFactory = std::function<std::unique_ptr<Learner>()>;
using AdversaryFactory = std::function<std::unique_ptr<Adversary>(std::uint64_t seed)>;

struct MonteCarloConfig {
  FeedbackModel model = FeedbackModel::Set;
  std::size_t horizon = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool keep_transcripts = false;
};

inline std::size_t default_threads() { return std::max(1U, std::thread::hardware_concurrency()); }

/// Runs independent trials; trial i uses seed mix_seed(master, i), and its adversary is built with
/// mix_seed(trial seed, 1). Results are stored by trial index, so thread count never changes them.
inline RegretReport monte_carlo(const HypothesisClass& cls, const LearnerFactory& make_learner,
                                const AdversaryFactory& make_adversary, const MonteCarloConfig& cfg) {
  if (cfg.trials == 0) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
  RegretReport rep;
  rep.trials.resize(cfg.trials);
  if (cfg.keep_transcripts) rep.transcripts.resize(cfg.trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.trials) return;
      try {
        const std::uint64_t seed = mix_seed(cfg.seed, i);
        auto learner = make_learner();
        auto adversary = make_adversary(mix_seed(seed, 1));
        Transcript tr = run_game(*learner, *adversary, cfg.model, cfg.horizon, seed);
        rep.trials[i] = regret_of(tr, cls);
        if (cfg.keep_transcripts) rep.transcripts[i] = std::move(tr);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = cfg.trials;
        return;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(cfg.threads, cfg.trials));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rep;
}

// ---------------------------------------------------------------------------------------------

/// A finite distribution over (x, S); label feedback reveals a uniform member of S.
struct Source {
  std::vector<StochasticAdversary::Outcome> outcomes;

  Example draw(Rng& rng, const PredictionDistribution& dist) const {
    const auto& o = outcomes[sample(dist, rng)];
    Example e{o.x, o.truth, std::nullopt};
    if (!o.truth.empty()) e.y = uniform_member(o.truth, rng);
    return e;
  }

  PredictionDistribution distribution() const {
    std::vector<double> p;
    for (const auto& o : outcomes) p.push_back(o.p);
    return PredictionDistribution(std::move(p));
  }

  /// Some h has h(x) = S on every outcome of positive probability.
  bool realizable_by(const HypothesisClass& cls) const {
    for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h) {
      bool ok = true;
      for (const auto& o : outcomes)
        if (o.p > 0 && cls.output(h, o.x) != o.truth) ok = false;
      if (ok) return true;
    }
    return false;
  }
};

struct BatchConfig {
  std::vector<std::size_t> m_grid;
  double delta = 0.1;
  std::size_t test_size = 1000;
  std::size_t repetitions = 200;
  std::uint64_t seed = 0;
  bool require_realizable = false;
  std::size_t threads = 1;
};

struct BatchRow {
  std::size_t m = 0;
  std::size_t rep = 0;
  double empirical_error = 0.0;
  double bound = 0.0;
  bool violated = false;
};

struct BatchSummary {
  double violation_rate = 0.0;
  double violation_se = 0.0;
  std::vector<std::pair<std::size_t, double>> median_error;  // per m
  std::optional<double> slope;  // least-squares slope of log median error vs log m
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::optional<double> loglog_slope(const std::vector<std::pair<std::size_t, double>>& pts) {
  std::vector<std::pair<double, double>> xy;
  for (auto [m, e] : pts)
    if (e > 0) xy.emplace_back(std::log(static_cast<double>(m)), std::log(e));
  if (xy.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (auto [x, y] : xy) mx += x, my += y;
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxy = 0, sxx = 0;
  for (auto [x, y] : xy) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  if (sxx == 0) return std::nullopt;
  return sxy / sxx;
}

inline BatchSummary summarize_batch(const std::vector<BatchRow>& rows, const std::vector<std::size_t>& grid) {
  BatchSummary s;
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.violated ? 1.0 : 0.0);
  const auto sv = summarize(v);
  s.violation_rate = sv.mean;
  s.violation_se = sv.se;
  for (auto m : grid) {
    std::vector<double> errs;
    for (const auto& r : rows)
      if (r.m == m) errs.push_back(r.empirical_error);
    s.median_error.emplace_back(m, median(errs));
  }
  s.slope = loglog_slope(s.median_error);
  return s;
}

/// For each m and repetition: draw m examples, build the averaged predictor, measure its exact
/// expected error on test_size fresh draws, and compare with the online-to-batch bound.
inline std::vector<BatchRow> batch_experiment(const HypothesisClass& cls, const Source& source,
                                              const LearnerFactory& make_core, const BatchConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  if (cfg.m_grid.empty() || cfg.repetitions == 0) throw Error(ErrorCode::InvalidConfig, "empty m grid or no repetitions");
  for (auto m : cfg.m_grid)
    if (m == 0) throw Error(ErrorCode::EmptySample, "m must be >= 1");
  if (cfg.test_size == 0) throw Error(ErrorCode::InvalidConfig, "test_size must be >= 1");
  if (cfg.require_realizable && !source.realizable_by(cls))
    throw Error(ErrorCode::SourceNotRealizable, "no hypothesis matches every outcome of the source");
  const auto dist = source.distribution();

  const std::size_t jobs = cfg.m_grid.size() * cfg.repetitions;
  std::vector<BatchRow> rows(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        const std::size_t mi = j / cfg.repetitions, rep = j % cfg.repetitions;
        const std::size_t m = cfg.m_grid[mi];
        Rng rng(mix_seed(cfg.seed, j));
        std::vector<Example> sample;
        for (std::size_t i = 0; i < m; ++i) sample.push_back(source.draw(rng, dist));
        auto core = make_core();
        const auto pred = o2b_wrap(*core, cls.num_instances(), sample, rng);
        double err = 0.0;
        for (std::size_t i = 0; i < cfg.test_size; ++i) {
          const auto e = source.draw(rng, dist);
          err += pred.error_on(e.x, e.truth);
        }
        err /= static_cast<double>(cfg.test_size);
        const double bound = o2b_bound(m, static_cast<double>(pred.total_online_loss()), cfg.delta);
        rows[j] = BatchRow{m, rep, err, bound, err > bound};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs;
        return;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(cfg.threads, jobs));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace mlonline
