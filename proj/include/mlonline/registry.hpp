#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>

#include "mlonline/agnostic.hpp"
#include "mlonline/certificate.hpp"
#include "mlonline/class_io.hpp"
#include "mlonline/harness.hpp"
#include "mlonline/soa.hpp"
#include "mlonline/svwm.hpp"

namespace mlonline {

/// Typed access to a "params" object; anything left unread is rejected by finish().
class ParamReader {
 public:
  ParamReader(const ordered_json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_null() && !j_.is_object()) fail("params must be an object");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail("bad value for '" + key + "'");
    }
  }

  template <class T>
  std::optional<T> maybe(const std::string& key) {
    if (!has(key)) {
      seen_.insert(key);
      return std::nullopt;
    }
    return get<T>(key, T{});
  }

  const ordered_json& raw(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) fail("missing '" + key + "'");
    return j_.at(key);
  }

  void finish() const {
    if (!j_.is_object()) return;
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) fail("unknown parameter '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorCode::InvalidConfig, where_ + ": " + msg); }

 private:
  const ordered_json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline HypothesisId hypothesis_by_name(const HypothesisClass& cls, const std::string& name) {
  for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h)
    if (cls.hypothesis_names()[h] == name) return h;
  throw Error(ErrorCode::InvalidConfig, "no hypothesis named '" + name + "'");
}

inline InstanceId instance_by_name(const HypothesisClass& cls, const std::string& name) {
  for (InstanceId x = 0; x < cls.num_instances(); ++x)
    if (cls.instance_names()[x] == name) return x;
  throw Error(ErrorCode::InvalidConfig, "no instance named '" + name + "'");
}

inline LabelSet label_set_by_names(const HypothesisClass& cls, const ordered_json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "label set must be a list of names");
  LabelSet s;
  for (const auto& e : j) {
    if (!e.is_string()) throw Error(ErrorCode::InvalidConfig, "label set must be a list of names");
    bool found = false;
    for (LabelId y = 0; y < cls.num_labels() && !found; ++y)
      if (cls.label_names()[y] == e.get<std::string>()) s = s | LabelSet::single(y), found = true;
    if (!found) throw Error(ErrorCode::InvalidConfig, "no label named '" + e.get<std::string>() + "'");
  }
  return s;
}

/// [{"x": name, "S": [names], "p": prob}, ...]
inline std::vector<StochasticAdversary::Outcome> outcomes_from_json(const HypothesisClass& cls, const ordered_json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::InvalidConfig, "outcomes must be a non-empty list");
  std::vector<StochasticAdversary::Outcome> out;
  for (const auto& o : j) {
    ParamReader r(o, "outcome");
    const auto x = instance_by_name(cls, r.get<std::string>("x", ""));
    const auto S = label_set_by_names(cls, r.raw("S"));
    const double p = r.get<double>("p", -1.0);
    r.finish();
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidConfig, "outcome probability must be >= 0");
    out.push_back({x, S, p});
  }
  return out;
}

struct RegistryContext {
  HypothesisClass cls;
  std::shared_ptr<DimensionEngine> engine;
  FeedbackModel model = FeedbackModel::Set;
  std::size_t horizon = 0;
  std::size_t max_experts = kDefaultMaxExperts;
  std::filesystem::path base_dir;  // relative paths in params resolve here
};

inline const std::vector<std::string>& learner_names() {
  static const std::vector<std::string> names{"soa", "svwm", "exp4", "wmu", "uniform", "follow_last"};
  return names;
}

inline const std::vector<std::string>& adversary_names() {
  static const std::vector<std::string> names{"replay", "realizable", "h3_linear", "stochastic", "greedy"};
  return names;
}

inline LearnerFactory make_learner_factory(const std::string& name, const ordered_json& params, const RegistryContext& ctx) {
  ParamReader r(params, "learner '" + name + "'");
  auto need_model = [&](FeedbackModel m) {
    if (ctx.model != m)
      r.fail("runs under " + std::string(to_string(m)) + " feedback, experiment is " + std::string(to_string(ctx.model)));
  };
  auto eng = ctx.engine;
  const auto model = ctx.model;
  const auto K = ctx.cls.num_labels();
  LearnerFactory f;

  if (name == "soa") {
    const bool agnostic = r.get<bool>("agnostic", false);
    f = [eng, model, agnostic] { return std::make_unique<SoaLearner>(eng, model, agnostic); };
  } else if (name == "svwm") {
    need_model(FeedbackModel::Set);
    auto cls = ctx.cls;
    f = [cls] { return std::make_unique<SvwmLearner>(cls); };
  } else if (name == "exp4") {
    if (model == FeedbackModel::Set) r.fail("needs label feedback");
    Exp4Params p;
    p.d = r.maybe<std::size_t>("d");
    p.gamma = r.maybe<double>("gamma");
    p.max_experts = ctx.max_experts;
    // build once so configuration errors surface before any trial runs
    auto proto = std::make_shared<Exp4Learner>(eng, model, ctx.horizon, p);
    f = [proto] { return proto->clone(); };
  } else if (name == "wmu") {
    need_model(FeedbackModel::Set);
    WmuParams p;
    p.d = r.maybe<std::size_t>("d");
    p.eta = r.maybe<double>("eta");
    p.max_experts = ctx.max_experts;
    auto proto = std::make_shared<WmuLearner>(eng, ctx.horizon, p);
    f = [proto] { return proto->clone(); };
  } else if (name == "uniform") {
    f = [K, model] { return std::make_unique<UniformLearner>(K, model); };
  } else if (name == "follow_last") {
    f = [K, model] { return std::make_unique<FollowLastLabel>(K, model); };
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown learner '" + name + "'");
  }
  r.finish();
  return f;
}

inline AdversaryFactory make_adversary_factory(const std::string& name, const ordered_json& params,
                                               const RegistryContext& ctx) {
  ParamReader r(params, "adversary '" + name + "'");
  const auto& cls = ctx.cls;
  AdversaryFactory f;

  if (name == "replay") {
    ShatteringCertificate cert;
    if (auto path = r.maybe<std::string>("certificate")) {
      std::vector<std::string> dups;
      const auto doc = detail::parse_tracking_duplicates(read_text_file(ctx.base_dir / *path), dups);
      if (!dups.empty()) r.fail("certificate repeats key '" + dups.front() + "'");
      cert = certificate_from_json(cls, doc);
      if (cert.model != ctx.model) r.fail("certificate model differs from the experiment's");
    } else {
      cert = extract_certificate(*ctx.engine, cls.everyone(), ctx.model);
    }
    f = [cls, cert](std::uint64_t) { return std::make_unique<ReplayAdversary>(cls, cert); };
  } else if (name == "realizable") {
    const auto h = r.has("hypothesis") ? hypothesis_by_name(cls, r.get<std::string>("hypothesis", "")) : HypothesisId{0};
    const auto inst = r.get<std::string>("instances", "cycle");
    const auto lab = r.get<std::string>("labels", "uniform");
    if (inst != "cycle" && inst != "uniform") r.fail("instances must be 'cycle' or 'uniform'");
    if (lab != "uniform" && lab != "lowest") r.fail("labels must be 'uniform' or 'lowest'");
    const auto ir = inst == "cycle" ? InstanceRule::Cycle : InstanceRule::Uniform;
    const auto lr = lab == "uniform" ? LabelRule::Uniform : LabelRule::Lowest;
    f = [cls, h, ir, lr](std::uint64_t seed) { return std::make_unique<RealizableAdversary>(cls, h, ir, lr, seed); };
  } else if (name == "h3_linear") {
    const auto target = r.get<std::string>("target", "argmax_load");
    if (target != "argmax_load" && target != "max_regret") r.fail("target must be 'argmax_load' or 'max_regret'");
    const auto rule = target == "argmax_load" ? TargetRule::ArgmaxLoad : TargetRule::MaxRegret;
    const auto runs = r.get<std::size_t>("probe_runs", 200);
    H3LinearAdversary check(cls, 0, rule, runs);  // shape errors surface now
    f = [cls, rule, runs](std::uint64_t seed) { return std::make_unique<H3LinearAdversary>(cls, seed, rule, runs); };
  } else if (name == "stochastic") {
    auto outcomes = outcomes_from_json(cls, r.raw("outcomes"));
    StochasticAdversary check(outcomes, 0);
    f = [outcomes](std::uint64_t seed) { return std::make_unique<StochasticAdversary>(outcomes, seed); };
  } else if (name == "greedy") {
    f = [cls](std::uint64_t seed) { return std::make_unique<GreedyAdversary>(cls, seed); };
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown adversary '" + name + "'");
  }
  r.finish();
  return f;
}

}  // namespace mlonline
