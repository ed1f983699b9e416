#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mlonline/csv.hpp"
#include "mlonline/registry.hpp"

namespace mlonline::cli {

enum Exit : int { kOk = 0, kUsage = 1, kBadInput = 2, kBudget = 3, kVerification = 4, kRuntime = 5 };

inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::StateBudgetExceeded:
    case ErrorCode::ExpertBudgetExceeded:
    case ErrorCode::HorizonCapExceeded: return kBudget;
    case ErrorCode::RealizabilityViolated:
    case ErrorCode::ProtocolViolation:
    case ErrorCode::EmptyTruthSet:
    case ErrorCode::DegenerateProbability:
    case ErrorCode::IdentityViolation:
    case ErrorCode::EmptyVersionSpace: return kRuntime;
    default: return kBadInput;
  }
}

struct Globals {
  std::optional<std::uint64_t> seed;
  bool json = false;
  std::size_t threads = default_threads();
  std::optional<std::size_t> max_states;
  std::optional<std::size_t> max_experts;

  EngineLimits limits() const {
    EngineLimits l;
    if (max_states) l.max_states = *max_states;
    return l;
  }
};

// ---------------------------------------------------------------------------------------------
// files

inline ordered_json load_json(const std::filesystem::path& path, const char* what) {
  std::vector<std::string> dups;
  auto doc = detail::parse_tracking_duplicates(read_text_file(path), dups);
  if (!dups.empty()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " repeats key '" + dups.front() + "'");
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a JSON object");
  return doc;
}

/// {"hypothesis name": offset, ...}; hypotheses not listed get 0.
inline Offsets load_offsets(const std::filesystem::path& path, const HypothesisClass& cls) {
  const auto doc = load_json(path, "offsets file");
  Offsets mu(cls.num_hypotheses(), 0);
  for (const auto& [name, v] : doc.items()) {
    if (!v.is_number_unsigned()) throw Error(ErrorCode::InvalidConfig, "offset of '" + name + "' must be a non-negative integer");
    mu[hypothesis_by_name(cls, name)] = v.get<std::uint32_t>();
  }
  return mu;
}

struct Component {
  std::string name;
  ordered_json params;
};

struct Experiment {
  std::filesystem::path dir;  // relative paths resolve against this
  std::filesystem::path class_path;
  FeedbackModel model = FeedbackModel::Set;
  Component learner;
  std::optional<Component> adversary;
  std::size_t horizon = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::optional<ordered_json> batch;
};

inline Experiment load_experiment(const std::filesystem::path& path) {
  const auto doc = load_json(path, "experiment file");
  Experiment e;
  e.dir = path.parent_path();
  ParamReader r(doc, "experiment");
  auto component = [&](const char* key) {
    const auto& j = r.raw(key);
    ParamReader c(j, key);
    Component out{c.get<std::string>("name", ""), c.has("params") ? c.raw("params") : ordered_json::object()};
    c.finish();
    if (out.name.empty()) r.fail(std::string(key) + " needs a name");
    return out;
  };
  e.class_path = e.dir / r.get<std::string>("class", "");
  if (!r.has("class")) r.fail("missing 'class'");
  try {
    e.model = parse_model(r.get<std::string>("model", ""));
  } catch (const Error&) {
    r.fail("model must be 'unknown', 'known' or 'set'");
  }
  e.learner = component("learner");
  if (r.has("adversary")) e.adversary = component("adversary");
  auto count = [&](const char* key, long long fallback, long long lo) {
    const auto v = r.get<long long>(key, fallback);
    if (v < lo) r.fail(std::string("'") + key + "' must be >= " + std::to_string(lo));
    return static_cast<std::size_t>(v);
  };
  e.horizon = count("horizon", 0, 0);
  e.trials = count("trials", 1, 1);
  e.seed = r.get<std::uint64_t>("seed", 0);
  if (!r.has("out")) r.fail("missing 'out'");
  e.out = e.dir / r.get<std::string>("out", "");
  if (r.has("batch")) e.batch = r.raw("batch");
  r.finish();
  return e;
}

inline std::string dim_text(Dimension d) { return d == kUnbounded ? "inf" : std::to_string(d); }
inline ordered_json dim_json(Dimension d) { return d == kUnbounded ? ordered_json("inf") : ordered_json(d); }

// ---------------------------------------------------------------------------------------------
// commands

inline int cmd_dims(const std::filesystem::path& class_path, const std::optional<std::filesystem::path>& offsets_path,
                    const Globals& g, std::ostream& out) {
  const auto cls = load_class(class_path);
  DimensionEngine eng(cls, g.limits());
  const auto V = cls.everyone();
  const auto lds = eng.lds(V), ldk = eng.ldk(V), ldu = eng.ldu(V);
  const auto log2h = ceil_log2(cls.num_hypotheses());
  const bool api = all_points_intersect(cls, V);
  const bool chain = lds <= ldk && ldk <= ldu && ldu <= floor_log2(cls.num_hypotheses());
  std::optional<Dimension> ldu_mu;
  if (offsets_path) {
    const auto mu = load_offsets(*offsets_path, cls);
    ldu_mu = eng.ldu(V, mu);
  }
  if (g.json) {
    ordered_json j;
    j["LDS"] = dim_json(lds);
    j["LDK"] = dim_json(ldk);
    j["LDU"] = dim_json(ldu);
    if (ldu_mu) j["LDU_offsets"] = *ldu_mu;
    j["log2_H_ceil"] = log2h;
    j["all_points_intersect"] = api;
    j["chain_ok"] = chain;
    out << j.dump() << "\n";
  } else {
    out << "LDS=" << dim_text(lds) << " LDK=" << dim_text(ldk) << " LDU=" << dim_text(ldu);
    if (ldu_mu) out << " LDU(offsets)=" << dim_text(*ldu_mu);
    out << "\nceil(log2|H|)=" << log2h << " all_points_intersect=" << (api ? "true" : "false")
        << "\nLDS <= LDK <= LDU <= log2|H|: " << (chain ? "ok" : "VIOLATED") << "\n";
  }
  return chain ? kOk : kVerification;
}

inline int cmd_certify(const std::filesystem::path& class_path, const std::string& model_name,
                       const std::filesystem::path& out_path, const std::optional<std::filesystem::path>& offsets_path,
                       const Globals& g, std::ostream& out, std::ostream& err) {
  const auto cls = load_class(class_path);
  FeedbackModel model;
  try {
    model = parse_model(model_name);
  } catch (const Error&) {
    throw Error(ErrorCode::InvalidArgument, "--model must be 'unknown', 'known' or 'set'");
  }
  std::optional<Offsets> mu;
  if (offsets_path) mu = load_offsets(*offsets_path, cls);
  DimensionEngine eng(cls, g.limits());
  const auto cert = extract_certificate(eng, cls.everyone(), model, mu ? &*mu : nullptr);
  csv::write_atomic(out_path, certificate_to_json(cls, cert).dump(2) + "\n");

  // re-read what was written; a failure here is an engine bug, not bad input
  bool ok = false;
  std::string why;
  try {
    const auto back = certificate_from_json(cls, load_json(out_path, "certificate"));
    ok = back.value == cert.value && verify_certificate(cls, back);
    if (!ok) why = "certificate does not verify";
  } catch (const Error& e) {
    why = e.what();
  }
  if (g.json) {
    ordered_json j;
    j["model"] = to_string(model);
    j["value"] = cert.value;
    j["verified"] = ok;
    j["path"] = out_path.string();
    out << j.dump() << "\n";
  } else {
    out << "model=" << to_string(model) << " value=" << cert.value << " verified=" << (ok ? "true" : "false") << "\n";
  }
  if (!ok) {
    err << "verification failed: " << why << "\n";
    return kVerification;
  }
  return kOk;
}

inline ordered_json summary_json(const Summary& s) {
  ordered_json j;
  j["mean"] = s.mean;
  j["se"] = s.se;
  j["ci95"] = {s.ci_low, s.ci_high};
  return j;
}

inline int cmd_run(const std::filesystem::path& experiment_path, const Globals& g, std::ostream& out) {
  auto ex = load_experiment(experiment_path);
  if (g.seed) ex.seed = *g.seed;
  if (!ex.adversary) throw Error(ErrorCode::InvalidConfig, "experiment: missing 'adversary'");
  const auto cls = load_class(ex.class_path);
  RegistryContext ctx{cls, std::make_shared<DimensionEngine>(cls, g.limits()), ex.model, ex.horizon,
                      g.max_experts.value_or(kDefaultMaxExperts), ex.dir};
  const auto learner = make_learner_factory(ex.learner.name, ex.learner.params, ctx);
  const auto adversary = make_adversary_factory(ex.adversary->name, ex.adversary->params, ctx);

  MonteCarloConfig cfg{ex.model, ex.horizon, ex.trials, ex.seed, g.threads, true};
  const auto rep = monte_carlo(cls, learner, adversary, cfg);

  csv::Table rounds({"trial", "t", "x", "yhat", "loss", "cum_loss"});
  csv::Table summary({"trial", "loss", "comparator", "regret"});
  for (std::size_t i = 0; i < rep.trials.size(); ++i) {
    std::size_t cum = 0;
    const auto& tr = rep.transcripts[i];
    for (std::size_t t = 0; t < tr.rounds.size(); ++t) {
      const auto& r = tr.rounds[t];
      cum += r.loss ? 1 : 0;
      rounds.row({std::to_string(i), std::to_string(t), cls.instance_names()[r.x], cls.label_names()[r.yhat],
                  r.loss ? "1" : "0", std::to_string(cum)});
    }
    const auto& s = rep.trials[i];
    summary.row({std::to_string(i), std::to_string(s.loss), std::to_string(s.comparator), std::to_string(s.regret)});
  }
  csv::write_atomic(ex.out / "rounds.csv", rounds.text());
  csv::write_atomic(ex.out / "summary.csv", summary.text());

  const auto regret = rep.regret(), expected = rep.expected_regret(), loss = rep.loss();
  if (g.json) {
    ordered_json j;
    j["trials"] = ex.trials;
    j["horizon"] = ex.horizon;
    j["seed"] = ex.seed;
    j["regret"] = summary_json(regret);
    j["expected_regret"] = summary_json(expected);
    j["loss"] = summary_json(loss);
    out << j.dump() << "\n";
  } else {
    out << "learner=" << ex.learner.name << " adversary=" << ex.adversary->name << " model=" << to_string(ex.model)
        << " T=" << ex.horizon << " trials=" << ex.trials << " seed=" << ex.seed << "\n"
        << "regret mean=" << regret.mean << " se=" << regret.se << " ci95=[" << regret.ci_low << ", " << regret.ci_high
        << "]\n"
        << "expected regret mean=" << expected.mean << " se=" << expected.se << "\n"
        << "loss mean=" << loss.mean << "\n";
  }
  return kOk;
}

inline int cmd_batch(const std::filesystem::path& experiment_path, std::optional<double> delta_flag, const Globals& g,
                     std::ostream& out) {
  auto ex = load_experiment(experiment_path);
  if (g.seed) ex.seed = *g.seed;
  if (!ex.batch) throw Error(ErrorCode::InvalidConfig, "experiment: missing 'batch' section");
  const auto cls = load_class(ex.class_path);

  ParamReader b(*ex.batch, "batch");
  BatchConfig cfg;
  cfg.m_grid = b.get<std::vector<std::size_t>>("m_grid", {});
  cfg.delta = b.get<double>("delta", 0.1);
  cfg.test_size = b.get<std::size_t>("test_size", 1000);
  cfg.repetitions = b.get<std::size_t>("repetitions", 200);
  cfg.require_realizable = b.get<bool>("require_realizable", false);
  const Source source{outcomes_from_json(cls, b.raw("source"))};
  b.finish();
  if (delta_flag) cfg.delta = *delta_flag;
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw Error(ErrorCode::InvalidConfig, "delta must lie in (0, 1)");
  cfg.seed = ex.seed;
  cfg.threads = g.threads;

  RegistryContext ctx{cls, std::make_shared<DimensionEngine>(cls, g.limits()), ex.model,
                      cfg.m_grid.empty() ? 0 : *std::max_element(cfg.m_grid.begin(), cfg.m_grid.end()),
                      g.max_experts.value_or(kDefaultMaxExperts), ex.dir};
  const auto core = make_learner_factory(ex.learner.name, ex.learner.params, ctx);
  const auto rows = batch_experiment(cls, source, core, cfg);

  csv::Table table({"m", "rep", "empirical_error", "lemma61_bound", "violated"});
  for (const auto& r : rows)
    table.row({std::to_string(r.m), std::to_string(r.rep), csv::number(r.empirical_error), csv::number(r.bound),
               r.violated ? "1" : "0"});
  csv::write_atomic(ex.out / "batch.csv", table.text());

  const auto s = summarize_batch(rows, cfg.m_grid);
  if (g.json) {
    ordered_json j;
    j["delta"] = cfg.delta;
    j["violation_rate"] = s.violation_rate;
    j["violation_se"] = s.violation_se;
    ordered_json med = ordered_json::array();
    for (auto [m, e] : s.median_error) med.push_back({{"m", m}, {"median_error", e}});
    j["median_error"] = med;
    j["loglog_slope"] = s.slope ? ordered_json(*s.slope) : ordered_json(nullptr);
    out << j.dump() << "\n";
  } else {
    out << "delta=" << cfg.delta << " violation_rate=" << s.violation_rate << " se=" << s.violation_se << "\n";
    for (auto [m, e] : s.median_error) out << "m=" << m << " median_error=" << e << "\n";
    out << "loglog_slope=" << (s.slope ? std::to_string(*s.slope) : std::string("n/a")) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------------------------

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Online learning with multiple correct answers: dimensions, certificates, regret games"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the experiment's master seed");
  app.add_flag("--json", g.json, "machine-readable output");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--max-states", g.max_states, "dimension engine state budget")->check(CLI::PositiveNumber);
  app.add_option("--max-experts", g.max_experts, "expert pool size cap")->check(CLI::PositiveNumber);

  std::string class_path, experiment_path, model_name, out_path, offsets_path;
  double delta = 0.0;

  auto* dims = app.add_subcommand("dims", "print LDS, LDK, LDU of a class");
  dims->add_option("class", class_path, "class file")->required();
  auto* dims_mu = dims->add_option("--offsets", offsets_path, "JSON map hypothesis -> offset, for LDU");

  auto* certify = app.add_subcommand("certify", "write and verify a certificate for the class dimension");
  certify->add_option("class", class_path, "class file")->required();
  certify->add_option("--model", model_name, "unknown | known | set")->required();
  certify->add_option("--out", out_path, "certificate JSON path")->required();
  auto* cert_mu = certify->add_option("--offsets", offsets_path, "JSON map hypothesis -> offset (unknown model)");

  auto* run = app.add_subcommand("run", "play an experiment and write rounds.csv and summary.csv");
  run->add_option("experiment", experiment_path, "experiment file")->required();

  auto* batch = app.add_subcommand("batch", "online-to-batch experiment; writes batch.csv");
  batch->add_option("experiment", experiment_path, "experiment file")->required();
  auto* delta_opt = batch->add_option("--delta", delta, "confidence, strictly inside (0, 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (seed_opt->count()) g.seed = seed;
  if (delta_opt->count() && !(delta > 0.0 && delta < 1.0)) {
    err << "--delta must lie strictly inside (0, 1)\n";
    return kUsage;
  }

  try {
    if (*dims) return cmd_dims(class_path, dims_mu->count() ? std::optional<std::filesystem::path>(offsets_path) : std::nullopt, g, out);
    if (*certify)
      return cmd_certify(class_path, model_name, out_path,
                         cert_mu->count() ? std::optional<std::filesystem::path>(offsets_path) : std::nullopt, g, out, err);
    if (*run) return cmd_run(experiment_path, g, out);
    if (*batch) return cmd_batch(experiment_path, delta_opt->count() ? std::optional<double>(delta) : std::nullopt, g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace mlonline::cli
