#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlonline/class_io.hpp"
#include "mlonline/core.hpp"
#include "mlonline/dimensions.hpp"

namespace mlonline {

struct CertChild;

/// A tree node. Internal nodes carry an instance and exactly |Y| children, indexed by the
/// learner's prediction ŷ. Leaves carry neither.
struct CertNode {
  std::optional<InstanceId> x;
  std::vector<CertChild> children;

  bool leaf() const { return children.empty(); }
};

/// The edge for prediction ŷ: the adversary's revealed label y (unknown/known) or set S (set).
struct CertChild {
  LabelId y = 0;
  LabelSet truth;
  CertNode node;
};

struct ShatteringCertificate {
  FeedbackModel model = FeedbackModel::Set;
  Dimension value = 0;
  HypSet version_space;
  Offsets offsets;  // unknown model only; one entry per hypothesis
  CertNode root;

  std::size_t depth() const { return depth_of(root); }

 private:
  static std::size_t depth_of(const CertNode& n) {
    std::size_t d = 0;
    for (const auto& c : n.children) d = std::max(d, 1 + depth_of(c.node));
    return d;
  }
};

namespace cert_detail {

inline CertNode build_complete(DimensionEngine& eng, FeedbackModel model, const HypSet& V, Dimension k) {
  CertNode node;
  if (k == 0) return node;
  const auto& cls = eng.hypothesis_class();
  const auto ny = static_cast<LabelId>(cls.num_labels());
  for (InstanceId x = 0; x < cls.num_instances(); ++x) {
    std::vector<CertChild> children;
    for (LabelId yhat = 0; yhat < ny; ++yhat) {
      std::optional<CertChild> pick;
      if (model == FeedbackModel::Set) {
        for (const auto& [out, members] : eng.output_groups(x)) {
          if (out.contains(yhat)) continue;
          HypSet child = V & members;
          if (child.empty() || 1 + eng.lds(child) < k) continue;
          pick = CertChild{0, out, build_complete(eng, model, child, k - 1)};
          break;
        }
      } else {
        for (LabelId y = 0; y < ny && !pick; ++y) {
          HypSet child = eng.known_child(V, x, y, yhat, true);
          if (child.empty() || 1 + eng.ldk(child) < k) continue;
          pick = CertChild{y, LabelSet::single(y), build_complete(eng, model, child, k - 1)};
        }
      }
      if (!pick) break;
      children.push_back(std::move(*pick));
    }
    if (children.size() == ny) {
      node.x = x;
      node.children = std::move(children);
      return node;
    }
  }
  throw Error(ErrorCode::MalformedCertificate, "no instance attains the required value (engine inconsistency)");
}

// Unknown-model trees may have non-mistake edges, so several trees can witness the same value
// at different depths. The builder picks the shallowest one; a depth-d tree is then a tree on
// which every edge is a mistake, which is what forcing d mistakes in d rounds needs.
class UnknownTreeBuilder {
 public:
  UnknownTreeBuilder(DimensionEngine& eng, Dimension k) : eng_(eng), k_(k) {}

  CertNode build(const HypSet& V, const Offsets& mu) {
    CertNode node;
    const auto plan = best(V, mu);
    if (!plan.x) return node;
    node.x = plan.x;
    for (const auto& [y, child, next] : choices(V, mu, *plan.x, plan.depth)) {
      node.children.push_back(CertChild{y, LabelSet::single(y), build(child, next)});
    }
    return node;
  }

  std::size_t depth(const HypSet& V, const Offsets& mu) { return best(V, mu).depth; }

 private:
  struct Plan {
    std::optional<InstanceId> x;
    std::size_t depth = 0;
  };
  struct Edge {
    LabelId y;
    HypSet child;
    Offsets next;
  };
  static constexpr std::size_t kNone = SIZE_MAX;

  // Candidate edges (x, ŷ) → y that keep the value at k and make progress (not a self-loop).
  std::vector<std::vector<Edge>> edges(const HypSet& V, const Offsets& mu, InstanceId x) {
    const auto ny = eng_.hypothesis_class().num_labels();
    std::vector<std::vector<Edge>> out(ny);
    for (LabelId yhat = 0; yhat < ny; ++yhat)
      for (LabelId y = 0; y < ny; ++y) {
        HypSet child = eng_.unknown_child(V, x, y);
        if (child.empty()) continue;
        Offsets next = eng_.bump_offsets(child, mu, x, yhat);
        bool self = child == V;
        if (self) V.for_each([&](HypothesisId h) { self = self && next[h] == mu[h]; });
        if (self || eng_.ldu(child, next) < k_) continue;
        out[yhat].push_back(Edge{y, std::move(child), std::move(next)});
      }
    return out;
  }

  std::vector<Edge> choices(const HypSet& V, const Offsets& mu, InstanceId x, std::size_t depth) {
    std::vector<Edge> picked;
    for (auto& per_yhat : edges(V, mu, x)) {
      for (auto& e : per_yhat)
        if (1 + best(e.child, e.next).depth <= depth) {
          picked.push_back(std::move(e));
          break;
        }
    }
    return picked;
  }

  Plan best(const HypSet& V, const Offsets& mu) {
    std::vector<std::uint32_t> key_mu;
    std::uint32_t max_mu = 0;
    V.for_each([&](HypothesisId h) {
      key_mu.push_back(mu[h]);
      max_mu = std::max(max_mu, mu[h]);
    });
    if (max_mu >= k_) return {};
    auto key = std::make_pair(V, key_mu);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Plan plan{std::nullopt, kNone};
    for (InstanceId x = 0; x < eng_.hypothesis_class().num_instances(); ++x) {
      std::size_t worst = 0;
      for (auto& per_yhat : edges(V, mu, x)) {
        std::size_t d = kNone;
        for (auto& e : per_yhat) d = std::min(d, 1 + best(e.child, e.next).depth);
        worst = std::max(worst, d);
        if (worst == kNone) break;
      }
      if (worst < plan.depth) plan = Plan{x, worst};
    }
    if (!plan.x) throw Error(ErrorCode::MalformedCertificate, "no instance attains the required value (engine inconsistency)");
    memo_.emplace(std::move(key), plan);
    return plan;
  }

  struct KeyHash {
    std::size_t operator()(const std::pair<HypSet, std::vector<std::uint32_t>>& k) const {
      std::size_t h = k.first.hash();
      for (auto v : k.second) h = (h ^ v) * 0x100000001B3ULL;
      return h;
    }
  };

  DimensionEngine& eng_;
  Dimension k_;
  std::unordered_map<std::pair<HypSet, std::vector<std::uint32_t>>, Plan, KeyHash> memo_;
};

}  // namespace cert_detail

/// Builds a certificate whose value is exactly the dimension of (V, μ) under `model`.
inline ShatteringCertificate extract_certificate(DimensionEngine& eng, const HypSet& V, FeedbackModel model,
                                                 const Offsets* offsets = nullptr) {
  const auto& cls = eng.hypothesis_class();
  ShatteringCertificate cert;
  cert.model = model;
  cert.version_space = V;
  cert.offsets = Offsets(cls.num_hypotheses(), 0);
  if (model == FeedbackModel::Unknown && offsets) {
    if (offsets->size() != cls.num_hypotheses())
      throw Error(ErrorCode::InvalidArgument, "offset vector must have one entry per hypothesis");
    V.for_each([&](HypothesisId h) { cert.offsets[h] = (*offsets)[h]; });
  }
  cert.value = eng.dimension(model, V, &cert.offsets);
  if (cert.value == kUnbounded)
    throw Error(ErrorCode::UnboundedDimension, "no finite certificate: some hypothesis outputs the empty set");
  if (model == FeedbackModel::Unknown)
    cert.root = cert_detail::UnknownTreeBuilder(eng, cert.value).build(V, cert.offsets);
  else
    cert.root = cert_detail::build_complete(eng, model, V, cert.value);
  return cert;
}

namespace cert_detail {

inline void check_structure(const HypothesisClass& cls, const ShatteringCertificate& cert, const CertNode& n,
                            std::size_t depth) {
  if (n.leaf()) {
    if (cert.model != FeedbackModel::Unknown && depth != cert.value)
      throw Error(ErrorCode::MalformedCertificate, "leaf at depth " + std::to_string(depth) + " in a tree of claimed depth " +
                                                       std::to_string(cert.value));
    return;
  }
  if (!n.x || *n.x >= cls.num_instances()) throw Error(ErrorCode::MalformedCertificate, "internal node without a valid instance");
  if (n.children.size() != cls.num_labels())
    throw Error(ErrorCode::MalformedCertificate, "internal node with " + std::to_string(n.children.size()) + " children, expected " +
                                                     std::to_string(cls.num_labels()));
  for (const auto& c : n.children) {
    if (cert.model != FeedbackModel::Set && c.y >= cls.num_labels())
      throw Error(ErrorCode::MalformedCertificate, "edge label out of range");
    if (!(c.truth - cls.alphabet()).empty()) throw Error(ErrorCode::MalformedCertificate, "edge set outside the alphabet");
    check_structure(cls, cert, c.node, depth + 1);
  }
}

// Walks every root-to-leaf path, keeping per-hypothesis mistake counts for the hypotheses
// consistent so far; a path is witnessed iff some survivor meets the model's requirement.
inline bool all_paths_witnessed(const HypothesisClass& cls, const ShatteringCertificate& cert, const CertNode& n,
                                const std::vector<char>& alive, const std::vector<std::uint32_t>& mistakes) {
  if (n.leaf()) {
    for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h) {
      if (!alive[h]) continue;
      if (cert.model != FeedbackModel::Unknown) return true;
      if (mistakes[h] + cert.offsets[h] >= cert.value) return true;
    }
    return false;
  }
  const InstanceId x = *n.x;
  for (LabelId yhat = 0; yhat < n.children.size(); ++yhat) {
    const auto& c = n.children[yhat];
    std::vector<char> next_alive(alive);
    std::vector<std::uint32_t> next_mistakes(mistakes);
    for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h) {
      if (!alive[h]) continue;
      const LabelSet out = cls.output(h, x);
      const bool miss = !out.contains(yhat);
      switch (cert.model) {
        case FeedbackModel::Set: next_alive[h] = out == c.truth && miss; break;
        case FeedbackModel::Known: next_alive[h] = out.contains(c.y) && miss; break;
        case FeedbackModel::Unknown:
          next_alive[h] = out.contains(c.y);
          next_mistakes[h] += miss ? 1U : 0U;
          break;
      }
    }
    if (!all_paths_witnessed(cls, cert, c.node, next_alive, next_mistakes)) return false;
  }
  return true;
}

}  // namespace cert_detail

/// Checks the certificate against the class by exhaustive witness search; independent of the engine.
inline bool verify_certificate(const HypothesisClass& cls, const ShatteringCertificate& cert) {
  if (cert.version_space.universe() != cls.num_hypotheses())
    throw Error(ErrorCode::MalformedCertificate, "version space does not match the class");
  if (cert.offsets.size() != cls.num_hypotheses())
    throw Error(ErrorCode::MalformedCertificate, "offset vector does not match the class");
  if (cert.version_space.empty()) return false;
  cert_detail::check_structure(cls, cert, cert.root, 0);
  std::vector<char> alive(cls.num_hypotheses(), 0);
  cert.version_space.for_each([&](HypothesisId h) { alive[h] = 1; });
  return cert_detail::all_paths_witnessed(cls, cert, cert.root, alive,
                                          std::vector<std::uint32_t>(cls.num_hypotheses(), 0));
}

// ---- JSON ----

namespace cert_detail {

inline void node_to_json(const HypothesisClass& cls, FeedbackModel model, const CertNode& n, ordered_json& out) {
  if (n.leaf()) return;
  out["x"] = cls.instance_names()[*n.x];
  ordered_json children = ordered_json::object();
  for (LabelId yhat = 0; yhat < n.children.size(); ++yhat) {
    const auto& c = n.children[yhat];
    ordered_json child = ordered_json::object();
    if (model == FeedbackModel::Set) child["S"] = label_set_json(cls, c.truth);
    else child["y"] = cls.label_names()[c.y];
    node_to_json(cls, model, c.node, child);
    children[cls.label_names()[yhat]] = std::move(child);
  }
  out["children"] = std::move(children);
}

[[noreturn]] inline void malformed(const std::string& what) { throw Error(ErrorCode::MalformedCertificate, what); }

inline CertNode node_from_json(const HypothesisClass& cls, FeedbackModel model, const ordered_json& j) {
  CertNode n;
  if (!j.contains("children")) {
    if (j.contains("x")) malformed("node has an instance but no children");
    return n;
  }
  if (!j.contains("x") || !j["x"].is_string()) malformed("internal node needs an instance name");
  auto x = cls.instance_index(j["x"].get<std::string>());
  if (!x) malformed("unknown instance '" + j["x"].get<std::string>() + "'");
  n.x = *x;
  const auto& ch = j["children"];
  if (!ch.is_object()) malformed("'children' must be an object keyed by label");
  std::vector<std::optional<CertChild>> slots(cls.num_labels());
  for (const auto& [key, value] : ch.items()) {
    auto yhat = cls.label_index(key);
    if (!yhat) malformed("unknown child label '" + key + "'");
    if (!value.is_object()) malformed("child must be an object");
    CertChild c;
    if (model == FeedbackModel::Set) {
      if (!value.contains("S") || !value["S"].is_array()) malformed("set-valued child needs 'S'");
      for (const auto& l : value["S"]) {
        if (!l.is_string()) malformed("'S' must list label names");
        auto y = cls.label_index(l.get<std::string>());
        if (!y) malformed("unknown label '" + l.get<std::string>() + "'");
        c.truth.insert(*y);
      }
    } else {
      if (!value.contains("y") || !value["y"].is_string()) malformed("multi-label child needs 'y'");
      auto y = cls.label_index(value["y"].get<std::string>());
      if (!y) malformed("unknown label '" + value["y"].get<std::string>() + "'");
      c.y = *y;
      c.truth = LabelSet::single(*y);
    }
    c.node = node_from_json(cls, model, value);
    slots[*yhat] = std::move(c);
  }
  for (auto& s : slots) {
    if (!s) malformed("internal node is missing a child");
    n.children.push_back(std::move(*s));
  }
  return n;
}

}  // namespace cert_detail

inline ordered_json certificate_to_json(const HypothesisClass& cls, const ShatteringCertificate& cert) {
  ordered_json j;
  j["model"] = std::string(to_string(cert.model));
  j["value"] = cert.value;
  if (cert.version_space != cls.everyone()) {
    ordered_json vs = ordered_json::array();
    cert.version_space.for_each([&](HypothesisId h) { vs.push_back(cls.hypothesis_names()[h]); });
    j["version_space"] = std::move(vs);
  }
  if (std::any_of(cert.offsets.begin(), cert.offsets.end(), [](auto o) { return o != 0; })) {
    ordered_json off = ordered_json::object();
    for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h)
      if (cert.offsets[h] != 0) off[cls.hypothesis_names()[h]] = cert.offsets[h];
    j["offsets"] = std::move(off);
  }
  cert_detail::node_to_json(cls, cert.model, cert.root, j);
  return j;
}

inline ShatteringCertificate certificate_from_json(const HypothesisClass& cls, const ordered_json& j) {
  using cert_detail::malformed;
  if (!j.is_object()) malformed("certificate must be an object");
  ShatteringCertificate cert;
  try {
    if (!j.contains("model") || !j["model"].is_string()) malformed("missing 'model'");
    cert.model = parse_model(j["model"].get<std::string>());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedCertificate) throw;
    malformed(e.what());
  }
  if (!j.contains("value") || !j["value"].is_number_unsigned()) malformed("missing or negative 'value'");
  cert.value = j["value"].get<Dimension>();
  cert.version_space = cls.everyone();
  if (j.contains("version_space")) {
    cert.version_space = HypSet(cls.num_hypotheses());
    for (const auto& n : j["version_space"]) {
      if (!n.is_string()) malformed("'version_space' must list hypothesis names");
      auto h = cls.hypothesis_index(n.get<std::string>());
      if (!h) malformed("unknown hypothesis '" + n.get<std::string>() + "'");
      cert.version_space.insert(*h);
    }
  }
  cert.offsets = Offsets(cls.num_hypotheses(), 0);
  if (j.contains("offsets")) {
    if (!j["offsets"].is_object()) malformed("'offsets' must map hypothesis names to counts");
    for (const auto& [name, v] : j["offsets"].items()) {
      auto h = cls.hypothesis_index(name);
      if (!h || !v.is_number_unsigned()) malformed("bad offset entry '" + name + "'");
      cert.offsets[*h] = v.get<std::uint32_t>();
    }
  }
  cert.root = cert_detail::node_from_json(cls, cert.model, j);
  return cert;
}

}  // namespace mlonline
