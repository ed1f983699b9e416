#pragma once

#include <algorithm>
#include <boost/container/small_vector.hpp>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "mlonline/error.hpp"

namespace mlonline {

using LabelId = std::uint32_t;
using InstanceId = std::uint32_t;
using HypothesisId = std::uint32_t;

inline constexpr std::size_t kMaxLabels = 64;

/// A subset of the label alphabet packed into one machine word.
class LabelSet {
 public:
  constexpr LabelSet() = default;

  static constexpr LabelSet from_bits(std::uint64_t bits) { return LabelSet(bits); }
  static constexpr LabelSet single(LabelId y) { return LabelSet(std::uint64_t{1} << y); }
  static constexpr LabelSet all(std::size_t num_labels) {
    return LabelSet(num_labels >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << num_labels) - 1);
  }
  static LabelSet of(std::initializer_list<LabelId> ys) {
    LabelSet s;
    for (auto y : ys) s.insert(y);
    return s;
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool contains(LabelId y) const { return (bits_ >> y) & 1U; }
  constexpr void insert(LabelId y) { bits_ |= std::uint64_t{1} << y; }
  constexpr void erase(LabelId y) { bits_ &= ~(std::uint64_t{1} << y); }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool empty() const { return bits_ == 0; }

  std::optional<LabelId> lowest() const {
    if (bits_ == 0) return std::nullopt;
    return static_cast<LabelId>(std::countr_zero(bits_));
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) f(static_cast<LabelId>(std::countr_zero(b)));
  }

  std::vector<LabelId> members() const {
    std::vector<LabelId> out;
    for_each([&](LabelId y) { out.push_back(y); });
    return out;
  }

  constexpr LabelSet operator&(LabelSet o) const { return LabelSet(bits_ & o.bits_); }
  constexpr LabelSet operator|(LabelSet o) const { return LabelSet(bits_ | o.bits_); }
  constexpr LabelSet operator-(LabelSet o) const { return LabelSet(bits_ & ~o.bits_); }
  constexpr bool operator==(const LabelSet&) const = default;
  constexpr auto operator<=>(const LabelSet&) const = default;

 private:
  constexpr explicit LabelSet(std::uint64_t bits) : bits_(bits) {}
  std::uint64_t bits_ = 0;
};

/// Subset of hypothesis indices; the version-space representation.
/// Classes of up to 128 hypotheses stay inline (no heap traffic in the hot loops).
class HypSet {
 public:
  using Words = boost::container::small_vector<std::uint64_t, 2>;

  HypSet() = default;
  explicit HypSet(std::size_t universe) : universe_(universe), words_((universe + 63) / 64, 0) {}

  static HypSet full(std::size_t universe) {
    HypSet s(universe);
    for (std::size_t i = 0; i < universe; ++i) s.insert(static_cast<HypothesisId>(i));
    return s;
  }

  static HypSet of(std::size_t universe, std::initializer_list<HypothesisId> ids) {
    HypSet s(universe);
    for (auto h : ids) s.insert(h);
    return s;
  }

  std::size_t universe() const { return universe_; }
  bool contains(HypothesisId h) const { return (words_[h / 64] >> (h % 64)) & 1U; }
  void insert(HypothesisId h) { words_[h / 64] |= std::uint64_t{1} << (h % 64); }
  void erase(HypothesisId h) { words_[h / 64] &= ~(std::uint64_t{1} << (h % 64)); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool empty() const {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }

  std::optional<HypothesisId> first() const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] != 0) return static_cast<HypothesisId>(i * 64 + std::countr_zero(words_[i]));
    return std::nullopt;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      for (std::uint64_t b = words_[i]; b != 0; b &= b - 1)
        f(static_cast<HypothesisId>(i * 64 + std::countr_zero(b)));
  }

  std::vector<HypothesisId> members() const {
    std::vector<HypothesisId> out;
    for_each([&](HypothesisId h) { out.push_back(h); });
    return out;
  }

  bool is_subset_of(const HypSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~o.words_[i]) return false;
    return true;
  }

  HypSet operator&(const HypSet& o) const {
    HypSet r(*this);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] &= o.words_[i];
    return r;
  }
  HypSet operator|(const HypSet& o) const {
    HypSet r(*this);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] |= o.words_[i];
    return r;
  }
  HypSet operator-(const HypSet& o) const {
    HypSet r(*this);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] &= ~o.words_[i];
    return r;
  }

  bool operator==(const HypSet&) const = default;

  std::size_t hash() const {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ universe_;
    for (auto w : words_) {
      h ^= w + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }

  const Words& words() const { return words_; }

 private:
  std::size_t universe_ = 0;
  Words words_;
};

struct HypSetHash {
  std::size_t operator()(const HypSet& s) const { return s.hash(); }
};

/// Unvalidated class description, as read from a class file. Order is authoritative.
struct RawClass {
  struct Hypothesis {
    std::string name;
    std::vector<std::pair<std::string, std::vector<std::string>>> cells;  // instance -> labels
  };
  std::vector<std::string> labels;
  std::vector<std::string> instances;
  std::vector<Hypothesis> hypotheses;
  // Duplicate object keys seen by the parser (JSON objects cannot carry them otherwise).
  std::vector<std::string> duplicate_keys;
};

/// A finite multi-label hypothesis class: a table h(x) ⊆ Y for every (h, x).
class HypothesisClass {
 public:
  HypothesisClass(std::vector<std::string> labels, std::vector<std::string> instances,
                  std::vector<std::string> hypothesis_names, std::vector<LabelSet> table,
                  std::vector<std::string> warnings = {})
      : labels_(std::move(labels)),
        instances_(std::move(instances)),
        hypotheses_(std::move(hypothesis_names)),
        table_(std::move(table)),
        warnings_(std::move(warnings)) {
    if (labels_.empty() || instances_.empty() || hypotheses_.empty())
      throw Error(ErrorCode::EmptyAlphabet, "a class needs at least one label, instance and hypothesis");
    if (labels_.size() > kMaxLabels)
      throw Error(ErrorCode::AlphabetTooLarge, std::to_string(labels_.size()) + " labels");
    if (table_.size() != hypotheses_.size() * instances_.size())
      throw Error(ErrorCode::UndefinedCell, "table size does not match |H| x |X|");
    const LabelSet alphabet = LabelSet::all(labels_.size());
    for (auto s : table_)
      if (!(s - alphabet).empty()) throw Error(ErrorCode::UnknownLabel, "cell outside the alphabet");
  }

  std::size_t num_labels() const { return labels_.size(); }
  std::size_t num_instances() const { return instances_.size(); }
  std::size_t num_hypotheses() const { return hypotheses_.size(); }

  LabelSet output(HypothesisId h, InstanceId x) const { return table_[h * instances_.size() + x]; }

  const std::vector<std::string>& label_names() const { return labels_; }
  const std::vector<std::string>& instance_names() const { return instances_; }
  const std::vector<std::string>& hypothesis_names() const { return hypotheses_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  LabelSet alphabet() const { return LabelSet::all(labels_.size()); }
  HypSet everyone() const { return HypSet::full(hypotheses_.size()); }

  std::optional<LabelId> label_index(std::string_view name) const { return find(labels_, name); }
  std::optional<InstanceId> instance_index(std::string_view name) const { return find(instances_, name); }
  std::optional<HypothesisId> hypothesis_index(std::string_view name) const { return find(hypotheses_, name); }

  bool operator==(const HypothesisClass& o) const {
    return labels_ == o.labels_ && instances_ == o.instances_ && hypotheses_ == o.hypotheses_ &&
           table_ == o.table_;
  }

 private:
  static std::optional<std::uint32_t> find(const std::vector<std::string>& names, std::string_view name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<std::uint32_t>(i);
    return std::nullopt;
  }

  std::vector<std::string> labels_;
  std::vector<std::string> instances_;
  std::vector<std::string> hypotheses_;
  std::vector<LabelSet> table_;  // row-major: hypothesis, then instance
  std::vector<std::string> warnings_;
};

/// Checks every class rule and reports all violations at once.
inline HypothesisClass validate_class(const RawClass& raw) {
  std::vector<Violation> violations;
  auto check_unique = [&](const std::vector<std::string>& names, const char* what) {
    std::set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second)
        violations.push_back({ErrorCode::DuplicateName, std::string(what) + " '" + n + "'"});
  };
  check_unique(raw.labels, "label");
  check_unique(raw.instances, "instance");
  std::vector<std::string> hyp_names;
  for (const auto& h : raw.hypotheses) hyp_names.push_back(h.name);
  check_unique(hyp_names, "hypothesis");
  for (const auto& key : raw.duplicate_keys)
    violations.push_back({ErrorCode::DuplicateName, "key '" + key + "'"});

  if (raw.labels.empty()) violations.push_back({ErrorCode::EmptyAlphabet, "no labels"});
  if (raw.instances.empty()) violations.push_back({ErrorCode::EmptyAlphabet, "no instances"});
  if (raw.hypotheses.empty()) violations.push_back({ErrorCode::EmptyAlphabet, "no hypotheses"});
  if (raw.labels.size() > kMaxLabels)
    violations.push_back({ErrorCode::AlphabetTooLarge,
                          std::to_string(raw.labels.size()) + " labels (limit 64)"});

  auto index_of = [](const std::vector<std::string>& names, const std::string& n) -> std::optional<std::size_t> {
    auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  };

  std::vector<LabelSet> table(raw.hypotheses.size() * raw.instances.size());
  std::vector<std::string> warnings;
  for (std::size_t hi = 0; hi < raw.hypotheses.size(); ++hi) {
    const auto& hyp = raw.hypotheses[hi];
    std::vector<bool> defined(raw.instances.size(), false);
    for (const auto& [inst, labels] : hyp.cells) {
      auto xi = index_of(raw.instances, inst);
      if (!xi) {
        violations.push_back({ErrorCode::UnknownInstance, "hypothesis '" + hyp.name + "' uses '" + inst + "'"});
        continue;
      }
      if (defined[*xi]) {
        violations.push_back({ErrorCode::DuplicateName, "hypothesis '" + hyp.name + "' repeats '" + inst + "'"});
        continue;
      }
      defined[*xi] = true;
      LabelSet cell;
      for (const auto& l : labels) {
        auto yi = index_of(raw.labels, l);
        if (!yi) {
          violations.push_back({ErrorCode::UnknownLabel, "hypothesis '" + hyp.name + "' at '" + inst + "' uses '" + l + "'"});
          continue;
        }
        if (*yi >= kMaxLabels) continue;
        if (cell.contains(static_cast<LabelId>(*yi)))
          violations.push_back({ErrorCode::DuplicateName, "hypothesis '" + hyp.name + "' at '" + inst + "' repeats '" + l + "'"});
        cell.insert(static_cast<LabelId>(*yi));
      }
      table[hi * raw.instances.size() + *xi] = cell;
      if (labels.empty()) warnings.push_back("hypothesis '" + hyp.name + "' maps '" + inst + "' to the empty set");
    }
    for (std::size_t xi = 0; xi < raw.instances.size(); ++xi)
      if (!defined[xi])
        violations.push_back({ErrorCode::UndefinedCell, "hypothesis '" + hyp.name + "' omits '" + raw.instances[xi] + "'"});
  }

  if (!violations.empty()) throw ValidationError(std::move(violations));
  return HypothesisClass(raw.labels, raw.instances, hyp_names, std::move(table), std::move(warnings));
}

/// ⋂_{h∈V} h(x).
inline LabelSet intersection_at(const HypothesisClass& cls, const HypSet& V, InstanceId x) {
  if (V.empty()) throw Error(ErrorCode::EmptyVersionSpace, "intersection over an empty version space");
  LabelSet acc = cls.alphabet();
  V.for_each([&](HypothesisId h) { acc = acc & cls.output(h, x); });
  return acc;
}

inline bool all_points_intersect(const HypothesisClass& cls, const HypSet& V) {
  for (InstanceId x = 0; x < cls.num_instances(); ++x)
    if (intersection_at(cls, V, x).empty()) return false;
  return true;
}

/// True iff 2|h'(x) \ h(x)| <= |h(x)| for all h, h', x: the constant-regret condition for SVWM.
inline bool check_svwm_condition(const HypothesisClass& cls) {
  for (InstanceId x = 0; x < cls.num_instances(); ++x)
    for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h)
      for (HypothesisId g = 0; g < cls.num_hypotheses(); ++g)
        if (2 * (cls.output(g, x) - cls.output(h, x)).size() > cls.output(h, x).size()) return false;
  return true;
}

enum class FeedbackModel { Unknown, Known, Set };

inline std::string_view to_string(FeedbackModel m) {
  switch (m) {
    case FeedbackModel::Unknown: return "unknown";
    case FeedbackModel::Known: return "known";
    case FeedbackModel::Set: return "set";
  }
  return "?";
}

inline FeedbackModel parse_model(std::string_view s) {
  if (s == "unknown") return FeedbackModel::Unknown;
  if (s == "known") return FeedbackModel::Known;
  if (s == "set") return FeedbackModel::Set;
  throw Error(ErrorCode::InvalidArgument, "unknown feedback model '" + std::string(s) + "'");
}

struct UnknownFeedback {
  LabelId y;
};
struct KnownFeedback {
  LabelId y;
  bool mistake;
};
struct SetFeedback {
  LabelSet truth;
};

/// What the learner sees after predicting. The variant carries only the fields its model permits.
using Feedback = std::variant<UnknownFeedback, KnownFeedback, SetFeedback>;

inline FeedbackModel model_of(const Feedback& fb) {
  return static_cast<FeedbackModel>(fb.index());
}

inline void require_model(const Feedback& fb, FeedbackModel expected) {
  if (model_of(fb) != expected)
    throw Error(ErrorCode::ModelMismatch, std::string("expected ") + std::string(to_string(expected)) +
                                              " feedback, got " + std::string(to_string(model_of(fb))));
}

inline constexpr double kProbabilityTolerance = 1e-12;

/// A probability vector over the label alphabet.
class PredictionDistribution {
 public:
  PredictionDistribution() = default;

  explicit PredictionDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorCode::InvalidDistribution, "empty distribution");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidDistribution, "negative or non-finite entry");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidDistribution, "entries sum to " + std::to_string(total));
    // Renormalize so the stored vector meets the 1e-12 tolerance.
    for (double& p : probs_) p /= total;
  }

  static PredictionDistribution point_mass(std::size_t num_labels, LabelId y) {
    std::vector<double> p(num_labels, 0.0);
    p.at(y) = 1.0;
    return PredictionDistribution(std::move(p));
  }

  static PredictionDistribution uniform(std::size_t num_labels) {
    return PredictionDistribution(std::vector<double>(num_labels, 1.0 / static_cast<double>(num_labels)));
  }

  /// Normalizes non-negative masses; all-zero masses give the uniform distribution.
  static PredictionDistribution from_masses(std::vector<double> masses) {
    double total = 0.0;
    for (double m : masses) total += m;
    if (!(total > 0.0)) return uniform(masses.size());
    for (double& m : masses) m /= total;
    return PredictionDistribution(std::move(masses));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](LabelId y) const { return probs_[y]; }
  const std::vector<double>& probs() const { return probs_; }

  double mass_outside(LabelSet s) const {
    double total = 0.0;
    for (std::size_t y = 0; y < probs_.size(); ++y)
      if (!s.contains(static_cast<LabelId>(y))) total += probs_[y];
    return total;
  }

  std::optional<LabelId> point() const {
    for (std::size_t y = 0; y < probs_.size(); ++y)
      if (probs_[y] == 1.0) return static_cast<LabelId>(y);
    return std::nullopt;
  }

  /// Inverse-CDF draw from a uniform variate in [0, 1).
  LabelId sample_with(double u) const {
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t y = 0; y < probs_.size(); ++y) {
      if (probs_[y] <= 0.0) continue;
      acc += probs_[y];
      last = y;
      if (u < acc) return static_cast<LabelId>(y);
    }
    return static_cast<LabelId>(last);
  }

  bool operator==(const PredictionDistribution&) const = default;

 private:
  std::vector<double> probs_;
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) using the top 53 bits; identical across platforms for a fixed engine.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

inline LabelId sample(const PredictionDistribution& p, Rng& rng) { return p.sample_with(uniform01(rng)); }

/// splitmix64 finalizer; trial seeds are mix(master, trial index).
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Round {
  InstanceId x = 0;
  PredictionDistribution prediction;
  LabelId yhat = 0;
  LabelSet truth;
  std::optional<LabelId> y;
  Feedback shown;
  bool loss = false;
};

/// Full record of one learner-vs-adversary game, including the hidden truth sets.
struct Transcript {
  FeedbackModel model = FeedbackModel::Set;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  std::vector<Round> rounds;

  std::size_t total_loss() const {
    std::size_t n = 0;
    for (const auto& r : rounds) n += r.loss ? 1 : 0;
    return n;
  }

  /// Loss averaged over the learner's own randomization: Σ_t p_t(Y \ S_t).
  double expected_loss() const {
    double total = 0.0;
    for (const auto& r : rounds) total += r.prediction.mass_outside(r.truth);
    return total;
  }
};

}  // namespace mlonline
