#pragma once

#include <string>
#include <vector>

#include "mlonline/core.hpp"

namespace mlonline::testing {

inline std::vector<std::string> names(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Three hypotheses on one instance, each excluding one label: h_i(x) = Y \ {i}.
inline HypothesisClass h3() {
  return HypothesisClass({"1", "2", "3"}, {"x"}, {"h1", "h2", "h3"},
                         {LabelSet::of({1, 2}), LabelSet::of({0, 2}), LabelSet::of({0, 1})});
}

// All four singleton-output binary labelings of two instances.
inline HypothesisClass binary4() {
  std::vector<LabelSet> table;
  for (LabelId a = 0; a < 2; ++a)
    for (LabelId b = 0; b < 2; ++b) {
      table.push_back(LabelSet::single(a));
      table.push_back(LabelSet::single(b));
    }
  return HypothesisClass({"0", "1"}, {"x1", "x2"}, {"h00", "h01", "h10", "h11"}, std::move(table));
}

inline HypothesisClass singleton() {
  return HypothesisClass({"a", "b"}, {"x1", "x2"}, {"h"}, {LabelSet::of({0}), LabelSet::of({0, 1})});
}

// Random class with |H| <= max_h, |X| <= max_x, |Y| <= max_y and nonempty cells.
// Cells are nonempty because an empty output makes the set-valued dimension unbounded.
inline HypothesisClass random_class(Rng& rng, std::size_t max_h = 6, std::size_t max_x = 3, std::size_t max_y = 4) {
  const std::size_t nh = 1 + uniform_index(rng, max_h);
  const std::size_t nx = 1 + uniform_index(rng, max_x);
  const std::size_t ny = 1 + uniform_index(rng, max_y);
  std::vector<LabelSet> table;
  for (std::size_t i = 0; i < nh * nx; ++i) {
    const std::uint64_t bits = 1 + uniform_index(rng, (std::size_t{1} << ny) - 1);
    table.push_back(LabelSet::from_bits(bits));
  }
  return HypothesisClass(names("y", ny), names("x", nx), names("h", nh), std::move(table));
}

// A corpus of n classes from a fixed seed; the same across runs.
inline std::vector<HypothesisClass> corpus(std::size_t n, std::uint64_t seed = 20240601) {
  Rng rng(seed);
  std::vector<HypothesisClass> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_class(rng));
  return out;
}

}  // namespace mlonline::testing
