#pragma once

// Per-class proportional train/validation/test split.

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "json.hpp"
#include "radhar/core/error.hpp"
#include "radhar/core/rng.hpp"

namespace radhar::train {

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Shuffles each class with a seeded Fisher-Yates pass, then cuts it at the
/// rounded cumulative fractions. Requires >= 5 samples per class.
inline SplitIndices stratified_split(const std::vector<std::size_t>& labels, std::array<double, 3> fractions,
                                     std::uint64_t seed) {
  for (double f : fractions) require(f >= 0.0, Errc::InvalidConfig, "split fractions must be >= 0");
  require(std::fabs(fractions[0] + fractions[1] + fractions[2] - 1.0) <= 1e-9, Errc::InvalidConfig,
          "split fractions must sum to 1");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  SplitIndices out;
  const CounterRng rng(seed);
  for (auto& [label, idx] : by_class) {
    require(idx.size() >= 5, Errc::TooFewSamples,
            "class " + std::to_string(label) + " has " + std::to_string(idx.size()) + " samples, need >= 5");
    const CounterRng r = rng.derive(label);
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(r.uniform(i) * static_cast<double>(i + 1));
      std::swap(idx[i], idx[std::min(j, i)]);
    }
    const double n = static_cast<double>(idx.size());
    const auto cut1 = static_cast<std::size_t>(std::llround(fractions[0] * n));
    const auto cut2 = static_cast<std::size_t>(std::llround((fractions[0] + fractions[1]) * n));
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + cut1);
    out.val.insert(out.val.end(), idx.begin() + cut1, idx.begin() + cut2);
    out.test.insert(out.test.end(), idx.begin() + cut2, idx.end());
  }
  return out;
}

inline nlohmann::json to_json(const SplitIndices& s) {
  return {{"train", s.train}, {"val", s.val}, {"test", s.test}};
}

}  // namespace radhar::train
