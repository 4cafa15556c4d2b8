#pragma once

// Power-stratified Gaussian noise on dB-valued spectrograms. Pixels are
// labelled by linear power relative to the map peak; noise is drawn per pixel
// from a counter stream keyed by (seed, row, col).

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "json.hpp"
#include "radhar/core/error.hpp"
#include "radhar/core/matrix.hpp"
#include "radhar/core/rng.hpp"
#include "radhar/spectro_map.hpp"

namespace radhar::augment {

enum class Region : std::uint8_t { Low, Mid, High };

struct AugmentPolicy {
  double low_threshold = 0.30;
  double high_threshold = 0.60;
  double var_low = 1.0;
  double var_mid = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    require(0.0 < low_threshold && low_threshold < high_threshold && high_threshold < 1.0, Errc::InvalidConfig,
            "thresholds must satisfy 0 < low < high < 1");
    require(var_low >= 0.0 && var_mid >= 0.0, Errc::InvalidConfig, "variances must be >= 0");
  }
};

// Thresholds are compared on 10^(dB/10) ratios, which cannot hit a decimal
// fraction exactly; a few ulps of slack keep the closed [low, high] bracket.
inline constexpr double kBoundarySlack = 1e-12;

inline Matrix<Region> segment_regions(const SpectroMap& map, const AugmentPolicy& policy) {
  policy.validate();
  require(!map.values.empty(), Errc::ShapeMismatch, "empty map");
  const auto& v = map.values.values();
  const double peak_db = *std::max_element(v.begin(), v.end());
  Matrix<Region> labels(map.rows(), map.cols(), Region::Low);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double ratio = std::pow(10.0, (v[i] - peak_db) / 10.0);
    Region r = Region::Mid;
    if (ratio < policy.low_threshold * (1.0 - kBoundarySlack)) r = Region::Low;
    else if (ratio > policy.high_threshold * (1.0 + kBoundarySlack)) r = Region::High;
    labels.values()[i] = r;
  }
  return labels;
}

/// Adds N(0, var_low) to LOW pixels and N(0, var_mid) to MID pixels; HIGH
/// pixels are copied unchanged.
inline SpectroMap inject(const SpectroMap& map, const AugmentPolicy& policy) {
  const auto labels = segment_regions(map, policy);
  const CounterRng rng(policy.seed);
  const double sd_low = std::sqrt(policy.var_low), sd_mid = std::sqrt(policy.var_mid);
  SpectroMap out = map;
  for (std::size_t r = 0; r < map.rows(); ++r) {
    for (std::size_t c = 0; c < map.cols(); ++c) {
      const Region reg = labels(r, c);
      if (reg == Region::High) continue;
      const double z = rng.derive(r).normal(c);
      out.values(r, c) += (reg == Region::Low ? sd_low : sd_mid) * z;
    }
  }
  return out;
}

inline nlohmann::json to_json(const AugmentPolicy& p) {
  return {{"low_threshold", p.low_threshold}, {"high_threshold", p.high_threshold}, {"var_low", p.var_low},
          {"var_mid", p.var_mid}, {"seed", p.seed}};
}

inline AugmentPolicy policy_from_json(const nlohmann::json& j) {
  AugmentPolicy p;
  try {
    p.low_threshold = j.value("low_threshold", p.low_threshold);
    p.high_threshold = j.value("high_threshold", p.high_threshold);
    p.var_low = j.value("var_low", p.var_low);
    p.var_mid = j.value("var_mid", p.var_mid);
    p.seed = j.value("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("policy json: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace radhar::augment
