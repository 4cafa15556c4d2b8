#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace radhar {

/// Stateless counter-based generator. Each draw is a pure function of
/// (key, counter): the SplitMix64 finalizer applied to key + (counter+1)*gamma.
/// Normal variates use Box-Muller on two consecutive counters, so streams are
/// reproducible across platforms and independent of evaluation order.
class CounterRng {
 public:
  static constexpr std::string_view algorithm = "splitmix64-counter+box-muller";

  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(mix(key)) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix(key_ + (counter + 1) * kGamma);
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const noexcept {
    return lo + (hi - lo) * uniform(counter);
  }

  /// Standard normal draw; consumes counters 2c and 2c+1.
  double normal(std::uint64_t counter) const noexcept {
    double re = 0.0, im = 0.0;
    normal_pair(counter, re, im);
    return re;
  }

  void normal_pair(std::uint64_t counter, double& z0, double& z1) const noexcept {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    z0 = radius * std::cos(theta);
    z1 = radius * std::sin(theta);
  }

  /// Independent child stream, e.g. one per chirp or per layer.
  constexpr CounterRng derive(std::uint64_t stream) const noexcept {
    return CounterRng(key_ ^ mix(stream + 0x632be59bd9b4e019ULL), Raw{});
  }

 private:
  struct Raw {};
  constexpr CounterRng(std::uint64_t key, Raw) noexcept : key_(key) {}

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
};

}  // namespace radhar
