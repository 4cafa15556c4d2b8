#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "radhar/augment.hpp"

using namespace radhar;
using namespace radhar::augment;

namespace {

SpectroMap map_from(std::size_t rows, std::size_t cols, const std::vector<double>& v) {
  SpectroMap m;
  m.values = Matrix<double>(rows, cols);
  m.values.values() = v;
  m.row_axis = m.col_axis = {"i", "", 0.0, 1.0};
  return m;
}

double db(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace

TEST(Segment, LabelsFollowPowerRatio) {
  // Peak 0 dB; ratios 1, 0.7, 0.6, 0.45, 0.3, 0.29, 0.01.
  const auto m = map_from(1, 7, {0.0, db(0.7), db(0.6), db(0.45), db(0.3), db(0.29), db(0.01)});
  const auto l = segment_regions(m, {});
  const std::vector<Region> want = {Region::High, Region::High, Region::Mid, Region::Mid,
                                    Region::Mid,  Region::Low,  Region::Low};
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(l.values()[i], want[i]) << i;
}

TEST(Segment, RelativeToPeakNotAbsolute) {
  const auto m = map_from(1, 3, {-40.0, -40.0 + db(0.5), -40.0 + db(0.1)});
  const auto l = segment_regions(m, {});
  EXPECT_EQ(l(0, 0), Region::High);
  EXPECT_EQ(l(0, 1), Region::Mid);
  EXPECT_EQ(l(0, 2), Region::Low);
}

TEST(Inject, HighPixelsUntouchedOthersPerturbed) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-30.0, 0.0);
  std::vector<double> v(64 * 64);
  for (auto& x : v) x = u(gen);
  v[100] = 0.5;
  const auto m = map_from(64, 64, v);
  const auto labels = segment_regions(m, {});
  const auto out = inject(m, {});
  std::size_t high = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (labels.values()[i] == Region::High) {
      ++high;
      EXPECT_EQ(out.values.values()[i], v[i]);
    } else {
      EXPECT_NE(out.values.values()[i], v[i]);
    }
  }
  EXPECT_GE(high, 1u);
}

TEST(Inject, LowRegionStatistics) {
  // One peak pixel, the rest far below: LOW everywhere else.
  const std::size_t rows = 400, cols = 250;
  std::vector<double> v(rows * cols, -50.0);
  v[0] = 0.0;
  const auto m = map_from(rows, cols, v);
  for (double var : {1.0, 2.5}) {
    AugmentPolicy pol;
    pol.var_low = var;
    pol.seed = 77;
    const auto out = inject(m, pol);
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double d = out.values.values()[i] - v[i];
      sum += d, sq += d * d, ++n;
    }
    const double mean = sum / n;
    const double variance = sq / n - mean * mean;
    EXPECT_LE(std::fabs(mean), 0.02);
    EXPECT_LE(std::fabs(variance - var) / var, 0.05);
  }
}

TEST(Inject, MidRegionUsesMidVariance) {
  const std::size_t n = 100000;
  std::vector<double> v(n, db(0.45));
  v[0] = 0.0;
  const auto m = map_from(1, n, v);
  AugmentPolicy pol;
  pol.var_mid = 0.5;
  const auto out = inject(m, pol);
  double sq = 0;
  for (std::size_t i = 1; i < n; ++i) sq += std::pow(out.values.values()[i] - v[i], 2);
  EXPECT_NEAR(sq / (n - 1), 0.5, 0.5 * 0.05);
}

TEST(Inject, DeterministicAndSeedSensitive) {
  std::vector<double> v(32 * 32);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -0.03 * i;
  const auto m = map_from(32, 32, v);
  AugmentPolicy pol;
  pol.seed = 3;
  EXPECT_TRUE(inject(m, pol).values == inject(m, pol).values);
  pol.seed = 4;
  EXPECT_FALSE(inject(m, pol).values == inject(m, AugmentPolicy{.seed = 3}).values);
}

// Raising a threshold can only move pixels downward in the ordering Low < Mid < High.
TEST(Segment, MonotoneInThresholds) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-20.0, 0.0);
  std::vector<double> v(2000);
  for (auto& x : v) x = u(gen);
  const auto m = map_from(40, 50, v);
  for (double lo : {0.1, 0.2, 0.3, 0.4}) {
    AugmentPolicy a{lo, 0.6}, b{lo + 0.05, 0.7};
    const auto la = segment_regions(m, a), lb = segment_regions(m, b);
    for (std::size_t i = 0; i < v.size(); ++i)
      EXPECT_LE(static_cast<int>(lb.values()[i]), static_cast<int>(la.values()[i]));
  }
}

TEST(Inject, NoiseUncorrelatedAcrossNeighbours) {
  const std::size_t rows = 300, cols = 300;
  std::vector<double> v(rows * cols, -60.0);
  v[0] = 0.0;
  const auto m = map_from(rows, cols, v);
  const auto out = inject(m, {.seed = 9});
  auto noise = [&](std::size_t r, std::size_t c) { return out.values(r, c) - m.values(r, c); };
  double sxy_h = 0, sxy_v = 0, sxx = 0;
  std::size_t n = 0;
  for (std::size_t r = 1; r + 1 < rows; ++r)
    for (std::size_t c = 1; c + 1 < cols; ++c) {
      const double z = noise(r, c);
      sxy_h += z * noise(r, c + 1);
      sxy_v += z * noise(r + 1, c);
      sxx += z * z;
      ++n;
    }
  EXPECT_LT(std::fabs(sxy_h / sxx), 0.02);
  EXPECT_LT(std::fabs(sxy_v / sxx), 0.02);
}

TEST(Policy, ValidationAndJson) {
  EXPECT_THROW(segment_regions(map_from(1, 1, {0.0}), AugmentPolicy{0.7, 0.6}), Error);
  EXPECT_THROW(inject(map_from(1, 1, {0.0}), AugmentPolicy{0.3, 0.6, -1.0}), Error);
  AugmentPolicy p{0.25, 0.5, 2.0, 0.75, 99};
  const auto back = policy_from_json(to_json(p));
  EXPECT_EQ(back.low_threshold, 0.25);
  EXPECT_EQ(back.var_mid, 0.75);
  EXPECT_EQ(back.seed, 99u);
}
