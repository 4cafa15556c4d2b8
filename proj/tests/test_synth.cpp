#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "radhar/dsp.hpp"
#include "radhar/synth.hpp"

using namespace radhar;
using namespace radhar::synth;

namespace {

Scene single(double r0, double v, double amp = 1.0, double duration = 0.01) {
  Scene s;
  s.scatterers = {{r0, amp, {{0.0, v}}}};
  s.duration_s = duration;
  return s;
}

}  // namespace

TEST(Synth, BeatFrequencyForThreeMetres) {
  const auto p = nominal_params();
  const auto echo = generate(single(3.0, 0.0), p);
  const double fb = 2.0 * p.chirp_slope() * 3.0 / 299'792'458.0;
  EXPECT_NEAR(fb, 8006.0, 1.0);
  // Fast-time phase advance per sample equals 2 pi f_b / f_s.
  const double step = std::arg(echo.data(0, 1) / echo.data(0, 0));
  EXPECT_NEAR(step, 2.0 * std::numbers::pi * fb / p.sample_rate_hz(), 1e-9);
  const auto spec = dsp::dft(echo.data.row(0), std::vector<double>(128, 1.0), p.sample_rate_hz());
  std::size_t best = 0;
  for (std::size_t k = 1; k < spec.bins.size(); ++k)
    if (std::abs(spec.bins[k]) > std::abs(spec.bins[best])) best = k;
  EXPECT_EQ(best, 8u);
  EXPECT_DOUBLE_EQ(spec.bin_resolution_hz * best, 8000.0);
}

TEST(Synth, SlowTimePhaseTracksRange) {
  const auto p = nominal_params();
  const double v = 0.7;
  const auto echo = generate(single(3.0, v, 1.0, 0.05), p);
  // Phase change per chirp at fast-time sample 0: -4 pi v T / lambda.
  const double want = -4.0 * std::numbers::pi * v * p.chirp_duration_s / p.wavelength_m();
  const double got = std::arg(echo.data(11, 0) / echo.data(10, 0));
  EXPECT_NEAR(got, want, 1e-9);
  EXPECT_NEAR(-got / (2.0 * std::numbers::pi * p.chirp_duration_s), oracle::doppler_hz(v, p.carrier_freq_hz), 1e-6);
}

TEST(Synth, EmptySceneIsZero) {
  Scene s;
  s.duration_s = 0.02;
  const auto echo = generate(s, nominal_params());
  EXPECT_EQ(echo.chirps(), 20u);
  for (auto v : echo.data.values()) EXPECT_EQ(v, cdouble{});
}

TEST(Synth, SuperpositionAndAmplitudeScaling) {
  const auto p = nominal_params();
  const Scatterer a{2.0, 0.7, {{0.0, 1.2}}}, b{4.5, 1.3, {{0.0, -0.4}, {0.005, 0.9}}};
  Scene sa, sb, sab;
  sa.duration_s = sb.duration_s = sab.duration_s = 0.016;
  sa.scatterers = {a};
  sb.scatterers = {b};
  sab.scatterers = {a, b};
  const auto ea = generate(sa, p), eb = generate(sb, p), eab = generate(sab, p);
  for (std::size_t i = 0; i < eab.data.size(); ++i)
    EXPECT_LE(std::abs(eab.data.values()[i] - ea.data.values()[i] - eb.data.values()[i]), 1e-12);

  Scene scaled = sa;
  scaled.scatterers[0].amplitude *= 3.0;
  const auto es = generate(scaled, p);
  for (std::size_t i = 0; i < es.data.size(); ++i)
    EXPECT_LE(std::abs(es.data.values()[i] - 3.0 * ea.data.values()[i]), 1e-12);
}

TEST(Synth, RealModeCarriesCosine) {
  const auto p = nominal_params();
  Scene s = single(3.0, 0.5);
  const auto analytic = generate(s, p);
  s.analytic = false;
  const auto real = generate(s, p);
  for (std::size_t i = 0; i < real.data.size(); ++i) {
    EXPECT_NEAR(real.data.values()[i].real(), analytic.data.values()[i].real(), 1e-12);
    EXPECT_EQ(real.data.values()[i].imag(), 0.0);
  }
}

TEST(Synth, NoiseIsDeterministicPerSeed) {
  const auto p = nominal_params();
  Scene s = single(3.0, 0.5);
  s.noise_std = 0.1;
  s.seed = 11;
  const auto a = generate(s, p), b = generate(s, p);
  EXPECT_EQ(a, b);
  s.seed = 12;
  EXPECT_NE(generate(s, p), a);

  // Noise-only statistics.
  Scene n;
  n.duration_s = 0.5;
  n.noise_std = 0.3;
  n.seed = 5;
  const auto e = generate(n, p);
  double sum = 0, sq = 0;
  for (auto v : e.data.values()) sum += v.real() + v.imag(), sq += std::norm(v);
  const double count = 2.0 * e.data.size();
  EXPECT_NEAR(sum / count, 0.0, 0.005);
  EXPECT_NEAR(sq / count, 0.09, 0.09 * 0.03);
}

TEST(Synth, Validation) {
  const auto p = nominal_params();
  try {
    generate(single(0.5, 1.0, 1.0, 1.0), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RangeWentNonpositive);
  }
  EXPECT_THROW(generate(single(3.0, 0.0, 1.0, 0.0105), p), Error);
  Scene neg = single(3.0, 0.0);
  neg.noise_std = -1.0;
  EXPECT_THROW(generate(neg, p), Error);
}

TEST(Synth, PiecewiseRangeIntegration) {
  const Scatterer s{5.0, 1.0, {{0.0, 0.0}, {0.5, 2.0}, {0.8, -1.0}}};
  EXPECT_DOUBLE_EQ(s.range_at(0.4), 5.0);
  EXPECT_NEAR(s.range_at(0.8), 4.4, 1e-12);
  EXPECT_NEAR(s.range_at(1.0), 4.6, 1e-12);
  EXPECT_DOUBLE_EQ(s.velocity_at(0.79), 2.0);
  EXPECT_DOUBLE_EQ(s.max_speed(), 2.0);
}

TEST(Templates, WalkSpeedRange) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = activity_template(Activity::Walk, seed);
    const double v = s.scatterers[0].max_speed();
    EXPECT_GE(v, 1.0);
    EXPECT_LE(v, 1.5);
    EXPECT_NO_THROW(s.validate(nominal_params()));
  }
}

TEST(Templates, FallBurstThenStill) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = activity_template(Activity::Fall, seed);
    const auto& torso = s.scatterers[0];
    double fast_time = 0.0, last_fast = 0.0;
    const double dt = 1e-3;
    for (double t = 0.0; t < s.duration_s; t += dt)
      if (torso.velocity_at(t) > 2.0) fast_time += dt, last_fast = t;
    EXPECT_GT(fast_time, 0.0);
    EXPECT_LT(fast_time, 0.5);
    for (double t = last_fast + 2 * dt; t < s.duration_s; t += dt) EXPECT_EQ(torso.velocity_at(t), 0.0);
  }
}

TEST(Templates, AllClassesValidAndDeterministic) {
  for (Activity a : kActivities) {
    EXPECT_EQ(activity_from_string(to_string(a)), a);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = activity_template(a, seed);
      EXPECT_EQ(s, activity_template(a, seed));
      EXPECT_NO_THROW(s.validate(nominal_params()));
      EXPECT_EQ(s.chirp_count(nominal_params()), 2000u);
    }
  }
  EXPECT_THROW(activity_from_string("jump"), Error);
}

TEST(SceneJson, RoundTrip) {
  const auto s = activity_template(Activity::Pick, 3);
  const auto j = to_json(s);
  EXPECT_EQ(scene_from_json(nlohmann::json::parse(j.dump())), s);
  EXPECT_EQ(j.at("rng").get<std::string>(), std::string(CounterRng::algorithm));
  EXPECT_THROW(scene_from_json(nlohmann::json{{"duration_s", 1.0}}), Error);
}
