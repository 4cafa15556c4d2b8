#pragma once

// Point-scatterer FMCW echo generator. Each scatterer follows a
// piecewise-constant radial velocity schedule; positive velocity means the
// scatterer approaches the radar (range decreasing). Range is sampled once
// per chirp (stop-and-go).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "radhar/core/error.hpp"
#include "radhar/core/parallel.hpp"
#include "radhar/core/rng.hpp"
#include "radhar/radar_io.hpp"

namespace radhar::synth {

struct VelocitySegment {
  double t_start_s = 0.0;
  double v_mps = 0.0;
  bool operator==(const VelocitySegment&) const = default;
};

struct Scatterer {
  double r0_m = 1.0;
  double amplitude = 1.0;
  std::vector<VelocitySegment> velocity;  // sorted by t_start_s; v = 0 before the first

  double velocity_at(double t) const {
    double v = 0.0;
    for (const auto& seg : velocity) {
      if (seg.t_start_s <= t) v = seg.v_mps;
      else break;
    }
    return v;
  }

  double range_at(double t) const {
    double r = r0_m;
    for (std::size_t i = 0; i < velocity.size(); ++i) {
      const double lo = velocity[i].t_start_s;
      const double hi = i + 1 < velocity.size() ? velocity[i + 1].t_start_s : t;
      const double overlap = std::min(hi, t) - lo;
      if (overlap > 0.0) r -= velocity[i].v_mps * overlap;
    }
    return r;
  }

  double max_speed() const {
    double m = 0.0;
    for (const auto& s : velocity) m = std::max(m, std::fabs(s.v_mps));
    return m;
  }

  bool operator==(const Scatterer&) const = default;
};

struct Scene {
  std::vector<Scatterer> scatterers;
  double duration_s = 1.0;
  double noise_std = 0.0;  // per real/imaginary component
  std::uint64_t seed = 0;
  bool analytic = true;  // false emits the real IF cosine in the real part

  double max_speed() const {
    double m = 0.0;
    for (const auto& s : scatterers) m = std::max(m, s.max_speed());
    return m;
  }

  std::size_t chirp_count(const RadarParams& p) const {
    const double ratio = duration_s / p.chirp_duration_s;
    const double n = std::round(ratio);
    require(n >= 1.0 && std::fabs(ratio - n) <= 1e-6 * std::max(1.0, n), Errc::InvalidConfig,
            "duration must be an integer number of chirps");
    return static_cast<std::size_t>(n);
  }

  void validate(const RadarParams& p) const {
    p.validate();
    require(noise_std >= 0.0, Errc::InvalidConfig, "noise_std must be >= 0");
    const std::size_t nc = chirp_count(p);
    for (const auto& s : scatterers) {
      for (std::size_t i = 1; i < s.velocity.size(); ++i)
        require(s.velocity[i].t_start_s >= s.velocity[i - 1].t_start_s, Errc::InvalidConfig,
                "velocity schedule must be sorted");
      for (std::size_t n = 0; n < nc; ++n)
        require(s.range_at(static_cast<double>(n) * p.chirp_duration_s) > 0.0, Errc::RangeWentNonpositive,
                "scatterer range reaches zero at chirp " + std::to_string(n));
    }
  }

  bool operator==(const Scene&) const = default;
};

/// s[n, m] = sum_i a_i exp(j (2 pi f_b t_m + 4 pi R_i(t_n) / lambda)) + noise,
/// f_b = 2 k R / c. With analytic = false the real part holds the cosine and
/// the imaginary part is zero.
inline EchoMatrix generate(const Scene& scene, const RadarParams& params) {
  scene.validate(params);
  const std::size_t nc = scene.chirp_count(params);
  const std::size_t ns = params.samples_per_chirp;
  const double slope = params.chirp_slope();
  const double lambda = params.wavelength_m();
  const double fs = params.sample_rate_hz();
  const CounterRng rng(scene.seed);

  EchoMatrix echo{params, Matrix<cdouble>(nc, ns)};
  parallel_for(nc, [&](std::size_t n) {
    const double tn = static_cast<double>(n) * params.chirp_duration_s;
    auto row = echo.data.row(n);
    for (const auto& s : scene.scatterers) {
      const double r = s.range_at(tn);
      const double fb = 2.0 * slope * r / kSpeedOfLight;
      const double phi = 4.0 * std::numbers::pi * r / lambda;
      for (std::size_t m = 0; m < ns; ++m) {
        const double phase = 2.0 * std::numbers::pi * fb * (static_cast<double>(m) / fs) + phi;
        row[m] += scene.analytic ? s.amplitude * std::polar(1.0, phase)
                                 : cdouble(s.amplitude * std::cos(phase), 0.0);
      }
    }
    if (scene.noise_std > 0.0) {
      const CounterRng chirp_rng = rng.derive(n);
      for (std::size_t m = 0; m < ns; ++m) {
        double z0 = 0.0, z1 = 0.0;
        chirp_rng.normal_pair(m, z0, z1);
        row[m] += scene.analytic ? cdouble(scene.noise_std * z0, scene.noise_std * z1)
                                 : cdouble(scene.noise_std * z0, 0.0);
      }
    }
  });
  return echo;
}

// ---------------------------------------------------------------------------
// Activity templates

enum class Activity { Walk, Sit, Stand, Pick, Drink, Fall };

inline constexpr std::array<Activity, 6> kActivities = {Activity::Walk, Activity::Sit,  Activity::Stand,
                                                        Activity::Pick, Activity::Drink, Activity::Fall};

inline std::string to_string(Activity a) {
  switch (a) {
    case Activity::Walk: return "walk";
    case Activity::Sit: return "sit";
    case Activity::Stand: return "stand";
    case Activity::Pick: return "pick";
    case Activity::Drink: return "drink";
    case Activity::Fall: return "fall";
  }
  return "unknown";
}

inline Activity activity_from_string(const std::string& s) {
  for (Activity a : kActivities)
    if (to_string(a) == s) return a;
  throw Error(Errc::InvalidConfig, "unknown activity '" + s + "'");
}

inline constexpr double kTemplateDuration = 2.0;
inline constexpr double kTemplateNoise = 0.05;

/// Stylized scene per class, randomized by seed within fixed ranges:
///   walk   constant |v| in [1.0, 1.5] toward or away, swinging limb
///   sit    one receding stroke |v| in [0.5, 0.8] for 0.6-0.9 s
///   stand  one approaching stroke |v| in [0.5, 0.8] for 0.6-0.9 s
///   pick   bend + return strokes |v| in [0.3, 0.5], 0.4-0.6 s each
///   drink  slow arm strokes |v| in [0.2, 0.35], 0.8-1.0 s each
///   fall   burst |v| in [2.2, 3.0] for 0.30-0.45 s, then still
/// Every scene also holds one static clutter scatterer at 5.5-6.5 m.
inline Scene activity_template(Activity kind, std::uint64_t seed) {
  const CounterRng rng = CounterRng(seed).derive(static_cast<std::uint64_t>(kind) + 1);
  std::uint64_t ctr = 0;
  auto draw = [&](double lo, double hi) { return rng.uniform(ctr++, lo, hi); };

  Scene scene;
  scene.duration_s = kTemplateDuration;
  scene.noise_std = kTemplateNoise;
  scene.seed = seed;

  Scatterer torso{draw(2.5, 3.5), 1.0, {}};
  Scatterer limb{0.0, 0.4, {}};
  switch (kind) {
    case Activity::Walk: {
      const double dir = draw(0.0, 1.0) < 0.5 ? 1.0 : -1.0;
      const double speed = draw(1.0, 1.5);
      torso.r0_m = dir > 0 ? draw(4.5, 5.0) : draw(1.5, 2.0);
      torso.velocity = {{0.0, dir * speed}};
      const double period = draw(0.25, 0.35);
      for (double t = 0.0; t < kTemplateDuration; t += period)
        limb.velocity.push_back({t, dir * speed * (limb.velocity.size() % 2 == 0 ? 1.0 : 0.5)});
      break;
    }
    case Activity::Sit:
    case Activity::Stand: {
      const double dir = kind == Activity::Stand ? 1.0 : -1.0;
      const double t0 = draw(0.3, 0.6), dur = draw(0.6, 0.9), speed = draw(0.5, 0.8);
      torso.velocity = {{0.0, 0.0}, {t0, dir * speed}, {t0 + dur, 0.0}};
      limb.velocity = {{0.0, 0.0}, {t0, dir * 0.6 * speed}, {t0 + dur, 0.0}};
      break;
    }
    case Activity::Pick: {
      const double t0 = draw(0.2, 0.4), dur = draw(0.4, 0.6), speed = draw(0.3, 0.5), pause = draw(0.15, 0.3);
      torso.velocity = {{0.0, 0.0}, {t0, speed}, {t0 + dur, 0.0}, {t0 + dur + pause, -speed}, {t0 + 2 * dur + pause, 0.0}};
      limb.velocity = {{0.0, 0.0}, {t0, 1.3 * speed}, {t0 + dur, 0.0}, {t0 + dur + pause, -1.3 * speed},
                       {t0 + 2 * dur + pause, 0.0}};
      break;
    }
    case Activity::Drink: {
      const double t0 = draw(0.1, 0.2), dur = draw(0.8, 1.0), speed = draw(0.2, 0.35);
      torso.velocity = {{0.0, 0.0}};
      limb.amplitude = 0.6;
      limb.velocity = {{0.0, 0.0}, {t0, -speed}, {t0 + dur * 0.5, 0.0}, {t0 + dur * 0.6, speed}, {t0 + dur * 1.1, 0.0}};
      break;
    }
    case Activity::Fall: {
      const double t0 = draw(0.4, 0.8), dur = draw(0.30, 0.45), speed = draw(2.2, 3.0);
      torso.velocity = {{0.0, 0.0}, {t0, speed}, {t0 + dur, 0.0}};
      limb.velocity = {{0.0, 0.0}, {t0, 0.8 * speed}, {t0 + dur, 0.0}};
      break;
    }
  }
  limb.r0_m = torso.r0_m + 0.1;
  const Scatterer clutter{draw(5.5, 6.5), 2.0, {{0.0, 0.0}}};
  scene.scatterers = {torso, limb, clutter};
  return scene;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Scene& s) {
  nlohmann::json sc = nlohmann::json::array();
  for (const auto& x : s.scatterers) {
    nlohmann::json vel = nlohmann::json::array();
    for (const auto& seg : x.velocity) vel.push_back({{"t_start_s", seg.t_start_s}, {"v_mps", seg.v_mps}});
    sc.push_back({{"r0_m", x.r0_m}, {"amplitude", x.amplitude}, {"velocity", vel}});
  }
  return {{"scatterers", sc},
          {"duration_s", s.duration_s},
          {"noise_std", s.noise_std},
          {"seed", s.seed},
          {"analytic", s.analytic},
          {"rng", std::string(CounterRng::algorithm)},
          {"velocity_sign", "positive = approaching"}};
}

inline Scene scene_from_json(const nlohmann::json& j) {
  try {
    Scene s;
    for (const auto& x : j.at("scatterers")) {
      Scatterer sc;
      sc.r0_m = x.at("r0_m").get<double>();
      sc.amplitude = x.at("amplitude").get<double>();
      for (const auto& seg : x.at("velocity"))
        sc.velocity.push_back({seg.at("t_start_s").get<double>(), seg.at("v_mps").get<double>()});
      s.scatterers.push_back(std::move(sc));
    }
    s.duration_s = j.at("duration_s").get<double>();
    s.noise_std = j.value("noise_std", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.analytic = j.value("analytic", true);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("scene json: ") + e.what());
  }
}

}  // namespace radhar::synth
