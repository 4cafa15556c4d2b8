#pragma once

// Range-Time, Doppler-Time and Range-Doppler maps from an echo matrix.
//
// Doppler axes use the radar convention f_D = -(1/2pi) d(phase)/dt, so an
// approaching scatterer (range decreasing) lands at positive Doppler. Index i
// of a Doppler axis of length N holds f_D = (i - N/2) * PRF / N.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "radhar/core/error.hpp"
#include "radhar/core/matrix.hpp"
#include "radhar/core/parallel.hpp"
#include "radhar/dsp.hpp"
#include "radhar/radar_io.hpp"
#include "radhar/spectro_map.hpp"

namespace radhar::maps {

struct MtiOptions {
  int order = 4;
  double cutoff_norm = 0.0075;
  dsp::FilterMode mode = dsp::FilterMode::Causal;

  dsp::IirCoeffs design() const { return dsp::butterworth_highpass(order, cutoff_norm); }
};

/// Per-chirp fast-time DFT with a rectangular window: S_RT[n, r].
inline Matrix<cdouble> range_profiles(const EchoMatrix& echo) {
  echo.validate();
  const std::size_t nc = echo.chirps(), ns = echo.samples();
  Matrix<cdouble> out(nc, ns);
  const std::vector<double> rect(ns, 1.0);
  parallel_for(nc, [&](std::size_t n) {
    const auto spec = dsp::dft(echo.data.row(n), rect);
    std::copy(spec.bins.begin(), spec.bins.end(), out.row(n).begin());
  });
  return out;
}

/// Slow-time high-pass on |S_RT| per range bin.
inline Matrix<double> mti_magnitude(const Matrix<cdouble>& profiles, const MtiOptions& opt = {}) {
  const auto coeffs = opt.design();
  Matrix<double> out(profiles.rows(), profiles.cols());
  parallel_for(profiles.cols(), [&](std::size_t r) {
    std::vector<double> x(profiles.rows());
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::abs(profiles(n, r));
    const auto y = dsp::iir_filter<double>(coeffs, x, opt.mode);
    for (std::size_t n = 0; n < y.size(); ++n) out(n, r) = y[n];
  });
  return out;
}

/// Slow-time high-pass on the complex profiles; real and imaginary parts are
/// filtered independently, which keeps the Doppler phase.
inline Matrix<cdouble> mti_complex(const Matrix<cdouble>& profiles, const MtiOptions& opt = {}) {
  const auto coeffs = opt.design();
  Matrix<cdouble> out(profiles.rows(), profiles.cols());
  parallel_for(profiles.cols(), [&](std::size_t r) {
    const auto x = profiles.col(r);
    const auto y = dsp::iir_filter<cdouble>(coeffs, x, opt.mode);
    for (std::size_t n = 0; n < y.size(); ++n) out(n, r) = y[n];
  });
  return out;
}

/// Reorders a slow-time spectrum onto the signed Doppler axis.
inline std::vector<cdouble> doppler_order(std::span<const cdouble> spectrum) {
  const std::size_t n = spectrum.size();
  const std::size_t center = n / 2;
  std::vector<cdouble> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[(center + n - i) % n];
  return out;
}

inline std::vector<double> doppler_order(std::span<const double> spectrum) {
  const std::size_t n = spectrum.size();
  const std::size_t center = n / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[(center + n - i) % n];
  return out;
}

inline Axis doppler_axis(std::size_t n, double prf_hz) {
  const double step = prf_hz / static_cast<double>(n);
  return {"doppler", "Hz", -static_cast<double>(n / 2) * step, step};
}

inline Axis range_axis(const RadarParams& p) { return {"range", "m", 0.0, p.range_resolution_m()}; }

// ---------------------------------------------------------------------------
// Range-Time

/// Rows are chirps (slow time), columns are range bins, values in dB.
inline SpectroMap range_time_map(const EchoMatrix& echo, bool mti = true, const MtiOptions& opt = {}) {
  const auto profiles = range_profiles(echo);
  SpectroMap map;
  map.domain = Domain::RangeTime;
  map.params = echo.params;
  map.row_axis = {"time", "s", 0.0, echo.params.chirp_duration_s};
  map.col_axis = range_axis(echo.params);
  map.values = Matrix<double>(profiles.rows(), profiles.cols());
  if (mti) {
    const auto filtered = mti_magnitude(profiles, opt);
    for (std::size_t i = 0; i < filtered.size(); ++i)
      map.values.values()[i] = dsp::log_magnitude(filtered.values()[i]);
  } else {
    for (std::size_t i = 0; i < profiles.size(); ++i)
      map.values.values()[i] = dsp::log_magnitude(profiles.values()[i]);
  }
  return map;
}

// ---------------------------------------------------------------------------
// Doppler-Time (adaptive STFT)

struct AstftConfig {
  std::vector<dsp::WindowSpec> window_bank;
  std::size_t hop = 16;
  std::size_t range_bin_lo = 0;
  std::size_t range_bin_hi = 0;

  std::size_t window_length() const { return window_bank.empty() ? 0 : window_bank.front().length; }

  /// 8 Gaussian windows of 128 chirps, alpha 0.5..64, hop 16, range bins
  /// covering 0.5-5 m.
  static AstftConfig defaults(const RadarParams& p) {
    return with_range(p, 0.5, 5.0);
  }

  static AstftConfig with_range(const RadarParams& p, double r_min_m, double r_max_m,
                                std::size_t length = 128, std::size_t hop = 16) {
    AstftConfig cfg;
    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0})
      cfg.window_bank.push_back(dsp::WindowSpec::gaussian(alpha, length));
    cfg.hop = hop;
    const double dr = p.range_resolution_m();
    const auto last = static_cast<double>(p.samples_per_chirp - 1);
    cfg.range_bin_lo = static_cast<std::size_t>(std::min(last, std::ceil(r_min_m / dr)));
    cfg.range_bin_hi = static_cast<std::size_t>(std::min(last, std::floor(r_max_m / dr)));
    if (cfg.range_bin_hi < cfg.range_bin_lo) cfg.range_bin_hi = cfg.range_bin_lo;
    return cfg;
  }

  void validate(const EchoMatrix& echo) const {
    require(!window_bank.empty(), Errc::BankEmpty, "window bank is empty");
    const std::size_t len = window_bank.front().length;
    double prev_alpha = 0.0;
    for (std::size_t i = 0; i < window_bank.size(); ++i) {
      const auto& w = window_bank[i];
      require(w.kind == dsp::WindowKind::Gaussian, Errc::InvalidConfig, "bank members must be Gaussian");
      require(w.length == len, Errc::InvalidConfig, "bank members must share one length");
      require(i == 0 || w.alpha > prev_alpha, Errc::InvalidConfig, "bank alphas must be strictly increasing");
      prev_alpha = w.alpha;
    }
    require(len >= 1 && len <= echo.chirps(), Errc::InvalidConfig, "window length must be in [1, N_c]");
    require(hop >= 1, Errc::InvalidConfig, "hop must be >= 1");
    require(range_bin_lo <= range_bin_hi && range_bin_hi < echo.samples(), Errc::RangeIntervalOutOfBounds,
            "range interval outside [0, N_s)");
  }
};

/// Which bank member won at each (range bin, frame).
struct AstftTrace {
  Matrix<std::size_t> selected;  // (r2 - r1 + 1) x frames
};

inline std::size_t frame_count(std::size_t chirps, std::size_t hop) { return (chirps - 1) / hop + 1; }

/// Zero-padded segment of length L centred at chirp `center`.
inline std::vector<cdouble> frame_segment(std::span<const cdouble> x, std::size_t center, std::size_t length) {
  std::vector<cdouble> seg(length, cdouble{});
  const auto start = static_cast<std::ptrdiff_t>(center) - static_cast<std::ptrdiff_t>(length / 2);
  for (std::size_t k = 0; k < length; ++k) {
    const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(k);
    if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size())) seg[k] = x[static_cast<std::size_t>(idx)];
  }
  return seg;
}

namespace detail {

inline SpectroMap doppler_time_shell(const EchoMatrix& echo, std::size_t length, std::size_t hop,
                                     std::size_t frames) {
  SpectroMap map;
  map.domain = Domain::DopplerTime;
  map.params = echo.params;
  map.row_axis = doppler_axis(length, echo.params.prf_hz());
  map.col_axis = {"time", "s", 0.0, static_cast<double>(hop) * echo.params.chirp_duration_s};
  map.values = Matrix<double>(length, frames, 0.0);
  return map;
}

}  // namespace detail

/// Adaptive STFT per range bin on the complex MTI output; at every frame the
/// bank member with the lowest concentration value wins (lowest index on
/// ties). Winning magnitudes are summed over [r1, r2] and converted to dB.
/// Rows are Doppler bins, columns are frames.
inline SpectroMap doppler_time_map(const EchoMatrix& echo, const AstftConfig& cfg, AstftTrace* trace = nullptr,
                                   const MtiOptions& opt = {}) {
  cfg.validate(echo);
  const auto slow = mti_complex(range_profiles(echo), opt);
  const std::size_t len = cfg.window_length();
  const std::size_t frames = frame_count(echo.chirps(), cfg.hop);
  const std::size_t bins = cfg.range_bin_hi - cfg.range_bin_lo + 1;

  std::vector<std::vector<double>> windows;
  for (const auto& w : cfg.window_bank) windows.push_back(dsp::make_window(w));

  // Per-range-bin magnitude planes, reduced in index order afterwards.
  std::vector<Matrix<double>> planes(bins);
  Matrix<std::size_t> selected(bins, frames, 0);
  parallel_for(bins, [&](std::size_t b) {
    const auto x = slow.col(cfg.range_bin_lo + b);
    Matrix<double> plane(len, frames);
    for (std::size_t f = 0; f < frames; ++f) {
      const auto seg = frame_segment(x, f * cfg.hop, len);
      std::vector<double> best;
      double best_score = 0.0;
      std::size_t best_idx = 0;
      for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const auto spec = dsp::dft(seg, windows[wi]);
        std::vector<double> mag(len);
        for (std::size_t k = 0; k < len; ++k) mag[k] = std::abs(spec.bins[k]);
        const double score = dsp::concentration(mag);
        if (wi == 0 || score < best_score) {
          best_score = score;
          best_idx = wi;
          best = std::move(mag);
        }
      }
      const auto ordered = doppler_order(std::span<const double>(best));
      for (std::size_t k = 0; k < len; ++k) plane(k, f) = ordered[k];
      selected(b, f) = best_idx;
    }
    planes[b] = std::move(plane);
  });

  auto map = detail::doppler_time_shell(echo, len, cfg.hop, frames);
  for (std::size_t b = 0; b < bins; ++b)
    for (std::size_t i = 0; i < map.values.size(); ++i) map.values.values()[i] += planes[b].values()[i];
  for (double& v : map.values.values()) v = dsp::log_magnitude(v);
  if (trace) trace->selected = std::move(selected);
  return map;
}

/// Fixed-window STFT over the same frames and range interval; the adaptive
/// map with a one-member bank must reproduce it exactly.
inline SpectroMap fixed_stft_map(const EchoMatrix& echo, const dsp::WindowSpec& window, std::size_t hop,
                                 std::size_t range_bin_lo, std::size_t range_bin_hi, const MtiOptions& opt = {}) {
  AstftConfig cfg{{window}, hop, range_bin_lo, range_bin_hi};
  cfg.validate(echo);
  const auto slow = mti_complex(range_profiles(echo), opt);
  const std::size_t len = window.length;
  const std::size_t frames = frame_count(echo.chirps(), hop);
  const auto w = dsp::make_window(window);
  auto map = detail::doppler_time_shell(echo, len, hop, frames);
  for (std::size_t r = range_bin_lo; r <= range_bin_hi; ++r) {
    const auto x = slow.col(r);
    for (std::size_t f = 0; f < frames; ++f) {
      const auto spec = dsp::dft(frame_segment(x, f * hop, len), w);
      const auto ordered = doppler_order(std::span<const cdouble>(spec.bins));
      for (std::size_t k = 0; k < len; ++k) map.values(k, f) += std::abs(ordered[k]);
    }
  }
  for (double& v : map.values.values()) v = dsp::log_magnitude(v);
  return map;
}

// ---------------------------------------------------------------------------
// Range-Doppler

/// Slow-time DFT of the complex MTI output per range bin. Rows are range
/// bins, columns are Doppler bins, values in dB.
inline SpectroMap range_doppler_map(const EchoMatrix& echo, bool mti = true, const MtiOptions& opt = {}) {
  auto profiles = range_profiles(echo);
  if (mti) profiles = mti_complex(profiles, opt);
  const std::size_t nc = echo.chirps(), ns = echo.samples();
  SpectroMap map;
  map.domain = Domain::RangeDoppler;
  map.params = echo.params;
  map.row_axis = range_axis(echo.params);
  map.col_axis = doppler_axis(nc, echo.params.prf_hz());
  map.values = Matrix<double>(ns, nc);
  const std::vector<double> rect(nc, 1.0);
  parallel_for(ns, [&](std::size_t r) {
    const auto spec = dsp::dft(profiles.col(r), rect);
    const auto ordered = doppler_order(std::span<const cdouble>(spec.bins));
    for (std::size_t d = 0; d < nc; ++d) map.values(r, d) = dsp::log_magnitude(ordered[d]);
  });
  return map;
}

// ---------------------------------------------------------------------------
// Resampling

/// Bilinear resize with half-pixel centres (no corner alignment); sample
/// positions are clamped to the source grid.
inline SpectroMap resize_bilinear(const SpectroMap& map, std::size_t out_h, std::size_t out_w) {
  require(out_h >= 1 && out_w >= 1, Errc::InvalidConfig, "output size must be >= 1");
  require(!map.values.empty(), Errc::ShapeMismatch, "empty map");
  const std::size_t in_h = map.rows(), in_w = map.cols();
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);

  auto source = [](std::size_t i, double scale, std::size_t extent, std::size_t& lo, std::size_t& hi, double& t) {
    double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(extent - 1));
    lo = static_cast<std::size_t>(std::floor(pos));
    hi = std::min(lo + 1, extent - 1);
    t = pos - static_cast<double>(lo);
  };

  SpectroMap out = map;
  out.values = Matrix<double>(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    std::size_t y0, y1;
    double ty;
    source(y, sy, in_h, y0, y1, ty);
    for (std::size_t x = 0; x < out_w; ++x) {
      std::size_t x0, x1;
      double tx;
      source(x, sx, in_w, x0, x1, tx);
      const double top = map.values(y0, x0) * (1.0 - tx) + map.values(y0, x1) * tx;
      const double bottom = map.values(y1, x0) * (1.0 - tx) + map.values(y1, x1) * tx;
      out.values(y, x) = top * (1.0 - ty) + bottom * ty;
    }
  }
  auto rescale = [](Axis a, double scale) {
    a.start += (0.5 * scale - 0.5) * a.step;
    a.step *= scale;
    return a;
  };
  out.row_axis = rescale(map.row_axis, sy);
  out.col_axis = rescale(map.col_axis, sx);
  return out;
}

}  // namespace radhar::maps
