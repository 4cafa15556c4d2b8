#pragma once

// Numeric kernels shared by the map builders: windowed DFT, Butterworth
// high-pass design, direct-form IIR filtering, log-magnitude and the spectral
// concentration measure used for adaptive window selection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "radhar/core/error.hpp"
#include "radhar/core/matrix.hpp"

namespace radhar::dsp {

enum class WindowKind { Rectangular, Gaussian };

struct WindowSpec {
  WindowKind kind = WindowKind::Rectangular;
  double alpha = 0.0;  // Gaussian shape; larger is narrower
  std::size_t length = 1;

  static WindowSpec rectangular(std::size_t length) { return {WindowKind::Rectangular, 0.0, length}; }
  static WindowSpec gaussian(double alpha, std::size_t length) { return {WindowKind::Gaussian, alpha, length}; }

  bool operator==(const WindowSpec&) const = default;
};

/// Window samples. Gaussian: w[k] = exp(-alpha * ((k - c) / c)^2), c = (L-1)/2.
inline std::vector<double> make_window(const WindowSpec& spec) {
  require(spec.length >= 1, Errc::InvalidConfig, "window length must be >= 1");
  std::vector<double> w(spec.length, 1.0);
  if (spec.kind == WindowKind::Gaussian) {
    require(spec.alpha > 0.0 && std::isfinite(spec.alpha), Errc::InvalidConfig, "gaussian alpha must be > 0");
    if (spec.length == 1) return w;
    const double half = (static_cast<double>(spec.length) - 1.0) / 2.0;
    for (std::size_t k = 0; k < spec.length; ++k) {
      const double x = (static_cast<double>(k) - half) / half;
      w[k] = std::exp(-spec.alpha * x * x);
    }
  }
  return w;
}

struct ComplexSpectrum {
  std::vector<cdouble> bins;
  double bin_resolution_hz = 1.0;
};

/// Unnormalized forward FFT of arbitrary length.
inline std::vector<cdouble> fft(std::span<const cdouble> x) {
  std::vector<cdouble> in(x.begin(), x.end());
  if (in.size() <= 1) return in;  // kissfft faults on a length-1 plan
  thread_local Eigen::FFT<double> engine;
  std::vector<cdouble> out;
  engine.fwd(out, in);
  return out;
}

/// bins[r] = sum_m x[m] w[m] exp(-j 2 pi r m / N). `sample_rate_hz` only sets
/// the reported bin spacing.
inline ComplexSpectrum dft(std::span<const cdouble> signal, std::span<const double> window,
                           double sample_rate_hz = 1.0) {
  require(!signal.empty(), Errc::LengthMismatch, "empty signal");
  require(window.size() == signal.size(), Errc::LengthMismatch, "window length differs from signal length");
  std::vector<cdouble> tapered(signal.size());
  for (std::size_t m = 0; m < signal.size(); ++m) tapered[m] = signal[m] * window[m];
  return {fft(tapered), sample_rate_hz / static_cast<double>(signal.size())};
}

inline ComplexSpectrum dft(std::span<const cdouble> signal, const WindowSpec& window, double sample_rate_hz = 1.0) {
  require(window.length == signal.size(), Errc::LengthMismatch, "window length differs from signal length");
  const auto w = make_window(window);
  return dft(signal, w, sample_rate_hz);
}

// ---------------------------------------------------------------------------
// IIR design and filtering

struct IirCoeffs {
  std::vector<double> b;      // feed-forward, b[0..order]
  std::vector<double> a;      // feedback, a[0] == 1
  std::vector<cdouble> poles; // z-plane poles from the design, when known

  std::size_t order() const { return a.empty() ? 0 : a.size() - 1; }
};

/// H(e^{j omega}) for omega in radians/sample.
inline cdouble frequency_response(const IirCoeffs& c, double omega) {
  const cdouble zinv = std::polar(1.0, -omega);
  cdouble num = 0.0, den = 0.0, p = 1.0;
  for (std::size_t k = 0; k < std::max(c.b.size(), c.a.size()); ++k) {
    if (k < c.b.size()) num += c.b[k] * p;
    if (k < c.a.size()) den += c.a[k] * p;
    p *= zinv;
  }
  return num / den;
}

namespace detail {

// Coefficients of prod_k (z - roots[k]) in descending powers of z.
inline std::vector<cdouble> poly_from_roots(std::span<const cdouble> roots) {
  std::vector<cdouble> c{1.0};
  for (const cdouble& r : roots) {
    std::vector<cdouble> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  return c;
}

}  // namespace detail

/// Digital Butterworth high-pass via analog prototype, low-to-high-pass
/// substitution, pre-warped bilinear transform. cutoff_norm is a fraction of
/// Nyquist. Gain is normalized to 1 at Nyquist.
inline IirCoeffs butterworth_highpass(int order = 4, double cutoff_norm = 0.0075) {
  require(order >= 1, Errc::InvalidConfig, "order must be >= 1");
  require(cutoff_norm > 0.0 && cutoff_norm < 1.0, Errc::InvalidCutoff, "cutoff must lie in (0, 1)");
  const std::size_t n = static_cast<std::size_t>(order);
  const double warped = std::tan(std::numbers::pi * cutoff_norm / 2.0);

  std::vector<cdouble> zpoles(n), zzeros(n, cdouble(1.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * static_cast<double>(2 * k + n + 1) / static_cast<double>(2 * n);
    const cdouble proto = std::polar(1.0, theta);  // unit-cutoff low-pass pole
    const cdouble s = warped / proto;              // high-pass pole
    zpoles[k] = (1.0 + s) / (1.0 - s);
  }
  const auto num = detail::poly_from_roots(zzeros);
  const auto den = detail::poly_from_roots(zpoles);

  // Normalize so that H(-1) = 1.
  cdouble num_at_nyq = 0.0, den_at_nyq = 0.0;
  double sign = 1.0;
  for (std::size_t k = 0; k <= n; ++k) {
    // Evaluating in z^-1 at z = -1: z^-k = (-1)^k.
    num_at_nyq += num[k] * sign;
    den_at_nyq += den[k] * sign;
    sign = -sign;
  }
  const double gain = (den_at_nyq / num_at_nyq).real();

  IirCoeffs c;
  c.b.resize(n + 1);
  c.a.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    c.b[k] = gain * num[k].real();
    c.a[k] = den[k].real() / den[0].real();
  }
  c.poles = std::move(zpoles);
  return c;
}

/// Number of samples for the slowest design pole to decay by `decay`.
inline std::size_t settling_samples(const IirCoeffs& c, double decay = 1e-6) {
  double rmax = 0.0;
  for (const auto& p : c.poles) rmax = std::max(rmax, std::abs(p));
  if (rmax <= 0.0) return c.order();
  return static_cast<std::size_t>(std::ceil(std::log(decay) / std::log(rmax)));
}

enum class FilterMode { Causal, ZeroPhase };

namespace detail {

template <typename T>
std::vector<T> direct_form(const IirCoeffs& c, std::span<const T> x) {
  std::vector<T> y(x.size(), T{});
  const std::size_t nb = c.b.size(), na = c.a.size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    T acc{};
    for (std::size_t k = 0; k < nb && k <= n; ++k) acc += c.b[k] * x[n - k];
    for (std::size_t k = 1; k < na && k <= n; ++k) acc -= c.a[k] * y[n - k];
    y[n] = acc;
  }
  return y;
}

}  // namespace detail

/// y[n] = sum_k b_k x[n-k] - sum_{k>=1} a_k y[n-k], zero initial state.
/// ZeroPhase runs the same filter forward then backward.
template <typename T>
std::vector<T> iir_filter(const IirCoeffs& c, std::span<const T> x, FilterMode mode = FilterMode::Causal) {
  require(!c.a.empty() && c.a[0] == 1.0, Errc::InvalidConfig, "a[0] must be 1");
  auto y = detail::direct_form<T>(c, x);
  if (mode == FilterMode::ZeroPhase) {
    std::reverse(y.begin(), y.end());
    y = detail::direct_form<T>(c, std::span<const T>(y));
    std::reverse(y.begin(), y.end());
  }
  return y;
}

inline std::vector<double> iir_filter(const IirCoeffs& c, const std::vector<double>& x,
                                      FilterMode mode = FilterMode::Causal) {
  return iir_filter<double>(c, std::span<const double>(x), mode);
}

// ---------------------------------------------------------------------------
// Magnitude utilities

inline constexpr double kLogFloor = 1e-12;

inline double log_magnitude(double magnitude, double floor_eps = kLogFloor) {
  return 20.0 * std::log10(std::max(std::fabs(magnitude), floor_eps));
}

inline double log_magnitude(cdouble x, double floor_eps = kLogFloor) {
  return log_magnitude(std::abs(x), floor_eps);
}

template <typename T>
std::vector<double> log_magnitude(std::span<const T> x, double floor_eps = kLogFloor) {
  require(floor_eps > 0.0, Errc::InvalidConfig, "log floor must be > 0");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = log_magnitude(x[i], floor_eps);
  return out;
}

/// (sum |X|)^2 / (sum |X|^2 + eps). Ranges from ~1 (one bin) to ~N (flat).
inline double concentration(std::span<const double> magnitude, double eps = 1e-12) {
  double l1 = 0.0, l2 = 0.0;
  for (double m : magnitude) {
    l1 += m;
    l2 += m * m;
  }
  return l1 * l1 / (l2 + eps);
}

}  // namespace radhar::dsp
