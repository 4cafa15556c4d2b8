#pragma once

// Radar recording codecs.
//
// ASCII `.dat`: one entry per line. Lines 1-4 hold the real-valued header
// (carrier frequency, chirp duration, samples per chirp, bandwidth); every
// following line is a complex echo sample written as "a+bi" (a bare real
// number is accepted as a+0i).
//
// Binary `.datb` (little-endian): "FMCW" | u32 version=1 | 4 x f64 header |
// u64 payload count | payload count x (f64 re, f64 im).

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "radhar/core/error.hpp"
#include "radhar/core/matrix.hpp"

namespace radhar {

inline constexpr double kSpeedOfLight = 299'792'458.0;

struct RadarParams {
  double carrier_freq_hz = 0.0;
  double chirp_duration_s = 0.0;
  std::size_t samples_per_chirp = 0;
  double bandwidth_hz = 0.0;

  double sample_rate_hz() const { return static_cast<double>(samples_per_chirp) / chirp_duration_s; }
  double chirp_slope() const { return bandwidth_hz / chirp_duration_s; }
  double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }
  double range_resolution_m() const { return kSpeedOfLight / (2.0 * bandwidth_hz); }
  /// Chirp repetition frequency; one chirp per chirp duration.
  double prf_hz() const { return 1.0 / chirp_duration_s; }

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(positive(carrier_freq_hz), Errc::NonPositiveParam, "carrier frequency must be > 0");
    require(positive(chirp_duration_s), Errc::NonPositiveParam, "chirp duration must be > 0");
    require(samples_per_chirp > 0, Errc::NonPositiveParam, "samples per chirp must be > 0");
    require(positive(bandwidth_hz), Errc::NonPositiveParam, "bandwidth must be > 0");
    require(positive(sample_rate_hz()) && positive(chirp_slope()), Errc::NonPositiveParam,
            "derived sample rate / chirp slope not finite");
  }

  bool operator==(const RadarParams&) const = default;
};

/// Glasgow-style C-band setup: 5.8 GHz, 1 ms chirps, 128 samples, 400 MHz.
inline RadarParams nominal_params() { return {5.8e9, 1e-3, 128, 4e8}; }

/// Complex slow-time x fast-time echo grid: rows are chirps, columns are
/// fast-time samples.
struct EchoMatrix {
  RadarParams params;
  Matrix<cdouble> data;

  std::size_t chirps() const { return data.rows(); }
  std::size_t samples() const { return data.cols(); }

  void validate() const {
    params.validate();
    require(data.rows() >= 1, Errc::EmptyPayload, "echo has no chirps");
    require(data.cols() == params.samples_per_chirp, Errc::ShapeMismatch,
            "echo columns must equal samples_per_chirp");
  }

  bool operator==(const EchoMatrix&) const = default;
};

struct ParseResult {
  EchoMatrix echo;
  std::size_t discarded_entries = 0;  // trailing partial chirp
};

enum class DatCodec { Ascii, Binary };

namespace detail {

inline RadarParams params_from_header(std::span<const double, 4> h) {
  RadarParams p;
  p.carrier_freq_hz = h[0];
  p.chirp_duration_s = h[1];
  const double ns = h[2];
  require(std::isfinite(ns) && ns > 0.0, Errc::NonPositiveParam, "samples per chirp must be > 0");
  require(ns == std::floor(ns) && ns <= 9007199254740992.0, Errc::MalformedEntry,
          "samples per chirp must be an integer");
  p.samples_per_chirp = static_cast<std::size_t>(ns);
  p.bandwidth_hz = h[3];
  p.validate();
  return p;
}

inline ParseResult reshape(const RadarParams& p, std::vector<cdouble> payload) {
  const std::size_t ns = p.samples_per_chirp;
  const std::size_t nc = payload.size() / ns;
  require(nc >= 1, Errc::EmptyPayload, "no complete chirp in payload");
  ParseResult out;
  out.discarded_entries = payload.size() - nc * ns;
  payload.resize(nc * ns);
  out.echo.params = p;
  out.echo.data = Matrix<cdouble>(nc, ns, std::move(payload));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Parses "a", "a+bi", "a-bi", "bi" (i or j suffix).
inline bool parse_complex(std::string_view s, cdouble& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.back() != 'i' && s.back() != 'j') {
    double re = 0.0;
    if (!parse_real(s, re)) return false;
    out = {re, 0.0};
    return true;
  }
  s.remove_suffix(1);
  // The imaginary part starts at the last sign that is not an exponent sign.
  std::size_t split = std::string_view::npos;
  for (std::size_t i = s.size(); i-- > 0;) {
    if ((s[i] == '+' || s[i] == '-') && (i == 0 || (s[i - 1] != 'e' && s[i - 1] != 'E'))) {
      split = i;
      break;
    }
  }
  auto parse_imag = [](std::string_view imag, double& im) {
    if (imag.empty() || imag == "+") {
      im = 1.0;
      return true;
    }
    if (imag == "-") {
      im = -1.0;
      return true;
    }
    return parse_real(imag, im);
  };
  double re = 0.0, im = 0.0;
  if (split == std::string_view::npos || split == 0) {
    if (!parse_imag(s, im)) return false;
    out = {0.0, im};
    return true;
  }
  if (!parse_real(trim(s.substr(0, split)), re) || !parse_imag(s.substr(split), im)) return false;
  out = {re, im};
  return true;
}

inline void append_real(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts not supported");
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

inline constexpr std::array<std::uint8_t, 4> kMagic = {'F', 'M', 'C', 'W'};
inline constexpr std::uint32_t kBinaryVersion = 1;
inline constexpr std::size_t kBinaryPrefix = 4 + 4 + 4 * 8 + 8;

}  // namespace detail

/// Parses an ASCII recording. Entries are non-empty lines.
inline ParseResult parse_dat(std::span<const std::uint8_t> bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::array<double, 4> header{};
  std::size_t header_count = 0;
  std::vector<cdouble> payload;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = detail::trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    cdouble value;
    if (!detail::parse_complex(line, value))
      throw Error(Errc::MalformedEntry, "line " + std::to_string(line_no) + " is not a number");
    if (header_count < 4) {
      header[header_count++] = value.real();
    } else {
      payload.push_back(value);
    }
  }
  require(header_count == 4, Errc::TruncatedHeader, "fewer than 4 header entries");
  return detail::reshape(detail::params_from_header(header), std::move(payload));
}

/// Parses a binary `.datb` recording.
inline ParseResult parse_datb(std::span<const std::uint8_t> bytes) {
  using namespace detail;
  require(bytes.size() >= 8, Errc::TruncatedHeader, "file shorter than magic + version");
  require(std::equal(kMagic.begin(), kMagic.end(), bytes.begin()), Errc::BadMagic, "missing FMCW magic");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  require(version == kBinaryVersion, Errc::UnsupportedVersion, "version " + std::to_string(version));
  require(bytes.size() >= kBinaryPrefix, Errc::TruncatedHeader, "header truncated");
  std::array<double, 4> header{};
  for (std::size_t i = 0; i < 4; ++i) header[i] = get_le<double>(bytes, 8 + 8 * i);
  const auto count = get_le<std::uint64_t>(bytes, 40);
  const std::size_t available = (bytes.size() - kBinaryPrefix) / 16;
  require(count <= available, Errc::MalformedEntry, "payload count exceeds file size");
  require(bytes.size() == kBinaryPrefix + count * 16, Errc::MalformedEntry, "trailing bytes after payload");
  const RadarParams p = params_from_header(header);
  std::vector<cdouble> payload(count);
  for (std::size_t i = 0; i < count; ++i) {
    payload[i] = {get_le<double>(bytes, kBinaryPrefix + 16 * i), get_le<double>(bytes, kBinaryPrefix + 16 * i + 8)};
  }
  return reshape(p, std::move(payload));
}

inline std::vector<std::uint8_t> write_dat(const RadarParams& params, const EchoMatrix& echo) {
  require(echo.params == params, Errc::ShapeMismatch, "echo params differ from header params");
  echo.validate();
  std::string out;
  out.reserve(echo.data.size() * 40 + 128);
  detail::append_real(out, params.carrier_freq_hz);
  out += '\n';
  detail::append_real(out, params.chirp_duration_s);
  out += '\n';
  detail::append_real(out, static_cast<double>(params.samples_per_chirp));
  out += '\n';
  detail::append_real(out, params.bandwidth_hz);
  out += '\n';
  for (const cdouble& v : echo.data.values()) {
    detail::append_real(out, v.real());
    const double im = v.imag();
    out += std::signbit(im) ? '-' : '+';
    detail::append_real(out, std::fabs(im));
    out += "i\n";
  }
  return {out.begin(), out.end()};
}

inline std::vector<std::uint8_t> write_datb(const RadarParams& params, const EchoMatrix& echo) {
  using namespace detail;
  require(echo.params == params, Errc::ShapeMismatch, "echo params differ from header params");
  echo.validate();
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.reserve(kBinaryPrefix + echo.data.size() * 16);
  put_le<std::uint32_t>(out, kBinaryVersion);
  put_le<double>(out, params.carrier_freq_hz);
  put_le<double>(out, params.chirp_duration_s);
  put_le<double>(out, static_cast<double>(params.samples_per_chirp));
  put_le<double>(out, params.bandwidth_hz);
  put_le<std::uint64_t>(out, echo.data.size());
  for (const cdouble& v : echo.data.values()) {
    put_le<double>(out, v.real());
    put_le<double>(out, v.imag());
  }
  return out;
}

inline DatCodec codec_for(const std::filesystem::path& path) {
  return path.extension() == ".datb" ? DatCodec::Binary : DatCodec::Ascii;
}

inline ParseResult parse(std::span<const std::uint8_t> bytes, DatCodec codec) {
  return codec == DatCodec::Binary ? parse_datb(bytes) : parse_dat(bytes);
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Reads a recording, picking the codec from the extension.
inline ParseResult read_recording(const std::filesystem::path& path) {
  return parse(read_bytes(path), codec_for(path));
}

inline void write_recording(const std::filesystem::path& path, const EchoMatrix& echo) {
  write_bytes(path, codec_for(path) == DatCodec::Binary ? write_datb(echo.params, echo)
                                                        : write_dat(echo.params, echo));
}

}  // namespace radhar
