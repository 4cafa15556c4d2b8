#pragma once

// SpectroMap: real 2-D map with axis metadata, plus its on-disk forms.
//   <name>.smap       little-endian f32, row-major values
//   <name>.smap.json  sidecar: domain, shape, axes, radar params
//   <name>.pgm        optional 8-bit min-max normalized preview

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "radhar/core/error.hpp"
#include "radhar/core/matrix.hpp"
#include "radhar/radar_io.hpp"

namespace radhar {

enum class Domain { RangeTime, DopplerTime, RangeDoppler, Echo };

inline std::string to_string(Domain d) {
  switch (d) {
    case Domain::RangeTime: return "range_time";
    case Domain::DopplerTime: return "doppler_time";
    case Domain::RangeDoppler: return "range_doppler";
    case Domain::Echo: return "echo";
  }
  return "unknown";
}

inline Domain domain_from_string(const std::string& s) {
  if (s == "range_time" || s == "rt") return Domain::RangeTime;
  if (s == "doppler_time" || s == "dt") return Domain::DopplerTime;
  if (s == "range_doppler" || s == "rd") return Domain::RangeDoppler;
  if (s == "echo") return Domain::Echo;
  throw Error(Errc::InvalidConfig, "unknown domain '" + s + "'");
}

struct Axis {
  std::string name;
  std::string unit;
  double start = 0.0;
  double step = 1.0;

  double at(std::size_t i) const { return start + step * static_cast<double>(i); }
  bool operator==(const Axis&) const = default;
};

struct SpectroMap {
  Domain domain = Domain::RangeTime;
  Matrix<double> values;
  Axis row_axis;
  Axis col_axis;
  RadarParams params;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }

  void validate() const {
    require(!values.empty(), Errc::ShapeMismatch, "empty map");
    require(row_axis.step > 0.0 && col_axis.step > 0.0, Errc::InvalidConfig, "axis step must be > 0");
    for (double v : values.values()) require(std::isfinite(v), Errc::InvalidConfig, "non-finite map value");
  }
};

inline nlohmann::json to_json(const Axis& a) {
  return {{"name", a.name}, {"unit", a.unit}, {"start", a.start}, {"step", a.step}};
}

inline Axis axis_from_json(const nlohmann::json& j) {
  return {j.at("name").get<std::string>(), j.at("unit").get<std::string>(), j.at("start").get<double>(),
          j.at("step").get<double>()};
}

inline nlohmann::json to_json(const RadarParams& p) {
  return {{"carrier_freq_hz", p.carrier_freq_hz},
          {"chirp_duration_s", p.chirp_duration_s},
          {"samples_per_chirp", p.samples_per_chirp},
          {"bandwidth_hz", p.bandwidth_hz}};
}

inline RadarParams params_from_json(const nlohmann::json& j) {
  RadarParams p;
  p.carrier_freq_hz = j.at("carrier_freq_hz").get<double>();
  p.chirp_duration_s = j.at("chirp_duration_s").get<double>();
  p.samples_per_chirp = j.at("samples_per_chirp").get<std::size_t>();
  p.bandwidth_hz = j.at("bandwidth_hz").get<double>();
  return p;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& smap) {
  auto p = smap;
  p += ".json";
  return p;
}

inline void save_smap(const std::filesystem::path& path, const SpectroMap& map) {
  map.validate();
  nlohmann::json meta = {{"domain", to_string(map.domain)},
                         {"shape", {map.rows(), map.cols()}},
                         {"dtype", "f32le"},
                         {"row_axis", to_json(map.row_axis)},
                         {"col_axis", to_json(map.col_axis)},
                         {"params", to_json(map.params)}};
  std::ofstream js(sidecar_path(path));
  require(static_cast<bool>(js), Errc::Io, "cannot write " + sidecar_path(path).string());
  js << meta.dump(2) << '\n';

  std::vector<std::uint8_t> blob;
  blob.reserve(map.values.size() * 4);
  for (double v : map.values.values()) detail::put_le<float>(blob, static_cast<float>(v));
  write_bytes(path, blob);
}

inline SpectroMap load_smap(const std::filesystem::path& path) {
  std::ifstream js(sidecar_path(path));
  require(static_cast<bool>(js), Errc::Io, "missing sidecar " + sidecar_path(path).string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedEntry, std::string("sidecar: ") + e.what());
  }
  SpectroMap map;
  std::size_t rows = 0, cols = 0;
  try {
    map.domain = domain_from_string(meta.at("domain").get<std::string>());
    rows = meta.at("shape").at(0).get<std::size_t>();
    cols = meta.at("shape").at(1).get<std::size_t>();
    map.row_axis = axis_from_json(meta.at("row_axis"));
    map.col_axis = axis_from_json(meta.at("col_axis"));
    map.params = params_from_json(meta.at("params"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedEntry, std::string("sidecar: ") + e.what());
  }
  const auto blob = read_bytes(path);
  require(blob.size() == rows * cols * 4, Errc::MalformedEntry, "smap size does not match sidecar shape");
  map.values = Matrix<double>(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i)
    map.values.values()[i] = detail::get_le<float>(blob, 4 * i);
  return map;
}

/// Binary 8-bit PGM, min-max normalized; a constant map renders mid-grey.
inline void write_pgm(const std::filesystem::path& path, const SpectroMap& map) {
  const auto& v = map.values.values();
  require(!v.empty(), Errc::ShapeMismatch, "empty map");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = *hi - *lo;
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::Io, "cannot write " + path.string());
  out << "P5\n" << map.cols() << ' ' << map.rows() << "\n255\n";
  for (double x : v) {
    const double u = span > 0.0 ? (x - *lo) / span : 0.5;
    out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(u * 255.0))));
  }
}

}  // namespace radhar
