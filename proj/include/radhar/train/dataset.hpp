#pragma once

// Toy dataset: activity-template scenes rendered to RT/DT/RD maps, resized to
// a square grid and min-max normalized per map.

#include <algorithm>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "radhar/core/parallel.hpp"
#include "radhar/domain_maps.hpp"
#include "radhar/nn/tensor.hpp"
#include "radhar/spectro_map.hpp"
#include "radhar/synth.hpp"

namespace radhar::train {

inline constexpr const char* kNormalization = "minmax_per_map";

struct ToyDatasetConfig {
  std::size_t per_class = 10;
  std::size_t map_size = 64;
  std::uint64_t seed = 0;

  void validate() const {
    require(per_class >= 1, Errc::InvalidConfig, "per_class must be >= 1");
    require(map_size >= 8, Errc::InvalidConfig, "map_size must be >= 8");
  }
};

struct Sample {
  std::size_t label = 0;
  std::uint64_t seed = 0;            // template seed
  std::array<Matrix<float>, 3> maps;  // rt, dt, rd; each map_size x map_size in [0, 1]
};

struct Dataset {
  std::size_t map_size = 0;
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t classes() const { return class_names.size(); }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out;
    for (const auto& s : samples) out.push_back(s.label);
    return out;
  }
};

/// (v - min) / (max - min); a constant map becomes all zeros.
inline Matrix<float> min_max_normalize(const Matrix<double>& m) {
  Matrix<float> out(m.rows(), m.cols(), 0.0f);
  if (m.size() == 0) return out;
  const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < m.size(); ++i)
    out.values()[i] = static_cast<float>((m.values()[i] - *lo) / span);
  return out;
}

/// The three maps of one echo, resized and normalized.
inline std::array<Matrix<float>, 3> network_maps(const EchoMatrix& echo, std::size_t size) {
  const SpectroMap rt = maps::range_time_map(echo);
  const SpectroMap dt = maps::doppler_time_map(echo, maps::AstftConfig::defaults(echo.params));
  const SpectroMap rd = maps::range_doppler_map(echo);
  return {min_max_normalize(maps::resize_bilinear(rt, size, size).values),
          min_max_normalize(maps::resize_bilinear(dt, size, size).values),
          min_max_normalize(maps::resize_bilinear(rd, size, size).values)};
}

inline std::uint64_t toy_sample_seed(std::uint64_t dataset_seed, std::size_t label, std::size_t index) {
  return CounterRng(dataset_seed).derive(label).bits(index);
}

inline Dataset make_toy_dataset(const ToyDatasetConfig& cfg, const RadarParams& params = nominal_params()) {
  cfg.validate();
  Dataset ds;
  ds.map_size = cfg.map_size;
  for (auto a : synth::kActivities) ds.class_names.push_back(synth::to_string(a));
  const std::size_t k = synth::kActivities.size();
  ds.samples.resize(k * cfg.per_class);
  parallel_for(ds.samples.size(), [&](std::size_t i) {
    Sample& s = ds.samples[i];
    s.label = i / cfg.per_class;
    s.seed = toy_sample_seed(cfg.seed, s.label, i % cfg.per_class);
    const auto scene = synth::activity_template(synth::kActivities[s.label], s.seed);
    s.maps = network_maps(synth::generate(scene, params), cfg.map_size);
  });
  return ds;
}

/// Stacks the chosen samples of one branch into a (B, 1, S, S) tensor.
template <class T>
nn::Tensor4<T> stack_branch(const Dataset& ds, const std::vector<std::size_t>& idx, std::size_t branch) {
  const std::size_t s = ds.map_size, hw = s * s;
  nn::Tensor4<T> t(idx.size(), 1, s, s);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& m = ds.samples.at(idx[b]).maps[branch].values();
    for (std::size_t i = 0; i < hw; ++i) t.data[b * hw + i] = static_cast<T>(m[i]);
  }
  return t;
}

inline const std::array<const char*, 3> kBranchNames = {"rt", "dt", "rd"};

/// index.json plus one f32 blob per map (reusing the .smap layout).
inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    nlohmann::json files;
    for (std::size_t b = 0; b < 3; ++b) {
      const std::string file = "sample" + std::to_string(i) + "_" + kBranchNames[b] + ".f32";
      std::vector<std::uint8_t> bytes;
      bytes.reserve(s.maps[b].size() * 4);
      for (float v : s.maps[b].values()) radhar::detail::put_le<float>(bytes, v);
      write_bytes(dir / file, bytes);
      files[kBranchNames[b]] = file;
    }
    samples.push_back({{"label", s.label}, {"class", ds.class_names.at(s.label)}, {"seed", s.seed}, {"files", files}});
  }
  const nlohmann::json index = {{"map_size", ds.map_size},
                                {"normalization", kNormalization},
                                {"classes", ds.class_names},
                                {"samples", samples}};
  std::ofstream(dir / "index.json") << index.dump(2) << "\n";
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const auto bytes = read_bytes(dir / "index.json");
  Dataset ds;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    ds.map_size = j.at("map_size").get<std::size_t>();
    ds.class_names = j.at("classes").get<std::vector<std::string>>();
    const std::size_t hw = ds.map_size * ds.map_size;
    for (const auto& e : j.at("samples")) {
      Sample s;
      s.label = e.at("label").get<std::size_t>();
      require(s.label < ds.classes(), Errc::LabelOutOfRange, "dataset label out of range");
      s.seed = e.value("seed", std::uint64_t{0});
      for (std::size_t b = 0; b < 3; ++b) {
        const auto blob = read_bytes(dir / e.at("files").at(kBranchNames[b]).get<std::string>());
        require(blob.size() == hw * 4, Errc::LengthMismatch, "dataset blob has the wrong size");
        s.maps[b] = Matrix<float>(ds.map_size, ds.map_size);
        for (std::size_t i = 0; i < hw; ++i) s.maps[b].values()[i] = radhar::detail::get_le<float>(blob, 4 * i);
      }
      ds.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedEntry, std::string("dataset index: ") + e.what());
  }
  return ds;
}

}  // namespace radhar::train
