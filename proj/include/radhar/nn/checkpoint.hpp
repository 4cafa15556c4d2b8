#pragma once

// Checkpoint directory: manifest.json (config, input size, seed, parameter
// table) plus one little-endian float32 blob per named parameter.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "json.hpp"
#include "radhar/nn/config.hpp"
#include "radhar/nn/network.hpp"
#include "radhar/radar_io.hpp"

namespace radhar::nn {

inline constexpr const char* kCheckpointFormat = "radhar-checkpoint-1";

template <class T>
void write_param_blob(const std::filesystem::path& path, const Param<T>& p) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(p.size() * 4);
  for (std::size_t i = 0; i < p.size(); ++i) radhar::detail::put_le<float>(bytes, static_cast<float>(p.value.data[i]));
  write_bytes(path, bytes);
}

template <class T>
void read_param_blob(const std::filesystem::path& path, Param<T>& p) {
  const auto bytes = read_bytes(path);
  require(bytes.size() == p.size() * 4, Errc::LengthMismatch,
          "checkpoint blob " + path.string() + " has " + std::to_string(bytes.size()) + " bytes, expected " +
              std::to_string(p.size() * 4));
  for (std::size_t i = 0; i < p.size(); ++i)
    p.value.data[i] = static_cast<T>(radhar::detail::get_le<float>(bytes, 4 * i));
}

template <class T>
void save_checkpoint(const std::filesystem::path& dir, Pecl<T>& model, const nlohmann::json& extra = {}) {
  std::filesystem::create_directories(dir);
  nlohmann::json table = nlohmann::json::array();
  for (const Param<T>* p : model.params()) {
    const std::string file = p->name + ".f32";
    write_param_blob(dir / file, *p);
    table.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"file", file}, {"trainable", p->trainable}});
  }
  nlohmann::json manifest = {{"format", kCheckpointFormat},
                             {"config", to_json(model.config())},
                             {"input", {model.input_h(), model.input_w()}},
                             {"seed", model.seed()},
                             {"dtype", "float32-le"},
                             {"params", table}};
  if (!extra.is_null()) manifest["extra"] = extra;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
}

inline nlohmann::json read_checkpoint_manifest(const std::filesystem::path& dir) {
  const auto bytes = read_bytes(dir / "manifest.json");
  try {
    auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    require(j.value("format", std::string()) == kCheckpointFormat, Errc::UnsupportedVersion,
            "unknown checkpoint format in " + (dir / "manifest.json").string());
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedEntry, std::string("checkpoint manifest: ") + e.what());
  }
}

/// Rebuilds the network described by the manifest and loads every blob.
template <class T>
Pecl<T> load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest = read_checkpoint_manifest(dir);
  const ModelConfig cfg = model_config_from_json(manifest.at("config"));
  const auto input = manifest.at("input");
  Pecl<T> model(cfg, input.at(0).get<std::size_t>(), input.at(1).get<std::size_t>(),
                manifest.at("seed").get<std::uint64_t>());
  std::map<std::string, nlohmann::json> entries;
  for (const auto& e : manifest.at("params")) entries[e.at("name").get<std::string>()] = e;
  for (Param<T>* p : model.params()) {
    const auto it = entries.find(p->name);
    require(it != entries.end(), Errc::MalformedEntry, "checkpoint lacks parameter " + p->name);
    require(it->second.at("shape").template get<std::array<std::size_t, 4>>() == p->value.shape(), Errc::ShapeMismatch,
            "checkpoint shape mismatch for " + p->name);
    read_param_blob(dir / it->second.at("file").template get<std::string>(), *p);
  }
  return model;
}

}  // namespace radhar::nn
