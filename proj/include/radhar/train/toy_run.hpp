#pragma once

// End-to-end toy experiment: build the synthetic dataset, train the network
// and write the run directory (manifest, metrics CSVs, checkpoint, dataset).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "radhar/nn/checkpoint.hpp"
#include "radhar/train/trainer.hpp"

namespace radhar::train {

struct ToyRunConfig {
  nn::ModelConfig model = nn::preset("toy");
  ToyDatasetConfig data{10, 64, 0};
  TrainConfig train;
  std::uint64_t model_seed = 1;
};

inline nlohmann::json to_json(const ToyRunConfig& c) {
  return {{"model", nn::to_json(c.model)},
          {"data", {{"per_class", c.data.per_class}, {"map_size", c.data.map_size}, {"seed", c.data.seed}}},
          {"train", to_json(c.train)},
          {"model_seed", c.model_seed},
          {"normalization", kNormalization}};
}

/// Missing keys keep their defaults; "model" may be a preset name or a full
/// model object.
inline ToyRunConfig toy_run_config_from_json(const nlohmann::json& j) {
  ToyRunConfig c;
  try {
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model = m.is_string() ? nn::preset(m.get<std::string>()) : nn::model_config_from_json(m);
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      c.data.per_class = d.value("per_class", c.data.per_class);
      c.data.map_size = d.value("map_size", c.data.map_size);
      c.data.seed = d.value("seed", c.data.seed);
    }
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.model_seed = j.value("model_seed", c.model_seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedEntry, std::string("toy run config: ") + e.what());
  }
  c.data.validate();
  c.model.validate();
  c.train.validate();
  return c;
}

struct ToyRun {
  Dataset dataset;
  std::unique_ptr<nn::Pecl<float>> model;
  TrainResult result;
  double dataset_seconds = 0.0;
  double train_seconds = 0.0;
};

inline ToyRun run_toy(const ToyRunConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  using clock = std::chrono::steady_clock;
  ToyRun run;
  auto t0 = clock::now();
  run.dataset = make_toy_dataset(cfg.data);
  run.dataset_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  t0 = clock::now();
  run.model = std::make_unique<nn::Pecl<float>>(cfg.model, cfg.data.map_size, cfg.data.map_size, cfg.model_seed);
  run.result = train(*run.model, run.dataset, cfg.train, on_epoch);
  run.train_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return run;
}

inline std::string history_csv(const std::vector<EpochRecord>& h) {
  std::ostringstream os;
  os << "epoch,lr,loss,train_accuracy,val_accuracy,seconds\n";
  for (const auto& r : h)
    os << r.epoch << ',' << r.lr << ',' << r.loss << ',' << r.train_accuracy << ',' << r.val_accuracy << ','
       << r.seconds << '\n';
  return os.str();
}

/// Writes metrics.csv (per epoch), metrics_<split>.csv, confusion_<split>.csv,
/// checkpoint/, data/ (with split.json) and returns the run summary JSON.
inline nlohmann::json write_toy_run(const std::filesystem::path& dir, const ToyRunConfig& cfg, ToyRun& run) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "metrics.csv") << history_csv(run.result.history);
  const std::pair<const char*, const MetricsReport*> splits[] = {
      {"train", &run.result.train}, {"val", &run.result.val}, {"test", &run.result.test}};
  for (const auto& [name, rep] : splits) {
    std::ofstream(dir / (std::string("metrics_") + name + ".csv")) << metrics_csv(*rep, run.dataset.class_names);
    std::ofstream(dir / (std::string("confusion_") + name + ".csv")) << confusion_csv(*rep, run.dataset.class_names);
  }
  save_dataset(dir / "data", run.dataset);
  std::ofstream(dir / "data" / "split.json") << to_json(run.result.split).dump(2) << "\n";
  nn::save_checkpoint(dir / "checkpoint", *run.model, {{"train", to_json(cfg.train)}});
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& r : run.result.history) epochs.push_back(to_json(r));
  const auto first = run.result.first_epoch_reaching(0.95);
  return {{"config", to_json(cfg)},
          {"epochs", epochs},
          {"final", {{"train", to_json(run.result.train)}, {"val", to_json(run.result.val)}, {"test", to_json(run.result.test)}}},
          {"split", to_json(run.result.split)},
          {"first_epoch_train_accuracy_ge_0.95", first ? nlohmann::json(*first) : nlohmann::json(nullptr)},
          {"dataset_seconds", run.dataset_seconds},
          {"train_seconds", run.train_seconds}};
}

}  // namespace radhar::train
