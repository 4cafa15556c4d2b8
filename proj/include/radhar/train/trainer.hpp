#pragma once

// Single-threaded, seeded training loop for the three-branch network.

#include <chrono>
#include <functional>
#include <optional>

#include "json.hpp"
#include "radhar/nn/network.hpp"
#include "radhar/train/adam.hpp"
#include "radhar/train/dataset.hpp"
#include "radhar/train/loss.hpp"
#include "radhar/train/metrics.hpp"
#include "radhar/train/split.hpp"

namespace radhar::train {

struct TrainConfig {
  double lr0 = 1e-3;
  double decay_factor = 0.1;
  std::size_t decay_every_epochs = 30;
  std::size_t batch_size = 8;
  std::size_t epochs = 50;
  std::array<double, 3> split{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;

  void validate() const {
    require(lr0 > 0.0 && decay_factor > 0.0, Errc::InvalidConfig, "learning-rate settings must be positive");
    require(decay_every_epochs >= 1 && batch_size >= 1 && epochs >= 1, Errc::InvalidConfig,
            "epochs, batch size and decay period must be >= 1");
    for (double f : split) require(f >= 0.0, Errc::InvalidConfig, "split fractions must be >= 0");
    require(std::fabs(split[0] + split[1] + split[2] - 1.0) <= 1e-9, Errc::InvalidConfig,
            "split fractions must sum to 1");
  }

  AdamConfig adam() const {
    AdamConfig a;
    a.lr0 = lr0;
    a.decay_factor = decay_factor;
    a.decay_every_epochs = decay_every_epochs;
    return a;
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr0", c.lr0},         {"decay_factor", c.decay_factor}, {"decay_every_epochs", c.decay_every_epochs},
          {"batch_size", c.batch_size}, {"epochs", c.epochs},       {"split", c.split},
          {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.lr0 = j.value("lr0", c.lr0);
    c.decay_factor = j.value("decay_factor", c.decay_factor);
    c.decay_every_epochs = j.value("decay_every_epochs", c.decay_every_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    if (j.contains("split")) c.split = j.at("split").get<std::array<double, 3>>();
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedEntry, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double loss = 0.0;            // mean training-batch loss during the epoch
  double train_accuracy = 0.0;  // inference mode, after the epoch
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},          {"lr", r.lr},
          {"loss", r.loss},            {"train_accuracy", r.train_accuracy},
          {"val_accuracy", r.val_accuracy}, {"seconds", r.seconds}};
}

struct TrainResult {
  SplitIndices split;
  std::vector<EpochRecord> history;
  MetricsReport train, val, test;

  /// First epoch whose training accuracy reaches `threshold`.
  std::optional<std::size_t> first_epoch_reaching(double threshold) const {
    for (const auto& r : history)
      if (r.train_accuracy >= threshold) return r.epoch;
    return std::nullopt;
  }
};

/// Argmax predictions in inference mode.
template <class T>
std::vector<std::size_t> predict(nn::Pecl<T>& model, const Dataset& ds, const std::vector<std::size_t>& idx,
                                 std::size_t batch_size = 16) {
  std::vector<std::size_t> out;
  const nn::Ctx ctx{false, false};
  for (std::size_t lo = 0; lo < idx.size(); lo += batch_size) {
    const std::vector<std::size_t> b(idx.begin() + lo, idx.begin() + std::min(idx.size(), lo + batch_size));
    const auto logits = model.forward(stack_branch<T>(ds, b, 0), stack_branch<T>(ds, b, 1),
                                      stack_branch<T>(ds, b, 2), ctx);
    const auto p = argmax_rows(logits);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <class T>
MetricsReport evaluate(nn::Pecl<T>& model, const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> truth;
  for (auto i : idx) truth.push_back(ds.samples.at(i).label);
  return make_report(truth, predict(model, ds, idx), ds.classes());
}

template <class T>
MetricsReport evaluate(nn::Pecl<T>& model, const Dataset& ds) {
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return evaluate(model, ds, all);
}

template <class T>
TrainResult train(nn::Pecl<T>& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  require(ds.classes() == model.config().num_classes, Errc::ShapeMismatch,
          "dataset class count differs from the model's");
  require(ds.map_size == model.input_h() && ds.map_size == model.input_w(), Errc::ShapeMismatch,
          "dataset map size differs from the model input");
  TrainResult res;
  res.split = stratified_split(ds.labels(), cfg.split, cfg.seed);
  Adam<T> opt(model.params(), cfg.adam());
  const CounterRng rng = CounterRng(cfg.seed).derive(0x7a);
  std::vector<std::size_t> order = res.split.train;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const CounterRng er = rng.derive(epoch);
    for (std::size_t i = order.size(); i-- > 1;) {
      const auto j = static_cast<std::size_t>(er.uniform(i) * static_cast<double>(i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
    const double lr = learning_rate(opt.config(), epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::vector<std::size_t> b(order.begin() + lo, order.begin() + std::min(order.size(), lo + cfg.batch_size));
      std::vector<std::size_t> labels;
      for (auto i : b) labels.push_back(ds.samples[i].label);
      model.fusion.dropout.reseed(CounterRng(cfg.seed).derive(0xd1).bits(step));
      const auto logits = model.forward(stack_branch<T>(ds, b, 0), stack_branch<T>(ds, b, 1),
                                        stack_branch<T>(ds, b, 2), nn::Ctx{true, true});
      const auto ce = cross_entropy(logits, labels);
      opt.zero_grad();
      model.backward(ce.grad);
      opt.step(lr);
      ++step;
      loss_sum += static_cast<double>(ce.loss) * static_cast<double>(b.size());
      seen += b.size();
    }
    EpochRecord r;
    r.epoch = epoch + 1;
    r.lr = lr;
    r.loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    r.train_accuracy = evaluate(model, ds, res.split.train).overall_accuracy;
    r.val_accuracy = res.split.val.empty() ? 0.0 : evaluate(model, ds, res.split.val).overall_accuracy;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  res.train = evaluate(model, ds, res.split.train);
  res.val = evaluate(model, ds, res.split.val);
  res.test = evaluate(model, ds, res.split.test);
  return res;
}

}  // namespace radhar::train
