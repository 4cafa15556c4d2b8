#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "radhar/nn/config.hpp"
#include "radhar/train/trainer.hpp"

using namespace radhar;
using namespace radhar::train;

namespace {

nn::Tensor4<double> logits_of(std::size_t b, std::size_t k, std::uint64_t seed) {
  nn::Tensor4<double> t(b, k, 1, 1);
  const CounterRng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = rng.normal(i);
  return t;
}

std::vector<std::size_t> balanced_labels(std::size_t classes, std::size_t per_class) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < classes; ++k)
    for (std::size_t i = 0; i < per_class; ++i) out.push_back(k);
  return out;
}

// Small shared dataset; rendering maps dominates the cost.
const Dataset& small_dataset() {
  static const Dataset ds = make_toy_dataset({5, 32, 3});
  return ds;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsAndDecaysMoments) {
  std::vector<double> p = {1.0, -2.0}, g = {0.0, 0.0}, m = {0.5, -0.5}, v = {0.25, 0.1};
  adam_update(p, g, m, v, 3, 1e-3, AdamConfig{});
  // A non-zero first moment still moves the parameter; with m = v = 0 it does not.
  std::vector<double> q = {1.0, -2.0}, m0 = {0.0, 0.0}, v0 = {0.0, 0.0};
  adam_update(q, g, m0, v0, 1, 1e-3, AdamConfig{});
  EXPECT_EQ(q, (std::vector<double>{1.0, -2.0}));
  EXPECT_DOUBLE_EQ(m[0], 0.45);
  EXPECT_DOUBLE_EQ(v[0], 0.25 * 0.999);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // Step 1: mhat = g, vhat = g^2, so the update is lr * g / (|g| + eps).
  std::vector<double> p = {0.7}, g = {1.0}, m = {0.0}, v = {0.0};
  adam_update(p, g, m, v, 1, 1e-3, AdamConfig{});
  EXPECT_NEAR(p[0], 0.7 - 1e-3 / (1.0 + 1e-8), 1e-15);
  std::vector<double> q = {0.0}, gq = {-250.0}, mq = {0.0}, vq = {0.0};
  adam_update(q, gq, mq, vq, 1, 1e-3, AdamConfig{});
  EXPECT_NEAR(q[0], 1e-3, 1e-12);
}

TEST(Adam, ScheduleAndValidation) {
  const AdamConfig c;
  EXPECT_DOUBLE_EQ(learning_rate(c, 0), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate(c, 29), 1e-3);
  EXPECT_NEAR(learning_rate(c, 30), 1e-4, 1e-18);
  EXPECT_NEAR(learning_rate(c, 65), 1e-5, 1e-19);
  std::vector<double> p(2), g(3), m(2), v(2);
  EXPECT_THROW(adam_update(p, g, m, v, 1, 1e-3, c), Error);
  std::vector<double> g2(2);
  EXPECT_THROW(adam_update(p, g2, m, v, 0, 1e-3, c), Error);
}

TEST(Adam, SkipsNonTrainableParams) {
  nn::Param<double> w("w", 1, 1, 1, 2), stat("s", 1, 1, 1, 2, false);
  w.grad.fill(1.0);
  stat.grad.fill(1.0);
  Adam<double> opt({&w, &stat});
  opt.step(0.1);
  EXPECT_NEAR(w.value.data[0], -0.1, 1e-9);
  EXPECT_EQ(stat.value.data[0], 0.0);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(CrossEntropy, UniformLogits) {
  const nn::Tensor4<double> z(4, 6, 1, 1);
  const auto r = cross_entropy(z, {0, 1, 2, 5});
  EXPECT_NEAR(r.loss, std::log(6.0), 1e-15);
  EXPECT_NEAR(std::log(6.0), 1.7918, 1e-4);
}

TEST(CrossEntropy, SaturatedCorrectLogit) {
  nn::Tensor4<double> z(1, 6, 1, 1);
  z.data[3] = 100.0;
  EXPECT_LT(cross_entropy(z, {3}).loss, 1e-40);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  nn::Tensor4<double> z = logits_of(3, 6, 4);
  const std::vector<std::size_t> labels = {2, 0, 5};
  const auto r = cross_entropy(z, labels);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double keep = z.data[i];
    z.data[i] = keep + eps;
    const double up = cross_entropy(z, labels).loss;
    z.data[i] = keep - eps;
    const double down = cross_entropy(z, labels).loss;
    z.data[i] = keep;
    const double fd = (up - down) / (2 * eps);
    EXPECT_LT(std::fabs(fd - r.grad.data[i]) / std::max({std::fabs(fd), std::fabs(r.grad.data[i]), 1e-3}), 1e-6);
  }
}

TEST(CrossEntropy, LabelOutOfRange) {
  try {
    cross_entropy(nn::Tensor4<double>(1, 6, 1, 1), {6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LabelOutOfRange);
  }
}

TEST(Split, ExactProportionsPerClass) {
  const auto labels = balanced_labels(3, 10);
  const auto s = stratified_split(labels, {0.6, 0.2, 0.2}, 1);
  for (std::size_t k = 0; k < 3; ++k) {
    auto n = [&](const std::vector<std::size_t>& idx) {
      return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return labels[i] == k; });
    };
    EXPECT_EQ(n(s.train), 6);
    EXPECT_EQ(n(s.val), 2);
    EXPECT_EQ(n(s.test), 2);
  }
}

TEST(Split, DeterministicDisjointExhaustive) {
  const auto labels = balanced_labels(6, 7);
  const auto a = stratified_split(labels, {0.6, 0.2, 0.2}, 9);
  const auto b = stratified_split(labels, {0.6, 0.2, 0.2}, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  std::set<std::size_t> all;
  for (const auto* v : {&a.train, &a.val, &a.test}) all.insert(v->begin(), v->end());
  EXPECT_EQ(all.size(), labels.size());
  EXPECT_EQ(a.train.size() + a.val.size() + a.test.size(), labels.size());
  const auto c = stratified_split(labels, {0.6, 0.2, 0.2}, 10);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, Errors) {
  try {
    stratified_split(balanced_labels(2, 4), {0.6, 0.2, 0.2}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewSamples);
  }
  EXPECT_THROW(stratified_split(balanced_labels(2, 5), {0.6, 0.3, 0.2}, 0), Error);
}

TEST(Metrics, PerfectAndConstantPredictors) {
  const auto truth = balanced_labels(6, 5);
  const auto perfect = make_report(truth, truth, 6);
  EXPECT_DOUBLE_EQ(perfect.overall_accuracy, 1.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(perfect.confusion(i, j), i == j ? 5u : 0u);
  const auto constant = make_report(truth, std::vector<std::size_t>(truth.size(), 2), 6);
  EXPECT_NEAR(constant.overall_accuracy, 1.0 / 6.0, 1e-15);
  for (std::size_t i = 0; i < 6; ++i) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < 6; ++j) row += constant.confusion(i, j);
    EXPECT_EQ(row, 5u);  // ground-truth counts regardless of predictions
    EXPECT_DOUBLE_EQ(constant.per_class_accuracy[i], i == 2 ? 1.0 : 0.0);
  }
  EXPECT_THROW(make_report({0}, {6}, 6), Error);
}

TEST(Metrics, CsvLayout) {
  const auto r = make_report({0, 1, 1}, {0, 1, 0}, 2);
  EXPECT_EQ(confusion_csv(r, {"a", "b"}), "true\\pred,a,b\na,1,0\nb,1,1\n");
  const std::string m = metrics_csv(r, {"a", "b"});
  EXPECT_NE(m.find("class,count,correct,accuracy\n"), std::string::npos);
  EXPECT_NE(m.find("b,2,1,0.5\n"), std::string::npos);
  EXPECT_NE(m.find("overall,3,2,"), std::string::npos);
}

TEST(Dataset, MinMaxNormalization) {
  Matrix<double> m(2, 2, std::vector<double>{-3.0, 1.0, 5.0, 1.0});
  const auto n = min_max_normalize(m);
  EXPECT_EQ(n.values(), (std::vector<float>{0.0f, 0.5f, 1.0f, 0.5f}));
  EXPECT_EQ(min_max_normalize(Matrix<double>(2, 3, 7.0)).values(), std::vector<float>(6, 0.0f));
}

TEST(Dataset, ToyMapsBalancedNormalizedAndDeterministic) {
  const Dataset& ds = small_dataset();
  ASSERT_EQ(ds.size(), 30u);
  EXPECT_EQ(ds.classes(), 6u);
  const auto labels = ds.labels();
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(std::count(labels.begin(), labels.end(), k), 5);
  for (const auto& s : ds.samples)
    for (const auto& m : s.maps) {
      ASSERT_EQ(m.rows(), 32u);
      ASSERT_EQ(m.cols(), 32u);
      const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
      EXPECT_EQ(*lo, 0.0f);
      EXPECT_EQ(*hi, 1.0f);
    }
  const Dataset again = make_toy_dataset({1, 32, 3});
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(again.samples[k].maps[b].values(), ds.samples[k * 5].maps[b].values());
}

TEST(Dataset, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "radhar_dataset_test";
  std::filesystem::remove_all(dir);
  const Dataset& ds = small_dataset();
  save_dataset(dir, ds);
  const Dataset back = load_dataset(dir);
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.class_names, ds.class_names);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.samples[i].label, ds.samples[i].label);
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(back.samples[i].maps[b].values(), ds.samples[i].maps[b].values());
  }
  std::filesystem::remove_all(dir);
}

TEST(Trainer, ShortRunIsDeterministicAndLearns) {
  const Dataset& ds = small_dataset();
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 2;
  nn::ModelConfig mc = nn::preset("toy");
  nn::Pecl<float> a(mc, 32, 32, 1), b(mc, 32, 32, 1);
  const auto ra = train::train(a, ds, cfg);
  const auto rb = train::train(b, ds, cfg);
  ASSERT_EQ(ra.history.size(), 6u);
  for (std::size_t e = 0; e < 6; ++e) EXPECT_EQ(ra.history[e].loss, rb.history[e].loss);
  EXPECT_LT(ra.history.back().loss, ra.history.front().loss);
  EXPECT_EQ(ra.train.total, 18u);
  EXPECT_EQ(ra.val.total, 6u);
  EXPECT_EQ(ra.test.total, 6u);
  const auto full = evaluate(a, ds);
  EXPECT_EQ(full.total, 30u);
}

TEST(Trainer, ConfigValidationAndJson) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
  const TrainConfig d = train_config_from_json({{"epochs", 3}, {"seed", 5}});
  EXPECT_EQ(d.epochs, 3u);
  EXPECT_EQ(d.seed, 5u);
  EXPECT_EQ(d.batch_size, 8u);
  EXPECT_THROW(train_config_from_json({{"split", {0.5, 0.5, 0.5}}}), Error);
  nn::Pecl<float> m(nn::preset("toy"), 64, 64, 0);
  EXPECT_THROW(train::train(m, small_dataset(), TrainConfig{}), Error);  // map size mismatch
}
