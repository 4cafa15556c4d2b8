#pragma once

// Central finite-difference checks of every backward pass, in double
// precision. Each module is driven with random inputs and parameters; the
// scalar objective is sum(out * R) for a fixed random projection R, so the
// analytic gradient is backward(R).
//
// Per-entry relative error: |a - n| / max(|a|, |n|, floor). The floor keeps
// entries whose true gradient is ~0 from turning round-off into huge ratios.

#include <functional>
#include <string>
#include <vector>

#include "radhar/core/rng.hpp"
#include "radhar/nn/attention.hpp"
#include "radhar/nn/heads.hpp"
#include "radhar/nn/mbconv.hpp"
#include "radhar/nn/network.hpp"
#include "radhar/train/loss.hpp"

namespace radhar::nn {

struct GradCheckOptions {
  double eps = 1e-6;
  double tolerance = 1e-4;
  double floor = 1e-3;
  std::size_t max_entries_per_tensor = 0;  // 0 checks every entry
  std::uint64_t seed = 1;
};

struct GradCheckResult {
  std::string module;
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  std::string worst;  // "<tensor>[index]" of the largest error
  bool passed = false;
};

using TensorD = Tensor4<double>;

namespace detail {

inline void fill_normal(TensorD& t, const CounterRng& rng, double scale = 1.0) {
  for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = scale * rng.normal(i);
}

inline TensorD random_tensor(std::size_t b, std::size_t c, std::size_t h, std::size_t w, const CounterRng& rng,
                             double scale = 1.0) {
  TensorD t(b, c, h, w);
  fill_normal(t, rng, scale);
  return t;
}

/// Random weights; BN running statistics get plausible values so inference
/// mode is not the identity.
inline void randomize(const ParamList<double>& params, const CounterRng& rng, double scale = 0.5) {
  for (Param<double>* p : params) {
    const CounterRng r = rng.derive(name_hash(p->name));
    const bool var = p->name.ends_with(".running_var");
    const bool gamma = p->name.ends_with(".gamma");
    for (std::size_t i = 0; i < p->size(); ++i) {
      if (var) p->value.data[i] = r.uniform(i, 0.5, 1.5);
      else if (gamma) p->value.data[i] = r.uniform(i, 0.5, 1.5);
      else p->value.data[i] = scale * r.normal(i);
    }
  }
}

struct Probe {
  std::string label;
  std::vector<double>* values;
  std::vector<double> analytic;
};

inline double projected(const TensorD& out, const TensorD& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * r.data[i];
  return s;
}

/// `forward` evaluates the module on the current inputs/params. `backward`
/// maps dL/dout to the input gradients (in `inputs` order) and accumulates
/// parameter gradients.
inline GradCheckResult check(const std::string& name, const std::vector<TensorD*>& inputs,
                             const ParamList<double>& params, const std::function<TensorD()>& forward,
                             const std::function<std::vector<TensorD>(const TensorD&)>& backward,
                             const GradCheckOptions& opt) {
  const CounterRng rng = CounterRng(opt.seed).derive(name_hash(name + "/projection"));
  TensorD out = forward();
  TensorD proj(out.B, out.C, out.H, out.W);
  fill_normal(proj, rng);

  for (Param<double>* p : params) p->zero_grad();
  forward();
  const auto dinputs = backward(proj);
  require(dinputs.size() == inputs.size(), Errc::ShapeMismatch, name + ": backward returned wrong input count");

  std::vector<Probe> probes;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    require(dinputs[i].same_shape(*inputs[i]), Errc::ShapeMismatch, name + ": input gradient shape");
    probes.push_back({"input" + std::to_string(i), &inputs[i]->data, dinputs[i].data});
  }
  for (Param<double>* p : params)
    if (p->trainable) probes.push_back({p->name, &p->value.data, p->grad.data});

  GradCheckResult res;
  res.module = name;
  const CounterRng pick = CounterRng(opt.seed).derive(name_hash(name + "/entries"));
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    Probe& pr = probes[pi];
    const std::size_t n = pr.values->size();
    const bool sample = opt.max_entries_per_tensor > 0 && n > opt.max_entries_per_tensor;
    const std::size_t count = sample ? opt.max_entries_per_tensor : n;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t idx =
          sample ? static_cast<std::size_t>(pick.derive(pi).uniform(k) * static_cast<double>(n)) % n : k;
      double& v = (*pr.values)[idx];
      const double saved = v;
      v = saved + opt.eps;
      const double up = projected(forward(), proj);
      v = saved - opt.eps;
      const double down = projected(forward(), proj);
      v = saved;
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double a = pr.analytic[idx];
      const double err = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), opt.floor});
      if (++res.entries == 1 || err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst = pr.label + "[" + std::to_string(idx) + "]";
      }
    }
  }
  res.passed = res.max_rel_error < opt.tolerance;
  return res;
}

template <class Layer>
GradCheckResult check_layer(const std::string& name, Layer& layer, TensorD x, const Ctx& ctx,
                            const GradCheckOptions& opt, const CounterRng& rng) {
  ParamList<double> params;
  if constexpr (requires { layer.params(params); }) {
    layer.params(params);
    randomize(params, rng.derive(1));
  }
  return check(
      name, {&x}, params, [&] { return layer.forward(x, ctx); },
      [&](const TensorD& d) { return std::vector<TensorD>{layer.backward(d)}; }, opt);
}

}  // namespace detail

inline const std::vector<std::string>& gradcheck_modules() {
  static const std::vector<std::string> names = {
      "conv",         "conv_stride2", "depthwise", "bn",    "bn_train",    "swish",      "relu",
      "sigmoid",      "cbam_channel", "cbam_spatial", "cbam", "mbconv",     "mbconv_stride2", "lstm",
      "lstm_head_c",  "rd_head",      "fusion",    "fusion_train", "cross_entropy", "network"};
  return names;
}

/// Runs one named check (see gradcheck_modules()).
inline GradCheckResult run_gradcheck(const std::string& module, const GradCheckOptions& opt = {}) {
  using namespace detail;
  const CounterRng rng = CounterRng(opt.seed).derive(name_hash(module));
  const Ctx eval{false, true}, train{true, true};

  if (module == "conv") {
    Conv2d<double> conv("conv", 3, 4, 3, 1, 1, true);
    return check_layer(module, conv, random_tensor(2, 3, 8, 8, rng), eval, opt, rng);
  }
  if (module == "conv_stride2") {
    Conv2d<double> conv("conv", 3, 4, 5, 2, 1, false);
    return check_layer(module, conv, random_tensor(2, 3, 9, 8, rng), eval, opt, rng);
  }
  if (module == "depthwise") {
    Conv2d<double> conv("dw", 4, 4, 3, 2, 4, false);
    return check_layer(module, conv, random_tensor(2, 4, 7, 7, rng), eval, opt, rng);
  }
  if (module == "bn" || module == "bn_train") {
    BatchNorm2d<double> bn("bn", 3);
    return check_layer(module, bn, random_tensor(2, 3, 5, 5, rng, 2.0), module == "bn" ? eval : train, opt, rng);
  }
  if (module == "swish" || module == "relu" || module == "sigmoid") {
    Activation<double> act(act_from_string(module));
    return check_layer(module, act, random_tensor(2, 3, 4, 4, rng, 2.0), eval, opt, rng);
  }
  if (module == "cbam_channel") {
    ChannelAttention<double> ca("ca", 20, 16);
    return check_layer(module, ca, random_tensor(2, 20, 5, 5, rng), eval, opt, rng);
  }
  if (module == "cbam_spatial") {
    SpatialAttention<double> sa("sa");
    return check_layer(module, sa, random_tensor(2, 3, 6, 6, rng), eval, opt, rng);
  }
  if (module == "cbam") {
    Cbam<double> cb("cbam", 8, 16);
    return check_layer(module, cb, random_tensor(2, 8, 6, 6, rng), eval, opt, rng);
  }
  if (module == "mbconv" || module == "mbconv_stride2") {
    ModelConfig cfg = preset("toy");
    const BlockSpec spec = module == "mbconv" ? BlockSpec{4, 4, 3, 2, 1} : BlockSpec{4, 6, 5, 2, 2};
    MBConv<double> block("block", spec, cfg);
    return check_layer(module, block, random_tensor(1, 4, 8, 8, rng), eval, opt, rng);
  }
  if (module == "lstm") {
    Lstm<double> lstm("lstm", 6, 8);
    return check_layer(module, lstm, random_tensor(2, 5, 6, 1, rng), eval, opt, rng);
  }
  if (module == "lstm_head_c") {
    LstmHead<double> head("head", 4, 8, LstmRule::C_only);
    return check_layer(module, head, random_tensor(2, 4, 3, 5, rng), eval, opt, rng);
  }
  if (module == "rd_head") {
    RdHead<double> head("rd", 6, 4);
    return check_layer(module, head, random_tensor(2, 3, 2, 5, rng), eval, opt, rng);
  }
  if (module == "fusion" || module == "fusion_train") {
    FusionHead<double> fusion("fusion", 12, 6, 0.2, 5);
    ParamList<double> params;
    fusion.params(params);
    randomize(params, rng.derive(1));
    TensorD a = random_tensor(2, 4, 1, 1, rng.derive(2)), b = random_tensor(2, 4, 1, 1, rng.derive(3)),
            c = random_tensor(2, 4, 1, 1, rng.derive(4));
    const Ctx ctx = module == "fusion" ? eval : train;
    return check(
        module, {&a, &b, &c}, params,
        [&] {
          fusion.dropout.reseed(5);  // same mask on every evaluation
          return fusion.forward(a, b, c, ctx);
        },
        [&](const TensorD& d) {
          const auto g = fusion.backward(d);
          return std::vector<TensorD>{g[0], g[1], g[2]};
        },
        opt);
  }
  if (module == "cross_entropy") {
    TensorD logits = random_tensor(3, 6, 1, 1, rng, 2.0);
    const std::vector<std::size_t> labels = {0, 5, 2};
    return check(
        module, {&logits}, {},
        [&] {
          TensorD out(1, 1, 1, 1);
          out.data[0] = train::cross_entropy(logits, labels).loss;
          return out;
        },
        [&](const TensorD& d) {
          TensorD g = train::cross_entropy(logits, labels).grad;
          for (double& v : g.data) v *= d.data[0];
          return std::vector<TensorD>{g};
        },
        opt);
  }
  if (module == "network") {
    Pecl<double> net(preset("toy"), 16, 16, 3);
    ParamList<double> params = net.params();
    randomize(params, rng.derive(1));
    TensorD a = random_tensor(2, 1, 16, 16, rng.derive(2)), b = random_tensor(2, 1, 16, 16, rng.derive(3)),
            c = random_tensor(2, 1, 16, 16, rng.derive(4));
    GradCheckOptions sampled = opt;
    if (sampled.max_entries_per_tensor == 0) sampled.max_entries_per_tensor = 12;
    // End to end through all three branches; the network API does not return
    // input gradients, so only parameters are probed.
    return check(
        module, {}, params, [&] { return net.forward(a, b, c, eval); },
        [&](const TensorD& d) {
          net.backward(d);
          return std::vector<TensorD>{};
        },
        sampled);
  }
  throw Error(Errc::InvalidConfig, "unknown gradcheck module '" + module + "'");
}

/// Expands "all", an exact module name, or a name prefix ("cbam", "bn", ...).
inline std::vector<std::string> select_gradcheck_modules(const std::string& spec) {
  if (spec == "all") return gradcheck_modules();
  std::vector<std::string> out;
  for (const auto& m : gradcheck_modules())
    if (m == spec || m.starts_with(spec + "_")) out.push_back(m);
  require(!out.empty(), Errc::InvalidConfig, "unknown gradcheck module '" + spec + "'");
  return out;
}

}  // namespace radhar::nn
