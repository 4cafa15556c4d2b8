#pragma once

// MBConv block (expand -> depthwise -> attention -> project) and the
// EfficientNet-style backbone built from a ModelConfig.

#include <string>
#include <vector>

#include "radhar/nn/attention.hpp"
#include "radhar/nn/config.hpp"
#include "radhar/nn/layers.hpp"

namespace radhar::nn {

struct BlockSpec {
  std::size_t in = 0, out = 0, kernel = 3, expand = 1, stride = 1;
  std::size_t mid() const { return in * expand; }
  bool residual() const { return stride == 1 && in == out; }
};

inline std::size_t se_squeeze(std::size_t block_in, double ratio) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(block_in) * ratio));
}

/// Expansion 1x1 (skipped at expand = 1) -> BN -> act -> depthwise kxk/s ->
/// BN -> act -> attention -> projection 1x1 -> BN, plus identity shortcut
/// when stride = 1 and in = out.
template <class T>
class MBConv {
 public:
  MBConv() = default;
  MBConv(const std::string& name, const BlockSpec& spec, const ModelConfig& cfg)
      : spec_(spec), attention_(cfg.attention) {
    const std::size_t mid = spec.mid();
    if (spec.expand != 1) {
      expand_conv = Conv2d<T>(name + ".expand", spec.in, mid, 1);
      expand_bn = BatchNorm2d<T>(name + ".expand_bn", mid, cfg.bn_momentum, cfg.bn_eps);
      expand_act = Activation<T>(cfg.activation);
    }
    dw_conv = Conv2d<T>(name + ".depthwise", mid, mid, spec.kernel, spec.stride, mid);
    dw_bn = BatchNorm2d<T>(name + ".depthwise_bn", mid, cfg.bn_momentum, cfg.bn_eps);
    dw_act = Activation<T>(cfg.activation);
    if (attention_ == AttentionKind::Cbam) cbam = Cbam<T>(name + ".cbam", mid, cfg.cbam_reduction, cfg.mlp_activation);
    if (attention_ == AttentionKind::SqueezeExcite)
      se = SqueezeExcite<T>(name + ".se", mid, se_squeeze(spec.in, cfg.se_ratio), cfg.activation);
    project_conv = Conv2d<T>(name + ".project", mid, spec.out, 1);
    project_bn = BatchNorm2d<T>(name + ".project_bn", spec.out, cfg.bn_momentum, cfg.bn_eps);
  }

  Conv2d<T> expand_conv;
  BatchNorm2d<T> expand_bn;
  Activation<T> expand_act;
  Conv2d<T> dw_conv;
  BatchNorm2d<T> dw_bn;
  Activation<T> dw_act;
  Cbam<T> cbam;
  SqueezeExcite<T> se;
  Conv2d<T> project_conv;
  BatchNorm2d<T> project_bn;

  const BlockSpec& spec() const { return spec_; }

  void init(std::uint64_t seed) {
    if (has_expand()) expand_conv.init(seed);
    dw_conv.init(seed);
    if (attention_ == AttentionKind::Cbam) cbam.init(seed);
    if (attention_ == AttentionKind::SqueezeExcite) se.init(seed);
    project_conv.init(seed);
  }

  void params(ParamList<T>& out) {
    if (has_expand()) {
      expand_conv.params(out);
      expand_bn.params(out);
    }
    dw_conv.params(out);
    dw_bn.params(out);
    if (attention_ == AttentionKind::Cbam) cbam.params(out);
    if (attention_ == AttentionKind::SqueezeExcite) se.params(out);
    project_conv.params(out);
    project_bn.params(out);
  }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& ctx = {}) {
    require(x.C == spec_.in, Errc::ShapeMismatch, "mbconv: expected " + std::to_string(spec_.in) + " channels");
    Tensor4<T> h = has_expand() ? expand_act.forward(expand_bn.forward(expand_conv.forward(x, ctx), ctx), ctx) : x;
    h = dw_act.forward(dw_bn.forward(dw_conv.forward(h, ctx), ctx), ctx);
    if (attention_ == AttentionKind::Cbam) h = cbam.forward(h, ctx);
    if (attention_ == AttentionKind::SqueezeExcite) h = se.forward(h, ctx);
    h = project_bn.forward(project_conv.forward(h, ctx), ctx);
    if (spec_.residual()) add_into(h, x);
    return h;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    Tensor4<T> d = project_conv.backward(project_bn.backward(dy));
    if (attention_ == AttentionKind::Cbam) d = cbam.backward(d);
    if (attention_ == AttentionKind::SqueezeExcite) d = se.backward(d);
    d = dw_conv.backward(dw_bn.backward(dw_act.backward(d)));
    if (has_expand()) d = expand_conv.backward(expand_bn.backward(expand_act.backward(d)));
    if (spec_.residual()) add_into(d, dy);
    return d;
  }

 private:
  bool has_expand() const { return spec_.expand != 1; }

  BlockSpec spec_;
  AttentionKind attention_ = AttentionKind::Cbam;
};

/// Block list for a config: the first block of a stage takes the stage
/// stride and the previous width, later repeats are stride 1.
inline std::vector<std::vector<BlockSpec>> stage_blocks(const ModelConfig& cfg) {
  std::vector<std::vector<BlockSpec>> out;
  std::size_t in = cfg.stem_channels;
  for (const auto& s : cfg.stages) {
    std::vector<BlockSpec> blocks;
    for (std::size_t r = 0; r < s.repeats; ++r) {
      blocks.push_back({in, s.filters, s.kernel, s.expand, r == 0 ? s.stride : 1});
      in = s.filters;
    }
    out.push_back(std::move(blocks));
  }
  return out;
}

/// Stem 3x3/2 conv -> BN -> act, the MBConv stages, then head 1x1 conv ->
/// BN -> act. Records the output shape after stem, each stage and head.
template <class T>
class Backbone {
 public:
  Backbone() = default;
  Backbone(const std::string& name, const ModelConfig& cfg) : name_(name) {
    cfg.validate();
    stem_conv = Conv2d<T>(name + ".stem", cfg.in_channels, cfg.stem_channels, 3, 2);
    stem_bn = BatchNorm2d<T>(name + ".stem_bn", cfg.stem_channels, cfg.bn_momentum, cfg.bn_eps);
    stem_act = Activation<T>(cfg.activation);
    const auto stages = stage_blocks(cfg);
    for (std::size_t s = 0; s < stages.size(); ++s) {
      for (std::size_t r = 0; r < stages[s].size(); ++r)
        blocks.emplace_back(name + ".stage" + std::to_string(s + 1) + ".block" + std::to_string(r + 1), stages[s][r],
                            cfg);
      stage_end_.push_back(blocks.size());
    }
    const std::size_t last = cfg.stages.back().filters;
    head_conv = Conv2d<T>(name + ".head", last, cfg.head_channels, 1);
    head_bn = BatchNorm2d<T>(name + ".head_bn", cfg.head_channels, cfg.bn_momentum, cfg.bn_eps);
    head_act = Activation<T>(cfg.activation);
  }

  Conv2d<T> stem_conv;
  BatchNorm2d<T> stem_bn;
  Activation<T> stem_act;
  std::vector<MBConv<T>> blocks;
  Conv2d<T> head_conv;
  BatchNorm2d<T> head_bn;
  Activation<T> head_act;

  /// Shapes from the latest forward: stem, stage 1..n, head.
  const std::vector<std::array<std::size_t, 4>>& stage_shapes() const { return shapes_; }

  void init(std::uint64_t seed) {
    stem_conv.init(seed);
    for (auto& b : blocks) b.init(seed);
    head_conv.init(seed);
  }

  void params(ParamList<T>& out) {
    stem_conv.params(out);
    stem_bn.params(out);
    for (auto& b : blocks) b.params(out);
    head_conv.params(out);
    head_bn.params(out);
  }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& ctx = {}) {
    shapes_.clear();
    Tensor4<T> h = stem_act.forward(stem_bn.forward(stem_conv.forward(x, ctx), ctx), ctx);
    shapes_.push_back(h.shape());
    std::size_t next_end = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      h = blocks[i].forward(h, ctx);
      if (i + 1 == stage_end_[next_end]) {
        shapes_.push_back(h.shape());
        ++next_end;
      }
    }
    h = head_act.forward(head_bn.forward(head_conv.forward(h, ctx), ctx), ctx);
    shapes_.push_back(h.shape());
    return h;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    Tensor4<T> d = head_conv.backward(head_bn.backward(head_act.backward(dy)));
    for (std::size_t i = blocks.size(); i-- > 0;) d = blocks[i].backward(d);
    return stem_conv.backward(stem_bn.backward(stem_act.backward(d)));
  }

 private:
  std::string name_;
  std::vector<std::size_t> stage_end_;
  std::vector<std::array<std::size_t, 4>> shapes_;
};

}  // namespace radhar::nn
