#pragma once

// Three-branch network: RT and DT backbones feed LSTM heads, the RD backbone
// feeds the linear + max-over-time head, and the fusion classifier combines
// the three 128-d features.

#include <array>
#include <string>

#include "radhar/nn/heads.hpp"
#include "radhar/nn/mbconv.hpp"

namespace radhar::nn {

/// Backbone output shape (C, H, W) for an input of h x w.
inline std::array<std::size_t, 3> feature_shape(const ModelConfig& cfg, std::size_t h, std::size_t w) {
  h = conv_out_size(h, 3, 2);
  w = conv_out_size(w, 3, 2);
  for (const auto& s : cfg.stages) {
    h = conv_out_size(h, s.kernel, s.stride);
    w = conv_out_size(w, s.kernel, s.stride);
  }
  return {cfg.head_channels, h, w};
}

template <class T>
class Pecl {
 public:
  Pecl(const ModelConfig& cfg, std::size_t input_h, std::size_t input_w, std::uint64_t seed)
      : cfg_(cfg), input_h_(input_h), input_w_(input_w), seed_(seed) {
    cfg.validate();
    require(cfg.attention != AttentionKind::SqueezeExcite, Errc::InvalidConfig,
            "the squeeze-excitation variant is forward-only and not trainable");
    const auto [c, h, w] = feature_shape(cfg, input_h, input_w);
    (void)w;
    rt = Backbone<T>("rt.backbone", cfg);
    dt = Backbone<T>("dt.backbone", cfg);
    rd = Backbone<T>("rd.backbone", cfg);
    rt_head = LstmHead<T>("rt.head", sequence_dim(cfg.lstm_rule, c, h), cfg.lstm_hidden, cfg.lstm_rule);
    dt_head = LstmHead<T>("dt.head", sequence_dim(cfg.lstm_rule, c, h), cfg.lstm_hidden, cfg.lstm_rule);
    rd_head = RdHead<T>("rd.head", c * h, cfg.rd_linear_out);
    fusion = FusionHead<T>("fusion", cfg.fused_dim, cfg.num_classes, cfg.dropout_p, CounterRng(seed).derive(0xd0).key());
    rt.init(seed);
    dt.init(seed);
    rd.init(seed);
    rt_head.init(seed);
    dt_head.init(seed);
    rd_head.init(seed);
    fusion.init(seed);
  }

  Backbone<T> rt, dt, rd;
  LstmHead<T> rt_head, dt_head;
  RdHead<T> rd_head;
  FusionHead<T> fusion;

  const ModelConfig& config() const { return cfg_; }
  std::size_t input_h() const { return input_h_; }
  std::size_t input_w() const { return input_w_; }
  std::uint64_t seed() const { return seed_; }

  ParamList<T> params() {
    ParamList<T> out;
    rt.params(out);
    dt.params(out);
    rd.params(out);
    rt_head.params(out);
    dt_head.params(out);
    rd_head.params(out);
    fusion.params(out);
    return out;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  /// Inputs are (B, in_channels, input_h, input_w); returns logits (B, K, 1, 1).
  Tensor4<T> forward(const Tensor4<T>& x_rt, const Tensor4<T>& x_dt, const Tensor4<T>& x_rd, const Ctx& ctx = {}) {
    for (const Tensor4<T>* x : {&x_rt, &x_dt, &x_rd})
      require_shape(*x, {x_rt.B, cfg_.in_channels, input_h_, input_w_}, "network input");
    const Tensor4<T> f_rt = rt_head.forward(rt.forward(x_rt, ctx), ctx);
    const Tensor4<T> f_dt = dt_head.forward(dt.forward(x_dt, ctx), ctx);
    const Tensor4<T> f_rd = rd_head.forward(rd.forward(x_rd, ctx), ctx);
    return fusion.forward(f_rt, f_dt, f_rd, ctx);
  }

  void backward(const Tensor4<T>& dlogits) {
    const auto d = fusion.backward(dlogits);
    rt.backward(rt_head.backward(d[0]));
    dt.backward(dt_head.backward(d[1]));
    rd.backward(rd_head.backward(d[2]));
  }

 private:
  ModelConfig cfg_;
  std::size_t input_h_ = 0, input_w_ = 0;
  std::uint64_t seed_ = 0;
};

}  // namespace radhar::nn
