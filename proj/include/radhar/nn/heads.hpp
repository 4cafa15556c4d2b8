#pragma once

// Feature-map to sequence reshaping and the three heads: LSTM (RT/DT),
// per-step linear + max over time (RD), and the fusion classifier.

#include <string>

#include "radhar/nn/config.hpp"
#include "radhar/nn/layers.hpp"
#include "radhar/nn/lstm.hpp"

namespace radhar::nn {

inline std::size_t sequence_dim(LstmRule rule, std::size_t channels, std::size_t height) {
  return rule == LstmRule::HxC ? channels * height : channels;
}

/// (B, C, H, W) -> (B, T = W, D, 1). Under HxC, feature d = h * C + c; under
/// C_only, feature c is the mean over H.
template <class T>
Tensor4<T> sequence_reshape(const Tensor4<T>& f, LstmRule rule) {
  const std::size_t D = sequence_dim(rule, f.C, f.H);
  Tensor4<T> seq(f.B, f.W, D, 1);
  for (std::size_t b = 0; b < f.B; ++b)
    for (std::size_t t = 0; t < f.W; ++t) {
      T* row = seq.data.data() + (b * f.W + t) * D;
      for (std::size_t c = 0; c < f.C; ++c)
        for (std::size_t h = 0; h < f.H; ++h) {
          if (rule == LstmRule::HxC) row[h * f.C + c] = f(b, c, h, t);
          else row[c] += f(b, c, h, t) / static_cast<T>(f.H);
        }
    }
  return seq;
}

/// Adjoint of sequence_reshape; under HxC it is also the exact inverse.
template <class T>
Tensor4<T> sequence_unreshape(const Tensor4<T>& seq, LstmRule rule, const std::array<std::size_t, 4>& fshape) {
  const auto [B, C, H, W] = fshape;
  require_shape(seq, {B, W, sequence_dim(rule, C, H), 1}, "sequence_unreshape");
  const std::size_t D = seq.H;
  Tensor4<T> f(B, C, H, W);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < W; ++t) {
      const T* row = seq.data.data() + (b * W + t) * D;
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t h = 0; h < H; ++h)
          f(b, c, h, t) = rule == LstmRule::HxC ? row[h * C + c] : row[c] / static_cast<T>(H);
    }
  return f;
}

template <class T>
class LstmHead {
 public:
  LstmHead() = default;
  LstmHead(const std::string& name, std::size_t feature_dim, std::size_t hidden, LstmRule rule)
      : rule_(rule), lstm(name + ".lstm", feature_dim, hidden) {}

  Lstm<T> lstm;

  void init(std::uint64_t seed) { lstm.init(seed); }
  void params(ParamList<T>& out) { lstm.params(out); }

  Tensor4<T> forward(const Tensor4<T>& f, const Ctx& ctx = {}) {
    shape_ = f.shape();
    return lstm.forward(sequence_reshape(f, rule_), ctx);
  }

  Tensor4<T> backward(const Tensor4<T>& dh) { return sequence_unreshape(lstm.backward(dh), rule_, shape_); }

 private:
  LstmRule rule_ = LstmRule::HxC;
  std::array<std::size_t, 4> shape_{};
};

/// HxC reshape, Linear(D -> out) at every time step, then max over time. The
/// lowest time index wins ties and receives the gradient.
template <class T>
class RdHead {
 public:
  RdHead() = default;
  RdHead(const std::string& name, std::size_t feature_dim, std::size_t out) : linear(name + ".linear", feature_dim, out) {}

  Linear<T> linear;

  void init(std::uint64_t seed) { linear.init(seed); }
  void params(ParamList<T>& out) { linear.params(out); }

  Tensor4<T> forward(const Tensor4<T>& f, const Ctx& ctx = {}) {
    shape_ = f.shape();
    const Tensor4<T> seq = sequence_reshape(f, LstmRule::HxC);
    const std::size_t B = seq.B, T_ = seq.C, D = seq.H, O = linear.out_features();
    Tensor4<T> rows = seq;
    rows.B = B * T_;
    rows.C = D;
    rows.H = 1;
    const Tensor4<T> y = linear.forward(rows, ctx);
    Tensor4<T> out(B, O, 1, 1);
    argmax_.assign(B * O, 0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < O; ++o) {
        std::size_t best = 0;
        for (std::size_t t = 1; t < T_; ++t)
          if (y.data[(b * T_ + t) * O + o] > y.data[(b * T_ + best) * O + o]) best = t;
        argmax_[b * O + o] = best;
        out.data[b * O + o] = y.data[(b * T_ + best) * O + o];
      }
    steps_ = T_;
    return out;
  }

  Tensor4<T> backward(const Tensor4<T>& dout) {
    const std::size_t B = shape_[0], O = linear.out_features();
    require_shape(dout, {B, O, 1, 1}, "rd head backward");
    Tensor4<T> dy(B * steps_, O, 1, 1);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < O; ++o) dy.data[(b * steps_ + argmax_[b * O + o]) * O + o] = dout.data[b * O + o];
    Tensor4<T> drows = linear.backward(dy);
    drows.B = B;
    drows.C = steps_;
    drows.H = linear.in_features();
    return sequence_unreshape(drows, LstmRule::HxC, shape_);
  }

 private:
  std::array<std::size_t, 4> shape_{};
  std::size_t steps_ = 0;
  std::vector<std::size_t> argmax_;
};

/// [RT | DT | RD] -> dropout -> Linear(fused -> classes).
template <class T>
class FusionHead {
 public:
  FusionHead() = default;
  FusionHead(const std::string& name, std::size_t fused, std::size_t classes, double dropout_p, std::uint64_t seed)
      : dropout(dropout_p, seed), linear(name + ".linear", fused, classes) {}

  Dropout<T> dropout;
  Linear<T> linear;

  void init(std::uint64_t seed) { linear.init(seed); }
  void params(ParamList<T>& out) { linear.params(out); }

  Tensor4<T> forward(const Tensor4<T>& rt, const Tensor4<T>& dt, const Tensor4<T>& rd, const Ctx& ctx = {}) {
    require(rt.B == dt.B && dt.B == rd.B, Errc::ShapeMismatch, "fusion: batch sizes differ");
    widths_ = {rt.C * rt.H * rt.W, dt.C * dt.H * dt.W, rd.C * rd.H * rd.W};
    const std::size_t total = widths_[0] + widths_[1] + widths_[2];
    require(total == linear.in_features(), Errc::ShapeMismatch,
            "fusion: expected " + std::to_string(linear.in_features()) + " concatenated features, got " +
                std::to_string(total));
    Tensor4<T> cat(rt.B, total, 1, 1);
    for (std::size_t b = 0; b < rt.B; ++b) {
      T* row = cat.data.data() + b * total;
      std::copy_n(rt.data.data() + b * widths_[0], widths_[0], row);
      std::copy_n(dt.data.data() + b * widths_[1], widths_[1], row + widths_[0]);
      std::copy_n(rd.data.data() + b * widths_[2], widths_[2], row + widths_[0] + widths_[1]);
    }
    return linear.forward(dropout.forward(cat, ctx), ctx);
  }

  /// Returns the gradients for the three inputs, each (B, width, 1, 1).
  std::array<Tensor4<T>, 3> backward(const Tensor4<T>& dlogits) {
    const Tensor4<T> dcat = dropout.backward(linear.backward(dlogits));
    const std::size_t B = dcat.B, total = dcat.C;
    std::array<Tensor4<T>, 3> out;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      out[k] = Tensor4<T>(B, widths_[k], 1, 1);
      for (std::size_t b = 0; b < B; ++b)
        std::copy_n(dcat.data.data() + b * total + offset, widths_[k], out[k].data.data() + b * widths_[k]);
      offset += widths_[k];
    }
    return out;
  }

 private:
  std::array<std::size_t, 3> widths_{};
};

}  // namespace radhar::nn
