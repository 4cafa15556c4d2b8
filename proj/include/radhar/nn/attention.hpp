#pragma once

// CBAM channel/spatial attention and the squeeze-excitation block used by the
// single-branch baseline.

#include <string>

#include "radhar/nn/layers.hpp"

namespace radhar::nn {

inline std::size_t cbam_hidden(std::size_t channels, std::size_t reduction) {
  return std::max<std::size_t>(1, (channels + reduction - 1) / reduction);
}

/// M_c = sigmoid(MLP(avgpool(F)) + MLP(maxpool(F))), pooling over H x W. The
/// shared MLP runs once on the stacked (2B, C) avg/max rows.
template <class T>
class ChannelAttention {
 public:
  ChannelAttention() = default;
  ChannelAttention(const std::string& name, std::size_t channels, std::size_t reduction = 16,
                   ActKind mlp_act = ActKind::ReLU)
      : channels_(channels),
        fc1(name + ".fc1", channels, cbam_hidden(channels, reduction)),
        act(mlp_act),
        fc2(name + ".fc2", cbam_hidden(channels, reduction), channels) {}

  Linear<T> fc1;
  Activation<T> act;
  Linear<T> fc2;

  void init(std::uint64_t seed) {
    fc1.init(seed);
    fc2.init(seed);
  }

  void params(ParamList<T>& out) {
    fc1.params(out);
    fc2.params(out);
  }

  /// Returns M_c with shape (B, C, 1, 1).
  Tensor4<T> forward(const Tensor4<T>& f, const Ctx& ctx = {}) {
    require(f.C == channels_ && f.H * f.W >= 1, Errc::ShapeMismatch, "channel attention: shape mismatch");
    const std::size_t B = f.B, C = f.C, hw = f.plane();
    Tensor4<T> pooled(2 * B, C, 1, 1);
    argmax_.assign(B * C, 0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const T* p = f.plane_ptr(b, c);
        T sum = 0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < hw; ++i) {
          sum += p[i];
          if (p[i] > p[best]) best = i;
        }
        pooled.data[b * C + c] = sum / static_cast<T>(hw);
        pooled.data[(B + b) * C + c] = p[best];
        argmax_[b * C + c] = best;
      }
    const Tensor4<T> s = fc2.forward(act.forward(fc1.forward(pooled, ctx), ctx), ctx);
    Tensor4<T> m(B, C, 1, 1);
    for (std::size_t i = 0; i < B * C; ++i) m.data[i] = sigmoid(s.data[i] + s.data[B * C + i]);
    if (ctx.cache) {
      m_ = m;
      shape_ = f.shape();
    }
    return m;
  }

  /// Gradient w.r.t. F given dL/dM_c.
  Tensor4<T> backward(const Tensor4<T>& dm) {
    const auto [B, C, H, W] = shape_;
    require_shape(dm, {B, C, 1, 1}, "channel attention backward");
    Tensor4<T> ds(2 * B, C, 1, 1);
    for (std::size_t i = 0; i < B * C; ++i) {
      const T g = dm.data[i] * m_.data[i] * (T(1) - m_.data[i]);
      ds.data[i] = g;
      ds.data[B * C + i] = g;
    }
    const Tensor4<T> dpooled = fc1.backward(act.backward(fc2.backward(ds)));
    Tensor4<T> df(B, C, H, W);
    const std::size_t hw = H * W;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        T* p = df.plane_ptr(b, c);
        const T avg_g = dpooled.data[b * C + c] / static_cast<T>(hw);
        for (std::size_t i = 0; i < hw; ++i) p[i] = avg_g;
        p[argmax_[b * C + c]] += dpooled.data[(B + b) * C + c];
      }
    return df;
  }

 private:
  std::size_t channels_ = 0;
  std::vector<std::size_t> argmax_;
  Tensor4<T> m_;
  std::array<std::size_t, 4> shape_{};
};

/// M_s = sigmoid(conv7x7([avg_c(F), max_c(F)])), padding 3, with bias.
template <class T>
class SpatialAttention {
 public:
  SpatialAttention() = default;
  explicit SpatialAttention(const std::string& name, std::size_t kernel = 7)
      : conv(name + ".conv", 2, 1, kernel, 1, 1, true) {}

  Conv2d<T> conv;

  void init(std::uint64_t seed) { conv.init(seed); }
  void params(ParamList<T>& out) { conv.params(out); }

  /// Returns M_s with shape (B, 1, H, W).
  Tensor4<T> forward(const Tensor4<T>& f, const Ctx& ctx = {}) {
    require(f.C >= 1, Errc::ShapeMismatch, "spatial attention: no channels");
    const std::size_t B = f.B, C = f.C, hw = f.plane();
    Tensor4<T> pooled(B, 2, f.H, f.W);
    argmax_.assign(B * hw, 0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < hw; ++i) {
        T sum = 0, best = f.plane_ptr(b, 0)[i];
        std::size_t arg = 0;
        for (std::size_t c = 0; c < C; ++c) {
          const T v = f.plane_ptr(b, c)[i];
          sum += v;
          if (v > best) best = v, arg = c;
        }
        pooled.plane_ptr(b, 0)[i] = sum / static_cast<T>(C);
        pooled.plane_ptr(b, 1)[i] = best;
        argmax_[b * hw + i] = arg;
      }
    Tensor4<T> m = conv.forward(pooled, ctx);
    for (T& v : m.data) v = sigmoid(v);
    if (ctx.cache) {
      m_ = m;
      shape_ = f.shape();
    }
    return m;
  }

  Tensor4<T> backward(const Tensor4<T>& dm) {
    const auto [B, C, H, W] = shape_;
    require_shape(dm, {B, 1, H, W}, "spatial attention backward");
    Tensor4<T> dz = dm;
    for (std::size_t i = 0; i < dz.size(); ++i) dz.data[i] *= m_.data[i] * (T(1) - m_.data[i]);
    const Tensor4<T> dpooled = conv.backward(dz);
    Tensor4<T> df(B, C, H, W);
    const std::size_t hw = H * W;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < hw; ++i) {
        const T avg_g = dpooled.plane_ptr(b, 0)[i] / static_cast<T>(C);
        for (std::size_t c = 0; c < C; ++c) df.plane_ptr(b, c)[i] = avg_g;
        df.plane_ptr(b, argmax_[b * hw + i])[i] += dpooled.plane_ptr(b, 1)[i];
      }
    return df;
  }

 private:
  std::vector<std::size_t> argmax_;
  Tensor4<T> m_;
  std::array<std::size_t, 4> shape_{};
};

/// F' = M_s(G) * G with G = M_c(F) * F.
template <class T>
class Cbam {
 public:
  Cbam() = default;
  Cbam(const std::string& name, std::size_t channels, std::size_t reduction = 16, ActKind mlp_act = ActKind::ReLU)
      : channel(name + ".channel", channels, reduction, mlp_act), spatial(name + ".spatial") {}

  ChannelAttention<T> channel;
  SpatialAttention<T> spatial;

  void init(std::uint64_t seed) {
    channel.init(seed);
    spatial.init(seed);
  }

  void params(ParamList<T>& out) {
    channel.params(out);
    spatial.params(out);
  }

  Tensor4<T> forward(const Tensor4<T>& f, const Ctx& ctx = {}) {
    const Tensor4<T> mc = channel.forward(f, ctx);
    Tensor4<T> g = f;
    const std::size_t hw = f.plane();
    for (std::size_t b = 0; b < f.B; ++b)
      for (std::size_t c = 0; c < f.C; ++c) {
        T* p = g.plane_ptr(b, c);
        const T s = mc.data[b * f.C + c];
        for (std::size_t i = 0; i < hw; ++i) p[i] *= s;
      }
    const Tensor4<T> ms = spatial.forward(g, ctx);
    Tensor4<T> out = g;
    for (std::size_t b = 0; b < f.B; ++b)
      for (std::size_t c = 0; c < f.C; ++c) {
        T* p = out.plane_ptr(b, c);
        const T* s = ms.plane_ptr(b, 0);
        for (std::size_t i = 0; i < hw; ++i) p[i] *= s[i];
      }
    if (ctx.cache) {
      f_ = f;
      g_ = std::move(g);
      mc_ = mc;
      ms_ = ms;
    }
    return out;
  }

  Tensor4<T> backward(const Tensor4<T>& dout) {
    require(dout.same_shape(f_), Errc::ShapeMismatch, "cbam backward: shape mismatch");
    const std::size_t B = f_.B, C = f_.C, hw = f_.plane();
    Tensor4<T> dms(B, 1, f_.H, f_.W);
    Tensor4<T> dg = dout;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const T* d = dout.plane_ptr(b, c);
        const T* g = g_.plane_ptr(b, c);
        const T* s = ms_.plane_ptr(b, 0);
        T* acc = dms.plane_ptr(b, 0);
        T* o = dg.plane_ptr(b, c);
        for (std::size_t i = 0; i < hw; ++i) {
          acc[i] += d[i] * g[i];
          o[i] = d[i] * s[i];
        }
      }
    add_into(dg, spatial.backward(dms));
    Tensor4<T> dmc(B, C, 1, 1);
    Tensor4<T> df = dg;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const T* d = dg.plane_ptr(b, c);
        const T* f = f_.plane_ptr(b, c);
        T* o = df.plane_ptr(b, c);
        const T s = mc_.data[b * C + c];
        T acc = 0;
        for (std::size_t i = 0; i < hw; ++i) {
          acc += d[i] * f[i];
          o[i] = d[i] * s;
        }
        dmc.data[b * C + c] = acc;
      }
    add_into(df, channel.backward(dmc));
    return df;
  }

 private:
  Tensor4<T> f_, g_, mc_, ms_;
};

/// Squeeze-excitation (forward only): x * sigmoid(W2 act(W1 avgpool(x))).
template <class T>
class SqueezeExcite {
 public:
  SqueezeExcite() = default;
  SqueezeExcite(const std::string& name, std::size_t channels, std::size_t squeeze, ActKind act_kind)
      : reduce(name + ".reduce", channels, squeeze, 1, 1, 1, true),
        expand(name + ".expand", squeeze, channels, 1, 1, 1, true),
        act(act_kind) {}

  Conv2d<T> reduce, expand;
  Activation<T> act;

  void init(std::uint64_t seed) {
    reduce.init(seed);
    expand.init(seed);
  }

  void params(ParamList<T>& out) {
    reduce.params(out);
    expand.params(out);
  }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& = {}) {
    const Ctx none{false, false};
    Tensor4<T> pooled(x.B, x.C, 1, 1);
    for (std::size_t b = 0; b < x.B; ++b)
      for (std::size_t c = 0; c < x.C; ++c) {
        const T* p = x.plane_ptr(b, c);
        T s = 0;
        for (std::size_t i = 0; i < x.plane(); ++i) s += p[i];
        pooled.data[b * x.C + c] = s / static_cast<T>(x.plane());
      }
    const Tensor4<T> gate = expand.forward(act.forward(reduce.forward(pooled, none), none), none);
    Tensor4<T> y = x;
    for (std::size_t b = 0; b < x.B; ++b)
      for (std::size_t c = 0; c < x.C; ++c) {
        T* p = y.plane_ptr(b, c);
        const T s = sigmoid(gate.data[b * x.C + c]);
        for (std::size_t i = 0; i < x.plane(); ++i) p[i] *= s;
      }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>&) {
    throw Error(Errc::InvalidConfig, "squeeze-excitation is forward-only");
  }
};

}  // namespace radhar::nn
