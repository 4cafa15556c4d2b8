#pragma once

// Core layers with cached forward state and exact backward passes:
// Conv2d (grouped, so depthwise too), BatchNorm2d, elementwise activations,
// Linear and inverted Dropout. Backward calls accumulate into Param::grad.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "radhar/core/rng.hpp"
#include "radhar/nn/tensor.hpp"

namespace radhar::nn {

/// Forward-pass mode. `cache` keeps what backward needs; inference-only
/// callers can turn it off to save memory.
struct Ctx {
  bool train = false;
  bool cache = true;
};

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

inline std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride) {
  const std::size_t pad = (kernel - 1) / 2;
  return (in + 2 * pad - kernel) / stride + 1;
}

// ---------------------------------------------------------------------------

template <class T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride = 1,
         std::size_t groups = 1, bool bias = false)
      : in_(in), out_(out), k_(kernel), stride_(stride), groups_(groups), has_bias_(bias) {
    require(in % groups == 0 && out % groups == 0, Errc::InvalidConfig, name + ": channels not divisible by groups");
    require(kernel % 2 == 1 && stride >= 1, Errc::InvalidConfig, name + ": kernel must be odd, stride >= 1");
    weight = Param<T>(name + ".weight", out, in / groups, kernel, kernel);
    if (bias) this->bias = Param<T>(name + ".bias", out, 1, 1, 1);
  }

  Param<T> weight;
  Param<T> bias;

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel() const { return k_; }
  std::size_t stride() const { return stride_; }
  std::size_t groups() const { return groups_; }
  bool has_bias() const { return has_bias_; }

  void init(std::uint64_t seed) {
    const double fan_in = static_cast<double>((in_ / groups_) * k_ * k_);
    init_uniform(weight, std::sqrt(6.0 / fan_in), seed);
    if (has_bias_) init_uniform(bias, 1.0 / std::sqrt(fan_in), seed);
  }

  void params(ParamList<T>& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
  }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& ctx = {}) {
    require(x.C == in_, Errc::ShapeMismatch,
            weight.name + ": expected " + std::to_string(in_) + " input channels, got " + std::to_string(x.C));
    const std::size_t oh = conv_out_size(x.H, k_, stride_), ow = conv_out_size(x.W, k_, stride_);
    Tensor4<T> y(x.B, out_, oh, ow);
    const std::size_t cin_g = in_ / groups_, cout_g = out_ / groups_, kk = cin_g * k_ * k_, ohw = oh * ow;
    RowMat<T> col;
    for (std::size_t b = 0; b < x.B; ++b) {
      for (std::size_t g = 0; g < groups_; ++g) {
        Eigen::Map<const RowMat<T>> wg(weight.value.data.data() + g * cout_g * kk, cout_g, kk);
        Eigen::Map<RowMat<T>> yg(y.plane_ptr(b, g * cout_g), cout_g, ohw);
        if (pointwise()) {
          Eigen::Map<const RowMat<T>> xg(x.plane_ptr(b, g * cin_g), cin_g, ohw);
          yg.noalias() = wg * xg;
        } else {
          im2col(x, b, g * cin_g, cin_g, oh, ow, col);
          yg.noalias() = wg * col;
        }
      }
      if (has_bias_)
        for (std::size_t c = 0; c < out_; ++c) {
          T* p = y.plane_ptr(b, c);
          for (std::size_t i = 0; i < ohw; ++i) p[i] += bias.value.data[c];
        }
    }
    if (ctx.cache) x_ = x;
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    const Tensor4<T>& x = x_;
    const std::size_t oh = conv_out_size(x.H, k_, stride_), ow = conv_out_size(x.W, k_, stride_);
    require_shape(dy, {x.B, out_, oh, ow}, weight.name + " backward");
    const std::size_t cin_g = in_ / groups_, cout_g = out_ / groups_, kk = cin_g * k_ * k_, ohw = oh * ow;
    Tensor4<T> dx(x.B, x.C, x.H, x.W);
    RowMat<T> col, dcol;
    for (std::size_t b = 0; b < x.B; ++b) {
      for (std::size_t g = 0; g < groups_; ++g) {
        Eigen::Map<const RowMat<T>> wg(weight.value.data.data() + g * cout_g * kk, cout_g, kk);
        Eigen::Map<RowMat<T>> dwg(weight.grad.data.data() + g * cout_g * kk, cout_g, kk);
        Eigen::Map<const RowMat<T>> dyg(dy.plane_ptr(b, g * cout_g), cout_g, ohw);
        if (pointwise()) {
          Eigen::Map<const RowMat<T>> xg(x.plane_ptr(b, g * cin_g), cin_g, ohw);
          Eigen::Map<RowMat<T>> dxg(dx.plane_ptr(b, g * cin_g), cin_g, ohw);
          dwg.noalias() += dyg * xg.transpose();
          dxg.noalias() += wg.transpose() * dyg;
        } else {
          im2col(x, b, g * cin_g, cin_g, oh, ow, col);
          dwg.noalias() += dyg * col.transpose();
          dcol.noalias() = wg.transpose() * dyg;
          col2im(dcol, dx, b, g * cin_g, cin_g, oh, ow);
        }
      }
      if (has_bias_)
        for (std::size_t c = 0; c < out_; ++c) {
          const T* p = dy.plane_ptr(b, c);
          T s = 0;
          for (std::size_t i = 0; i < ohw; ++i) s += p[i];
          bias.grad.data[c] += s;
        }
    }
    return dx;
  }

 private:
  bool pointwise() const { return k_ == 1 && stride_ == 1; }

  void im2col(const Tensor4<T>& x, std::size_t b, std::size_t c0, std::size_t cin_g, std::size_t oh,
              std::size_t ow, RowMat<T>& col) const {
    const auto pad = static_cast<std::ptrdiff_t>((k_ - 1) / 2);
    col.resize(static_cast<Eigen::Index>(cin_g * k_ * k_), static_cast<Eigen::Index>(oh * ow));
    for (std::size_t ci = 0; ci < cin_g; ++ci) {
      const T* src = x.plane_ptr(b, c0 + ci);
      for (std::size_t kh = 0; kh < k_; ++kh)
        for (std::size_t kw = 0; kw < k_; ++kw) {
          T* dst = col.data() + ((ci * k_ + kh) * k_ + kw) * oh * ow;
          for (std::size_t r = 0; r < oh; ++r) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(r * stride_ + kh) - pad;
            const bool row_ok = ih >= 0 && ih < static_cast<std::ptrdiff_t>(x.H);
            for (std::size_t c = 0; c < ow; ++c) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(c * stride_ + kw) - pad;
              dst[r * ow + c] = row_ok && iw >= 0 && iw < static_cast<std::ptrdiff_t>(x.W)
                                    ? src[static_cast<std::size_t>(ih) * x.W + static_cast<std::size_t>(iw)]
                                    : T(0);
            }
          }
        }
    }
  }

  void col2im(const RowMat<T>& col, Tensor4<T>& dx, std::size_t b, std::size_t c0, std::size_t cin_g,
              std::size_t oh, std::size_t ow) const {
    const auto pad = static_cast<std::ptrdiff_t>((k_ - 1) / 2);
    for (std::size_t ci = 0; ci < cin_g; ++ci) {
      T* dst = dx.plane_ptr(b, c0 + ci);
      for (std::size_t kh = 0; kh < k_; ++kh)
        for (std::size_t kw = 0; kw < k_; ++kw) {
          const T* src = col.data() + ((ci * k_ + kh) * k_ + kw) * oh * ow;
          for (std::size_t r = 0; r < oh; ++r) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(r * stride_ + kh) - pad;
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(dx.H)) continue;
            for (std::size_t c = 0; c < ow; ++c) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(c * stride_ + kw) - pad;
              if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(dx.W))
                dst[static_cast<std::size_t>(ih) * dx.W + static_cast<std::size_t>(iw)] += src[r * ow + c];
            }
          }
        }
    }
  }

  std::size_t in_ = 0, out_ = 0, k_ = 1, stride_ = 1, groups_ = 1;
  bool has_bias_ = false;
  Tensor4<T> x_;
};

// ---------------------------------------------------------------------------

template <class T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, std::size_t channels, double momentum = 0.1, double eps = 1e-5)
      : channels_(channels), momentum_(momentum), eps_(eps) {
    gamma = Param<T>(name + ".gamma", 1, channels, 1, 1);
    beta = Param<T>(name + ".beta", 1, channels, 1, 1);
    running_mean = Param<T>(name + ".running_mean", 1, channels, 1, 1, false);
    running_var = Param<T>(name + ".running_var", 1, channels, 1, 1, false);
    gamma.value.fill(T(1));
    running_var.value.fill(T(1));
  }

  Param<T> gamma, beta, running_mean, running_var;

  std::size_t channels() const { return channels_; }

  void params(ParamList<T>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
    out.push_back(&running_mean);
    out.push_back(&running_var);
  }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& ctx = {}) {
    require(x.C == channels_, Errc::ShapeMismatch, gamma.name + ": channel mismatch");
    const std::size_t hw = x.plane();
    const double n = static_cast<double>(x.B * hw);
    Tensor4<T> y(x.B, x.C, x.H, x.W);
    Tensor4<T> xhat(x.B, x.C, x.H, x.W);
    inv_std_.assign(channels_, T(0));
    train_ = ctx.train;
    for (std::size_t c = 0; c < channels_; ++c) {
      double mean = 0.0, var = 0.0;
      if (ctx.train) {
        for (std::size_t b = 0; b < x.B; ++b) {
          const T* p = x.plane_ptr(b, c);
          for (std::size_t i = 0; i < hw; ++i) mean += p[i];
        }
        mean /= n;
        for (std::size_t b = 0; b < x.B; ++b) {
          const T* p = x.plane_ptr(b, c);
          for (std::size_t i = 0; i < hw; ++i) var += (p[i] - mean) * (p[i] - mean);
        }
        var /= n;
        const double unbiased = n > 1.0 ? var * n / (n - 1.0) : var;
        running_mean.value.data[c] =
            static_cast<T>((1.0 - momentum_) * running_mean.value.data[c] + momentum_ * mean);
        running_var.value.data[c] =
            static_cast<T>((1.0 - momentum_) * running_var.value.data[c] + momentum_ * unbiased);
      } else {
        mean = running_mean.value.data[c];
        var = running_var.value.data[c];
      }
      const T inv = static_cast<T>(1.0 / std::sqrt(var + eps_));
      inv_std_[c] = inv;
      const T g = gamma.value.data[c], bt = beta.value.data[c], m = static_cast<T>(mean);
      for (std::size_t b = 0; b < x.B; ++b) {
        const T* p = x.plane_ptr(b, c);
        T* xh = xhat.plane_ptr(b, c);
        T* q = y.plane_ptr(b, c);
        for (std::size_t i = 0; i < hw; ++i) {
          xh[i] = (p[i] - m) * inv;
          q[i] = g * xh[i] + bt;
        }
      }
    }
    if (ctx.cache) xhat_ = std::move(xhat);
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    require(dy.same_shape(xhat_), Errc::ShapeMismatch, gamma.name + " backward: shape mismatch");
    const std::size_t hw = dy.plane();
    const T n = static_cast<T>(dy.B * hw);
    Tensor4<T> dx(dy.B, dy.C, dy.H, dy.W);
    for (std::size_t c = 0; c < channels_; ++c) {
      T sum_dy = 0, sum_dy_xhat = 0;
      for (std::size_t b = 0; b < dy.B; ++b) {
        const T* d = dy.plane_ptr(b, c);
        const T* xh = xhat_.plane_ptr(b, c);
        for (std::size_t i = 0; i < hw; ++i) {
          sum_dy += d[i];
          sum_dy_xhat += d[i] * xh[i];
        }
      }
      gamma.grad.data[c] += sum_dy_xhat;
      beta.grad.data[c] += sum_dy;
      const T scale = gamma.value.data[c] * inv_std_[c];
      for (std::size_t b = 0; b < dy.B; ++b) {
        const T* d = dy.plane_ptr(b, c);
        const T* xh = xhat_.plane_ptr(b, c);
        T* o = dx.plane_ptr(b, c);
        for (std::size_t i = 0; i < hw; ++i)
          o[i] = train_ ? scale / n * (n * d[i] - sum_dy - xh[i] * sum_dy_xhat) : scale * d[i];
      }
    }
    return dx;
  }

 private:
  std::size_t channels_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  bool train_ = false;
  std::vector<T> inv_std_;
  Tensor4<T> xhat_;
};

// ---------------------------------------------------------------------------

enum class ActKind { Identity, ReLU, Swish, Sigmoid };

inline std::string to_string(ActKind k) {
  switch (k) {
    case ActKind::Identity: return "identity";
    case ActKind::ReLU: return "relu";
    case ActKind::Swish: return "swish";
    case ActKind::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

inline ActKind act_from_string(const std::string& s) {
  for (ActKind k : {ActKind::Identity, ActKind::ReLU, ActKind::Swish, ActKind::Sigmoid})
    if (to_string(k) == s) return k;
  throw Error(Errc::InvalidConfig, "unknown activation '" + s + "'");
}

template <class T>
class Activation {
 public:
  Activation() = default;
  explicit Activation(ActKind kind) : kind_(kind) {}

  ActKind kind() const { return kind_; }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& ctx = {}) {
    Tensor4<T> y = x;
    for (T& v : y.data) v = apply(v);
    if (ctx.cache) x_ = x;
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    require(dy.same_shape(x_), Errc::ShapeMismatch, "activation backward: shape mismatch");
    Tensor4<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= derivative(x_.data[i]);
    return dx;
  }

  T apply(T v) const {
    switch (kind_) {
      case ActKind::Identity: return v;
      case ActKind::ReLU: return v > T(0) ? v : T(0);
      case ActKind::Swish: return v * sigmoid(v);
      case ActKind::Sigmoid: return sigmoid(v);
    }
    return v;
  }

  T derivative(T v) const {
    switch (kind_) {
      case ActKind::Identity: return T(1);
      case ActKind::ReLU: return v > T(0) ? T(1) : T(0);
      case ActKind::Swish: {
        const T s = sigmoid(v);
        return s + v * s * (T(1) - s);
      }
      case ActKind::Sigmoid: {
        const T s = sigmoid(v);
        return s * (T(1) - s);
      }
    }
    return T(1);
  }

 private:
  ActKind kind_ = ActKind::Identity;
  Tensor4<T> x_;
};

// ---------------------------------------------------------------------------

/// y = x W^T + b on rows of an (N, in, 1, 1) tensor.
template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, bool bias = true)
      : in_(in), out_(out), has_bias_(bias) {
    weight = Param<T>(name + ".weight", out, in, 1, 1);
    if (bias) this->bias = Param<T>(name + ".bias", out, 1, 1, 1);
  }

  Param<T> weight;
  Param<T> bias;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  void init(std::uint64_t seed) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    init_uniform(weight, bound, seed);
    if (has_bias_) init_uniform(bias, bound, seed);
  }

  void params(ParamList<T>& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
  }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& ctx = {}) {
    require(x.C * x.H * x.W == in_, Errc::ShapeMismatch,
            weight.name + ": expected " + std::to_string(in_) + " features, got " + std::to_string(x.C * x.H * x.W));
    Tensor4<T> y(x.B, out_, 1, 1);
    Eigen::Map<const RowMat<T>> xm(x.data.data(), x.B, in_);
    Eigen::Map<const RowMat<T>> wm(weight.value.data.data(), out_, in_);
    Eigen::Map<RowMat<T>> ym(y.data.data(), x.B, out_);
    ym.noalias() = xm * wm.transpose();
    if (has_bias_)
      for (std::size_t n = 0; n < x.B; ++n)
        for (std::size_t o = 0; o < out_; ++o) y.data[n * out_ + o] += bias.value.data[o];
    if (ctx.cache) x_ = x;
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    require_shape(dy, {x_.B, out_, 1, 1}, weight.name + " backward");
    Eigen::Map<const RowMat<T>> xm(x_.data.data(), x_.B, in_);
    Eigen::Map<const RowMat<T>> wm(weight.value.data.data(), out_, in_);
    Eigen::Map<const RowMat<T>> dym(dy.data.data(), dy.B, out_);
    Eigen::Map<RowMat<T>> dwm(weight.grad.data.data(), out_, in_);
    dwm.noalias() += dym.transpose() * xm;
    if (has_bias_)
      for (std::size_t n = 0; n < dy.B; ++n)
        for (std::size_t o = 0; o < out_; ++o) bias.grad.data[o] += dy.data[n * out_ + o];
    Tensor4<T> dx(x_.B, x_.C, x_.H, x_.W);
    Eigen::Map<RowMat<T>> dxm(dx.data.data(), x_.B, in_);
    dxm.noalias() = dym * wm;
    return dx;
  }

 private:
  std::size_t in_ = 0, out_ = 0;
  bool has_bias_ = true;
  Tensor4<T> x_;
};

// ---------------------------------------------------------------------------

/// Inverted dropout: kept units are scaled by 1/(1-p) in train mode, identity
/// otherwise. Each train-mode call draws a fresh mask from stream `calls`.
template <class T>
class Dropout {
 public:
  Dropout() = default;
  Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed) {
    require(p >= 0.0 && p < 1.0, Errc::InvalidConfig, "dropout p must be in [0, 1)");
  }

  double p() const { return p_; }
  std::uint64_t calls() const { return calls_; }
  void reseed(std::uint64_t seed, std::uint64_t calls = 0) {
    rng_ = CounterRng(seed);
    calls_ = calls;
  }

  Tensor4<T> forward(const Tensor4<T>& x, const Ctx& ctx = {}) {
    active_ = ctx.train && p_ > 0.0;
    if (!active_) return x;
    const CounterRng stream = rng_.derive(calls_++);
    const T scale = static_cast<T>(1.0 / (1.0 - p_));
    mask_.assign(x.size(), T(0));
    Tensor4<T> y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = stream.uniform(i) >= p_ ? scale : T(0);
      y.data[i] *= mask_[i];
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    if (!active_) return dy;
    Tensor4<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
  }

 private:
  double p_ = 0.0;
  CounterRng rng_{0};
  std::uint64_t calls_ = 0;
  bool active_ = false;
  std::vector<T> mask_;
};

}  // namespace radhar::nn
