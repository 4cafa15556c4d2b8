#pragma once

// Single-layer LSTM returning the last hidden state. Gate blocks are stacked
// in the order input, forget, cell, output:
//   z = W_ih x_t + W_hh h_{t-1} + b
//   i = s(z_i), f = s(z_f), g = tanh(z_g), o = s(z_o)
//   c_t = f c_{t-1} + i g,  h_t = o tanh(c_t),  h_0 = c_0 = 0

#include <string>
#include <vector>

#include "radhar/nn/layers.hpp"

namespace radhar::nn {

template <class T>
class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, std::size_t input, std::size_t hidden) : d_(input), h_(hidden) {
    w_ih = Param<T>(name + ".w_ih", 4 * hidden, input, 1, 1);
    w_hh = Param<T>(name + ".w_hh", 4 * hidden, hidden, 1, 1);
    bias = Param<T>(name + ".bias", 4 * hidden, 1, 1, 1);
  }

  Param<T> w_ih, w_hh, bias;

  std::size_t input_size() const { return d_; }
  std::size_t hidden_size() const { return h_; }

  /// U(-1/sqrt(H), 1/sqrt(H)) for every weight and bias.
  void init(std::uint64_t seed) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(h_));
    init_uniform(w_ih, bound, seed);
    init_uniform(w_hh, bound, seed);
    init_uniform(bias, bound, seed);
  }

  void params(ParamList<T>& out) {
    out.push_back(&w_ih);
    out.push_back(&w_hh);
    out.push_back(&bias);
  }

  /// seq (B, T, D, 1) -> h_T (B, H, 1, 1).
  Tensor4<T> forward(const Tensor4<T>& seq, const Ctx& ctx = {}) {
    require(seq.H == d_ && seq.W == 1 && seq.C >= 1, Errc::ShapeMismatch,
            w_ih.name + ": expected (B, T, " + std::to_string(d_) + ", 1), got " + shape_string(seq.shape()));
    const std::size_t B = seq.B, T_ = seq.C, H = h_;
    Eigen::Map<const RowMat<T>> wih(w_ih.value.data.data(), 4 * H, d_);
    Eigen::Map<const RowMat<T>> whh(w_hh.value.data.data(), 4 * H, H);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value.data.data(), 4 * H);

    RowMat<T> h = RowMat<T>::Zero(B, H), c = RowMat<T>::Zero(B, H);
    gates_.assign(T_, RowMat<T>());
    cells_.assign(T_ + 1, RowMat<T>::Zero(B, H));
    hiddens_.assign(T_ + 1, RowMat<T>::Zero(B, H));
    RowMat<T> x(B, d_);
    for (std::size_t t = 0; t < T_; ++t) {
      for (std::size_t bb = 0; bb < B; ++bb)
        for (std::size_t k = 0; k < d_; ++k) x(bb, k) = seq.data[(bb * T_ + t) * d_ + k];
      RowMat<T> z = x * wih.transpose() + h * whh.transpose();
      z.rowwise() += b;
      for (std::size_t bb = 0; bb < B; ++bb)
        for (std::size_t j = 0; j < 4 * H; ++j) {
          T& v = z(bb, j);
          v = (j >= 2 * H && j < 3 * H) ? std::tanh(v) : sigmoid(v);
        }
      for (std::size_t bb = 0; bb < B; ++bb)
        for (std::size_t j = 0; j < H; ++j) {
          c(bb, j) = z(bb, H + j) * c(bb, j) + z(bb, j) * z(bb, 2 * H + j);
          h(bb, j) = z(bb, 3 * H + j) * std::tanh(c(bb, j));
        }
      if (ctx.cache) {
        gates_[t] = std::move(z);
        cells_[t + 1] = c;
        hiddens_[t + 1] = h;
      }
    }
    if (ctx.cache) seq_ = seq;
    Tensor4<T> out(B, H, 1, 1);
    for (std::size_t bb = 0; bb < B; ++bb)
      for (std::size_t j = 0; j < H; ++j) out.data[bb * H + j] = h(bb, j);
    return out;
  }

  /// dL/dh_T -> dL/dseq, accumulating weight gradients through all steps.
  Tensor4<T> backward(const Tensor4<T>& dh_last) {
    const std::size_t B = seq_.B, T_ = seq_.C, H = h_;
    require_shape(dh_last, {B, H, 1, 1}, w_ih.name + " backward");
    Eigen::Map<const RowMat<T>> wih(w_ih.value.data.data(), 4 * H, d_);
    Eigen::Map<const RowMat<T>> whh(w_hh.value.data.data(), 4 * H, H);
    Eigen::Map<RowMat<T>> dwih(w_ih.grad.data.data(), 4 * H, d_);
    Eigen::Map<RowMat<T>> dwhh(w_hh.grad.data.data(), 4 * H, H);

    RowMat<T> dh(B, H), dc = RowMat<T>::Zero(B, H), dz(B, 4 * H), x(B, d_);
    for (std::size_t bb = 0; bb < B; ++bb)
      for (std::size_t j = 0; j < H; ++j) dh(bb, j) = dh_last.data[bb * H + j];
    Tensor4<T> dseq(seq_.B, seq_.C, seq_.H, seq_.W);
    for (std::size_t t = T_; t-- > 0;) {
      const RowMat<T>& g = gates_[t];
      const RowMat<T>& c_prev = cells_[t];
      const RowMat<T>& c_now = cells_[t + 1];
      for (std::size_t bb = 0; bb < B; ++bb)
        for (std::size_t j = 0; j < H; ++j) {
          const T i = g(bb, j), f = g(bb, H + j), gg = g(bb, 2 * H + j), o = g(bb, 3 * H + j);
          const T tc = std::tanh(c_now(bb, j));
          const T dct = dc(bb, j) + dh(bb, j) * o * (T(1) - tc * tc);
          dz(bb, j) = dct * gg * i * (T(1) - i);
          dz(bb, H + j) = dct * c_prev(bb, j) * f * (T(1) - f);
          dz(bb, 2 * H + j) = dct * i * (T(1) - gg * gg);
          dz(bb, 3 * H + j) = dh(bb, j) * tc * o * (T(1) - o);
          dc(bb, j) = dct * f;
        }
      for (std::size_t bb = 0; bb < B; ++bb)
        for (std::size_t k = 0; k < d_; ++k) x(bb, k) = seq_.data[(bb * T_ + t) * d_ + k];
      dwih.noalias() += dz.transpose() * x;
      dwhh.noalias() += dz.transpose() * hiddens_[t];
      for (std::size_t bb = 0; bb < B; ++bb)
        for (std::size_t j = 0; j < 4 * H; ++j) bias.grad.data[j] += dz(bb, j);
      const RowMat<T> dx = dz * wih;
      for (std::size_t bb = 0; bb < B; ++bb)
        for (std::size_t k = 0; k < d_; ++k) dseq.data[(bb * T_ + t) * d_ + k] = dx(bb, k);
      dh = dz * whh;
    }
    return dseq;
  }

 private:
  std::size_t d_ = 0, h_ = 0;
  Tensor4<T> seq_;
  std::vector<RowMat<T>> gates_, cells_, hiddens_;
};

}  // namespace radhar::nn
