#pragma once

// Dense NCHW tensor and named parameters. Two-dimensional activations use
// (N, D, 1, 1); sequences use (B, T, D, 1).

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "radhar/core/error.hpp"
#include "radhar/core/rng.hpp"

namespace radhar::nn {

template <class T>
struct Tensor4 {
  std::size_t B = 0, C = 0, H = 0, W = 0;
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(std::size_t b, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
      : B(b), C(c), H(h), W(w), data(b * c * h * w, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return H * W; }
  std::array<std::size_t, 4> shape() const { return {B, C, H, W}; }
  bool same_shape(const Tensor4& o) const { return shape() == o.shape(); }

  T& operator()(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
    return data[((b * C + c) * H + h) * W + w];
  }
  const T& operator()(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
    return data[((b * C + c) * H + h) * W + w];
  }
  T* plane_ptr(std::size_t b, std::size_t c) { return data.data() + (b * C + c) * H * W; }
  const T* plane_ptr(std::size_t b, std::size_t c) const { return data.data() + (b * C + c) * H * W; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  template <class U>
  Tensor4<U> cast() const {
    Tensor4<U> out(B, C, H, W);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const Tensor4&) const = default;
};

inline std::string shape_string(const std::array<std::size_t, 4>& s) {
  return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," + std::to_string(s[2]) + "," +
         std::to_string(s[3]) + ")";
}

template <class T>
void require_shape(const Tensor4<T>& t, std::array<std::size_t, 4> want, std::string_view what) {
  require(t.shape() == want, Errc::ShapeMismatch,
          std::string(what) + ": expected " + shape_string(want) + ", got " + shape_string(t.shape()));
}

template <class T>
void add_into(Tensor4<T>& dst, const Tensor4<T>& src) {
  require(dst.same_shape(src), Errc::ShapeMismatch, "add: shape mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

template <class T>
struct Param {
  std::string name;
  Tensor4<T> value;
  Tensor4<T> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, std::size_t b, std::size_t c, std::size_t h, std::size_t w, bool train = true)
      : name(std::move(n)), value(b, c, h, w), grad(b, c, h, w), trainable(train) {}

  void zero_grad() { grad.fill(T(0)); }
  std::size_t size() const { return value.size(); }
};

template <class T>
using ParamList = std::vector<Param<T>*>;

/// 64-bit FNV-1a; keys per-parameter init streams by name.
inline std::uint64_t name_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
void init_uniform(Param<T>& p, double bound, std::uint64_t seed) {
  const CounterRng rng = CounterRng(seed).derive(name_hash(p.name));
  for (std::size_t i = 0; i < p.value.size(); ++i) p.value.data[i] = static_cast<T>(rng.uniform(i, -bound, bound));
}

}  // namespace radhar::nn
