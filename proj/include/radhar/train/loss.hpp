#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "radhar/nn/tensor.hpp"

namespace radhar::train {

template <class T>
struct LossResult {
  T loss = 0;
  nn::Tensor4<T> grad;  // dL/dlogits
};

/// Mean over the batch of -log softmax(logits)[label]; gradient
/// (softmax - onehot) / B. Logits are (B, K, 1, 1).
template <class T>
LossResult<T> cross_entropy(const nn::Tensor4<T>& logits, const std::vector<std::size_t>& labels) {
  const std::size_t B = logits.B, K = logits.C * logits.H * logits.W;
  require(labels.size() == B, Errc::ShapeMismatch, "cross_entropy: label count differs from batch size");
  require(B >= 1 && K >= 1, Errc::ShapeMismatch, "cross_entropy: empty logits");
  LossResult<T> r;
  r.grad = nn::Tensor4<T>(logits.B, logits.C, logits.H, logits.W);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    require(labels[b] < K, Errc::LabelOutOfRange,
            "label " + std::to_string(labels[b]) + " outside [0, " + std::to_string(K) + ")");
    const T* z = logits.data.data() + b * K;
    const T zmax = *std::max_element(z, z + K);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(static_cast<double>(z[k] - zmax));
    const double log_norm = static_cast<double>(zmax) + std::log(sum);
    total += log_norm - static_cast<double>(z[labels[b]]);
    T* g = r.grad.data.data() + b * K;
    for (std::size_t k = 0; k < K; ++k) {
      const double p = std::exp(static_cast<double>(z[k]) - log_norm);
      g[k] = static_cast<T>((p - (k == labels[b] ? 1.0 : 0.0)) / static_cast<double>(B));
    }
  }
  r.loss = static_cast<T>(total / static_cast<double>(B));
  return r;
}

template <class T>
std::vector<std::size_t> argmax_rows(const nn::Tensor4<T>& logits) {
  const std::size_t K = logits.C * logits.H * logits.W;
  std::vector<std::size_t> out(logits.B);
  for (std::size_t b = 0; b < logits.B; ++b) {
    const T* z = logits.data.data() + b * K;
    out[b] = static_cast<std::size_t>(std::max_element(z, z + K) - z);
  }
  return out;
}

}  // namespace radhar::train
