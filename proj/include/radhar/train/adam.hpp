#pragma once

// Adam with a step-decay learning-rate schedule.

#include <cmath>
#include <vector>

#include "radhar/nn/tensor.hpp"

namespace radhar::train {

struct AdamConfig {
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_factor = 0.1;
  std::size_t decay_every_epochs = 30;
};

/// lr0 * decay_factor^floor(epoch / decay_every); epochs count from 0.
inline double learning_rate(const AdamConfig& c, std::size_t epoch) {
  return c.lr0 * std::pow(c.decay_factor, static_cast<double>(epoch / c.decay_every_epochs));
}

/// One Adam update of a flat tensor; `t` is the 1-based step count.
template <class T>
void adam_update(std::vector<T>& value, const std::vector<T>& grad, std::vector<double>& m, std::vector<double>& v,
                 std::size_t t, double lr, const AdamConfig& c) {
  require(value.size() == grad.size() && m.size() == value.size() && v.size() == value.size(), Errc::ShapeMismatch,
          "adam: parameter, gradient and moment sizes differ");
  require(t >= 1, Errc::InvalidConfig, "adam: step count starts at 1");
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double mhat = m[i] / bc1, vhat = v[i] / bc2;
    value[i] = static_cast<T>(static_cast<double>(value[i]) - lr * mhat / (std::sqrt(vhat) + c.eps));
  }
}

/// Optimizer state for a parameter list; non-trainable entries are skipped.
template <class T>
class Adam {
 public:
  Adam(nn::ParamList<T> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    for (const auto* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  const AdamConfig& config() const { return cfg_; }
  std::size_t steps() const { return t_; }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step(double lr) {
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i]->trainable) adam_update(params_[i]->value.data, params_[i]->grad.data, m_[i], v_[i], t_, lr, cfg_);
  }

 private:
  nn::ParamList<T> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace radhar::train
