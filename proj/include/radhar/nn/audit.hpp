#pragma once

// Static parameter and multiply-accumulate accounting. The walk follows the
// architecture definition without building any tensors. One MAC counts as
// one FLOP; elementwise work (BN, activations, attention products, pooling)
// is reported separately and not included in `macs`.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "radhar/nn/config.hpp"
#include "radhar/nn/heads.hpp"
#include "radhar/nn/mbconv.hpp"
#include "radhar/nn/network.hpp"

namespace radhar::nn {

struct ModuleCount {
  std::string name;
  std::uint64_t trainable = 0;
  std::uint64_t non_trainable = 0;  // BN running statistics
  std::uint64_t macs = 0;
  std::uint64_t elementwise = 0;
  std::array<std::size_t, 4> out_shape{};

  std::uint64_t total() const { return trainable + non_trainable; }

  ModuleCount& operator+=(const ModuleCount& o) {
    trainable += o.trainable;
    non_trainable += o.non_trainable;
    macs += o.macs;
    elementwise += o.elementwise;
    return *this;
  }
};

struct Audit {
  std::string preset;
  LstmRule rule = LstmRule::HxC;
  std::size_t input_size = 0;
  std::vector<ModuleCount> modules;  // top-level modules in order
  std::vector<ModuleCount> detail;   // per-stage rows of the first backbone

  ModuleCount totals() const {
    ModuleCount t;
    t.name = "total";
    for (const auto& m : modules) t += m;
    return t;
  }
};

namespace detail {

inline void add_conv(ModuleCount& m, std::size_t in, std::size_t out, std::size_t k, std::size_t groups,
                     std::size_t out_hw, bool bias) {
  m.trainable += out * (in / groups) * k * k + (bias ? out : 0);
  m.macs += static_cast<std::uint64_t>(out_hw) * out * (in / groups) * k * k;
}

inline void add_bn(ModuleCount& m, std::size_t c, std::size_t hw) {
  m.trainable += 2 * c;
  m.non_trainable += 2 * c;
  m.elementwise += 2ull * c * hw;
}

inline void add_act(ModuleCount& m, std::size_t c, std::size_t hw) { m.elementwise += 1ull * c * hw; }

/// Walks one backbone; appends per-stage rows to `rows` and returns the total.
inline ModuleCount walk_backbone(const ModelConfig& cfg, std::size_t h, std::size_t w, const std::string& name,
                                 std::vector<ModuleCount>* rows) {
  ModuleCount total;
  total.name = name;
  ModuleCount stem;
  stem.name = name + ".stem";
  h = conv_out_size(h, 3, 2);
  w = conv_out_size(w, 3, 2);
  add_conv(stem, cfg.in_channels, cfg.stem_channels, 3, 1, h * w, false);
  add_bn(stem, cfg.stem_channels, h * w);
  add_act(stem, cfg.stem_channels, h * w);
  stem.out_shape = {1, cfg.stem_channels, h, w};
  total += stem;
  if (rows) rows->push_back(stem);

  const auto stages = stage_blocks(cfg);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    ModuleCount row;
    row.name = name + ".stage" + std::to_string(s + 1);
    for (const auto& b : stages[s]) {
      const std::size_t mid = b.mid();
      const std::size_t in_hw = h * w;
      if (b.expand != 1) {
        add_conv(row, b.in, mid, 1, 1, in_hw, false);
        add_bn(row, mid, in_hw);
        add_act(row, mid, in_hw);
      }
      h = conv_out_size(h, b.kernel, b.stride);
      w = conv_out_size(w, b.kernel, b.stride);
      const std::size_t hw = h * w;
      add_conv(row, mid, mid, b.kernel, mid, hw, false);
      add_bn(row, mid, hw);
      add_act(row, mid, hw);
      if (cfg.attention == AttentionKind::Cbam) {
        const std::size_t hid = cbam_hidden(mid, cfg.cbam_reduction);
        row.trainable += mid * hid + hid + hid * mid + mid;
        row.macs += 2ull * (mid * hid + hid * mid);  // avg and max paths
        add_conv(row, 2, 1, 7, 1, hw, true);
        row.elementwise += 4ull * mid * hw + 2ull * mid;  // pools and the two products
      } else if (cfg.attention == AttentionKind::SqueezeExcite) {
        const std::size_t sq = se_squeeze(b.in, cfg.se_ratio);
        row.trainable += mid * sq + sq + sq * mid + mid;
        row.macs += 2ull * mid * sq;
        row.elementwise += 2ull * mid * hw;
      }
      add_conv(row, mid, b.out, 1, 1, hw, false);
      add_bn(row, b.out, hw);
      if (b.residual()) row.elementwise += 1ull * b.out * hw;
      row.out_shape = {1, b.out, h, w};
    }
    total += row;
    if (rows) rows->push_back(row);
  }

  ModuleCount head;
  head.name = name + ".head";
  add_conv(head, cfg.stages.back().filters, cfg.head_channels, 1, 1, h * w, false);
  add_bn(head, cfg.head_channels, h * w);
  add_act(head, cfg.head_channels, h * w);
  head.out_shape = {1, cfg.head_channels, h, w};
  total += head;
  if (rows) rows->push_back(head);
  total.out_shape = head.out_shape;
  return total;
}

inline ModuleCount walk_lstm(const std::string& name, std::size_t d, std::size_t hidden, std::size_t steps) {
  ModuleCount m;
  m.name = name;
  m.trainable = 4ull * hidden * (d + hidden) + 4ull * hidden;
  m.macs = static_cast<std::uint64_t>(steps) * 4ull * hidden * (d + hidden);
  m.elementwise = static_cast<std::uint64_t>(steps) * 9ull * hidden;
  m.out_shape = {1, hidden, 1, 1};
  return m;
}

inline ModuleCount walk_linear(const std::string& name, std::size_t in, std::size_t out, std::size_t rows) {
  ModuleCount m;
  m.name = name;
  m.trainable = 1ull * in * out + out;
  m.macs = static_cast<std::uint64_t>(rows) * in * out;
  m.out_shape = {1, out, 1, 1};
  return m;
}

}  // namespace detail

/// Full three-branch network at a square input of `input_size`.
inline Audit audit_network(const ModelConfig& cfg, std::size_t input_size) {
  cfg.validate();
  Audit a;
  a.preset = cfg.preset;
  a.rule = cfg.lstm_rule;
  a.input_size = input_size;
  for (const char* branch : {"rt", "dt", "rd"})
    a.modules.push_back(detail::walk_backbone(cfg, input_size, input_size, std::string(branch) + ".backbone",
                                              a.detail.empty() ? &a.detail : nullptr));
  const auto [c, h, w] = feature_shape(cfg, input_size, input_size);
  const std::size_t d = sequence_dim(cfg.lstm_rule, c, h);
  a.modules.push_back(detail::walk_lstm("rt.head", d, cfg.lstm_hidden, w));
  a.modules.push_back(detail::walk_lstm("dt.head", d, cfg.lstm_hidden, w));
  auto rd = detail::walk_linear("rd.head", c * h, cfg.rd_linear_out, w);
  rd.elementwise = 1ull * w * cfg.rd_linear_out;
  a.modules.push_back(rd);
  a.modules.push_back(detail::walk_linear("fusion", cfg.fused_dim, cfg.num_classes, 1));
  return a;
}

/// Single backbone with global average pooling and a classifier of
/// cfg.num_classes outputs (the squeeze-excitation baseline).
inline Audit audit_single_branch(const ModelConfig& cfg, std::size_t input_size) {
  cfg.validate();
  Audit a;
  a.preset = cfg.preset;
  a.rule = cfg.lstm_rule;
  a.input_size = input_size;
  a.modules.push_back(detail::walk_backbone(cfg, input_size, input_size, "backbone", &a.detail));
  a.modules.push_back(detail::walk_linear("classifier", cfg.head_channels, cfg.num_classes, 1));
  return a;
}

inline nlohmann::json to_json(const ModuleCount& m) {
  return {{"name", m.name},
          {"trainable", m.trainable},
          {"non_trainable", m.non_trainable},
          {"total", m.total()},
          {"macs", m.macs},
          {"elementwise", m.elementwise},
          {"out_shape", m.out_shape}};
}

inline nlohmann::json to_json(const Audit& a) {
  nlohmann::json mods = nlohmann::json::array(), det = nlohmann::json::array();
  for (const auto& m : a.modules) mods.push_back(to_json(m));
  for (const auto& m : a.detail) det.push_back(to_json(m));
  return {{"preset", a.preset},
          {"lstm_feature_dim_rule", to_string(a.rule)},
          {"input_size", a.input_size},
          {"modules", mods},
          {"backbone_detail", det},
          {"totals", to_json(a.totals())}};
}

/// Reference totals for the full network and the single-branch baseline.
inline constexpr double kReferenceParams = 23.42e6;
inline constexpr double kReferenceMacs = 1324.82e6;
inline constexpr double kReferenceBaselineTrainable = 5.29e6;
inline constexpr double kReferenceBaselineTotal = 5.33e6;

struct Reconciliation {
  Audit hxc, c_only, baseline;
  // Relative to the reference; trainable counts, with totals including BN
  // running statistics alongside.
  double hxc_param_delta = 0.0, c_only_param_delta = 0.0;
  double hxc_total_delta = 0.0, c_only_total_delta = 0.0;
  double hxc_mac_delta = 0.0, c_only_mac_delta = 0.0;
  double baseline_delta = 0.0;
  bool baseline_ok = false;  // within 2%
  bool params_ok = false;    // either rule within 20%
};

inline Reconciliation reconcile(const ModelConfig& cfg) {
  Reconciliation r;
  ModelConfig h = cfg, c = cfg;
  h.lstm_rule = LstmRule::HxC;
  c.lstm_rule = LstmRule::C_only;
  r.hxc = audit_network(h, cfg.input_size);
  r.c_only = audit_network(c, cfg.input_size);
  ModelConfig base = cfg;
  base.attention = AttentionKind::SqueezeExcite;
  base.num_classes = 1000;
  base.preset = cfg.preset + "+se_baseline";
  r.baseline = audit_single_branch(base, cfg.input_size);
  auto rel = [](double got, double want) { return (got - want) / want; };
  r.hxc_param_delta = rel(static_cast<double>(r.hxc.totals().trainable), kReferenceParams);
  r.c_only_param_delta = rel(static_cast<double>(r.c_only.totals().trainable), kReferenceParams);
  r.hxc_total_delta = rel(static_cast<double>(r.hxc.totals().total()), kReferenceParams);
  r.c_only_total_delta = rel(static_cast<double>(r.c_only.totals().total()), kReferenceParams);
  r.hxc_mac_delta = rel(static_cast<double>(r.hxc.totals().macs), kReferenceMacs);
  r.c_only_mac_delta = rel(static_cast<double>(r.c_only.totals().macs), kReferenceMacs);
  r.baseline_delta = rel(static_cast<double>(r.baseline.totals().trainable), kReferenceBaselineTrainable);
  r.baseline_ok = std::fabs(r.baseline_delta) <= 0.02;
  r.params_ok = std::fabs(r.hxc_param_delta) <= 0.20 || std::fabs(r.c_only_param_delta) <= 0.20;
  return r;
}

}  // namespace radhar::nn
