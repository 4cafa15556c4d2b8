#pragma once

// Network configuration and presets.
//
//   b0              EfficientNet-B0 stage table with the canonical repeats
//                   (1, 2, 2, 3, 3, 4, 1), CBAM in every block
//   table1_literal  same stage table, one block per stage
//   toy             <= 8 channels everywhere, nominal input 32 x 32
//   baseline_se     single B0 branch with squeeze-excitation and a
//                   1280 -> 1000 classifier (parameter audit only)

#include <string>
#include <vector>

#include "json.hpp"
#include "radhar/core/error.hpp"
#include "radhar/nn/layers.hpp"

namespace radhar::nn {

struct StageConfig {
  std::size_t filters = 16;
  std::size_t kernel = 3;
  std::size_t expand = 1;
  std::size_t stride = 1;
  std::size_t repeats = 1;
  bool operator==(const StageConfig&) const = default;
};

enum class LstmRule { HxC, C_only };
enum class AttentionKind { Cbam, SqueezeExcite, None };

inline std::string to_string(LstmRule r) { return r == LstmRule::HxC ? "hxc" : "c"; }

inline LstmRule lstm_rule_from_string(const std::string& s) {
  if (s == "hxc" || s == "HxC") return LstmRule::HxC;
  if (s == "c" || s == "C_only" || s == "c_only") return LstmRule::C_only;
  throw Error(Errc::InvalidConfig, "unknown lstm rule '" + s + "' (expected hxc or c)");
}

inline std::string to_string(AttentionKind a) {
  switch (a) {
    case AttentionKind::Cbam: return "cbam";
    case AttentionKind::SqueezeExcite: return "se";
    case AttentionKind::None: return "none";
  }
  return "unknown";
}

inline AttentionKind attention_from_string(const std::string& s) {
  for (AttentionKind a : {AttentionKind::Cbam, AttentionKind::SqueezeExcite, AttentionKind::None})
    if (to_string(a) == s) return a;
  throw Error(Errc::InvalidConfig, "unknown attention '" + s + "'");
}

struct ModelConfig {
  std::string preset = "b0";
  std::size_t in_channels = 3;
  std::size_t input_size = 224;
  std::size_t stem_channels = 32;
  std::size_t head_channels = 1280;
  std::vector<StageConfig> stages;
  std::size_t cbam_reduction = 16;
  std::size_t lstm_hidden = 128;
  std::size_t rd_linear_out = 128;
  std::size_t fused_dim = 384;
  std::size_t num_classes = 6;
  double dropout_p = 0.2;
  LstmRule lstm_rule = LstmRule::HxC;
  ActKind activation = ActKind::Swish;
  ActKind mlp_activation = ActKind::ReLU;
  AttentionKind attention = AttentionKind::Cbam;
  double se_ratio = 0.25;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  void validate() const {
    require(!stages.empty(), Errc::InvalidConfig, "model config has no stages");
    require(in_channels >= 1 && stem_channels >= 1 && head_channels >= 1 && input_size >= 1, Errc::InvalidConfig,
            "channel counts and input size must be >= 1");
    for (const auto& s : stages)
      require(s.filters >= 1 && s.kernel % 2 == 1 && s.expand >= 1 && s.stride >= 1 && s.repeats >= 1,
              Errc::InvalidConfig, "invalid stage entry");
    require(cbam_reduction >= 1 && lstm_hidden >= 1 && rd_linear_out >= 1 && num_classes >= 1, Errc::InvalidConfig,
            "head sizes must be >= 1");
    require(fused_dim == 2 * lstm_hidden + rd_linear_out, Errc::InvalidConfig,
            "fused_dim must equal 2 * lstm_hidden + rd_linear_out");
    require(dropout_p >= 0.0 && dropout_p < 1.0, Errc::InvalidConfig, "dropout_p must be in [0, 1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline std::vector<StageConfig> b0_stages(bool canonical_repeats) {
  std::vector<StageConfig> s = {{16, 3, 1, 1, 1},  {24, 3, 6, 2, 2},  {40, 5, 6, 2, 2}, {80, 3, 6, 2, 3},
                                {112, 5, 6, 1, 3}, {192, 5, 6, 2, 4}, {320, 3, 6, 1, 1}};
  if (!canonical_repeats)
    for (auto& st : s) st.repeats = 1;
  return s;
}

inline ModelConfig preset(const std::string& name) {
  ModelConfig c;
  c.preset = name;
  if (name == "b0") {
    c.stages = b0_stages(true);
  } else if (name == "table1_literal") {
    c.stages = b0_stages(false);
  } else if (name == "toy") {
    c.in_channels = 1;
    c.input_size = 32;
    c.stem_channels = 8;
    c.head_channels = 8;
    c.stages = {{4, 3, 1, 1, 1}, {6, 3, 2, 2, 1}, {8, 3, 2, 2, 1}, {8, 3, 2, 2, 1}};
  } else if (name == "baseline_se") {
    c.stages = b0_stages(true);
    c.attention = AttentionKind::SqueezeExcite;
    c.num_classes = 1000;
  } else {
    throw Error(Errc::InvalidConfig, "unknown preset '" + name + "' (b0, table1_literal, toy, baseline_se)");
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : c.stages)
    stages.push_back({{"filters", s.filters}, {"kernel", s.kernel}, {"expand", s.expand}, {"stride", s.stride},
                      {"repeats", s.repeats}});
  return {{"preset", c.preset},
          {"in_channels", c.in_channels},
          {"input_size", c.input_size},
          {"stem_channels", c.stem_channels},
          {"head_channels", c.head_channels},
          {"stages", stages},
          {"cbam_reduction", c.cbam_reduction},
          {"lstm_hidden", c.lstm_hidden},
          {"rd_linear_out", c.rd_linear_out},
          {"fused_dim", c.fused_dim},
          {"num_classes", c.num_classes},
          {"dropout_p", c.dropout_p},
          {"lstm_feature_dim_rule", to_string(c.lstm_rule)},
          {"activation", to_string(c.activation)},
          {"mlp_activation", to_string(c.mlp_activation)},
          {"attention", to_string(c.attention)},
          {"se_ratio", c.se_ratio},
          {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps}};
}

/// Starts from the named preset (default b0) and overrides any given field.
inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c = preset(j.value("preset", std::string("b0")));
    c.in_channels = j.value("in_channels", c.in_channels);
    c.input_size = j.value("input_size", c.input_size);
    c.stem_channels = j.value("stem_channels", c.stem_channels);
    c.head_channels = j.value("head_channels", c.head_channels);
    if (j.contains("stages")) {
      c.stages.clear();
      for (const auto& s : j.at("stages"))
        c.stages.push_back({s.at("filters").get<std::size_t>(), s.at("kernel").get<std::size_t>(),
                            s.at("expand").get<std::size_t>(), s.at("stride").get<std::size_t>(),
                            s.value("repeats", std::size_t{1})});
    }
    c.cbam_reduction = j.value("cbam_reduction", c.cbam_reduction);
    c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
    c.rd_linear_out = j.value("rd_linear_out", c.rd_linear_out);
    c.fused_dim = j.value("fused_dim", c.fused_dim);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
    if (j.contains("lstm_feature_dim_rule")) c.lstm_rule = lstm_rule_from_string(j.at("lstm_feature_dim_rule"));
    if (j.contains("activation")) c.activation = act_from_string(j.at("activation"));
    if (j.contains("mlp_activation")) c.mlp_activation = act_from_string(j.at("mlp_activation"));
    if (j.contains("attention")) c.attention = attention_from_string(j.at("attention"));
    c.se_ratio = j.value("se_ratio", c.se_ratio);
    c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
    c.bn_eps = j.value("bn_eps", c.bn_eps);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("model config json: ") + e.what());
  }
}

}  // namespace radhar::nn
