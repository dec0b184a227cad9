#pragma once

#include <array>
#include <map>
#include <string>

#include "vomix/strategy.hpp"
#include "vomix/vit_config.hpp"

namespace vomix {

/// `key = value` lines; blank lines and text after '#' are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

/// Overrides model fields present in `kv` (preset, image_size, patch_size,
/// channels, depth, dim, heads, mlp_ratio, classes, class_token).
ViTConfig apply_model_config(const KeyValues& kv, ViTConfig base);

/// Strategy keys mirror the enum names: selection, random_seed, fanout,
/// feature, metric, query_mix, attn_mix.
StrategySpec strategy_from_config(const KeyValues& kv);

/// Per-channel image normalization, x' = (x / 255 - mean) / std.
struct Normalization {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};
};

/// Reads `mean = a,b,c` and `std = a,b,c`.
Normalization normalization_from_config(const KeyValues& kv);

}  // namespace vomix
