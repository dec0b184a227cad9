#pragma once

#include <map>
#include <string>
#include <vector>

#include "vomix/tensor.hpp"

namespace vomix {

struct ViTConfig {
  Index image_size = 224;
  Index patch_size = 16;
  Index channels = 3;
  Index depth = 12;
  Index dim = 768;
  Index heads = 12;
  double mlp_ratio = 4.0;
  Index classes = 1000;
  bool class_token = true;

  Index grid() const { return image_size / patch_size; }
  Index patch_tokens() const { return grid() * grid(); }
  /// Initial token count: patches plus the optional class token.
  Index tokens() const { return patch_tokens() + (class_token ? 1 : 0); }
  Index patch_dim() const { return channels * patch_size * patch_size; }
  Index mlp_hidden() const { return static_cast<Index>(static_cast<double>(dim) * mlp_ratio); }
  Index head_dim() const { return dim / heads; }

  /// Throws ConfigError if the shape is inconsistent.
  void check() const;

  friend bool operator==(const ViTConfig&, const ViTConfig&) = default;
};

/// Built-in model shapes, keyed by name (vit-b16-224, vit-l16-512, ...).
const std::map<std::string, ViTConfig>& presets();
ViTConfig preset(const std::string& name);

/// Indices that never get pruned by default: {0} with a class token, else none.
std::vector<Index> default_protected(const ViTConfig& cfg);

}  // namespace vomix
