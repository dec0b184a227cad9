#include "vomix/vit_config.hpp"

namespace vomix {

void ViTConfig::check() const {
  if (patch_size <= 0 || image_size <= 0 || image_size % patch_size != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) +
                      " is not divisible by patch_size " + std::to_string(patch_size));
  }
  if (heads <= 0 || dim <= 0 || dim % heads != 0) {
    throw ConfigError("heads " + std::to_string(heads) + " does not divide dim " +
                      std::to_string(dim));
  }
  if (depth < 1) throw ConfigError("depth must be at least 1");
  if (channels < 1 || classes < 1 || mlp_hidden() < 1) {
    throw ConfigError("channels, classes and mlp hidden width must be positive");
  }
}

const std::map<std::string, ViTConfig>& presets() {
  // {image, patch, channels, depth, dim, heads, mlp_ratio, classes, class_token}
  static const std::map<std::string, ViTConfig> table = {
      {"vit-toy", {32, 8, 3, 4, 64, 4, 4.0, 10, true}},
      {"vit-s16-224", {224, 16, 3, 12, 384, 6, 4.0, 1000, true}},
      {"vit-b16-224", {224, 16, 3, 12, 768, 12, 4.0, 1000, true}},
      {"vit-l16-224", {224, 16, 3, 24, 1024, 16, 4.0, 1000, true}},
      {"vit-h14-224", {224, 14, 3, 32, 1280, 16, 4.0, 1000, true}},
      {"vit-b16-384", {384, 16, 3, 12, 768, 12, 4.0, 1000, true}},
      {"vit-l16-512", {512, 16, 3, 24, 1024, 16, 4.0, 1000, true}},
      {"vit-h14-518", {518, 14, 3, 32, 1280, 16, 4.0, 1000, true}},
  };
  return table;
}

ViTConfig preset(const std::string& name) {
  const auto& table = presets();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string names;
    for (const auto& [key, cfg] : table) names += (names.empty() ? "" : ", ") + key;
    throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
  }
  return it->second;
}

std::vector<Index> default_protected(const ViTConfig& cfg) {
  if (cfg.class_token) return {0};
  return {};
}

}  // namespace vomix
