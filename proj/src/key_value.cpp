#include "vomix/key_value.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vomix {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Index to_index(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  return static_cast<Index>(x);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::array<float, 3> to_triple(const std::string& key, const std::string& v) {
  std::array<float, 3> out{};
  std::stringstream ss(v);
  std::string item;
  std::size_t n = 0;
  while (std::getline(ss, item, ',')) {
    if (n == 3) break;
    out[n++] = static_cast<float>(to_double(key, trim(item)));
  }
  if (n != 3 || std::getline(ss, item, ',')) {
    throw ConfigError("config key '" + key + "': expected three comma-separated values");
  }
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

ViTConfig apply_model_config(const KeyValues& kv, ViTConfig cfg) {
  if (auto it = kv.find("preset"); it != kv.end()) cfg = preset(it->second);
  for (const auto& [key, value] : kv) {
    if (key == "image_size") cfg.image_size = to_index(key, value);
    else if (key == "patch_size") cfg.patch_size = to_index(key, value);
    else if (key == "channels") cfg.channels = to_index(key, value);
    else if (key == "depth") cfg.depth = to_index(key, value);
    else if (key == "dim") cfg.dim = to_index(key, value);
    else if (key == "heads") cfg.heads = to_index(key, value);
    else if (key == "mlp_ratio") cfg.mlp_ratio = to_double(key, value);
    else if (key == "classes") cfg.classes = to_index(key, value);
    else if (key == "class_token") cfg.class_token = to_bool(key, value);
  }
  cfg.check();
  return cfg;
}

StrategySpec strategy_from_config(const KeyValues& kv) {
  StrategySpec spec;
  auto take = [&kv](const char* key, std::optional<std::string>& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = it->second;
  };
  take("selection", spec.selection);
  take("fanout", spec.fanout);
  take("feature", spec.feature);
  take("metric", spec.metric);
  take("query_mix", spec.query_mix);
  take("attn_mix", spec.attn_mix);
  if (auto it = kv.find("random_seed"); it != kv.end()) {
    spec.random_seed = static_cast<std::uint64_t>(to_index("random_seed", it->second));
  }
  return spec;
}

Normalization normalization_from_config(const KeyValues& kv) {
  Normalization norm;
  if (auto it = kv.find("mean"); it != kv.end()) norm.mean = to_triple("mean", it->second);
  if (auto it = kv.find("std"); it != kv.end()) {
    norm.std = to_triple("std", it->second);
    for (float s : norm.std) {
      if (!(s > 0.0f)) throw ConfigError("config key 'std': values must be positive");
    }
  }
  return norm;
}

}  // namespace vomix
