#include "vomix/strategy.hpp"

#include <array>
#include <utility>

namespace vomix {
namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& axis, const std::string& s,
                const std::array<std::pair<const char*, Enum>, N>& names) {
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : names) {
    if (!allowed.empty()) allowed += ", ";
    allowed += name;
  }
  throw ConfigError("unknown " + axis + " '" + s + "' (expected one of: " + allowed + ")");
}

constexpr std::array<std::pair<const char*, Selection>, 3> kSelectionNames{{
    {"vote", Selection::kVote}, {"max_sim", Selection::kMaxSim}, {"random", Selection::kRandom}}};
constexpr std::array<std::pair<const char*, Fanout>, 3> kFanoutNames{{
    {"top1", Fanout::kTop1}, {"top2", Fanout::kTop2}, {"topr", Fanout::kTopR}}};
constexpr std::array<std::pair<const char*, Feature>, 3> kFeatureNames{{
    {"q", Feature::kQuery}, {"k", Feature::kKey}, {"v", Feature::kValue}}};
constexpr std::array<std::pair<const char*, Metric>, 3> kMetricNames{{
    {"cosine", Metric::kCosine}, {"l2", Metric::kL2}, {"dot", Metric::kDot}}};
constexpr std::array<std::pair<const char*, QueryMix>, 3> kQueryMixNames{{
    {"global", QueryMix::kGlobal}, {"max", QueryMix::kMax}, {"none", QueryMix::kNone}}};
constexpr std::array<std::pair<const char*, AttnMix>, 3> kAttnMixNames{{
    {"prop", AttnMix::kProp}, {"no_prop", AttnMix::kNoProp}, {"none", AttnMix::kNone}}};

template <typename Enum, std::size_t N>
std::string name_of(Enum v, const std::array<std::pair<const char*, Enum>, N>& names) {
  for (const auto& [name, value] : names) {
    if (value == v) return name;
  }
  return "?";
}

}  // namespace

std::string to_string(Selection v) { return name_of(v, kSelectionNames); }
std::string to_string(Fanout v) { return name_of(v, kFanoutNames); }
std::string to_string(Feature v) { return name_of(v, kFeatureNames); }
std::string to_string(Metric v) { return name_of(v, kMetricNames); }
std::string to_string(QueryMix v) { return name_of(v, kQueryMixNames); }
std::string to_string(AttnMix v) { return name_of(v, kAttnMixNames); }

Selection parse_selection(const std::string& s) { return parse_enum("selection", s, kSelectionNames); }
Fanout parse_fanout(const std::string& s) { return parse_enum("fanout", s, kFanoutNames); }
Feature parse_feature(const std::string& s) { return parse_enum("feature", s, kFeatureNames); }
Metric parse_metric(const std::string& s) { return parse_enum("metric", s, kMetricNames); }
QueryMix parse_query_mix(const std::string& s) { return parse_enum("query-mix", s, kQueryMixNames); }
AttnMix parse_attn_mix(const std::string& s) { return parse_enum("attn-mix", s, kAttnMixNames); }

bool StrategyConfig::is_default() const {
  return selection == Selection::kVote && fanout == Fanout::kTop1 && feature == Feature::kKey &&
         metric == Metric::kCosine && query_mix == QueryMix::kGlobal && attn_mix == AttnMix::kProp;
}

std::string StrategyConfig::label() const {
  std::string sel = to_string(selection);
  if (selection == Selection::kRandom) sel += "(" + std::to_string(random_seed) + ")";
  return sel + "/" + to_string(fanout) + "/" + to_string(feature) + "/" + to_string(metric) + "/" +
         to_string(query_mix) + "/" + to_string(attn_mix);
}

CheckedStrategy validate(const StrategySpec& spec) {
  CheckedStrategy out;
  StrategyConfig& cfg = out.config;
  if (spec.selection) cfg.selection = parse_selection(*spec.selection);
  if (spec.random_seed) cfg.random_seed = *spec.random_seed;
  if (spec.fanout) {
    cfg.fanout = parse_fanout(*spec.fanout);
    if (cfg.selection != Selection::kVote) {
      out.warnings.push_back("fanout '" + *spec.fanout + "' has no effect with selection '" +
                             to_string(cfg.selection) + "'");
    }
  }
  if (spec.feature) cfg.feature = parse_feature(*spec.feature);
  if (spec.metric) cfg.metric = parse_metric(*spec.metric);
  if (spec.query_mix) cfg.query_mix = parse_query_mix(*spec.query_mix);
  if (spec.attn_mix) cfg.attn_mix = parse_attn_mix(*spec.attn_mix);
  return out;
}

}  // namespace vomix
