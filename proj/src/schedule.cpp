#include "vomix/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "vomix/errors.hpp"
#include "vomix/token_count.hpp"

namespace vomix {
namespace {

double parse_ratio(const std::string& text, const std::string& spec) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ConfigError("malformed ratio '" + text + "' in schedule '" + spec + "'");
  }
  if (!(v >= 0.0 && v < 1.0)) {
    throw ConfigError("ratio " + text + " outside [0, 1) in schedule '" + spec + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& spec) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("malformed layer count '" + text + "' in schedule '" + spec + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

bool PruneSchedule::all_zero() const {
  return std::all_of(ratios.begin(), ratios.end(), [](double r) { return r == 0.0; });
}

PruneSchedule expand_schedule(const std::string& spec, std::size_t layers) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("malformed schedule '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string body = spec.substr(colon + 1);

  PruneSchedule sched;
  if (kind == "list") {
    for (const std::string& item : split(body, ',')) sched.ratios.push_back(parse_ratio(item, spec));
    if (sched.ratios.size() != layers) {
      throw ConfigError("schedule '" + spec + "' has " + std::to_string(sched.ratios.size()) +
                        " entries, model has " + std::to_string(layers) + " layers");
    }
    return sched;
  }
  if (kind != "const" && kind != "decr") throw ConfigError("unknown schedule kind '" + kind + "'");

  const std::vector<std::string> fields = split(body, ':');
  if (fields.size() != 2) throw ConfigError("schedule '" + spec + "' needs <a>:<b>");
  const double a = parse_ratio(fields[0], spec);
  const std::size_t b = parse_count(fields[1], spec);
  if (b > layers) {
    throw ConfigError("schedule '" + spec + "' spans " + std::to_string(b) + " layers, model has " +
                      std::to_string(layers));
  }
  sched.ratios.assign(layers, 0.0);
  for (std::size_t l = 0; l < b; ++l) {
    if (kind == "const" || b == 1) {
      sched.ratios[l] = a;
    } else {
      sched.ratios[l] = a * static_cast<double>(b - 1 - l) / static_cast<double>(b - 1);
    }
  }
  return sched;
}

}  // namespace vomix
