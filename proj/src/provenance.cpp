#include "vomix/provenance.hpp"

#include <algorithm>
#include <cmath>

#include "vomix/rng.hpp"

namespace vomix {

AssignmentMatrix init_assignment(Index n0) {
  if (n0 < 1) throw ConfigError("assignment needs at least one token");
  return AssignmentMatrix::Identity(n0, n0);
}

AssignmentMatrix update_assignment(const AssignmentMatrix& m, const LayerTrace<float>& trace) {
  const Partition& part = trace.partition;
  const auto kp = static_cast<Index>(part.pruned.size());
  const auto nr = static_cast<Index>(part.retained.size());
  if (m.cols() != kp + nr || trace.sizes_before.size() != m.cols()) {
    throw ConfigError("trace does not match assignment with " + std::to_string(m.cols()) + " tokens");
  }
  const VectorD s = trace.sizes_before.cast<double>();
  const bool mixed = kp > 0 && trace.query_mix != QueryMix::kNone;
  if (mixed && (trace.weights.rows() != kp || trace.weights.cols() != nr)) {
    throw ConfigError("trace mixing weights have the wrong shape");
  }

  if (trace.sizes_after.size() != nr) throw ConfigError("trace sizes do not match the retained set");

  // Dividing by the engine's own mixed sizes makes the column check a real
  // cross-check of the forward pass rather than a tautology.
  AssignmentMatrix out(m.rows(), nr);
  for (Index i = 0; i < nr; ++i) {
    const Index ri = part.retained[static_cast<std::size_t>(i)];
    VectorD col = m.col(ri) * s(ri);
    if (mixed) {
      for (Index j = 0; j < kp; ++j) {
        const double w = trace.weights(j, i);
        if (w == 0.0) continue;
        const Index pj = part.pruned[static_cast<std::size_t>(j)];
        col += m.col(pj) * (w * s(pj));
      }
    }
    out.col(i) = col / static_cast<double>(trace.sizes_after(i));
  }
  for (Index i = 0; i < nr; ++i) {
    const double sum = out.col(i).sum();
    if (std::abs(sum - 1.0) > 1e-4) {
      throw InvariantError("assignment column " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  return out;
}

VectorD provenance_mass(const AssignmentMatrix& m, const VectorD& sizes) { return m * sizes; }

std::array<std::uint8_t, 3> heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto channel = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  return {channel(3 * t), channel(3 * t - 1), channel(3 * t - 2)};
}

std::array<std::uint8_t, 3> palette_color(Index destination) {
  SplitMix64 rng(static_cast<std::uint64_t>(destination));
  const std::uint64_t v = rng.next();
  return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v >> 16)};
}

namespace {

void check_layout(const AssignmentMatrix& m, const GridLayout& layout) {
  if (layout.height < 1 || layout.width < 1 || layout.frames < 1 || layout.offset < 0 ||
      layout.offset + layout.patches() > m.rows()) {
    throw ConfigError("grid layout does not fit an assignment with " + std::to_string(m.rows()) +
                      " original tokens");
  }
}

template <typename ColorAt>
RgbImage paint(const GridLayout& layout, Index scale, ColorAt color_at) {
  RgbImage img(layout.frames * layout.width, layout.height);
  for (Index f = 0; f < layout.frames; ++f)
    for (Index y = 0; y < layout.height; ++y)
      for (Index x = 0; x < layout.width; ++x) {
        const auto c = color_at((f * layout.height + y) * layout.width + x);
        std::copy(c.begin(), c.end(), img.pixel(f * layout.width + x, y));
      }
  return scale == 1 ? img : upscale(img, scale);
}

}  // namespace

RgbImage render_heatmap(const AssignmentMatrix& m, Index token, const GridLayout& layout, Index scale) {
  check_layout(m, layout);
  if (token < 0 || token >= m.cols()) {
    throw ConfigError("token index " + std::to_string(token) + " out of range for " +
                      std::to_string(m.cols()) + " tokens");
  }
  const VectorD col = m.col(token).segment(layout.offset, layout.patches());
  const double lo = col.minCoeff();
  const double range = col.maxCoeff() - lo;
  return paint(layout, scale, [&](Index p) { return heat_color(range > 0 ? (col(p) - lo) / range : 0.0); });
}

IndexVector dominant_destinations(const AssignmentMatrix& m, const GridLayout& layout) {
  check_layout(m, layout);
  IndexVector dest(static_cast<std::size_t>(layout.patches()));
  for (Index p = 0; p < layout.patches(); ++p) {
    dest[static_cast<std::size_t>(p)] = argmax(m.row(layout.offset + p));
  }
  return dest;
}

RgbImage render_region_map(const AssignmentMatrix& m, const GridLayout& layout, Index scale) {
  const IndexVector dest = dominant_destinations(m, layout);
  return paint(layout, scale, [&](Index p) { return palette_color(dest[static_cast<std::size_t>(p)]); });
}

ProvenanceTracker::ProvenanceTracker(Index n0)
    : m_(init_assignment(n0)), sizes_(VectorD::Ones(n0)) {}

void ProvenanceTracker::update(const LayerTrace<float>& trace) {
  m_ = update_assignment(m_, trace);
  const Partition& part = trace.partition;
  const auto kp = static_cast<Index>(part.pruned.size());
  VectorD next(static_cast<Index>(part.retained.size()));
  for (Index i = 0; i < next.size(); ++i) {
    double size = sizes_(part.retained[static_cast<std::size_t>(i)]);
    if (kp > 0 && trace.query_mix != QueryMix::kNone) {
      for (Index j = 0; j < kp; ++j) size += trace.weights(j, i) * sizes_(part.pruned[static_cast<std::size_t>(j)]);
    }
    next(i) = size;
  }
  sizes_ = std::move(next);
}

}  // namespace vomix
