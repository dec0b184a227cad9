#pragma once

// Provenance of surviving tokens. Column j of an assignment matrix holds the
// convex weights of the original tokens inside current token j; it is
// updated with the same size-weighted rule as the query mix.
//
// Colors (documented contract, byte-stable):
//   heat ramp   t in [0,1] -> (clamp(3t), clamp(3t-1), clamp(3t-2)) * 255,
//               rounded; black -> red -> yellow -> white
//   palette     destination j -> low three bytes (R = bits 0-7, G = 8-15,
//               B = 16-23) of the first SplitMix64 output seeded with j

#include <array>
#include <cstdint>

#include "vomix/attention.hpp"
#include "vomix/image.hpp"

namespace vomix {

using AssignmentMatrix = MatrixD;

/// N0 x N0 identity.
AssignmentMatrix init_assignment(Index n0);

/// Applies one layer: retained column i becomes
/// (M_i s_i + sum_j W_ji M_j s_j) / s_i'. Pruned columns are dropped.
/// Throws InvariantError if any column sum drifts from 1 by more than 1e-4.
AssignmentMatrix update_assignment(const AssignmentMatrix& m, const LayerTrace<float>& trace);

/// Size-weighted mass of every original token, sum_i M[t, i] s_i.
VectorD provenance_mass(const AssignmentMatrix& m, const VectorD& sizes);

/// Placement of original patch tokens on the image plane. Rows
/// [offset, offset + frames * height * width) of M are patches, row-major per
/// frame; frames are rendered side by side.
struct GridLayout {
  Index height = 0;
  Index width = 0;
  Index frames = 1;
  Index offset = 0;  // 1 when a class token precedes the patches

  Index patches() const { return frames * height * width; }
};

std::array<std::uint8_t, 3> heat_color(double t);
std::array<std::uint8_t, 3> palette_color(Index destination);

/// Column `token` min-max normalized over the patch rows, one pixel per patch,
/// optionally upscaled.
RgbImage render_heatmap(const AssignmentMatrix& m, Index token, const GridLayout& layout,
                        Index scale = 1);

/// Each patch coloured by its dominant destination argmax_j M[t, j].
RgbImage render_region_map(const AssignmentMatrix& m, const GridLayout& layout, Index scale = 1);

/// Dominant destination of every patch row (lowest index on ties).
IndexVector dominant_destinations(const AssignmentMatrix& m, const GridLayout& layout);

/// Follows a forward pass layer by layer. Opt-in: costs O(N0 * N) memory.
class ProvenanceTracker {
 public:
  explicit ProvenanceTracker(Index n0);

  void update(const LayerTrace<float>& trace);

  const AssignmentMatrix& assignment() const { return m_; }
  const VectorD& sizes() const { return sizes_; }

 private:
  AssignmentMatrix m_;
  VectorD sizes_;
};

}  // namespace vomix
