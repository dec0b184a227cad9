#include <doctest.h>

#include <set>

#include "vomix/model.hpp"
#include "vomix/provenance.hpp"

using namespace vomix;

namespace {

LayerTrace<float> merge_trace(Index n, Index from, Index into, QueryMix mode = QueryMix::kMax) {
  LayerTrace<float> t;
  t.tokens_in = n;
  t.partition.pruned = {from};
  for (Index i = 0; i < n; ++i) {
    if (i != from) t.partition.retained.push_back(i);
  }
  t.weights = MatrixF::Zero(1, n - 1);
  const auto pos = std::lower_bound(t.partition.retained.begin(), t.partition.retained.end(), into) -
                   t.partition.retained.begin();
  t.weights(0, pos) = 1;
  t.sizes_before = VectorF::Ones(n);
  t.sizes_after = VectorF::Ones(n - 1);
  t.sizes_after(pos) = 2;
  t.query_mix = mode;
  return t;
}

}  // namespace

TEST_SUITE("provenance") {

TEST_CASE("init assignment") {
  CHECK(init_assignment(3) == MatrixD::Identity(3, 3));
  CHECK(init_assignment(1)(0, 0) == 1.0);
}

TEST_CASE("merging two tokens halves the column") {
  const AssignmentMatrix m = update_assignment(init_assignment(4), merge_trace(4, 1, 0));
  REQUIRE(m.cols() == 3);
  CHECK(m(0, 0) == 0.5);
  CHECK(m(1, 0) == 0.5);
  CHECK(m.col(1) == Eigen::Vector4d(0, 0, 1, 0));

  const RgbImage img = render_heatmap(m, 0, GridLayout{2, 2, 1, 0});
  CHECK(std::equal(img.pixel(0, 0), img.pixel(0, 0) + 3, img.pixel(1, 0)));
  CHECK(img.pixel(0, 0)[0] == 255);
  CHECK(img.pixel(0, 1)[0] == 0);
}

TEST_CASE("no pruning leaves the matrix unchanged") {
  LayerTrace<float> t;
  t.tokens_in = 3;
  t.partition.retained = {0, 1, 2};
  t.weights = MatrixF(0, 3);
  t.sizes_before = VectorF::Ones(3);
  t.sizes_after = VectorF::Ones(3);
  const AssignmentMatrix m = init_assignment(3);
  CHECK(update_assignment(m, t) == m);
}

TEST_CASE("column drift is an invariant violation") {
  LayerTrace<float> t = merge_trace(4, 1, 0);
  t.sizes_after(0) = 3;  // inconsistent with the weights
  CHECK_THROWS_AS(update_assignment(init_assignment(4), t), InvariantError);
}

TEST_CASE("mass conservation over a forward pass") {
  ViTConfig c = preset("vit-toy");
  c.image_size = 16;
  c.depth = 2;
  c.class_token = false;
  REQUIRE(c.tokens() == 4);
  const WeightStore w = init_weights(c, 2);
  const ForwardResult r =
      forward(synthetic_image(3, 16, 2), w, c, ForwardOptions{expand_schedule("const:0.25:2", 2), {}, std::nullopt});
  ProvenanceTracker tracker(4);
  for (const auto& t : r.traces) tracker.update(t);
  CHECK(tracker.assignment().cols() == r.final_state.tokens());
  const VectorD mass = provenance_mass(tracker.assignment(), tracker.sizes());
  for (Index t = 0; t < 4; ++t) CHECK(mass(t) == doctest::Approx(1.0).epsilon(1e-4));
  for (Index j = 0; j < tracker.assignment().cols(); ++j)
    CHECK(tracker.assignment().col(j).sum() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("identity heatmap has one hot pixel") {
  const RgbImage img = render_heatmap(init_assignment(16), 5, GridLayout{4, 4, 1, 0});
  CHECK(img.width == 4);
  for (Index p = 0; p < 16; ++p) {
    const auto* px = img.pixel(p % 4, p / 4);
    if (p == 5) CHECK((px[0] == 255 && px[1] == 255 && px[2] == 255));
    else CHECK((px[0] == 0 && px[1] == 0 && px[2] == 0));
  }
  CHECK_THROWS(render_heatmap(init_assignment(16), 16, GridLayout{4, 4, 1, 0}));
}

TEST_CASE("uniform column gives a uniform image") {
  const AssignmentMatrix m = AssignmentMatrix::Constant(9, 1, 1.0 / 9);
  const RgbImage img = render_heatmap(m, 0, GridLayout{3, 3, 1, 0}, 2);
  CHECK(img.width == 6);
  for (Index y = 0; y < 6; ++y)
    for (Index x = 0; x < 6; ++x) CHECK(std::equal(img.pixel(x, y), img.pixel(x, y) + 3, img.pixel(0, 0)));
}

TEST_CASE("heat ramp and palette contract") {
  CHECK(heat_color(0.0) == std::array<std::uint8_t, 3>{0, 0, 0});
  CHECK(heat_color(1.0 / 3) == std::array<std::uint8_t, 3>{255, 0, 0});
  CHECK(heat_color(2.0 / 3) == std::array<std::uint8_t, 3>{255, 255, 0});
  CHECK(heat_color(1.0) == std::array<std::uint8_t, 3>{255, 255, 255});
  const std::uint64_t v = SplitMix64(7).next();
  CHECK(palette_color(7) ==
        std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                                    static_cast<std::uint8_t>(v >> 16)});
}

TEST_CASE("region maps") {
  const GridLayout g{4, 4, 1, 0};
  const RgbImage id = render_region_map(init_assignment(16), g);
  std::set<std::array<std::uint8_t, 3>> colors;
  for (Index p = 0; p < 16; ++p) {
    const auto* px = id.pixel(p % 4, p / 4);
    colors.insert({px[0], px[1], px[2]});
  }
  CHECK(colors.size() == 16);

  const RgbImage one = render_region_map(AssignmentMatrix::Constant(16, 1, 1.0 / 16), g);
  for (Index p = 0; p < 16; ++p) CHECK(std::equal(one.pixel(p % 4, p / 4), one.pixel(p % 4, p / 4) + 3, one.pixel(0, 0)));
  CHECK(encode_ppm(one) == encode_ppm(render_region_map(AssignmentMatrix::Constant(16, 1, 1.0 / 16), g)));
}

TEST_CASE("class token is skipped and frames sit side by side") {
  AssignmentMatrix m = init_assignment(9);
  const GridLayout g{2, 2, 2, 1};
  const IndexVector d = dominant_destinations(m, g);
  CHECK(d.size() == 8);
  CHECK(d.front() == 1);
  const RgbImage img = render_heatmap(m, 5, g);
  CHECK(img.width == 4);
  CHECK(img.height == 2);
  // Token 5 is patch 4, the first patch of the second frame.
  CHECK(img.pixel(2, 0)[0] == 255);
}

}  // TEST_SUITE
