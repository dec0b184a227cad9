#include <doctest.h>

#include <sstream>

#include "vomix/flops.hpp"
#include "vomix/model.hpp"

using namespace vomix;

TEST_SUITE("flops") {

TEST_CASE("token trajectory") {
  CHECK(token_trajectory(197, expand_schedule("const:0:12", 12), 1) == std::vector<Index>(13, 197));
  const auto t = token_trajectory(197, expand_schedule("const:0.05:12", 12), 1);
  CHECK(t[0] == 197);
  CHECK(t[1] == 188);
  CHECK(t[2] == 179);
  CHECK(t[3] == 171);
  const auto s = token_trajectory(8, expand_schedule("list:0.25,0.25,0.25", 3), 0);
  CHECK(s == std::vector<Index>{8, 6, 5, 4});
}

TEST_CASE("vanilla layer cost") {
  const ViTConfig b = preset("vit-b16-224");
  const LayerFlops l = layer_flops(197, 0.0, b, 1, false);
  CHECK(l.total() == doctest::Approx(1.454e9).epsilon(1e-3));
  CHECK(l.overhead_ops() == 0.0);
  CHECK(l.tokens_out == 197);
}

TEST_CASE("layer components") {
  const ViTConfig b = preset("vit-b16-224");
  const double n = 197, d = 768, r = 0.05;
  const LayerFlops l = layer_flops(197, r, b, 0);
  CHECK(l.tokens_out == 188);
  CHECK(l.qkv == 3 * n * d * d);
  CHECK(l.attention == 2 * 188 * n * d);
  CHECK(l.out_proj == 188 * d * d);
  CHECK(l.mlp == 2 * 4 * 188 * d * d);
  CHECK(l.similarity == n * n * d / 12);
  CHECK(l.vote == n * n);
  CHECK(l.mix_softmax == doctest::Approx(n * n * r * (1 - r)));
  CHECK(l.query_mix == doctest::Approx(n * n * d * r * (1 - r)));
}

TEST_CASE("overhead bound holds for all ratios") {
  const ViTConfig b = preset("vit-b16-224");
  for (double r = 0.0; r < 1.0; r += 0.05) {
    const LayerFlops l = layer_flops(197, r, b, 1);
    const double n = 197, d = 768;
    CHECK(l.overhead_ops() <= n * n * d * (1.0 / 12 + r * (1 - r)) + 2 * n * n + 1e-6);
  }
}

TEST_CASE("vanilla total and reductions") {
  const ViTConfig b = preset("vit-b16-224");
  const FlopsReport v = model_flops(b, PruneSchedule::zeros(12), false);
  CHECK(v.total / 1e9 == doctest::Approx(17.6).epsilon(0.05));
  const FlopsReport r = model_flops(b, expand_schedule("const:0.05:12", 12));
  CHECK(r.total / 1e9 == doctest::Approx(13.2).epsilon(0.03));
  CHECK(r.reduction_pct() == doctest::Approx(-25).epsilon(0.12));
  CHECK(r.vanilla_total == v.total);
}

TEST_CASE("total is the sum of its parts") {
  const ViTConfig l = preset("vit-l16-224");
  const FlopsReport r = model_flops(l, expand_schedule("decr:0.1:12", 24));
  double sum = r.patch_embed + r.head;
  for (const LayerFlops& f : r.layers) sum += f.total();
  CHECK(r.total == doctest::Approx(sum));
  CHECK(r.layers.size() == 24);
}

TEST_CASE("overhead accounting is separable") {
  const ViTConfig b = preset("vit-b16-224");
  const FlopsReport on = model_flops(b, PruneSchedule::zeros(12), true);
  const FlopsReport off = model_flops(b, PruneSchedule::zeros(12), false);
  double sim_vote = 0;
  for (const LayerFlops& f : on.layers) sim_vote += f.similarity + f.vote;
  CHECK(on.total - sim_vote == doctest::Approx(off.total));
}

TEST_CASE("reduction grows with the ratio") {
  const ViTConfig b = preset("vit-b16-224");
  double prev = 1;
  for (int i = 0; i <= 20; ++i) {
    const double a = i * 0.01;
    const double pct = model_flops(b, expand_schedule("const:" + std::to_string(a) + ":12", 12)).reduction_pct();
    CHECK(pct <= prev + 1e-9);
    prev = pct;
  }
}

TEST_CASE("csv output") {
  std::ostringstream out;
  write_flops_csv(out, model_flops(preset("vit-toy"), expand_schedule("const:0.25:4", 4)));
  const std::string csv = out.str();
  CHECK(csv.rfind("layer,N_in,N_out,r,attn_ops,mlp_ops,overhead_ops\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.find("total") != std::string::npos);
}

TEST_CASE("instrumented counts match the model") {
  const ViTConfig c = preset("vit-toy");
  const WeightStore w = init_weights(c, 1);
  const ImageTensor img = synthetic_image(3, c.image_size, 1);
  for (const char* spec : {"const:0:0", "const:0.25:4", "decr:0.4:3"}) {
    const PruneSchedule sched = expand_schedule(spec, 4);
    ScopedOpCount count;
    forward(img, w, c, ForwardOptions{sched, StrategyConfig{}, std::nullopt});
    const double measured = static_cast<double>(count.elapsed().headline());
    CHECK(measured == doctest::Approx(model_flops(c, sched).total).epsilon(0.10));
  }
}

}  // TEST_SUITE
