// tests/test_detector.cc

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "cefa/datagen/synth.h"
#include "cefa/detector/detector.h"
#include "cefa/util/config.h"
#include "doctest.h"

namespace cefa::detector {
namespace {

using cefa::nn::Graph;
using cefa::nn::Matrix;

Config SmallConfig() {
  Config c;
  c.set("data.image_size", "32");
  c.set("data.num_objects", "3");
  c.set("data.num_verbs", "4");
  c.set("model.dim", "16");
  c.set("model.stem_channels", "8");
  c.set("model.ffn_dim", "32");
  c.set("model.heads", "2");
  c.set("model.num_queries", "5");
  return c;
}

datagen::Image ZeroImage(int size) {
  datagen::Image img;
  img.height = size;
  img.width = size;
  img.pix.assign(static_cast<std::size_t>(size) * size * 3, 0.0);
  return img;
}

TEST_CASE("backbone produces one token per 8x8 patch") {
  Config c;  // defaults: 96x96 image, dim 64, 16 queries
  HoiDetector det(c, 7);
  Graph g(false);
  auto fb = det.forward(g, ZeroImage(96));
  CHECK(g.value(fb.x_b).rows() == 144);  // (96/8)^2
  CHECK(g.value(fb.x_b).cols() == 64);
  CHECK(g.value(fb.x_e).rows() == 144);
  CHECK(g.value(fb.x_ho).rows() == 16);
  CHECK(g.value(fb.x_ve).rows() == 16);
  CHECK(g.value(fb.x_b).allFinite());
  CHECK(g.value(fb.x_e).allFinite());
  CHECK(g.value(fb.x_ho).allFinite());
}

TEST_CASE("forward is deterministic and seed-reproducible") {
  Config c = SmallConfig();
  datagen::Sample s = datagen::SynthesizeScene(c, 2, datagen::Domain::original, 5);

  HoiDetector det_a(c, 11);
  HoiDetector det_b(c, 11);
  Graph ga(false), gb(false);
  auto fa = det_a.forward(ga, s.image);
  auto fb = det_b.forward(gb, s.image);
  CHECK(ga.value(fa.x_e) == gb.value(fb.x_e));
  CHECK(ga.value(fa.x_ve) == gb.value(fb.x_ve));

  // Same detector twice: identical too.
  Graph gc(false);
  auto fc = det_a.forward(gc, s.image);
  CHECK(ga.value(fa.x_ve) == gc.value(fc.x_ve));

  HoiDetector det_c(c, 12);
  Graph gd(false);
  auto fd = det_c.forward(gd, s.image);
  CHECK(ga.value(fa.x_e) != gd.value(fd.x_e));
}

TEST_CASE("zero encoder layers pass backbone tokens through unchanged") {
  Config c = SmallConfig();
  c.set("model.encoder_layers", "0");
  HoiDetector det(c, 3);
  datagen::Sample s = datagen::SynthesizeScene(c, 1, datagen::Domain::original, 9);
  Graph g(false);
  auto fb = det.forward(g, s.image);
  CHECK(g.value(fb.x_e) == g.value(fb.x_b));
}

TEST_CASE("construction and input validation") {
  SUBCASE("zero queries rejected") {
    Config c = SmallConfig();
    c.set("model.num_queries", "0");
    CHECK_THROWS_AS(HoiDetector(c, 0), ConfigError);
  }
  SUBCASE("image size must be divisible by the patch stride") {
    Config c = SmallConfig();
    c.set("data.image_size", "33");
    CHECK_THROWS_AS(HoiDetector(c, 0), ConfigError);
  }
  SUBCASE("dim must be divisible by head count") {
    Config c = SmallConfig();
    c.set("model.heads", "3");
    CHECK_THROWS_AS(HoiDetector(c, 0), ConfigError);
  }
  SUBCASE("wrong image dims are rejected with expected size named") {
    Config c = SmallConfig();
    HoiDetector det(c, 0);
    Graph g(false);
    CHECK_THROWS_WITH_AS(det.forward(g, ZeroImage(48)),
                         doctest::Contains("32x32"), cefa::nn::ShapeError);
  }
  SUBCASE("non-finite pixels are rejected") {
    Config c = SmallConfig();
    HoiDetector det(c, 0);
    datagen::Image img = ZeroImage(32);
    img.pix[10] = std::nan("");
    Graph g(false);
    CHECK_THROWS_AS(det.forward(g, img), cefa::nn::NumericError);
  }
  SUBCASE("unknown score mode rejected") {
    Config c = SmallConfig();
    c.set("model.score_mode", "geometric");
    CHECK_THROWS_AS(HoiDetector(c, 0), ConfigError);
  }
}

TEST_CASE("prediction scoring") {
  // 2 queries, 3 object classes + no-object column, 2 verbs.
  Matrix boxes(2, 8);
  boxes << 0.5, 0.5, 0.2, 0.2, 0.6, 0.6, 0.1, 0.1,  //
      0.3, 0.3, 0.1, 0.1, 0.4, 0.4, 0.2, 0.2;
  Matrix obj(2, 4), verb(2, 2);

  SUBCASE("hand-computed product score") {
    obj << 1.0, 2.0, 0.5, 0.0,  //
        0.0, 0.0, 0.0, 10.0;
    verb << 0.3, -0.2,  //
        5.0, 5.0;
    auto preds = PredictionsFromOutputs(boxes, obj, verb, "product");
    REQUIRE(preds.size() == 2);

    double z = std::exp(1.0) + std::exp(2.0) + std::exp(0.5) + std::exp(0.0);
    double not_noobj = 1.0 - std::exp(0.0) / z;
    double max_verb = 1.0 / (1.0 + std::exp(-0.3));
    CHECK(preds[0].object_class == 1);
    CHECK(preds[0].verb_class == 0);
    CHECK(preds[0].not_noobj_prob == doctest::Approx(not_noobj).epsilon(1e-12));
    CHECK(preds[0].max_verb_prob == doctest::Approx(max_verb).epsilon(1e-12));
    CHECK(preds[0].score ==
          doctest::Approx(not_noobj * max_verb).epsilon(1e-12));
    // Near-certain no-object: tiny score despite confident verbs.
    CHECK(preds[1].score < 1e-3);
    CHECK(preds[1].human_box.cx == doctest::Approx(0.3));
    CHECK(preds[1].object_box.w == doctest::Approx(0.2));
  }

  SUBCASE("impossible verbs give zero product score") {
    obj << 1.0, 1.0, 1.0, 1.0,  //
        1.0, 1.0, 1.0, 1.0;
    verb << -1000.0, -1000.0,  //
        -1000.0, -1000.0;
    auto preds = PredictionsFromOutputs(boxes, obj, verb, "product");
    CHECK(preds[0].score == 0.0);
    CHECK(preds[1].score == 0.0);
  }

  SUBCASE("object softmax is shift-invariant") {
    obj << 1.0, 2.0, 0.5, 0.0,  //
        0.3, -0.1, 0.0, 0.7;
    verb << 0.3, -0.2,  //
        0.1, 0.9;
    auto base = PredictionsFromOutputs(boxes, obj, verb, "product");
    Matrix shifted = obj;
    shifted.array() += 7.5;
    auto moved = PredictionsFromOutputs(boxes, shifted, verb, "product");
    for (int i = 0; i < 2; ++i) {
      CHECK(moved[i].score == doctest::Approx(base[i].score).epsilon(1e-9));
      CHECK(moved[i].object_class == base[i].object_class);
    }
  }

  SUBCASE("additive mode ranks by the composed pseudo-label score") {
    obj << 1.0, 2.0, 0.5, 0.0,  //
        0.0, 0.0, 0.0, 10.0;
    verb << 0.3, -0.2,  //
        5.0, 5.0;
    auto add = PredictionsFromOutputs(boxes, obj, verb, "additive");
    for (int i = 0; i < 2; ++i)
      CHECK(add[i].score == doctest::Approx(ComposedScore(add[i])).epsilon(1e-12));
  }

  SUBCASE("composed score adds object probability and best verb") {
    obj << 1.0, 2.0, 0.5, 0.0,  //
        0.0, 0.0, 0.0, 10.0;
    verb << 0.3, -0.2,  //
        5.0, 5.0;
    auto preds = PredictionsFromOutputs(boxes, obj, verb, "product");
    double z = std::exp(1.0) + std::exp(2.0) + std::exp(0.5) + std::exp(0.0);
    double want = std::exp(2.0) / z + 1.0 / (1.0 + std::exp(-0.3));
    CHECK(ComposedScore(preds[0]) == doctest::Approx(want).epsilon(1e-12));
    CHECK(ComposedScore(preds[0]) <= 2.0);
    CHECK(ComposedScore(preds[0]) >= 0.0);
  }
}

TEST_CASE("pseudo-labelling by composed-score threshold") {
  auto make_pred = [](double obj_p, double verb_p, int obj_cls, int verb_cls) {
    Prediction p;
    p.object_prob = obj_p;
    p.max_verb_prob = verb_p;
    p.object_class = obj_cls;
    p.verb_class = verb_cls;
    p.human_box = {0.5, 0.5, 0.2, 0.2};
    p.object_box = {0.6, 0.6, 0.1, 0.1};
    return p;
  };
  std::vector<Prediction> preds = {make_pred(0.9, 0.6, 2, 1),   // 1.5
                                   make_pred(0.7, 0.6, 0, 3)};  // 1.3

  SUBCASE("strict threshold keeps only scores above it") {
    auto anns = HoiDetector::PseudoLabel(preds, 1.4);
    REQUIRE(anns.size() == 1);
    CHECK(anns[0].object_class == 2);
    CHECK(anns[0].verb_class == 1);
    CHECK(anns[0].human_box.cx == doctest::Approx(0.5));
  }
  SUBCASE("maximal threshold rejects everything") {
    CHECK(HoiDetector::PseudoLabel(preds, 2.0).empty());
  }
  SUBCASE("zero threshold keeps every query") {
    CHECK(HoiDetector::PseudoLabel(preds, 0.0).size() == 2);
  }
  SUBCASE("equality does not pass a strict threshold") {
    CHECK(HoiDetector::PseudoLabel(preds, 1.5).empty());
  }
  SUBCASE("negative threshold is a configuration error") {
    CHECK_THROWS_AS(HoiDetector::PseudoLabel(preds, -0.1), ConfigError);
  }
  SUBCASE("raising the threshold never admits more labels") {
    std::size_t prev = preds.size() + 1;
    for (double t : {0.0, 0.5, 1.0, 1.35, 1.45, 2.0}) {
      auto n = HoiDetector::PseudoLabel(preds, t).size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("predict end-to-end yields one prediction per query") {
  Config c = SmallConfig();
  HoiDetector det(c, 4);
  datagen::Sample s = datagen::SynthesizeScene(c, 0, datagen::Domain::original, 1);
  Graph g(false);
  auto fb = det.forward(g, s.image);
  auto preds = det.predict(g, fb.x_ho, fb.x_ve);
  CHECK(preds.size() == 5);
  for (const auto& p : preds) {
    CHECK(p.score >= 0.0);
    CHECK(p.score <= 1.0);  // product of probabilities
    CHECK(p.object_class >= 0);
    CHECK(p.object_class < 3);
    CHECK(p.verb_class >= 0);
    CHECK(p.verb_class < 4);
    CHECK(p.human_box.w > 0.0);
    CHECK(p.object_box.h > 0.0);
  }
}

TEST_CASE("parameter registries partition the model") {
  Config c = SmallConfig();
  HoiDetector det(c, 4);
  auto all = det.all_params();
  auto backbone = det.backbone_params();
  auto encoder = det.encoder_params();
  auto pair_dec = det.pair_decoder_params();
  auto rel_dec = det.rel_decoder_params();
  auto heads = det.head_params();
  CHECK(all.size() == backbone.size() + encoder.size() + pair_dec.size() +
                          rel_dec.size() + heads.size());
  // Queries ride with the pair decoder (frozen together during adaptation).
  bool found_queries = false;
  for (auto* p : pair_dec)
    if (p->name == "pair_decoder.queries") found_queries = true;
  CHECK(found_queries);

  SUBCASE("freezing the pair decoder flips exactly its trainable flags") {
    det.set_pair_decoder_trainable(false);
    for (auto* p : pair_dec) CHECK(!p->trainable);
    for (auto* p : heads) CHECK(p->trainable);
    for (auto* p : backbone) CHECK(p->trainable);
    det.set_pair_decoder_trainable(true);
    for (auto* p : pair_dec) CHECK(p->trainable);
  }
}

TEST_CASE("gradients flow from prediction heads back to the stem") {
  Config c = SmallConfig();
  HoiDetector det(c, 4);
  datagen::Sample s = datagen::SynthesizeScene(c, 1, datagen::Domain::original, 2);
  Graph g;
  auto fb = det.forward(g, s.image);
  auto boxes = det.box_outputs(g, fb.x_ho);
  auto obj = det.object_logit_outputs(g, fb.x_ho);
  auto verb = det.verb_logit_outputs(g, fb.x_ve);
  Var loss = g.add(g.sum_all(boxes), g.add(g.sum_all(obj), g.sum_all(verb)));
  g.backward(loss);
  for (auto* p : det.all_params()) {
    INFO("zero grad for ", p->name);
    CHECK(p->grad.cwiseAbs().maxCoeff() > 0.0);
  }
  for (auto* p : det.all_params()) p->grad.setZero();
  for (auto* p : det.all_params()) CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
}

}  // namespace
}  // namespace cefa::detector
