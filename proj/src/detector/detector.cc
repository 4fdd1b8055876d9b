// src/detector/detector.cc

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

#include "cefa/detector/detector.h"

#include <algorithm>
#include <cmath>

#include "cefa/util/rng.h"

namespace cefa::detector {

using nn::IntMatrix;

namespace {

// Gather indices unrolling k x k windows at stride k over an h x w grid of
// c-channel cells stored as an (h*w) x c matrix. Output row i covers window
// i; output column j = (dy*k + dx)*c + ch.
void ConvIndices(int h, int w, int c, int k, IntMatrix& rows,
                 IntMatrix& cols) {
  int oh = h / k, ow = w / k;
  rows.resize(oh * ow, k * k * c);
  cols.resize(oh * ow, k * k * c);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      int out = oy * ow + ox;
      for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx)
          for (int ch = 0; ch < c; ++ch) {
            int j = (dy * k + dx) * c + ch;
            rows(out, j) = (oy * k + dy) * w + (ox * k + dx);
            cols(out, j) = ch;
          }
    }
}

}  // namespace

double ComposedScore(const Prediction& p) {
  return p.object_prob + p.max_verb_prob;
}

HoiDetector::HoiDetector(const Config& config, uint64_t seed) {
  image_size_ = config.get_int("data.image_size");
  dim_ = config.get_int("model.dim");
  stem_channels_ = config.get_int("model.stem_channels");
  num_queries_ = config.get_int("model.num_queries");
  heads_ = config.get_int("model.heads");
  ffn_dim_ = config.get_int("model.ffn_dim");
  encoder_layers_ = config.get_int("model.encoder_layers");
  decoder_layers_ = config.get_int("model.decoder_layers");
  num_objects_ = config.get_int("data.num_objects");
  num_verbs_ = config.get_int("data.num_verbs");
  score_mode_ = config.get("model.score_mode");

  if (num_queries_ <= 0)
    throw ConfigError("model.num_queries must be positive, got " +
                      std::to_string(num_queries_));
  if (image_size_ % 8 != 0)
    throw ConfigError("data.image_size must be divisible by the stride-8 "
                      "stem, got " + std::to_string(image_size_));
  if (dim_ % heads_ != 0)
    throw ConfigError("model.dim must be divisible by model.heads");
  if (dim_ % 4 != 0)
    throw ConfigError("model.dim must be divisible by 4 for the 2D "
                      "sinusoidal position encoding");
  if (score_mode_ != "product" && score_mode_ != "additive")
    throw ConfigError("model.score_mode must be product or additive, got " +
                      score_mode_);

  grid_h_ = grid_w_ = image_size_ / 8;
  patch_grid_ = image_size_ / 4;

  Rng rng(cefa::HashCombine(seed, 0xde7ec707ull));
  stem_w1_ = nn::Parameter("stem.conv1.weight",
                           nn::XavierUniform(48, stem_channels_, rng));
  stem_b1_ = nn::Parameter("stem.conv1.bias", Matrix::Zero(1, stem_channels_));
  stem_w2_ = nn::Parameter(
      "stem.conv2.weight", nn::XavierUniform(4 * stem_channels_, dim_, rng));
  stem_b2_ = nn::Parameter("stem.conv2.bias", Matrix::Zero(1, dim_));

  Matrix q0(num_queries_, dim_);
  for (int i = 0; i < q0.rows(); ++i)
    for (int j = 0; j < q0.cols(); ++j) q0(i, j) = rng.normal(0.0, 0.02);
  query_embed_ = nn::Parameter("pair_decoder.queries", q0);

  pos_grid_ = nn::SinusoidalGridEncoding(grid_h_, grid_w_, dim_);

  for (int l = 0; l < encoder_layers_; ++l)
    encoder_.emplace_back("encoder.layer" + std::to_string(l), dim_, heads_,
                          ffn_dim_, rng);
  for (int l = 0; l < decoder_layers_; ++l)
    pair_decoder_.emplace_back("pair_decoder.layer" + std::to_string(l), dim_,
                               heads_, ffn_dim_, rng);
  for (int l = 0; l < decoder_layers_; ++l)
    rel_decoder_.emplace_back("rel_decoder.layer" + std::to_string(l), dim_,
                              heads_, ffn_dim_, rng);

  box_head_ = nn::MlpHead("heads.box", dim_, ffn_dim_, 8, rng);
  object_head_ = nn::MlpHead("heads.object", dim_, ffn_dim_, num_objects_ + 1,
                             rng);
  verb_head_ = nn::MlpHead("heads.verb", dim_, ffn_dim_, num_verbs_, rng);
}

Var HoiDetector::stem_forward(Graph& g, const datagen::Image& image) {
  if (image.height != image_size_ || image.width != image_size_)
    throw nn::ShapeError(
        "detector expects a " + std::to_string(image_size_) + "x" +
        std::to_string(image_size_) + " image, got " +
        std::to_string(image.height) + "x" + std::to_string(image.width));

  Matrix pixels(image.height * image.width, 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c)
        pixels(y * image.width + x, c) = image.at(y, x, c);

  IntMatrix rows, cols;
  ConvIndices(image.height, image.width, 3, 4, rows, cols);
  Var patches = g.gather2d(g.input(std::move(pixels)), rows, cols);
  Var h1 = g.relu(g.add_rowvec(g.matmul(patches, g.param(stem_w1_)),
                               g.param(stem_b1_)));

  ConvIndices(patch_grid_, patch_grid_, stem_channels_, 2, rows, cols);
  Var windows = g.gather2d(h1, rows, cols);
  return g.relu(g.add_rowvec(g.matmul(windows, g.param(stem_w2_)),
                             g.param(stem_b2_)));
}

Var HoiDetector::extract_features(Graph& g, const datagen::Image& image) {
  return stem_forward(g, image);
}

Var HoiDetector::encode(Graph& g, Var x_b) {
  if (g.value(x_b).rows() != grid_h_ * grid_w_ ||
      g.value(x_b).cols() != dim_)
    throw nn::ShapeError("encode: expected " +
                         std::to_string(grid_h_ * grid_w_) + "x" +
                         std::to_string(dim_) + " backbone features");
  if (!g.value(x_b).allFinite())
    throw nn::NumericError("encode: non-finite backbone features");
  Var pos = g.input(pos_grid_);
  Var x = x_b;
  for (auto& layer : encoder_) x = layer.forward(g, x, pos);
  return x;
}

Var HoiDetector::decode_pairs(Graph& g, Var x_e) {
  Var mem_pos = g.input(pos_grid_);
  Var x = g.param(query_embed_);
  for (auto& layer : pair_decoder_)
    x = layer.forward(g, x, x_e, {}, mem_pos);
  return x;
}

Var HoiDetector::decode_relations(Graph& g, Var x_e, Var x_ho) {
  if (g.value(x_ho).rows() != num_queries_)
    throw nn::ShapeError("decode_relations: pair tokens have " +
                         std::to_string(g.value(x_ho).rows()) +
                         " rows, expected num_queries = " +
                         std::to_string(num_queries_));
  Var mem_pos = g.input(pos_grid_);
  Var x = x_ho;
  for (auto& layer : rel_decoder_)
    x = layer.forward(g, x, x_e, {}, mem_pos);
  return x;
}

FeatureBundle HoiDetector::forward(Graph& g, const datagen::Image& image) {
  FeatureBundle fb;
  fb.x_b = extract_features(g, image);
  fb.x_e = encode(g, fb.x_b);
  fb.x_ho = decode_pairs(g, fb.x_e);
  fb.x_ve = decode_relations(g, fb.x_e, fb.x_ho);
  return fb;
}

Var HoiDetector::box_outputs(Graph& g, Var x_ho) {
  return g.sigmoid(box_head_.forward(g, x_ho));
}

Var HoiDetector::object_logit_outputs(Graph& g, Var x_ho) {
  return object_head_.forward(g, x_ho);
}

Var HoiDetector::verb_logit_outputs(Graph& g, Var x_ve) {
  return verb_head_.forward(g, x_ve);
}

std::vector<Prediction> HoiDetector::predict(Graph& g, Var x_ho, Var x_ve) {
  return PredictionsFromOutputs(g.value(box_outputs(g, x_ho)),
                                g.value(object_logit_outputs(g, x_ho)),
                                g.value(verb_logit_outputs(g, x_ve)),
                                score_mode_);
}

std::vector<Prediction> PredictionsFromOutputs(const Matrix& boxes,
                                               const Matrix& obj_logits,
                                               const Matrix& verb_logits,
                                               const std::string& score_mode) {
  int num_queries = static_cast<int>(boxes.rows());
  int num_objects = static_cast<int>(obj_logits.cols()) - 1;
  int num_verbs = static_cast<int>(verb_logits.cols());
  std::vector<Prediction> out(num_queries);
  for (int q = 0; q < num_queries; ++q) {
    Prediction& p = out[q];
    p.human_box = {boxes(q, 0), boxes(q, 1), boxes(q, 2), boxes(q, 3)};
    p.object_box = {boxes(q, 4), boxes(q, 5), boxes(q, 6), boxes(q, 7)};

    p.object_logits.resize(num_objects + 1);
    double m = obj_logits.row(q).maxCoeff(), z = 0;
    for (int c = 0; c <= num_objects; ++c) {
      p.object_logits[c] = obj_logits(q, c);
      z += std::exp(obj_logits(q, c) - m);
    }
    auto softmax = [&](int c) { return std::exp(obj_logits(q, c) - m) / z; };
    p.not_noobj_prob = 1.0 - softmax(num_objects);
    p.object_class = 0;
    for (int c = 1; c < num_objects; ++c)
      if (obj_logits(q, c) > obj_logits(q, p.object_class)) p.object_class = c;
    p.object_prob = softmax(p.object_class);

    p.verb_logits.resize(num_verbs);
    p.verb_class = 0;
    for (int v = 0; v < num_verbs; ++v) {
      p.verb_logits[v] = verb_logits(q, v);
      if (verb_logits(q, v) > verb_logits(q, p.verb_class)) p.verb_class = v;
    }
    p.max_verb_prob = 1.0 / (1.0 + std::exp(-verb_logits(q, p.verb_class)));

    p.score = score_mode == "product" ? p.not_noobj_prob * p.max_verb_prob
                                      : p.object_prob + p.max_verb_prob;
  }
  return out;
}

std::vector<datagen::HOIAnnotation> HoiDetector::PseudoLabel(
    const std::vector<Prediction>& predictions, double threshold) {
  if (threshold < 0)
    throw ConfigError("pseudo-label threshold must be >= 0, got " +
                      std::to_string(threshold));
  std::vector<datagen::HOIAnnotation> out;
  for (const Prediction& p : predictions) {
    if (ComposedScore(p) > threshold) {
      datagen::HOIAnnotation a;
      a.human_box = p.human_box;
      a.object_box = p.object_box;
      a.object_class = p.object_class;
      a.verb_class = p.verb_class;
      out.push_back(a);
    }
  }
  return out;
}

ParamList HoiDetector::backbone_params() {
  return {&stem_w1_, &stem_b1_, &stem_w2_, &stem_b2_};
}

ParamList HoiDetector::encoder_params() {
  ParamList out;
  for (auto& l : encoder_) l.collect(out);
  return out;
}

ParamList HoiDetector::pair_decoder_params() {
  ParamList out{&query_embed_};
  for (auto& l : pair_decoder_) l.collect(out);
  return out;
}

ParamList HoiDetector::rel_decoder_params() {
  ParamList out;
  for (auto& l : rel_decoder_) l.collect(out);
  return out;
}

ParamList HoiDetector::head_params() {
  ParamList out;
  box_head_.collect(out);
  object_head_.collect(out);
  verb_head_.collect(out);
  return out;
}

ParamList HoiDetector::all_params() {
  ParamList out = backbone_params();
  for (auto* p : encoder_params()) out.push_back(p);
  for (auto* p : pair_decoder_params()) out.push_back(p);
  for (auto* p : rel_decoder_params()) out.push_back(p);
  for (auto* p : head_params()) out.push_back(p);
  return out;
}

void HoiDetector::set_pair_decoder_trainable(bool trainable) {
  for (nn::Parameter* p : pair_decoder_params()) p->trainable = trainable;
}

}  // namespace cefa::detector
