// include/cefa/detector/detector.h

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

#ifndef CEFA_DETECTOR_DETECTOR_H_
#define CEFA_DETECTOR_DETECTOR_H_

#include <string>
#include <vector>

#include "cefa/datagen/types.h"
#include "cefa/nn/modules.h"
#include "cefa/util/config.h"

namespace cefa::detector {

using nn::Graph;
using nn::Matrix;
using nn::ParamList;
using nn::Var;

// The four feature families flowing through the detector for one image:
// backbone grid features, encoder tokens, pair-decoder tokens, and
// relationship-decoder tokens. Token counts: X_b and X_e have grid_h*grid_w
// rows; X_ho and X_ve have num_queries rows.
struct FeatureBundle {
  Var x_b;   // (H'*W') x D_b
  Var x_e;   // (H'*W') x D_c
  Var x_ho;  // N_q x D_hd
  Var x_ve;  // N_q x D_ve
};

struct Prediction {
  datagen::Box human_box;
  datagen::Box object_box;
  std::vector<double> object_logits;  // C_obj + 1, last = no-object
  std::vector<double> verb_logits;    // C_verb, multi-label
  int object_class = 0;               // argmax over real object classes
  int verb_class = 0;                 // argmax verb
  double object_prob = 0;             // softmax prob of object_class
  double not_noobj_prob = 0;          // 1 - P(no-object)
  double max_verb_prob = 0;           // max sigmoid(verb_logits)
  double score = 0;                   // ranking confidence (model.score_mode)
};

// Composed confidence thresholded during pseudo-labeling: object-class
// probability + max verb probability, in [0,2]. Both terms are strictly
// inside (0,1), so threshold 0 keeps every query and threshold 2 drops all.
double ComposedScore(const Prediction& p);

// Builds per-query Predictions from head output matrices: sigmoid box
// coordinates (N_q x 8: human then object cxcywh), object logits
// (N_q x C_obj+1, last = no-object), verb logits (N_q x C_verb).
// score_mode `product` ranks by P(object != no-object) * max verb sigmoid;
// `additive` ranks by the composed pseudo-label score.
std::vector<Prediction> PredictionsFromOutputs(const nn::Matrix& boxes,
                                               const nn::Matrix& obj_logits,
                                               const nn::Matrix& verb_logits,
                                               const std::string& score_mode);

// Minimal one-stage HOI detector: convolutional stem, transformer encoder
// with fixed 2D sinusoidal position encodings (added to queries/keys only),
// a pair decoder driven by learned queries, a relationship decoder driven by
// the pair tokens, and box/object/verb heads.
class HoiDetector {
 public:
  HoiDetector(const Config& config, uint64_t seed);

  // Runs stem + encoder + both decoders. Throws nn::ShapeError when the
  // image does not match the configured size.
  FeatureBundle forward(Graph& g, const datagen::Image& image);

  // Stage outputs, exposed for feature-level consumers.
  Var extract_features(Graph& g, const datagen::Image& image);   // X_b
  Var encode(Graph& g, Var x_b);                                 // X_e
  Var decode_pairs(Graph& g, Var x_e);                           // X_ho
  Var decode_relations(Graph& g, Var x_e, Var x_ho);             // X_ve

  // Box/class/verb heads on the decoder tokens. Rows of x_ho/x_ve must be
  // num_queries. Runs in the caller's graph so the same activations can
  // feed training losses.
  std::vector<Prediction> predict(Graph& g, Var x_ho, Var x_ve);

  // The raw head outputs as graph nodes, for loss construction: sigmoid box
  // coordinates (N_q x 8), object logits (N_q x C_obj+1), verb logits
  // (N_q x C_verb).
  Var box_outputs(Graph& g, Var x_ho);
  Var object_logit_outputs(Graph& g, Var x_ho);
  Var verb_logit_outputs(Graph& g, Var x_ve);

  // Predictions whose composed score strictly exceeds `threshold` become
  // annotations (verb = argmax). Negative thresholds are rejected.
  static std::vector<datagen::HOIAnnotation> PseudoLabel(
      const std::vector<Prediction>& predictions, double threshold);

  // Raising the head count or image size changes these.
  int grid_h() const { return grid_h_; }
  int grid_w() const { return grid_w_; }
  int num_queries() const { return num_queries_; }
  int dim() const { return dim_; }

  // Fixed sinusoidal position table for the encoder grid, one row per
  // token. Shared with consumers that re-encode grid tokens.
  const Matrix& grid_positions() const { return pos_grid_; }

  // Parameter registries for the optimizer/checkpoint split.
  ParamList backbone_params();      // stem
  ParamList encoder_params();       // encoder stack
  ParamList pair_decoder_params();  // queries + pair decoder
  ParamList rel_decoder_params();   // relationship decoder
  ParamList head_params();          // box/object/verb heads
  ParamList all_params();

  void set_pair_decoder_trainable(bool trainable);

 private:
  Var stem_forward(Graph& g, const datagen::Image& image);

  int image_size_, patch_grid_, grid_h_, grid_w_;
  int dim_, stem_channels_, num_queries_, heads_, ffn_dim_;
  int encoder_layers_, decoder_layers_;
  int num_objects_, num_verbs_;
  std::string score_mode_;

  nn::Parameter stem_w1_, stem_b1_, stem_w2_, stem_b2_;
  nn::Parameter query_embed_;  // N_q x D learned pair queries
  Matrix pos_grid_;            // fixed sinusoidal grid encoding
  std::vector<nn::EncoderLayer> encoder_;
  std::vector<nn::DecoderLayer> pair_decoder_;
  std::vector<nn::DecoderLayer> rel_decoder_;
  nn::MlpHead box_head_;     // 8 sigmoid outputs: human + object cxcywh
  nn::MlpHead object_head_;  // C_obj + 1 logits
  nn::MlpHead verb_head_;    // C_verb logits
};

}  // namespace cefa::detector

#endif  // CEFA_DETECTOR_DETECTOR_H_
