// include/cefa/context/context.h

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

#ifndef CEFA_CONTEXT_CONTEXT_H_
#define CEFA_CONTEXT_CONTEXT_H_

#include <string>
#include <vector>

#include "cefa/datagen/types.h"
#include "cefa/nn/modules.h"
#include "cefa/util/config.h"
#include "cefa/util/rng.h"

namespace cefa::context {

using nn::Graph;
using nn::Matrix;
using nn::ParamList;
using nn::Var;

// Which patches of a (rows x cols) grid are masked. Regeneratable: the same
// (seed, sigma, dims) always yields the same plan.
struct MaskPlan {
  int rows = 0, cols = 0;
  double sigma = 0;
  std::vector<bool> mask;  // size rows*cols, true = masked

  int num_patches() const { return rows * cols; }
  int masked_count() const;
  std::vector<int> masked_indices() const;
  std::vector<int> visible_indices() const;
};

// Uniform choice without replacement of round(sigma * rows * cols) patches
// (round half up). sigma outside (0,1) is rejected.
MaskPlan MakeMaskPlan(int rows, int cols, double sigma, uint64_t seed);

// Pixel-space visualization of a plan: masked patches set to zero.
datagen::Image MaskPixels(const datagen::Image& image, const MaskPlan& plan,
                          int patch_size);

// Row p of the result holds patch p's pixels in (dy*patch+dx)*3+c order;
// patches are raster-ordered. PatchesToImage inverts it.
Matrix ImageToPatches(const datagen::Image& image, int patch_size);
datagen::Image PatchesToImage(const Matrix& patches, int height, int width,
                              int patch_size);

// Gated, condition-controlled masked-reconstruction branch. The trainer
// composes it with the detector: stem tokens of the generated image get
// masked rows replaced by a learned token (apply_mask_tokens), the shared
// encoder produces X_mask, the paired original image's encoder tokens are
// X_src, and this branch turns them into a reconstruction penalty on the
// generated image's pixels.
class ContextBranch {
 public:
  ContextBranch(const Config& config, int dim, int patch_size, uint64_t seed);

  // Replaces masked rows of the stem tokens with the learned mask token.
  Var apply_mask_tokens(Graph& g, Var x_b_gen, const MaskPlan& plan);

  // Per-token condition signal D_sign in (0,1): cross_attention (default)
  // attends from X_src (query) into X_mask (key/value); self_attention mixes
  // the concatenated sequence; mlp looks at X_src alone. Output is one value
  // per channel, or one per token when ctx.sign_channels = per_token.
  Var conditional_controller(Graph& g, Var x_src, Var x_mask);

  // X_src_cond = Sign (.) X_src with Sign the strict >0.5 binarization of
  // D_sign (exact 0.5 gates off). The threshold is a constant during
  // gradient computation; ctx.gate_mode = straight_through instead passes
  // the upstream gradient to D_sign as if the gate were soft.
  Var gate_and_condition(Graph& g, Var d_sign, Var x_src);

  // MAE-style reconstruction over [X_src_cond ; X_mask]: segment embeddings,
  // a small transformer, then a pixel head applied to the X_mask half only,
  // so output row p is patch p of the generated image. With
  // ctx.conditioning = none the source tokens are dropped entirely and the
  // decoder sees X_mask alone.
  Var reconstruct(Graph& g, Var x_src_cond, Var x_mask, const Matrix& pos_grid);

  // Mean squared error between reconstruction and target patches over the
  // configured scope: masked_only (default) or all_patches.
  Var context_loss(Graph& g, Var recon_patches, const Matrix& target_patches,
                   const MaskPlan& plan);

  // Full branch for one (source, generated) pair given already-encoded
  // token matrices; pos_grid is the detector's grid position table.
  Var branch_loss(Graph& g, Var x_src, Var x_mask,
                  const datagen::Image& generated, const MaskPlan& plan,
                  const Matrix& pos_grid);

  double sigma() const { return sigma_; }
  const std::string& controller() const { return controller_; }
  bool conditioned() const { return conditioning_ == "gated"; }
  ParamList params();

 private:
  int dim_, patch_size_;
  double sigma_;
  std::string controller_, loss_scope_, conditioning_, gate_mode_,
      sign_channels_;

  nn::Parameter mask_token_;             // 1 x dim
  nn::Parameter seg_src_, seg_mask_;     // 1 x dim segment embeddings
  nn::DecoderLayer cross_controller_;    // cross_attention variant
  nn::EncoderLayer self_controller_;     // self_attention variant
  nn::MlpHead mlp_controller_;           // mlp variant
  nn::Linear sign_head_;                 // dim -> dim or dim -> 1
  std::vector<nn::EncoderLayer> decoder_;
  nn::Linear pixel_head_;                // dim -> patch pixels
};

}  // namespace cefa::context

#endif  // CEFA_CONTEXT_CONTEXT_H_
