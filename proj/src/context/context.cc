// src/context/context.cc

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

#include "cefa/context/context.h"

#include <cmath>
#include <stdexcept>

namespace cefa::context {

int MaskPlan::masked_count() const {
  int n = 0;
  for (bool m : mask) n += m ? 1 : 0;
  return n;
}

std::vector<int> MaskPlan::masked_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(mask.size()); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

std::vector<int> MaskPlan::visible_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(mask.size()); ++i)
    if (!mask[i]) out.push_back(i);
  return out;
}

MaskPlan MakeMaskPlan(int rows, int cols, double sigma, uint64_t seed) {
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw ConfigError("mask ratio must lie strictly inside (0,1), got " +
                      std::to_string(sigma));
  }
  if (rows <= 0 || cols <= 0) {
    throw ConfigError("mask grid dims must be positive");
  }
  int n = rows * cols;
  // Round half up: 144 * 0.8 = 115.2 -> 115.
  int count = static_cast<int>(std::floor(sigma * n + 0.5));

  MaskPlan plan;
  plan.rows = rows;
  plan.cols = cols;
  plan.sigma = sigma;
  plan.mask.assign(n, false);
  Rng rng(HashCombine(seed, 0x6d61736bull));
  for (int idx : rng.sample_without_replacement(n, count)) plan.mask[idx] = true;
  return plan;
}

datagen::Image MaskPixels(const datagen::Image& image, const MaskPlan& plan,
                          int patch_size) {
  if (plan.rows * patch_size != image.height ||
      plan.cols * patch_size != image.width) {
    throw nn::ShapeError("mask plan grid does not tile the image");
  }
  datagen::Image out = image;
  for (int py = 0; py < plan.rows; ++py) {
    for (int px = 0; px < plan.cols; ++px) {
      if (!plan.mask[py * plan.cols + px]) continue;
      for (int dy = 0; dy < patch_size; ++dy)
        for (int dx = 0; dx < patch_size; ++dx)
          for (int c = 0; c < 3; ++c)
            out.at(py * patch_size + dy, px * patch_size + dx, c) = 0.0;
    }
  }
  return out;
}

Matrix ImageToPatches(const datagen::Image& image, int patch_size) {
  if (image.height % patch_size != 0 || image.width % patch_size != 0) {
    throw nn::ShapeError("image dims not divisible by patch size");
  }
  int rows = image.height / patch_size, cols = image.width / patch_size;
  Matrix out(rows * cols, patch_size * patch_size * 3);
  for (int py = 0; py < rows; ++py)
    for (int px = 0; px < cols; ++px)
      for (int dy = 0; dy < patch_size; ++dy)
        for (int dx = 0; dx < patch_size; ++dx)
          for (int c = 0; c < 3; ++c)
            out(py * cols + px, (dy * patch_size + dx) * 3 + c) =
                image.at(py * patch_size + dy, px * patch_size + dx, c);
  return out;
}

datagen::Image PatchesToImage(const Matrix& patches, int height, int width,
                              int patch_size) {
  int rows = height / patch_size, cols = width / patch_size;
  if (patches.rows() != rows * cols ||
      patches.cols() != patch_size * patch_size * 3) {
    throw nn::ShapeError("patch matrix does not tile the requested image");
  }
  datagen::Image img;
  img.height = height;
  img.width = width;
  img.pix.assign(static_cast<std::size_t>(height) * width * 3, 0.0);
  for (int py = 0; py < rows; ++py)
    for (int px = 0; px < cols; ++px)
      for (int dy = 0; dy < patch_size; ++dy)
        for (int dx = 0; dx < patch_size; ++dx)
          for (int c = 0; c < 3; ++c)
            img.at(py * patch_size + dy, px * patch_size + dx, c) =
                patches(py * cols + px, (dy * patch_size + dx) * 3 + c);
  return img;
}

ContextBranch::ContextBranch(const Config& config, int dim, int patch_size,
                             uint64_t seed)
    : dim_(dim), patch_size_(patch_size) {
  sigma_ = config.get_double("ctx.sigma");
  controller_ = config.get("ctx.controller");
  loss_scope_ = config.get("ctx.loss_scope");
  conditioning_ = config.get("ctx.conditioning");
  gate_mode_ = config.get("ctx.gate_mode");
  sign_channels_ = config.get("ctx.sign_channels");
  int decoder_layers = config.get_int("ctx.decoder_layers");
  int heads = config.get_int("model.heads");

  if (!(sigma_ > 0.0 && sigma_ < 1.0)) {
    throw ConfigError("ctx.sigma must lie strictly inside (0,1)");
  }
  if (controller_ != "cross_attention" && controller_ != "self_attention" &&
      controller_ != "mlp") {
    throw ConfigError("ctx.controller must be cross_attention, self_attention "
                      "or mlp, got '" + controller_ + "'");
  }
  if (loss_scope_ != "masked_only" && loss_scope_ != "all_patches") {
    throw ConfigError("ctx.loss_scope must be masked_only or all_patches");
  }
  if (conditioning_ != "gated" && conditioning_ != "none") {
    throw ConfigError("ctx.conditioning must be gated or none");
  }
  if (gate_mode_ != "hard" && gate_mode_ != "straight_through") {
    throw ConfigError("ctx.gate_mode must be hard or straight_through");
  }
  if (sign_channels_ != "per_channel" && sign_channels_ != "per_token") {
    throw ConfigError("ctx.sign_channels must be per_channel or per_token");
  }
  if (decoder_layers <= 0) {
    throw ConfigError("ctx.decoder_layers must be positive");
  }

  Rng rng(HashCombine(seed, 0xc0d7e87ull));
  auto small_normal = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = 0.02 * rng.normal();
    return m;
  };
  mask_token_ = nn::Parameter("ctx.mask_token", small_normal(1, dim));
  seg_src_ = nn::Parameter("ctx.seg_src", small_normal(1, dim));
  seg_mask_ = nn::Parameter("ctx.seg_mask", small_normal(1, dim));

  if (controller_ == "cross_attention") {
    cross_controller_ =
        nn::DecoderLayer("ctx.controller", dim, heads, 2 * dim, rng);
  } else if (controller_ == "self_attention") {
    self_controller_ =
        nn::EncoderLayer("ctx.controller", dim, heads, 2 * dim, rng);
  } else {
    mlp_controller_ = nn::MlpHead("ctx.controller", dim, 2 * dim, dim, rng);
  }
  int sign_out = sign_channels_ == "per_channel" ? dim : 1;
  sign_head_ = nn::Linear("ctx.sign_head", dim, sign_out, rng);

  for (int i = 0; i < decoder_layers; ++i) {
    decoder_.emplace_back("ctx.decoder.layer" + std::to_string(i), dim, heads,
                          2 * dim, rng);
  }
  pixel_head_ = nn::Linear("ctx.pixel_head", dim,
                           patch_size * patch_size * 3, rng);
}

Var ContextBranch::apply_mask_tokens(Graph& g, Var x_b_gen,
                                     const MaskPlan& plan) {
  int n = static_cast<int>(g.value(x_b_gen).rows());
  if (n != plan.num_patches()) {
    throw nn::ShapeError("mask plan has " + std::to_string(plan.num_patches()) +
                         " patches, features " + std::to_string(n));
  }
  Matrix keep(n, 1), masked(n, 1);
  for (int i = 0; i < n; ++i) {
    keep(i, 0) = plan.mask[i] ? 0.0 : 1.0;
    masked(i, 0) = plan.mask[i] ? 1.0 : 0.0;
  }
  Var kept = g.mul_colvec(x_b_gen, g.input(keep));
  Var fill = g.matmul(g.input(masked), g.param(mask_token_));
  return g.add(kept, fill);
}

Var ContextBranch::conditional_controller(Graph& g, Var x_src, Var x_mask) {
  if (g.value(x_src).cols() != dim_ || g.value(x_mask).cols() != dim_) {
    throw nn::ShapeError("controller expects " + std::to_string(dim_) +
                         "-channel tokens");
  }
  Var h;
  if (controller_ == "cross_attention") {
    h = cross_controller_.forward(g, x_src, x_mask);
  } else if (controller_ == "self_attention") {
    int n_src = static_cast<int>(g.value(x_src).rows());
    Var joint = self_controller_.forward(g, g.concat_rows(x_src, x_mask));
    h = g.slice_rows(joint, 0, n_src);
  } else {  // mlp: source tokens only, no mixing with the masked stream
    h = mlp_controller_.forward(g, x_src);
  }
  return g.sigmoid(sign_head_.forward(g, h));
}

Var ContextBranch::gate_and_condition(Graph& g, Var d_sign, Var x_src) {
  const Matrix& d = g.value(d_sign);
  // Strict: exactly 0.5 gates off.
  Matrix sign = (d.array() > 0.5).cast<double>().matrix();
  bool per_token = d.cols() == 1;
  if (!per_token && (d.rows() != g.value(x_src).rows() ||
                     d.cols() != g.value(x_src).cols())) {
    throw nn::ShapeError("condition signal dims do not match source tokens");
  }
  Var gate;
  if (gate_mode_ == "straight_through") {
    // Forward equals the hard sign; gradient flows to d_sign unchanged.
    gate = g.add(g.input(sign - d), d_sign);
  } else {
    gate = g.input(sign);
  }
  return per_token ? g.mul_colvec(x_src, gate) : g.mul(gate, x_src);
}

Var ContextBranch::reconstruct(Graph& g, Var x_src_cond, Var x_mask,
                               const Matrix& pos_grid) {
  int n = static_cast<int>(g.value(x_mask).rows());
  if (pos_grid.rows() != n) {
    throw nn::ShapeError("reconstruction tokens (" + std::to_string(n) +
                         ") do not match the patch grid (" +
                         std::to_string(pos_grid.rows()) + ")");
  }
  Var mask_tok = g.add_rowvec(x_mask, g.param(seg_mask_));
  Var seq, pos;
  if (conditioning_ == "none") {
    seq = mask_tok;
    pos = g.input(pos_grid);
  } else {
    if (g.value(x_src_cond).rows() != n) {
      throw nn::ShapeError("source tokens do not match the patch grid");
    }
    Var src_tok = g.add_rowvec(x_src_cond, g.param(seg_src_));
    seq = g.concat_rows(src_tok, mask_tok);
    Matrix pos2(2 * n, pos_grid.cols());
    pos2 << pos_grid, pos_grid;
    pos = g.input(pos2);
  }
  Var h = seq;
  for (auto& layer : decoder_) h = layer.forward(g, h, pos);
  // Only the generated-image half maps to pixels.
  Var mask_half = conditioning_ == "none" ? h : g.slice_rows(h, n, n);
  return pixel_head_.forward(g, mask_half);
}

Var ContextBranch::context_loss(Graph& g, Var recon_patches,
                                const Matrix& target_patches,
                                const MaskPlan& plan) {
  const Matrix& recon = g.value(recon_patches);
  if (recon.rows() != plan.num_patches() ||
      target_patches.rows() != plan.num_patches() ||
      recon.cols() != target_patches.cols()) {
    throw nn::ShapeError("reconstruction/target/plan patch counts disagree");
  }
  if (loss_scope_ == "all_patches") {
    return g.mean_all(g.square(g.sub(recon_patches, g.input(target_patches))));
  }
  std::vector<int> masked = plan.masked_indices();
  if (masked.empty()) return g.input(Matrix::Zero(1, 1));
  Matrix target_masked(static_cast<int>(masked.size()), target_patches.cols());
  for (size_t i = 0; i < masked.size(); ++i)
    target_masked.row(static_cast<int>(i)) = target_patches.row(masked[i]);
  Var recon_masked = g.select_rows(recon_patches, masked);
  return g.mean_all(g.square(g.sub(recon_masked, g.input(target_masked))));
}

Var ContextBranch::branch_loss(Graph& g, Var x_src, Var x_mask,
                               const datagen::Image& generated,
                               const MaskPlan& plan, const Matrix& pos_grid) {
  Var x_src_cond = x_src;
  if (conditioning_ == "gated") {
    Var d_sign = conditional_controller(g, x_src, x_mask);
    x_src_cond = gate_and_condition(g, d_sign, x_src);
  }
  Var recon = reconstruct(g, x_src_cond, x_mask, pos_grid);
  return context_loss(g, recon, ImageToPatches(generated, patch_size_), plan);
}

ParamList ContextBranch::params() {
  ParamList out;
  out.push_back(&mask_token_);
  out.push_back(&seg_src_);
  out.push_back(&seg_mask_);
  if (controller_ == "cross_attention") {
    cross_controller_.collect(out);
  } else if (controller_ == "self_attention") {
    self_controller_.collect(out);
  } else {
    mlp_controller_.collect(out);
  }
  sign_head_.collect(out);
  for (auto& layer : decoder_) layer.collect(out);
  pixel_head_.collect(out);
  return out;
}

}  // namespace cefa::context
