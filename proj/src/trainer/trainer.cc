// src/trainer/trainer.cc

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

#include "cefa/trainer/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "cefa/nn/checkpoint.h"
#include "cefa/util/rng.h"
#include "json.hpp"

namespace cefa::trainer {

namespace {

using datagen::Box;
using datagen::Domain;
using datagen::HOIAnnotation;
using datagen::Sample;

double RelDiff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

struct Corners {
  double x1, y1, x2, y2;
};

Corners ToCorners(const Box& b) {
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

void CheckAnnotations(const std::vector<HOIAnnotation>& truth, int c_obj,
                      int c_verb, int n_q) {
  if (static_cast<int>(truth.size()) > n_q)
    throw datagen::ValidationError("more annotations than queries: " +
                                   std::to_string(truth.size()) + " > " +
                                   std::to_string(n_q));
  for (const auto& a : truth) {
    if (a.object_class < 0 || a.object_class >= c_obj)
      throw datagen::ValidationError("annotation object class " +
                                     std::to_string(a.object_class) +
                                     " outside [0, " + std::to_string(c_obj) +
                                     ")");
    if (a.verb_class < 0 || a.verb_class >= c_verb)
      throw datagen::ValidationError("annotation verb class " +
                                     std::to_string(a.verb_class) +
                                     " outside [0, " + std::to_string(c_verb) +
                                     ")");
  }
}

// Shared form of the matched set-prediction loss. `noobj_when_empty`
// distinguishes labeled batches (empty truth still supervises no-object)
// from pseudo-labeled ones (empty truth contributes exactly zero).
Var HoiLossImpl(Graph& g, const HeadOutputs& out,
                const std::vector<HOIAnnotation>& truth, const Config& config,
                bool noobj_when_empty) {
  const Matrix& boxes = g.value(out.boxes);
  const Matrix& obj_logits = g.value(out.obj_logits);
  const Matrix& verb_logits = g.value(out.verb_logits);
  int n_q = static_cast<int>(boxes.rows());
  if (boxes.cols() != 8) throw nn::ShapeError("box outputs must be N x 8");
  if (obj_logits.rows() != n_q || verb_logits.rows() != n_q)
    throw nn::ShapeError("head outputs disagree on query count");
  int c_obj = static_cast<int>(obj_logits.cols()) - 1;
  int c_verb = static_cast<int>(verb_logits.cols());
  if (c_obj < 1 || c_verb < 1)
    throw nn::ShapeError("logit heads need at least one real class");

  double w_l1 = config.get_double("train.weight_l1");
  double w_giou = config.get_double("train.weight_giou");
  double w_obj = config.get_double("train.weight_obj");
  double w_verb = config.get_double("train.weight_verb");
  double w_noobj = config.get_double("train.weight_noobj");

  std::vector<double> class_w(c_obj + 1, 1.0);
  class_w[c_obj] = w_noobj;

  if (truth.empty()) {
    if (!noobj_when_empty) return g.input(Matrix::Zero(1, 1));
    std::vector<int> targets(n_q, c_obj);
    return g.scale(g.softmax_xent_rows(out.obj_logits, targets, class_w),
                   w_obj);
  }

  CheckAnnotations(truth, c_obj, c_verb, n_q);
  int n_t = static_cast<int>(truth.size());
  Matrix cost = BuildMatchCost(boxes, obj_logits, verb_logits, truth, config);
  std::vector<int> assign = HungarianMatch(cost);

  // Box regression on matched queries, normalized per annotation.
  Matrix target_boxes(n_t, 8);
  for (int t = 0; t < n_t; ++t) {
    const Box& h = truth[t].human_box;
    const Box& o = truth[t].object_box;
    target_boxes.row(t) << h.cx, h.cy, h.w, h.h, o.cx, o.cy, o.w, o.h;
  }
  Var matched = g.select_rows(out.boxes, assign);
  Var l1_sum = g.sum_all(g.abs_op(g.sub(matched, g.input(target_boxes))));
  Var giou_sum =
      g.add(GiouLossSum(g, g.slice_cols(matched, 0, 4),
                        target_boxes.leftCols(4)),
            GiouLossSum(g, g.slice_cols(matched, 4, 4),
                        target_boxes.rightCols(4)));

  // Object classification on all queries; unmatched rows target no-object.
  std::vector<int> targets(n_q, c_obj);
  for (int t = 0; t < n_t; ++t) targets[assign[t]] = truth[t].object_class;
  Var obj_ce = g.softmax_xent_rows(out.obj_logits, targets, class_w);

  // Verb recognition on matched queries only.
  Matrix verb_targets = Matrix::Zero(n_t, c_verb);
  for (int t = 0; t < n_t; ++t) verb_targets(t, truth[t].verb_class) = 1.0;
  Var verb_bce =
      g.bce_with_logits(g.select_rows(out.verb_logits, assign), verb_targets);

  double inv_t = 1.0 / n_t;
  Var box_terms = g.add(g.scale(l1_sum, w_l1 * inv_t),
                        g.scale(giou_sum, w_giou * inv_t));
  Var cls_terms = g.add(g.scale(obj_ce, w_obj), g.scale(verb_bce, w_verb));
  return g.add(box_terms, cls_terms);
}

void AccumulateInto(LossBreakdown& acc, const LossBreakdown& b) {
  acc.l_sup += b.l_sup;
  acc.l_unsup += b.l_unsup;
  acc.l_enc += b.l_enc;
  acc.l_inst += b.l_inst;
  acc.l_adv += b.l_adv;
  acc.l_adv_gen += b.l_adv_gen;
  acc.l_ctx += b.l_ctx;
  acc.l_src += b.l_src;
  acc.l_gen += b.l_gen;
  acc.total += b.total;
}

LossBreakdown MeanOf(const LossBreakdown& acc, int n) {
  LossBreakdown out = acc;
  if (n <= 0) return out;
  double inv = 1.0 / n;
  out.l_sup *= inv;
  out.l_unsup *= inv;
  out.l_enc *= inv;
  out.l_inst *= inv;
  out.l_adv *= inv;
  out.l_adv_gen *= inv;
  out.l_ctx *= inv;
  out.l_src *= inv;
  out.l_gen *= inv;
  out.total *= inv;
  return out;
}

}  // namespace

bool LossBreakdown::finite() const {
  for (double v : {l_sup, l_unsup, l_enc, l_inst, l_adv, l_adv_gen, l_ctx,
                   l_src, l_gen, total})
    if (!std::isfinite(v)) return false;
  return true;
}

bool LossBreakdown::consistent(double rel_tol) const {
  return RelDiff(l_adv, l_enc + l_inst) <= rel_tol &&
         RelDiff(l_src, l_sup + l_adv) <= rel_tol &&
         RelDiff(l_gen, l_unsup + l_ctx + l_adv_gen) <= rel_tol &&
         RelDiff(total, l_src + l_gen) <= rel_tol;
}

std::string LossBreakdown::describe() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "l_sup=%.6g l_unsup=%.6g l_enc=%.6g l_inst=%.6g l_adv=%.6g "
                "l_adv_gen=%.6g l_ctx=%.6g l_src=%.6g l_gen=%.6g total=%.6g",
                l_sup, l_unsup, l_enc, l_inst, l_adv, l_adv_gen, l_ctx, l_src,
                l_gen, total);
  return buf;
}

std::vector<int> HungarianMatch(const Matrix& cost) {
  int n = static_cast<int>(cost.rows());
  int m = static_cast<int>(cost.cols());
  if (n == 0) return {};
  if (n > m)
    throw nn::ShapeError("HungarianMatch: rows must not exceed columns");
  // NaN costs break the strict-comparison invariants of the potentials
  // sweep (every candidate would be rejected), so fail loudly instead.
  if (!cost.allFinite())
    throw nn::NumericError("HungarianMatch: non-finite matching cost");
  const double kInf = std::numeric_limits<double>::infinity();
  // Potentials formulation with 1-based sentinels; p[j] is the row matched
  // to column j, column 0 is the virtual start of each augmenting path.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double GeneralizedIou(const Box& a, const Box& b) {
  Corners ca = ToCorners(a), cb = ToCorners(b);
  double inter = std::max(0.0, std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1)) *
                 std::max(0.0, std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1));
  double uni = a.w * a.h + b.w * b.h - inter;
  if (uni <= 0) return 0.0;
  double enclosing = (std::max(ca.x2, cb.x2) - std::min(ca.x1, cb.x1)) *
                     (std::max(ca.y2, cb.y2) - std::min(ca.y1, cb.y1));
  return inter / uni - (enclosing - uni) / enclosing;
}

Var GiouLossSum(Graph& g, Var pred, const Matrix& target) {
  const Matrix& p = g.value(pred);
  if (p.cols() != 4 || target.cols() != 4 || p.rows() != target.rows())
    throw nn::ShapeError("GiouLossSum: need two N x 4 box blocks");
  int n = static_cast<int>(p.rows());

  Var cx = g.slice_cols(pred, 0, 1), cy = g.slice_cols(pred, 1, 1);
  Var w = g.slice_cols(pred, 2, 1), h = g.slice_cols(pred, 3, 1);
  Var half_w = g.scale(w, 0.5), half_h = g.scale(h, 0.5);
  Var px1 = g.sub(cx, half_w), px2 = g.add(cx, half_w);
  Var py1 = g.sub(cy, half_h), py2 = g.add(cy, half_h);

  Matrix tx1(n, 1), ty1(n, 1), tx2(n, 1), ty2(n, 1), tarea(n, 1);
  for (int i = 0; i < n; ++i) {
    Box b{target(i, 0), target(i, 1), target(i, 2), target(i, 3)};
    Corners c = ToCorners(b);
    tx1(i, 0) = c.x1;
    ty1(i, 0) = c.y1;
    tx2(i, 0) = c.x2;
    ty2(i, 0) = c.y2;
    tarea(i, 0) = b.w * b.h;
  }
  Var bx1 = g.input(tx1), by1 = g.input(ty1);
  Var bx2 = g.input(tx2), by2 = g.input(ty2);

  Var iw = g.relu(g.sub(g.minimum(px2, bx2), g.maximum(px1, bx1)));
  Var ih = g.relu(g.sub(g.minimum(py2, by2), g.maximum(py1, by1)));
  Var inter = g.mul(iw, ih);
  Var uni = g.sub(g.add(g.mul(w, h), g.input(tarea)), inter);
  Var ew = g.sub(g.maximum(px2, bx2), g.minimum(px1, bx1));
  Var eh = g.sub(g.maximum(py2, by2), g.minimum(py1, by1));
  Var enclosing = g.mul(ew, eh);
  Var giou =
      g.sub(g.div(inter, uni), g.div(g.sub(enclosing, uni), enclosing));
  return g.sum_all(g.sub(g.input(Matrix::Ones(n, 1)), giou));
}

Matrix BuildMatchCost(const Matrix& boxes, const Matrix& obj_logits,
                      const Matrix& verb_logits,
                      const std::vector<HOIAnnotation>& truth,
                      const Config& config) {
  int n_q = static_cast<int>(boxes.rows());
  int c_obj = static_cast<int>(obj_logits.cols()) - 1;
  int c_verb = static_cast<int>(verb_logits.cols());
  int n_t = static_cast<int>(truth.size());
  CheckAnnotations(truth, c_obj, c_verb, n_q);

  double w_l1 = config.get_double("train.weight_l1");
  double w_giou = config.get_double("train.weight_giou");
  double w_obj = config.get_double("train.weight_obj");
  double w_verb = config.get_double("train.weight_verb");

  // Row-stable softmax over object logits, sigmoid over verb logits.
  Matrix obj_probs(n_q, c_obj + 1);
  for (int q = 0; q < n_q; ++q) {
    double mx = obj_logits.row(q).maxCoeff();
    Eigen::RowVectorXd e = (obj_logits.row(q).array() - mx).exp();
    obj_probs.row(q) = e / e.sum();
  }

  Matrix cost(n_t, n_q);
  for (int t = 0; t < n_t; ++t) {
    const HOIAnnotation& a = truth[t];
    for (int q = 0; q < n_q; ++q) {
      Box ph{boxes(q, 0), boxes(q, 1), boxes(q, 2), boxes(q, 3)};
      Box po{boxes(q, 4), boxes(q, 5), boxes(q, 6), boxes(q, 7)};
      double l1 = std::abs(ph.cx - a.human_box.cx) +
                  std::abs(ph.cy - a.human_box.cy) +
                  std::abs(ph.w - a.human_box.w) +
                  std::abs(ph.h - a.human_box.h) +
                  std::abs(po.cx - a.object_box.cx) +
                  std::abs(po.cy - a.object_box.cy) +
                  std::abs(po.w - a.object_box.w) +
                  std::abs(po.h - a.object_box.h);
      double giou_term = (1.0 - GeneralizedIou(ph, a.human_box)) +
                         (1.0 - GeneralizedIou(po, a.object_box));
      double verb_prob = 1.0 / (1.0 + std::exp(-verb_logits(q, a.verb_class)));
      cost(t, q) = w_l1 * l1 + w_giou * giou_term -
                   w_obj * obj_probs(q, a.object_class) - w_verb * verb_prob;
    }
  }
  return cost;
}

Var SupervisedHoiLoss(Graph& g, const HeadOutputs& out,
                      const std::vector<HOIAnnotation>& truth,
                      const Config& config) {
  return HoiLossImpl(g, out, truth, config, /*noobj_when_empty=*/true);
}

Var UnsupHoiLoss(Graph& g, const HeadOutputs& out,
                 const std::vector<HOIAnnotation>& truth,
                 const Config& config) {
  return HoiLossImpl(g, out, truth, config, /*noobj_when_empty=*/false);
}

Trainer::Trainer(const Config& config, uint64_t seed)
    : config_(config),
      seed_(seed),
      det_(config, HashCombine(seed, 0xde7ec7ull)) {
  align_on_ = config.get_bool("align.enabled");
  ctx_on_ = config.get_bool("ctx.enabled");
  use_generated_ = config.get_bool("train.use_generated");
  trust_prompt_labels_ = config.get_bool("train.trust_prompt_labels");
  pseudo_threshold_ = config.get_double("train.pseudo_threshold");
  weight_adv_ = config.get_double("train.weight_adv");
  weight_ctx_ = config.get_double("train.weight_ctx");
  num_verbs_ = config.get_int("data.num_verbs");

  const std::string& freeze = config.get("train.freeze");
  if (freeze != "pair_decoder" && freeze != "none")
    throw ConfigError("train.freeze must be pair_decoder or none, got '" +
                      freeze + "'");

  if (align_on_) {
    aligner_ = std::make_unique<alignment::FeatureAligner>(
        config, det_.dim(), det_.dim(), det_.dim(),
        HashCombine(seed, 0xa119d0ull));
  }
  if (ctx_on_) {
    int patch_size = config.get_int("data.patch_size");
    int image_size = config.get_int("data.image_size");
    if (patch_size <= 0 || image_size / patch_size != det_.grid_h() ||
        image_size % patch_size != 0)
      throw ConfigError(
          "context branch needs one encoder token per image patch: "
          "data.patch_size must equal the detector's token stride");
    ctx_ = std::make_unique<context::ContextBranch>(
        config, det_.dim(), patch_size, HashCombine(seed, 0xc0d7e8ull));
  }

  double lr = config.get_double("train.lr");
  double lr_backbone = config.get_double("train.lr_backbone");
  double lr_disc = config.get_double("train.lr_disc");

  nn::ParamGroup backbone{det_.backbone_params(), lr_backbone};
  nn::ParamGroup rest{det_.encoder_params(), lr};
  for (auto* p : det_.pair_decoder_params()) rest.params.push_back(p);
  for (auto* p : det_.rel_decoder_params()) rest.params.push_back(p);
  for (auto* p : det_.head_params()) rest.params.push_back(p);
  if (aligner_)
    for (auto* p : aligner_->aggregator_params()) rest.params.push_back(p);
  if (ctx_)
    for (auto* p : ctx_->params()) rest.params.push_back(p);
  model_opt_ = std::make_unique<nn::Adam>(
      std::vector<nn::ParamGroup>{backbone, rest});

  nn::ParamGroup disc{aligner_ ? aligner_->discriminator_params()
                               : ParamList{},
                      lr_disc};
  disc_opt_ =
      std::make_unique<nn::Adam>(std::vector<nn::ParamGroup>{disc});

  set_phase(Phase::pretrain);
}

void Trainer::set_phase(Phase phase) {
  phase_ = phase;
  step_ = 0;
  if (phase == Phase::pretrain) {
    det_.set_pair_decoder_trainable(true);
  } else {
    det_.set_pair_decoder_trainable(config_.get("train.freeze") != "pair_decoder");
  }
}

Trainer::ImagePass Trainer::run_image(Graph& g, const Sample& s) {
  ImagePass pass;
  pass.sample = &s;
  pass.fb = det_.forward(g, s.image);
  pass.heads = HeadOutputs{det_.box_outputs(g, pass.fb.x_ho),
                           det_.object_logit_outputs(g, pass.fb.x_ho),
                           det_.verb_logit_outputs(g, pass.fb.x_ve)};
  pass.preds = detector::PredictionsFromOutputs(
      g.value(pass.heads.boxes), g.value(pass.heads.obj_logits),
      g.value(pass.heads.verb_logits), config_.get("model.score_mode"));
  for (const auto& a : s.annotations)
    pass.categories.push_back(
        datagen::TripletCategory(a.verb_class, a.object_class, num_verbs_));
  return pass;
}

int Trainer::pick_source_for(const std::vector<ImagePass>& src_passes,
                             int prompt_category, Rng& rng) const {
  for (size_t i = 0; i < src_passes.size(); ++i)
    for (int c : src_passes[i].categories)
      if (c == prompt_category) return static_cast<int>(i);
  return rng.uniform_int(static_cast<int>(src_passes.size()));
}

LossBreakdown Trainer::forward_losses(
    Graph& g, const std::vector<const Sample*>& batch_src,
    const std::vector<const Sample*>& batch_gen, Var* total) {
  if (batch_src.empty())
    throw datagen::ValidationError("source batch must be nonempty");

  bool finetune = phase_ == Phase::finetune;
  bool gen_active = finetune && use_generated_ && !batch_gen.empty();
  bool align_active = finetune && align_on_;
  bool ctx_active = finetune && ctx_on_ && gen_active;
  double lambda = align_active ? aligner_->lambda_at(step_) : 0.0;
  Rng step_rng(HashCombine(HashCombine(seed_, 0x57e9ull),
                           static_cast<uint64_t>(step_)));

  auto zero = [&g] { return g.input(Matrix::Zero(1, 1)); };
  auto scalar = [&g](Var v) { return g.value(v)(0, 0); };

  std::vector<ImagePass> src_passes;
  src_passes.reserve(batch_src.size());
  Var sup_sum = zero(), enc_sum = zero(), inst_sum = zero();
  for (const Sample* s : batch_src) {
    ImagePass pass = run_image(g, *s);
    sup_sum =
        g.add(sup_sum, SupervisedHoiLoss(g, pass.heads, s->annotations, config_));
    if (align_active) {
      alignment::AlignmentInputs in;
      in.x_b = pass.fb.x_b;
      in.x_e = pass.fb.x_e;
      in.x_ve = pass.fb.x_ve;
      for (const auto& p : pass.preds)
        in.scores.push_back(detector::ComposedScore(p));
      in.domain = Domain::original;
      alignment::AdversarialLosses al = aligner_->adversarial_loss(g, in, lambda);
      enc_sum = g.add(enc_sum, al.l_enc);
      inst_sum = g.add(inst_sum, al.l_inst);
    }
    src_passes.push_back(std::move(pass));
  }
  double inv_src = 1.0 / batch_src.size();
  Var l_sup = g.scale(sup_sum, inv_src);
  Var l_enc = g.scale(enc_sum, weight_adv_ * inv_src);
  Var l_inst = g.scale(inst_sum, weight_adv_ * inv_src);
  Var l_adv = g.add(l_enc, l_inst);
  Var l_src = g.add(l_sup, l_adv);

  Var l_unsup = zero(), l_ctx = zero(), l_adv_gen = zero();
  if (gen_active) {
    Var unsup_sum = zero(), adv_gen_sum = zero(), ctx_sum = zero();
    int gen_index = 0;
    for (const Sample* s : batch_gen) {
      ImagePass pass = run_image(g, *s);
      std::vector<HOIAnnotation> pseudo =
          trust_prompt_labels_
              ? s->prompt_annotations
              : detector::HoiDetector::PseudoLabel(pass.preds,
                                                   pseudo_threshold_);
      unsup_sum = g.add(unsup_sum, UnsupHoiLoss(g, pass.heads, pseudo, config_));
      if (align_active) {
        alignment::AlignmentInputs in;
        in.x_b = pass.fb.x_b;
        in.x_e = pass.fb.x_e;
        in.x_ve = pass.fb.x_ve;
        for (const auto& p : pass.preds)
          in.scores.push_back(detector::ComposedScore(p));
        in.domain = Domain::generated;
        alignment::AdversarialLosses al =
            aligner_->adversarial_loss(g, in, lambda);
        adv_gen_sum = g.add(adv_gen_sum, al.l_adv);
      }
      if (ctx_active) {
        int src_idx =
            pick_source_for(src_passes, s->prompt_category, step_rng);
        context::MaskPlan plan = context::MakeMaskPlan(
            det_.grid_h(), det_.grid_w(), ctx_->sigma(),
            HashCombine(HashCombine(seed_, 0x6d61ull),
                        static_cast<uint64_t>(step_) * 1000 + gen_index));
        Var masked_b = ctx_->apply_mask_tokens(g, pass.fb.x_b, plan);
        Var x_mask = det_.encode(g, masked_b);
        ctx_sum = g.add(
            ctx_sum, ctx_->branch_loss(g, src_passes[src_idx].fb.x_e, x_mask,
                                       s->image, plan, det_.grid_positions()));
      }
      ++gen_index;
    }
    double inv_gen = 1.0 / batch_gen.size();
    l_unsup = g.scale(unsup_sum, inv_gen);
    l_adv_gen = g.scale(adv_gen_sum, weight_adv_ * inv_gen);
    l_ctx = g.scale(ctx_sum, weight_ctx_ * inv_gen);
  }
  Var l_gen = g.add(g.add(l_unsup, l_ctx), l_adv_gen);
  Var tot = g.add(l_src, l_gen);
  if (total) *total = tot;

  LossBreakdown b;
  b.l_sup = scalar(l_sup);
  b.l_unsup = scalar(l_unsup);
  b.l_enc = scalar(l_enc);
  b.l_inst = scalar(l_inst);
  b.l_adv = scalar(l_adv);
  b.l_adv_gen = scalar(l_adv_gen);
  b.l_ctx = scalar(l_ctx);
  b.l_src = scalar(l_src);
  b.l_gen = scalar(l_gen);
  b.total = scalar(tot);
  return b;
}

LossBreakdown Trainer::train_step(
    const std::vector<const Sample*>& batch_src,
    const std::vector<const Sample*>& batch_gen) {
  model_opt_->zero_grad();
  disc_opt_->zero_grad();
  Graph g;
  Var total;
  LossBreakdown b = forward_losses(g, batch_src, batch_gen, &total);
  if (!b.finite())
    throw nn::NumericError("non-finite training loss, aborting: " +
                           b.describe());
  if (!b.consistent())
    throw nn::NumericError("loss ledger identities violated: " + b.describe());
  g.backward(total);
  model_opt_->step();
  disc_opt_->step();
  ++step_;
  return b;
}

ParamList Trainer::all_params() {
  ParamList out = det_.all_params();
  if (aligner_) {
    for (auto* p : aligner_->discriminator_params()) out.push_back(p);
    for (auto* p : aligner_->aggregator_params()) out.push_back(p);
  }
  if (ctx_)
    for (auto* p : ctx_->params()) out.push_back(p);
  return out;
}

eval::EvalReport EvaluateDetector(detector::HoiDetector& det,
                                  const datagen::BuiltDataset& ds,
                                  const Config& config) {
  std::vector<eval::ScoredDetection> detections;
  std::vector<eval::GroundTruthInstance> gts;
  for (const std::string& id : ds.manifest.test_ids) {
    const Sample& s = ds.by_id(id);
    Graph g(false);
    detector::FeatureBundle fb = det.forward(g, s.image);
    std::vector<detector::Prediction> preds = det.predict(g, fb.x_ho, fb.x_ve);
    for (size_t q = 0; q < preds.size(); ++q) {
      const detector::Prediction& p = preds[q];
      int cat = ds.manifest.category_of(p.verb_class, p.object_class);
      if (cat < 0) continue;  // pair absent from the label space
      detections.push_back(eval::ScoredDetection{
          id, cat, p.score, p.human_box, p.object_box, static_cast<int>(q)});
    }
    for (const HOIAnnotation& a : s.annotations) {
      int cat = ds.manifest.category_of(a.verb_class, a.object_class);
      if (cat < 0)
        throw datagen::ValidationError(
            "test annotation names a (verb, object) pair outside the "
            "manifest: sample " + id);
      gts.push_back(
          eval::GroundTruthInstance{id, cat, a.human_box, a.object_box});
    }
  }
  return eval::ComputeMap(std::move(detections), gts, ds.manifest, config);
}

double MeasureDomainProbe(detector::HoiDetector& det,
                          const datagen::BuiltDataset& ds,
                          const Config& config, uint64_t seed,
                          int max_per_domain) {
  std::vector<std::string> src_ids, gen_ids;
  for (const std::string& id : ds.manifest.train_ids) {
    (ds.by_id(id).domain == Domain::original ? src_ids : gen_ids).push_back(id);
  }
  if (static_cast<int>(src_ids.size()) < 10 ||
      static_cast<int>(gen_ids.size()) < 10)
    return -1.0;
  Rng rng(HashCombine(seed, 0x9c0be5ull));
  rng.shuffle(src_ids);
  rng.shuffle(gen_ids);
  if (static_cast<int>(src_ids.size()) > max_per_domain)
    src_ids.resize(max_per_domain);
  if (static_cast<int>(gen_ids.size()) > max_per_domain)
    gen_ids.resize(max_per_domain);

  auto pooled = [&](const std::vector<std::string>& ids) {
    Matrix f(ids.size(), det.dim());
    for (size_t i = 0; i < ids.size(); ++i) {
      Graph g(false);
      Var x_b = det.extract_features(g, ds.by_id(ids[i]).image);
      Var x_e = det.encode(g, x_b);
      f.row(i) = g.value(x_e).colwise().mean();
    }
    return f;
  };
  return eval::DomainProbe(pooled(src_ids), pooled(gen_ids),
                           config.get_int("probe.folds"),
                           HashCombine(seed, 0x96d0ull));
}

namespace {

// Identity of a pretraining run: architecture, dataset recipe, supervised
// stage hyperparameters, and seed. Two configs with equal fingerprints
// produce bit-identical pretrained detectors.
uint64_t PretrainFingerprint(const Config& config) {
  uint64_t h = config.architecture_fingerprint();
  auto mix = [&h, &config](const std::string& key) {
    for (char c : key + "=" + config.get(key) + ";")
      h = (h ^ static_cast<uint64_t>(static_cast<unsigned char>(c))) *
          0x100000001b3ull;
  };
  // data.per_rare only sizes the generated supplement, which pretraining
  // never sees; leaving it out lets supplement sweeps share one pretrain.
  for (const auto& [key, value] : config.values())
    if (key.rfind("data.", 0) == 0 && key != "data.per_rare") mix(key);
  for (const char* key :
       {"train.lr", "train.lr_backbone", "train.batch_src",
        "train.pretrain_epochs", "train.max_steps", "train.weight_l1",
        "train.weight_giou", "train.weight_obj", "train.weight_verb",
        "train.weight_noobj", "train.seed"})
    mix(key);
  return h;
}

std::string HexString(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExperimentArtifacts RunExperiment(const Config& config,
                                  const datagen::BuiltDataset& ds,
                                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  uint64_t seed = static_cast<uint64_t>(config.get_int("train.seed"));
  int batch_src = config.get_int("train.batch_src");
  int batch_gen = config.get_int("train.batch_gen");
  int pretrain_epochs = config.get_int("train.pretrain_epochs");
  int finetune_epochs = config.get_int("train.epochs");
  int eval_every = config.get_int("train.eval_every");
  long long max_steps = config.get_int("train.max_steps");
  if (batch_src <= 0 || batch_gen <= 0)
    throw ConfigError("batch sizes must be positive");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");

  Trainer trainer(config, seed);

  std::vector<const Sample*> src, gen;
  for (const std::string& id : ds.manifest.train_ids) {
    const Sample& s = ds.by_id(id);
    (s.domain == Domain::original ? src : gen).push_back(&s);
  }
  if (src.empty())
    throw datagen::ValidationError("no original-domain training samples");

  std::string metrics_path = out_dir + "/metrics.jsonl";
  std::ofstream metrics(metrics_path);
  if (!metrics)
    throw datagen::IoError("cannot write metrics to " + metrics_path);

  double last_map_full = -1, last_map_rare = -1, last_map_nonrare = -1;
  double last_probe = -1;
  auto write_record = [&](const char* stage, int epoch,
                          const LossBreakdown& mean, bool evaluated) {
    nlohmann::json j;
    j["stage"] = stage;
    j["epoch"] = epoch;
    j["l_sup"] = mean.l_sup;
    j["l_unsup"] = mean.l_unsup;
    j["l_enc"] = mean.l_enc;
    j["l_inst"] = mean.l_inst;
    j["l_adv"] = mean.l_adv;
    j["l_adv_gen"] = mean.l_adv_gen;
    j["l_ctx"] = mean.l_ctx;
    j["l_src"] = mean.l_src;
    j["l_gen"] = mean.l_gen;
    j["total"] = mean.total;
    j["map_full"] = last_map_full;
    j["map_rare"] = last_map_rare;
    j["map_nonrare"] = last_map_nonrare;
    j["domain_probe_acc"] = last_probe;
    j["evaluated"] = evaluated;
    metrics << j.dump() << "\n";
    metrics.flush();
  };

  // Supervised pretraining, reused from the cache when available.
  const std::string& cache_dir = config.get("train.pretrain_cache");
  std::string cache_path;
  bool pretrained_loaded = false;
  if (!cache_dir.empty()) {
    fs::create_directories(cache_dir);
    cache_path = cache_dir + "/pretrain_" +
                 HexString(PretrainFingerprint(config)) + ".ckpt";
    if (fs::exists(cache_path)) {
      nn::LoadCheckpoint(cache_path, trainer.detector().all_params(),
                         PretrainFingerprint(config));
      pretrained_loaded = true;
    }
  }
  if (!pretrained_loaded) {
    trainer.set_phase(Trainer::Phase::pretrain);
    Rng order_rng(HashCombine(seed, 0x0dede5ull));
    long long steps_done = 0;
    for (int epoch = 1; epoch <= pretrain_epochs; ++epoch) {
      std::vector<const Sample*> order = src;
      order_rng.shuffle(order);
      LossBreakdown acc;
      int n_steps = 0;
      for (size_t i = 0;
           i < order.size() && (max_steps <= 0 || steps_done < max_steps);
           i += batch_src) {
        size_t end = std::min(order.size(), i + batch_src);
        std::vector<const Sample*> batch(order.begin() + i,
                                         order.begin() + end);
        AccumulateInto(acc, trainer.train_step(batch, {}));
        ++n_steps;
        ++steps_done;
      }
      write_record("pretrain", epoch, MeanOf(acc, n_steps), false);
      if (max_steps > 0 && steps_done >= max_steps) break;
    }
    if (!cache_path.empty()) {
      std::string tmp = cache_path + ".tmp";
      nn::SaveCheckpoint(tmp, trainer.detector().all_params(),
                         PretrainFingerprint(config));
      fs::rename(tmp, cache_path);
    }
  }

  // Adaptation fine-tuning with the configured toggles.
  trainer.set_phase(Trainer::Phase::finetune);
  Rng order_rng(HashCombine(seed, 0xf17e7ull));
  std::vector<const Sample*> gen_order = gen;
  order_rng.shuffle(gen_order);
  size_t gen_cursor = 0;
  bool use_gen = config.get_bool("train.use_generated") && !gen.empty();
  long long steps_done = 0;
  for (int epoch = 1; epoch <= finetune_epochs; ++epoch) {
    std::vector<const Sample*> order = src;
    order_rng.shuffle(order);
    LossBreakdown acc;
    int n_steps = 0;
    for (size_t i = 0;
         i < order.size() && (max_steps <= 0 || steps_done < max_steps);
         i += batch_src) {
      size_t end = std::min(order.size(), i + batch_src);
      std::vector<const Sample*> batch(order.begin() + i, order.begin() + end);
      std::vector<const Sample*> gbatch;
      if (use_gen) {
        for (int k = 0; k < batch_gen; ++k) {
          if (gen_cursor >= gen_order.size()) {
            order_rng.shuffle(gen_order);
            gen_cursor = 0;
          }
          gbatch.push_back(gen_order[gen_cursor++]);
        }
      }
      AccumulateInto(acc, trainer.train_step(batch, gbatch));
      ++n_steps;
      ++steps_done;
    }
    bool capped = max_steps > 0 && steps_done >= max_steps;
    bool do_eval =
        (epoch % eval_every == 0) || epoch == finetune_epochs || capped;
    if (do_eval) {
      eval::EvalReport r = EvaluateDetector(trainer.detector(), ds, config);
      last_map_full = r.map_full;
      last_map_rare = r.map_rare;
      last_map_nonrare = r.map_nonrare;
      last_probe = MeasureDomainProbe(trainer.detector(), ds, config,
                                      HashCombine(seed, 0xbe5eedull));
    }
    write_record("finetune", epoch, MeanOf(acc, n_steps), do_eval);
    if (capped) break;
  }

  ExperimentArtifacts artifacts;
  artifacts.final_report = EvaluateDetector(trainer.detector(), ds, config);
  artifacts.final_report.domain_probe_acc = MeasureDomainProbe(
      trainer.detector(), ds, config, HashCombine(seed, 0xbe5eedull));
  artifacts.metrics_path = metrics_path;
  artifacts.checkpoint_path = out_dir + "/model.ckpt";
  nn::SaveCheckpoint(artifacts.checkpoint_path, trainer.all_params(),
                     config.architecture_fingerprint());
  return artifacts;
}

}  // namespace cefa::trainer
