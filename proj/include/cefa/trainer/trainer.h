// include/cefa/trainer/trainer.h

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

#ifndef CEFA_TRAINER_TRAINER_H_
#define CEFA_TRAINER_TRAINER_H_

#include <memory>
#include <string>
#include <vector>

#include "cefa/alignment/alignment.h"
#include "cefa/context/context.h"
#include "cefa/datagen/dataset.h"
#include "cefa/detector/detector.h"
#include "cefa/eval/eval.h"
#include "cefa/nn/optim.h"
#include "cefa/util/config.h"

namespace cefa::trainer {

using nn::Graph;
using nn::Matrix;
using nn::ParamList;
using nn::Var;

// Scalar loss ledger for one training step. Additive structure:
//   l_adv   = l_enc + l_inst          (original-domain adversarial terms)
//   l_src   = l_sup + l_adv           (original-domain total)
//   l_gen   = l_unsup + l_ctx + l_adv_gen   (generated-domain total)
//   total   = l_src + l_gen
// Each identity holds to 1e-6 relative error on every step; `consistent`
// checks them. Disabled components hold exactly 0. The adversarial and
// context entries already include their configured weights, so the
// identities stay exact under reweighting.
struct LossBreakdown {
  double l_sup = 0, l_unsup = 0;
  double l_enc = 0, l_inst = 0, l_adv = 0, l_adv_gen = 0;
  double l_ctx = 0;
  double l_src = 0, l_gen = 0, total = 0;

  bool finite() const;
  bool consistent(double rel_tol = 1e-6) const;
  std::string describe() const;  // one line, every field, for logs/errors
};

// Minimal-cost assignment on an n x m cost matrix, n <= m: each row gets a
// distinct column, the summed cost is minimal. Returns the column per row.
std::vector<int> HungarianMatch(const Matrix& cost);

// Generalized IoU of two center-format boxes, in [-1, 1]: IoU minus the
// fraction of the enclosing box not covered by the union. Two degenerate
// boxes give 0.
double GeneralizedIou(const datagen::Box& a, const datagen::Box& b);

// Graph-level generalized IoU: pred and target are N x 4 (cx, cy, w, h)
// blocks; returns the 1x1 sum over rows of (1 - gIoU). Predicted widths and
// heights must be strictly positive (the detector's sigmoid outputs are).
Var GiouLossSum(Graph& g, Var pred, const Matrix& target);

// The detector head outputs a set-prediction loss consumes.
struct HeadOutputs {
  Var boxes;        // N_q x 8, human then object cxcywh
  Var obj_logits;   // N_q x (C_obj + 1), last = no-object
  Var verb_logits;  // N_q x C_verb
};

// Matching cost matrix, one row per ground-truth annotation, one column per
// query: weighted box L1 + (1 - gIoU) for both boxes + negated object-class
// probability + negated target-verb probability. Weights are the train.*
// term weights.
Matrix BuildMatchCost(const Matrix& boxes, const Matrix& obj_logits,
                      const Matrix& verb_logits,
                      const std::vector<datagen::HOIAnnotation>& truth,
                      const Config& config);

// Set-prediction loss: Hungarian-matched box L1 and gIoU terms (normalized
// by the number of annotations), object cross-entropy over every query
// (unmatched queries target no-object, down-weighted by train.weight_noobj),
// and verb binary cross-entropy on matched queries. Empty truth reduces to
// the pure no-object classification term.
Var SupervisedHoiLoss(Graph& g, const HeadOutputs& out,
                      const std::vector<datagen::HOIAnnotation>& truth,
                      const Config& config);

// Identical functional form on pseudo-annotations, except an empty set
// contributes exactly zero: the no-object term is disabled so that an
// under-confident model is not pushed to predict nothing on generated
// images.
Var UnsupHoiLoss(Graph& g, const HeadOutputs& out,
                 const std::vector<datagen::HOIAnnotation>& truth,
                 const Config& config);

// Owns the detector, the domain-alignment and context-reconstruction
// modules, and their optimizers; runs simultaneous-update training steps.
class Trainer {
 public:
  // `pretrain` runs the pure supervised stage: generated batches and both
  // adaptation modules are ignored and every detector parameter trains.
  // `finetune` applies the configured toggles and freezes the modules named
  // by train.freeze ("pair_decoder" or "none").
  enum class Phase { pretrain, finetune };

  Trainer(const Config& config, uint64_t seed);

  // The optimizers hold raw pointers into the by-value module members, so
  // relocating a Trainer would leave them dangling.
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // Builds every enabled loss component for the two batches into `g` and
  // returns the total as a graph node plus the scalar ledger. Does not
  // update parameters. Generated-domain components are zero when
  // `batch_gen` is empty.
  LossBreakdown forward_losses(
      Graph& g, const std::vector<const datagen::Sample*>& batch_src,
      const std::vector<const datagen::Sample*>& batch_gen, Var* total);

  // One simultaneous update: forward, ledger-identity assertion, backward,
  // one step of the detector+adaptation optimizer and one of the
  // discriminator optimizer. Non-finite totals abort with the full ledger
  // in the error. Requires a nonempty source batch.
  LossBreakdown train_step(const std::vector<const datagen::Sample*>& batch_src,
                           const std::vector<const datagen::Sample*>& batch_gen);

  void set_phase(Phase phase);  // resets the step counter
  Phase phase() const { return phase_; }
  long long step() const { return step_; }

  detector::HoiDetector& detector() { return det_; }
  alignment::FeatureAligner* aligner() { return aligner_.get(); }
  context::ContextBranch* context() { return ctx_.get(); }

  // Every parameter the run owns (detector, alignment, context), for
  // checkpointing. Names are unique across modules.
  ParamList all_params();

 private:
  struct ImagePass {
    const datagen::Sample* sample = nullptr;
    detector::FeatureBundle fb;
    HeadOutputs heads;
    std::vector<detector::Prediction> preds;
    std::vector<int> categories;  // triplet categories present in truth
  };

  ImagePass run_image(Graph& g, const datagen::Sample& s);
  int pick_source_for(const std::vector<ImagePass>& src_passes,
                      int prompt_category, Rng& rng) const;

  Config config_;
  uint64_t seed_;
  Phase phase_ = Phase::pretrain;
  long long step_ = 0;
  bool align_on_ = false, ctx_on_ = false, use_generated_ = false;
  bool trust_prompt_labels_ = false;
  double pseudo_threshold_ = 0, weight_adv_ = 1, weight_ctx_ = 1;
  int num_verbs_ = 0;

  detector::HoiDetector det_;
  std::unique_ptr<alignment::FeatureAligner> aligner_;
  std::unique_ptr<context::ContextBranch> ctx_;
  std::unique_ptr<nn::Adam> model_opt_;  // detector + adaptation modules
  std::unique_ptr<nn::Adam> disc_opt_;   // domain discriminators
};

// Runs the detector over the test split and scores every query of every
// image: category from the manifest's (verb, object) table, ranking score
// from the configured score mode.
eval::EvalReport EvaluateDetector(detector::HoiDetector& det,
                                  const datagen::BuiltDataset& ds,
                                  const Config& config);

// Mean-pooled encoder features for up to `max_per_domain` train images of
// each domain, fed to the cross-validated domain probe. Returns -1 when
// either domain has fewer than 10 train images (probe unavailable).
double MeasureDomainProbe(detector::HoiDetector& det,
                          const datagen::BuiltDataset& ds,
                          const Config& config, uint64_t seed,
                          int max_per_domain = 40);

struct ExperimentArtifacts {
  std::string checkpoint_path;  // final parameters of all modules
  std::string metrics_path;     // one JSON record per epoch
  eval::EvalReport final_report;
};

// Full two-stage recipe for one (config, seed): supervised pretraining on
// original images (reused from train.pretrain_cache when a matching
// checkpoint exists), then fine-tuning with the configured adaptation
// toggles and the train.freeze modules frozen. Writes metrics.jsonl and
// model.ckpt under out_dir and reports the final test-split evaluation.
// The seed is config train.seed.
ExperimentArtifacts RunExperiment(const Config& config,
                                  const datagen::BuiltDataset& ds,
                                  const std::string& out_dir);

}  // namespace cefa::trainer

#endif  // CEFA_TRAINER_TRAINER_H_
