// include/cefa/eval/eval.h

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

#ifndef CEFA_EVAL_EVAL_H_
#define CEFA_EVAL_EVAL_H_

#include <map>
#include <string>
#include <vector>

#include "cefa/datagen/types.h"
#include "cefa/nn/graph.h"
#include "cefa/util/config.h"
#include "cefa/util/rng.h"

namespace cefa::eval {

using nn::Matrix;

// One scored triplet prediction on one image.
struct ScoredDetection {
  std::string sample_id;
  int category = 0;  // triplet category id
  double score = 0;
  datagen::Box human_box, object_box;
  int query_index = 0;  // deterministic tie-break after sample_id
};

// One ground-truth triplet instance.
struct GroundTruthInstance {
  std::string sample_id;
  int category = 0;
  datagen::Box human_box, object_box;
};

struct EvalReport {
  double map_full = 0, map_rare = 0, map_nonrare = 0;
  std::map<int, double> per_category_ap;  // categories with >= 1 GT
  std::map<int, int> gt_counts;           // per category, evaluated ones
  std::vector<int> categories_without_gt;
  double domain_probe_acc = -1;  // filled by the diagnostics path
};

// Intersection-over-union of two center-format boxes. A zero-area box gives 0.
double Iou(const datagen::Box& a, const datagen::Box& b);

// True positive test: both IoUs strictly above the threshold and classes
// correct. mode "action_only" accepts any object class with the right verb.
bool MatchTriplet(const ScoredDetection& pred, const GroundTruthInstance& gt,
                  double iou_thr, const std::string& mode, int num_verbs);

// Per-category average precision with greedy score-descending matching and
// all-point interpolation; Full/Rare/Non-rare means per the manifest
// partition. Categories without ground truth are excluded from the means and
// listed in the report. Uses eval.iou_threshold and eval.mode.
EvalReport ComputeMap(std::vector<ScoredDetection> detections,
                      const std::vector<GroundTruthInstance>& ground_truth,
                      const datagen::DatasetManifest& manifest,
                      const Config& config);

// Mean k-fold validation accuracy of a logistic-regression domain probe on
// pooled per-image features (rows). 0.5 means the domains are
// indistinguishable. Requires at least 10 rows per domain.
double DomainProbe(const Matrix& features_src, const Matrix& features_gen,
                   int folds, uint64_t seed);

// Tab-separated export: pca_x, pca_y, label, then the raw feature vector.
// The PCA basis fixes each eigenvector's sign (largest-magnitude entry
// positive), so identical inputs give identical bytes.
void ExportEmbeddings(const Matrix& features,
                      const std::vector<std::string>& labels,
                      const std::string& path);

}  // namespace cefa::eval

#endif  // CEFA_EVAL_EVAL_H_
