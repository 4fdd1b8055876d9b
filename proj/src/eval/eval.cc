// src/eval/eval.cc

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

#include "cefa/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

namespace cefa::eval {

double Iou(const datagen::Box& a, const datagen::Box& b) {
  double ax1 = a.cx - a.w / 2, ax2 = a.cx + a.w / 2;
  double ay1 = a.cy - a.h / 2, ay2 = a.cy + a.h / 2;
  double bx1 = b.cx - b.w / 2, bx2 = b.cx + b.w / 2;
  double by1 = b.cy - b.h / 2, by2 = b.cy + b.h / 2;
  double area_a = (ax2 - ax1) * (ay2 - ay1);
  double area_b = (bx2 - bx1) * (by2 - by1);
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  double iw = std::min(ax2, bx2) - std::max(ax1, bx1);
  double ih = std::min(ay2, by2) - std::max(ay1, by1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  double inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

bool MatchTriplet(const ScoredDetection& pred, const GroundTruthInstance& gt,
                  double iou_thr, const std::string& mode, int num_verbs) {
  if (pred.sample_id != gt.sample_id) return false;
  bool class_ok;
  if (mode == "action_only") {
    class_ok = datagen::VerbOfCategory(pred.category, num_verbs) ==
               datagen::VerbOfCategory(gt.category, num_verbs);
  } else {
    class_ok = pred.category == gt.category;
  }
  if (!class_ok) return false;
  return Iou(pred.human_box, gt.human_box) > iou_thr &&
         Iou(pred.object_box, gt.object_box) > iou_thr;
}

namespace {

// Greedy TP/FP flags for one category's detections, already sorted by
// descending score. A prediction claims the eligible unmatched ground truth
// with the largest min(IoU_h, IoU_o).
std::vector<bool> GreedyFlags(const std::vector<ScoredDetection>& dets,
                              const std::vector<GroundTruthInstance>& gts,
                              double iou_thr, const std::string& mode,
                              int num_verbs) {
  std::vector<bool> flags(dets.size(), false);
  std::vector<bool> used(gts.size(), false);
  for (size_t d = 0; d < dets.size(); ++d) {
    int best = -1;
    double best_quality = -1.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      if (!MatchTriplet(dets[d], gts[g], iou_thr, mode, num_verbs)) continue;
      double quality = std::min(Iou(dets[d].human_box, gts[g].human_box),
                                Iou(dets[d].object_box, gts[g].object_box));
      if (quality > best_quality) {
        best_quality = quality;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[best] = true;
      flags[d] = true;
    }
  }
  return flags;
}

// All-point interpolated AP from ranked TP/FP flags:
// sum over TP ranks of (1/n_gt) * max precision at that rank or later.
double ApFromFlags(const std::vector<bool>& flags, int n_gt) {
  if (n_gt <= 0) return 0.0;
  int n = static_cast<int>(flags.size());
  std::vector<double> precision(n);
  int tp = 0;
  for (int k = 0; k < n; ++k) {
    if (flags[k]) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  // Suffix max: interpolated precision.
  for (int k = n - 2; k >= 0; --k)
    precision[k] = std::max(precision[k], precision[k + 1]);
  double ap = 0.0;
  for (int k = 0; k < n; ++k)
    if (flags[k]) ap += precision[k] / n_gt;
  return ap;
}

}  // namespace

EvalReport ComputeMap(std::vector<ScoredDetection> detections,
                      const std::vector<GroundTruthInstance>& ground_truth,
                      const datagen::DatasetManifest& manifest,
                      const Config& config) {
  double iou_thr = config.get_double("eval.iou_threshold");
  std::string mode = config.get("eval.mode");
  if (mode != "default" && mode != "action_only") {
    throw ConfigError("eval.mode must be default or action_only, got '" +
                      mode + "'");
  }

  // Deterministic global order: score desc, then sample id, then query.
  std::sort(detections.begin(), detections.end(),
            [](const ScoredDetection& a, const ScoredDetection& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
              return a.query_index < b.query_index;
            });

  int num_cats = manifest.num_categories();
  std::vector<std::vector<ScoredDetection>> dets_by_cat(num_cats);
  for (const auto& d : detections) {
    if (d.category >= 0 && d.category < num_cats)
      dets_by_cat[d.category].push_back(d);
  }
  std::vector<std::vector<GroundTruthInstance>> gts_by_cat(num_cats);
  for (const auto& g : ground_truth) {
    if (g.category < 0 || g.category >= num_cats) {
      throw datagen::ValidationError("ground truth category " +
                                     std::to_string(g.category) +
                                     " outside the manifest");
    }
    gts_by_cat[g.category].push_back(g);
  }

  EvalReport report;
  double sum_full = 0, sum_rare = 0, sum_nonrare = 0;
  int n_full = 0, n_rare = 0, n_nonrare = 0;
  for (int c = 0; c < num_cats; ++c) {
    // In action-only mode, any ground truth sharing the verb is claimable.
    std::vector<GroundTruthInstance> eligible;
    if (mode == "action_only") {
      int verb = datagen::VerbOfCategory(c, manifest.num_verbs);
      for (const auto& g : ground_truth)
        if (datagen::VerbOfCategory(g.category, manifest.num_verbs) == verb)
          eligible.push_back(g);
    } else {
      eligible = gts_by_cat[c];
    }
    int n_gt = static_cast<int>(eligible.size());
    if (n_gt == 0) {
      report.categories_without_gt.push_back(c);
      continue;
    }
    auto flags = GreedyFlags(dets_by_cat[c], eligible, iou_thr, mode,
                             manifest.num_verbs);
    double ap = ApFromFlags(flags, n_gt);
    report.per_category_ap[c] = ap;
    report.gt_counts[c] = n_gt;
    sum_full += ap;
    ++n_full;
    if (manifest.is_rare(c)) {
      sum_rare += ap;
      ++n_rare;
    } else {
      sum_nonrare += ap;
      ++n_nonrare;
    }
  }
  report.map_full = n_full > 0 ? sum_full / n_full : 0.0;
  report.map_rare = n_rare > 0 ? sum_rare / n_rare : 0.0;
  report.map_nonrare = n_nonrare > 0 ? sum_nonrare / n_nonrare : 0.0;
  return report;
}

namespace {

// Full-batch logistic regression with L2, fixed iteration budget.
// Returns accuracy on the validation rows.
double FitAndScore(const Matrix& x_train, const std::vector<int>& y_train,
                   const Matrix& x_val, const std::vector<int>& y_val) {
  int d = static_cast<int>(x_train.cols());
  int n = static_cast<int>(x_train.rows());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  double lr = 0.5, l2 = 1e-3;
  for (int it = 0; it < 300; ++it) {
    Eigen::VectorXd z = x_train * w;
    z.array() += b;
    Eigen::VectorXd p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    Eigen::VectorXd err = p;
    for (int i = 0; i < n; ++i) err(i) -= y_train[i];
    Eigen::VectorXd gw = x_train.transpose() * err / n + l2 * w;
    double gb = err.sum() / n;
    w -= lr * gw;
    b -= lr * gb;
  }
  int correct = 0;
  for (int i = 0; i < x_val.rows(); ++i) {
    double z = x_val.row(i).dot(w) + b;
    int pred = z > 0 ? 1 : 0;
    if (pred == y_val[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x_val.rows());
}

}  // namespace

double DomainProbe(const Matrix& features_src, const Matrix& features_gen,
                   int folds, uint64_t seed) {
  if (folds < 2) throw ConfigError("probe folds must be >= 2");
  if (features_src.rows() < 10 || features_gen.rows() < 10) {
    throw ConfigError("domain probe needs at least 10 samples per domain, got " +
                      std::to_string(features_src.rows()) + " and " +
                      std::to_string(features_gen.rows()));
  }
  if (features_src.cols() != features_gen.cols()) {
    throw nn::ShapeError("probe feature widths differ between domains");
  }

  // Standardize with the pooled mean/std so scale cannot leak the label.
  int n_src = static_cast<int>(features_src.rows());
  int n_gen = static_cast<int>(features_gen.rows());
  int d = static_cast<int>(features_src.cols());
  Matrix all(n_src + n_gen, d);
  all << features_src, features_gen;
  Eigen::RowVectorXd mean = all.colwise().mean();
  Eigen::RowVectorXd std_dev =
      ((all.rowwise() - mean).array().square().colwise().mean().sqrt() + 1e-8)
          .matrix();
  all = (all.rowwise() - mean).array().rowwise() / std_dev.array();

  std::vector<int> labels(n_src + n_gen, 0);
  for (int i = 0; i < n_src; ++i) labels[i] = 1;  // original domain

  // Stratified fold assignment: shuffle each domain, deal round-robin.
  std::vector<int> fold_of(n_src + n_gen);
  Rng rng(HashCombine(seed, 0x9c0beull));
  std::vector<int> src_idx(n_src), gen_idx(n_gen);
  std::iota(src_idx.begin(), src_idx.end(), 0);
  std::iota(gen_idx.begin(), gen_idx.end(), n_src);
  rng.shuffle(src_idx);
  rng.shuffle(gen_idx);
  for (size_t i = 0; i < src_idx.size(); ++i)
    fold_of[src_idx[i]] = static_cast<int>(i) % folds;
  for (size_t i = 0; i < gen_idx.size(); ++i)
    fold_of[gen_idx[i]] = static_cast<int>(i) % folds;

  double acc_sum = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train_rows, val_rows;
    for (int i = 0; i < n_src + n_gen; ++i)
      (fold_of[i] == f ? val_rows : train_rows).push_back(i);
    Matrix x_train(train_rows.size(), d), x_val(val_rows.size(), d);
    std::vector<int> y_train, y_val;
    for (size_t i = 0; i < train_rows.size(); ++i) {
      x_train.row(static_cast<int>(i)) = all.row(train_rows[i]);
      y_train.push_back(labels[train_rows[i]]);
    }
    for (size_t i = 0; i < val_rows.size(); ++i) {
      x_val.row(static_cast<int>(i)) = all.row(val_rows[i]);
      y_val.push_back(labels[val_rows[i]]);
    }
    acc_sum += FitAndScore(x_train, y_train, x_val, y_val);
  }
  return acc_sum / folds;
}

void ExportEmbeddings(const Matrix& features,
                      const std::vector<std::string>& labels,
                      const std::string& path) {
  if (static_cast<int>(labels.size()) != features.rows()) {
    throw nn::ShapeError("one label per feature row required");
  }
  int n = static_cast<int>(features.rows());
  int d = static_cast<int>(features.cols());

  Eigen::RowVectorXd mean = features.colwise().mean();
  Matrix centered = features.rowwise() - mean;
  Matrix cov = centered.transpose() * centered /
               std::max(1, n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  // Eigenvalues ascend; the last two columns span the top-2 subspace.
  Matrix basis(d, 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d);
    if (d >= 2) v = solver.eigenvectors().col(d - 1 - c);
    // Sign convention: the largest-magnitude entry is positive.
    int arg = 0;
    for (int i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0) v = -v;
    basis.col(c) = v;
  }
  Matrix coords = centered * basis;

  std::ofstream out(path);
  if (!out) throw datagen::IoError("cannot write embeddings to " + path);
  out << "pca_x\tpca_y\tlabel";
  for (int j = 0; j < d; ++j) out << "\tf" << j;
  out << "\n";
  char buf[64];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", coords(i, 0));
    out << buf << '\t';
    std::snprintf(buf, sizeof buf, "%.6f", coords(i, 1));
    out << buf << '\t' << labels[i];
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", features(i, j));
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out.good()) throw datagen::IoError("write failure on " + path);
}

}  // namespace cefa::eval
