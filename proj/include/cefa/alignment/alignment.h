// include/cefa/alignment/alignment.h

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

#ifndef CEFA_ALIGNMENT_ALIGNMENT_H_
#define CEFA_ALIGNMENT_ALIGNMENT_H_

#include <string>
#include <vector>

#include "cefa/datagen/types.h"
#include "cefa/nn/modules.h"
#include "cefa/util/config.h"
#include "cefa/util/rng.h"

namespace cefa::alignment {

using nn::Graph;
using nn::Matrix;
using nn::ParamList;
using nn::Var;

// Indices of the k highest scores, ascending; ties broken by lower index.
// The result is invariant under strictly monotone transforms of the scores.
std::vector<int> SelectPrototypes(const std::vector<double>& scores, int k);

// Binary adjacency with zero diagonal over n_q relationship tokens.
// `prototypes` lists the aggregation targets; the rest are regular nodes.
//   bidirectional:   edge i--j (both directions) iff i or j is a prototype
//   fully_connected: every off-diagonal pair
//   directed:        regular->prototype only, prototypes linked both ways
// Regular-regular entries are zero in all but fully_connected, so one
// propagation step cannot mix two regular nodes.
Matrix BuildGraph(int n_q, const std::vector<int>& prototypes,
                  const std::string& variant);

// Symmetric normalization with self-loops: D^{-1/2} (A + I) D^{-1/2},
// where D is the row-degree of A + I.
Matrix NormalizedAdjacency(const Matrix& a);

// One graph-convolution layer: act(A_hat X W). W is square.
struct GcnLayer {
  nn::Parameter w;
  bool relu = true;

  GcnLayer() = default;
  // W starts near identity so prototypes initially keep their own features.
  GcnLayer(const std::string& name, int dim, Rng& rng, bool relu = true);
  Var forward(Graph& g, const Matrix& a_hat, Var x);
  void collect(ParamList& out);
};

// Two-layer MLP mapping each token to one domain logit.
struct Discriminator {
  nn::Linear fc1, fc2;

  Discriminator() = default;
  Discriminator(const std::string& name, int in_dim, int hidden, Rng& rng);
  Var logits(Graph& g, Var x);                // N x 1
  Var probabilities(Graph& g, Var x);         // sigmoid(logits), in (0,1)
  void collect(ParamList& out);
};

// Per-component adversarial losses for the metrics ledger.
struct AdversarialLosses {
  Var l_enc;   // backbone + encoder discriminator terms
  Var l_inst;  // prototype discriminator term
  Var l_adv;   // l_enc + l_inst
};

// The features one image contributes to alignment. `scores` are the
// detector's composed per-query confidences used for prototype selection
// (selection is discrete, so no gradient flows through them).
struct AlignmentInputs {
  Var x_b;                     // backbone tokens
  Var x_e;                     // encoder tokens
  Var x_ve;                    // relationship tokens, N_q rows
  std::vector<double> scores;  // length N_q
  datagen::Domain domain = datagen::Domain::original;
};

// Adversarial instance/feature alignment: three token-level domain
// discriminators (backbone, encoder, prototype), prototype selection over
// relationship tokens, graph aggregation, and gradient-reversed
// binary-cross-entropy domain losses. The discriminators minimize the BCE;
// the reversed gradients make the detector maximize it, so one simultaneous
// step realizes the min-max objective.
class FeatureAligner {
 public:
  // Dims are the widths of X_b, X_e, and X_ve tokens.
  FeatureAligner(const Config& config, int backbone_dim, int encoder_dim,
                 int token_dim, uint64_t seed);

  // Per-token P(original domain) from one head: "D_b", "D_e" or "D_dec".
  // Unknown head names are rejected.
  Var discriminate(Graph& g, Var features, const std::string& head);

  // Mean BCE of D_b on X_b plus mean BCE of D_e on X_e, domain as label
  // (original = 1), features gradient-reversed with strength lambda.
  Var enc_alignment_loss(Graph& g, Var x_b, Var x_e, datagen::Domain domain,
                         double lambda);

  // Aggregates relationship tokens: stacked GCN layers over the normalized
  // adjacency, or one transformer layer when align.aggregator = transformer
  // (the adjacency is ignored there).
  Var propagate(Graph& g, const Matrix& adjacency, Var x);

  // Rows of the propagated features at the prototype indices, order kept.
  Var extract_prototypes(Graph& g, Var x_prop,
                         const std::vector<int>& prototypes);

  // Mean BCE of D_dec on the prototype features, through gradient reversal.
  // Rejects an empty prototype set.
  Var instance_alignment_loss(Graph& g, Var x_p, datagen::Domain domain,
                              double lambda);

  // Full pipeline for one image: select prototypes from in.scores, build the
  // configured graph, propagate, and combine instance + encoder losses.
  AdversarialLosses adversarial_loss(Graph& g, const AlignmentInputs& in,
                                     double lambda);

  // Gradient-reversal strength after `step` optimizer steps: ramps linearly
  // from 0 over align.grl_warmup_steps, then stays at align.grl_lambda.
  double lambda_at(long long step) const;

  int k() const { return k_; }
  const std::string& graph_variant() const { return graph_variant_; }

  ParamList discriminator_params();  // trained by the discriminator optimizer
  ParamList aggregator_params();     // trained with the detector

 private:
  int k_, gcn_layers_;
  double grl_lambda_;
  long long grl_warmup_steps_;
  std::string graph_variant_, aggregator_;

  Discriminator d_b_, d_e_, d_dec_;
  std::vector<GcnLayer> gcn_;
  nn::EncoderLayer transformer_;  // used when aggregator_ == "transformer"
};

}  // namespace cefa::alignment

#endif  // CEFA_ALIGNMENT_ALIGNMENT_H_
