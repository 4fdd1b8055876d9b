// src/alignment/alignment.cc

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

#include "cefa/alignment/alignment.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cefa::alignment {

std::vector<int> SelectPrototypes(const std::vector<double>& scores, int k) {
  const int n = static_cast<int>(scores.size());
  if (k <= 0 || k > n) {
    throw ConfigError("select_prototypes: k must be in [1, " +
                      std::to_string(n) + "], got " + std::to_string(k));
  }
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  // Stable sort keeps the lower index first among equal scores.
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<int> p(order.begin(), order.begin() + k);
  std::sort(p.begin(), p.end());
  return p;
}

Matrix BuildGraph(int n_q, const std::vector<int>& prototypes,
                  const std::string& variant) {
  std::vector<char> is_proto(n_q, 0);
  for (int p : prototypes) {
    if (p < 0 || p >= n_q) {
      throw ConfigError("build_graph: prototype index " + std::to_string(p) +
                        " outside [0, " + std::to_string(n_q) + ")");
    }
    is_proto[p] = 1;
  }
  Matrix a = Matrix::Zero(n_q, n_q);
  for (int i = 0; i < n_q; ++i) {
    for (int j = 0; j < n_q; ++j) {
      if (i == j) continue;
      if (variant == "bidirectional") {
        if (is_proto[i] || is_proto[j]) a(i, j) = 1.0;
      } else if (variant == "fully_connected") {
        a(i, j) = 1.0;
      } else if (variant == "directed") {
        // regular -> prototype; prototypes stay linked both ways
        if (is_proto[j] && !is_proto[i]) a(i, j) = 1.0;
        if (is_proto[i] && is_proto[j]) a(i, j) = 1.0;
      } else {
        throw ConfigError("build_graph: unknown variant '" + variant +
                          "' (use bidirectional, fully_connected or directed)");
      }
    }
  }
  return a;
}

Matrix NormalizedAdjacency(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw nn::ShapeError("normalized_adjacency: matrix must be square");
  }
  Matrix with_loops = a + Matrix::Identity(a.rows(), a.cols());
  Eigen::VectorXd inv_sqrt_deg =
      with_loops.rowwise().sum().array().rsqrt().matrix();
  return inv_sqrt_deg.asDiagonal() * with_loops * inv_sqrt_deg.asDiagonal();
}

GcnLayer::GcnLayer(const std::string& name, int dim, Rng& rng, bool relu)
    : relu(relu) {
  Matrix init = Matrix::Identity(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) init(i, j) += 0.01 * rng.normal();
  w = nn::Parameter(name + ".weight", init);
}

Var GcnLayer::forward(Graph& g, const Matrix& a_hat, Var x) {
  Var out = g.matmul(g.matmul(g.input(a_hat), x), g.param(w));
  return relu ? g.relu(out) : out;
}

void GcnLayer::collect(ParamList& out) { out.push_back(&w); }

Discriminator::Discriminator(const std::string& name, int in_dim, int hidden,
                             Rng& rng)
    : fc1(name + ".fc1", in_dim, hidden, rng), fc2(name + ".fc2", hidden, 1, rng) {}

Var Discriminator::logits(Graph& g, Var x) {
  return fc2.forward(g, g.relu(fc1.forward(g, x)));
}

Var Discriminator::probabilities(Graph& g, Var x) {
  return g.sigmoid(logits(g, x));
}

void Discriminator::collect(ParamList& out) {
  fc1.collect(out);
  fc2.collect(out);
}

namespace {

// Mean BCE of one discriminator head over gradient-reversed tokens,
// with the domain as binary label (original = 1).
Var DomainBce(Graph& g, Discriminator& d, Var features,
              datagen::Domain domain, double lambda,
              const std::string& head_name) {
  Var reversed = g.grl(features, lambda);
  Var z = d.logits(g, reversed);
  double label = domain == datagen::Domain::original ? 1.0 : 0.0;
  Matrix targets = Matrix::Constant(g.value(z).rows(), 1, label);
  Var loss = g.bce_with_logits(z, targets);
  if (!std::isfinite(g.value(loss)(0, 0))) {
    throw nn::NumericError("non-finite domain loss from head " + head_name);
  }
  return loss;
}

}  // namespace

FeatureAligner::FeatureAligner(const Config& config, int backbone_dim,
                               int encoder_dim, int token_dim, uint64_t seed) {
  k_ = config.get_int("align.k");
  gcn_layers_ = config.get_int("align.gcn_layers");
  grl_lambda_ = config.get_double("align.grl_lambda");
  grl_warmup_steps_ = config.get_int("align.grl_warmup_steps");
  graph_variant_ = config.get("align.graph_variant");
  aggregator_ = config.get("align.aggregator");
  int hidden = config.get_int("align.disc_hidden");
  const std::string& activation = config.get("align.gcn_activation");

  if (k_ <= 0) throw ConfigError("align.k must be positive");
  if (gcn_layers_ <= 0) throw ConfigError("align.gcn_layers must be positive");
  if (grl_lambda_ < 0) throw ConfigError("align.grl_lambda must be >= 0");
  if (aggregator_ != "gcn" && aggregator_ != "transformer") {
    throw ConfigError("align.aggregator must be gcn or transformer, got '" +
                      aggregator_ + "'");
  }
  if (activation != "relu" && activation != "linear") {
    throw ConfigError("align.gcn_activation must be relu or linear, got '" +
                      activation + "'");
  }
  BuildGraph(std::max(k_ + 1, 2), {0}, graph_variant_);  // validates variant

  Rng rng(HashCombine(seed, 0xa119e4ull));
  d_b_ = Discriminator("disc.backbone", backbone_dim, hidden, rng);
  d_e_ = Discriminator("disc.encoder", encoder_dim, hidden, rng);
  d_dec_ = Discriminator("disc.instance", token_dim, hidden, rng);
  for (int i = 0; i < gcn_layers_; ++i) {
    gcn_.emplace_back("aggregator.gcn" + std::to_string(i), token_dim, rng,
                      /*relu=*/activation == "relu");
  }
  if (aggregator_ == "transformer") {
    int heads = config.get_int("model.heads");
    transformer_ = nn::EncoderLayer("aggregator.transformer", token_dim, heads,
                                    2 * token_dim, rng);
  }
}

Var FeatureAligner::discriminate(Graph& g, Var features,
                                 const std::string& head) {
  if (head == "D_b") return d_b_.probabilities(g, features);
  if (head == "D_e") return d_e_.probabilities(g, features);
  if (head == "D_dec") return d_dec_.probabilities(g, features);
  throw ConfigError("discriminate: unknown head '" + head +
                    "' (use D_b, D_e or D_dec)");
}

Var FeatureAligner::enc_alignment_loss(Graph& g, Var x_b, Var x_e,
                                       datagen::Domain domain,
                                       double lambda) {
  Var lb = DomainBce(g, d_b_, x_b, domain, lambda, "D_b");
  Var le = DomainBce(g, d_e_, x_e, domain, lambda, "D_e");
  return g.add(lb, le);
}

Var FeatureAligner::propagate(Graph& g, const Matrix& adjacency, Var x) {
  if (aggregator_ == "transformer") return transformer_.forward(g, x);
  if (adjacency.rows() != g.value(x).rows()) {
    throw nn::ShapeError("propagate: adjacency is " +
                         std::to_string(adjacency.rows()) + " nodes, features " +
                         std::to_string(g.value(x).rows()));
  }
  Matrix a_hat = NormalizedAdjacency(adjacency);
  Var h = x;
  for (auto& layer : gcn_) h = layer.forward(g, a_hat, h);
  return h;
}

Var FeatureAligner::extract_prototypes(Graph& g, Var x_prop,
                                       const std::vector<int>& prototypes) {
  return g.select_rows(x_prop, prototypes);
}

Var FeatureAligner::instance_alignment_loss(Graph& g, Var x_p,
                                            datagen::Domain domain,
                                            double lambda) {
  if (g.value(x_p).rows() == 0) {
    throw ConfigError("instance_alignment_loss: empty prototype set");
  }
  return DomainBce(g, d_dec_, x_p, domain, lambda, "D_dec");
}

AdversarialLosses FeatureAligner::adversarial_loss(Graph& g,
                                                   const AlignmentInputs& in,
                                                   double lambda) {
  std::vector<int> p = SelectPrototypes(in.scores, k_);
  int n_q = static_cast<int>(in.scores.size());
  Matrix a = BuildGraph(n_q, p, graph_variant_);
  Var x_prop = propagate(g, a, in.x_ve);
  Var x_p = extract_prototypes(g, x_prop, p);

  AdversarialLosses out;
  out.l_inst = instance_alignment_loss(g, x_p, in.domain, lambda);
  out.l_enc = enc_alignment_loss(g, in.x_b, in.x_e, in.domain, lambda);
  out.l_adv = g.add(out.l_inst, out.l_enc);
  return out;
}

double FeatureAligner::lambda_at(long long step) const {
  if (grl_warmup_steps_ <= 0) return grl_lambda_;
  double frac = static_cast<double>(step) / static_cast<double>(grl_warmup_steps_);
  return grl_lambda_ * std::min(1.0, std::max(0.0, frac));
}

ParamList FeatureAligner::discriminator_params() {
  ParamList out;
  d_b_.collect(out);
  d_e_.collect(out);
  d_dec_.collect(out);
  return out;
}

ParamList FeatureAligner::aggregator_params() {
  ParamList out;
  if (aggregator_ == "transformer") {
    transformer_.collect(out);
  } else {
    for (auto& layer : gcn_) layer.collect(out);
  }
  return out;
}

}  // namespace cefa::alignment
