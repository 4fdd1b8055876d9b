// include/cefa/nn/modules.h

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

#ifndef CEFA_NN_MODULES_H_
#define CEFA_NN_MODULES_H_

#include <string>
#include <vector>

#include "cefa/nn/graph.h"
#include "cefa/util/rng.h"

namespace cefa::nn {

struct Linear {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng);

  Var forward(Graph& g, Var x) {
    return g.add_rowvec(g.matmul(x, g.param(weight)), g.param(bias));
  }
  void collect(ParamList& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

struct LayerNorm {
  Parameter gamma, beta;  // 1 x dim

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);

  Var forward(Graph& g, Var x) {
    return g.layer_norm_rows(x, g.param(gamma), g.param(beta));
  }
  void collect(ParamList& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
};

struct MultiHeadAttention {
  int heads = 0, head_dim = 0;
  Linear wq, wk, wv, wo;

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, int dim, int heads, Rng& rng);

  // q_in: Nq x D queries, kv_in: Nk x D keys/values. Positional encodings
  // are added to queries/keys only (never to values), so position
  // information steers attention without entering the content pathway.
  // Pass invalid Vars to skip.
  Var forward(Graph& g, Var q_in, Var kv_in, Var q_pos = {}, Var k_pos = {});
  void collect(ParamList& out);
};

struct FeedForward {
  Linear fc1, fc2;

  FeedForward() = default;
  FeedForward(const std::string& name, int dim, int hidden, Rng& rng);

  Var forward(Graph& g, Var x) {
    return fc2.forward(g, g.relu(fc1.forward(g, x)));
  }
  void collect(ParamList& out) {
    fc1.collect(out);
    fc2.collect(out);
  }
};

// Pre-norm encoder layer: x += attn(ln(x)); x += ffn(ln(x)).
struct EncoderLayer {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  FeedForward ffn;

  EncoderLayer() = default;
  EncoderLayer(const std::string& name, int dim, int heads, int ffn_dim, Rng& rng);

  Var forward(Graph& g, Var x, Var pos = {});
  void collect(ParamList& out);
};

// Pre-norm decoder layer: self-attention over queries, cross-attention into
// memory, feed-forward. q_pos rides on the query tokens, mem_pos on memory.
struct DecoderLayer {
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;

  DecoderLayer() = default;
  DecoderLayer(const std::string& name, int dim, int heads, int ffn_dim, Rng& rng);

  Var forward(Graph& g, Var x, Var memory, Var q_pos = {}, Var mem_pos = {});
  void collect(ParamList& out);
};

// Token-wise two-layer MLP with a single logit output per token.
struct MlpHead {
  Linear fc1, fc2;

  MlpHead() = default;
  MlpHead(const std::string& name, int in, int hidden, int out, Rng& rng);

  Var forward(Graph& g, Var x) {
    return fc2.forward(g, g.relu(fc1.forward(g, x)));
  }
  void collect(ParamList& out) {
    fc1.collect(out);
    fc2.collect(out);
  }
};

// Fixed 2D sinusoidal positional encoding for an h x w token grid.
Matrix SinusoidalGridEncoding(int h, int w, int dim);

// Xavier-uniform init used by every Linear.
Matrix XavierUniform(int rows, int cols, Rng& rng);

}  // namespace cefa::nn

#endif  // CEFA_NN_MODULES_H_
