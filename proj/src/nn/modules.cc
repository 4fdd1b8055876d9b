// src/nn/modules.cc

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

#include "cefa/nn/modules.h"

#include <cmath>

namespace cefa::nn {

Matrix XavierUniform(int rows, int cols, Rng& rng) {
  double limit = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng)
    : weight(name + ".weight", XavierUniform(in, out, rng)),
      bias(name + ".bias", Matrix::Zero(1, out)) {}

LayerNorm::LayerNorm(const std::string& name, int dim)
    : gamma(name + ".gamma", Matrix::Ones(1, dim)),
      beta(name + ".beta", Matrix::Zero(1, dim)) {}

MultiHeadAttention::MultiHeadAttention(const std::string& name, int dim,
                                       int heads_, Rng& rng)
    : heads(heads_),
      head_dim(dim / heads_),
      wq(name + ".wq", dim, dim, rng),
      wk(name + ".wk", dim, dim, rng),
      wv(name + ".wv", dim, dim, rng),
      wo(name + ".wo", dim, dim, rng) {
  if (dim % heads_ != 0) throw ShapeError("attention dim not divisible by heads");
}

Var MultiHeadAttention::forward(Graph& g, Var q_in, Var kv_in, Var q_pos,
                                Var k_pos) {
  Var q = wq.forward(g, q_pos.valid() ? g.add(q_in, q_pos) : q_in);
  Var k = wk.forward(g, k_pos.valid() ? g.add(kv_in, k_pos) : kv_in);
  Var v = wv.forward(g, kv_in);
  double s = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = g.slice_cols(q, h * head_dim, head_dim);
    Var kh = g.slice_cols(k, h * head_dim, head_dim);
    Var vh = g.slice_cols(v, h * head_dim, head_dim);
    Var att = g.softmax_rows(g.scale(g.matmul(qh, g.transpose(kh)), s));
    outs.push_back(g.matmul(att, vh));
  }
  return wo.forward(g, g.concat_cols(outs));
}

void MultiHeadAttention::collect(ParamList& out) {
  wq.collect(out);
  wk.collect(out);
  wv.collect(out);
  wo.collect(out);
}

FeedForward::FeedForward(const std::string& name, int dim, int hidden, Rng& rng)
    : fc1(name + ".fc1", dim, hidden, rng), fc2(name + ".fc2", hidden, dim, rng) {}

EncoderLayer::EncoderLayer(const std::string& name, int dim, int heads,
                           int ffn_dim, Rng& rng)
    : ln1(name + ".ln1", dim),
      ln2(name + ".ln2", dim),
      attn(name + ".attn", dim, heads, rng),
      ffn(name + ".ffn", dim, ffn_dim, rng) {}

Var EncoderLayer::forward(Graph& g, Var x, Var pos) {
  Var h = ln1.forward(g, x);
  x = g.add(x, attn.forward(g, h, h, pos, pos));
  x = g.add(x, ffn.forward(g, ln2.forward(g, x)));
  return x;
}

void EncoderLayer::collect(ParamList& out) {
  ln1.collect(out);
  ln2.collect(out);
  attn.collect(out);
  ffn.collect(out);
}

DecoderLayer::DecoderLayer(const std::string& name, int dim, int heads,
                           int ffn_dim, Rng& rng)
    : ln1(name + ".ln1", dim),
      ln2(name + ".ln2", dim),
      ln3(name + ".ln3", dim),
      self_attn(name + ".self_attn", dim, heads, rng),
      cross_attn(name + ".cross_attn", dim, heads, rng),
      ffn(name + ".ffn", dim, ffn_dim, rng) {}

Var DecoderLayer::forward(Graph& g, Var x, Var memory, Var q_pos,
                          Var mem_pos) {
  Var h = ln1.forward(g, x);
  x = g.add(x, self_attn.forward(g, h, h, q_pos, q_pos));
  x = g.add(x, cross_attn.forward(g, ln2.forward(g, x), memory, q_pos,
                                  mem_pos));
  x = g.add(x, ffn.forward(g, ln3.forward(g, x)));
  return x;
}

void DecoderLayer::collect(ParamList& out) {
  ln1.collect(out);
  ln2.collect(out);
  ln3.collect(out);
  self_attn.collect(out);
  cross_attn.collect(out);
  ffn.collect(out);
}

MlpHead::MlpHead(const std::string& name, int in, int hidden, int out, Rng& rng)
    : fc1(name + ".fc1", in, hidden, rng), fc2(name + ".fc2", hidden, out, rng) {}

Matrix SinusoidalGridEncoding(int h, int w, int dim) {
  if (dim % 4 != 0) throw ShapeError("positional encoding dim must be divisible by 4");
  int quarter = dim / 4;
  Matrix pe(h * w, dim);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int row = y * w + x;
      for (int i = 0; i < quarter; ++i) {
        double div = std::pow(10000.0, (2.0 * i) / (dim / 2));
        pe(row, 2 * i) = std::sin(y / div);
        pe(row, 2 * i + 1) = std::cos(y / div);
        pe(row, dim / 2 + 2 * i) = std::sin(x / div);
        pe(row, dim / 2 + 2 * i + 1) = std::cos(x / div);
      }
    }
  }
  return pe;
}

}  // namespace cefa::nn
