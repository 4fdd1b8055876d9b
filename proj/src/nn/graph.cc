// src/nn/graph.cc

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

#include "cefa/nn/graph.h"

#include <cmath>
#include <memory>

namespace cefa::nn {

namespace {

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

double StableSoftplus(double z) {
  // log(1 + e^z) without overflow
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

}  // namespace

Var Graph::make(Matrix value, bool needs_grad,
                std::function<void(Graph&, const Matrix&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_ && needs_grad;
  if (n.needs_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Graph::accumulate(int id, const Matrix& g) {
  Node& n = nodes_.at(id);
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

Var Graph::input(Matrix v) { return make(std::move(v), false, nullptr); }

Var Graph::input_tracked(Matrix v) { return make(std::move(v), true, nullptr); }

Var Graph::param(Parameter& p) {
  Parameter* bound = &p;
  Var v = make(p.value, p.trainable, nullptr);
  if (node(v).needs_grad) node(v).bound = bound;
  return v;
}

Matrix Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var loss) {
  if (!grad_enabled_)
    throw std::logic_error("backward() on a grad-disabled graph");
  Node& ln = node(loss);
  if (ln.value.rows() != 1 || ln.value.cols() != 1)
    throw ShapeError("backward: loss must be 1x1");
  accumulate(loss.id, Matrix::Ones(1, 1));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backprop) n.backprop(*this, n.grad);
    if (n.bound && n.bound->trainable) n.bound->grad += n.grad;
  }
}

// ---------------------------------------------------------------------------
// ops

Var Graph::matmul(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.cols() != B.rows())
    throw ShapeError("matmul: inner dims " + std::to_string(A.cols()) + " vs " +
                     std::to_string(B.rows()));
  Matrix out = A * B;
  int ai = a.id, bi = b.id;
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi](Graph& g, const Matrix& gr) {
                if (g.nodes_[ai].needs_grad)
                  g.accumulate(ai, gr * g.nodes_[bi].value.transpose());
                if (g.nodes_[bi].needs_grad)
                  g.accumulate(bi, g.nodes_[ai].value.transpose() * gr);
              });
}

Var Graph::add(Var a, Var b) {
  CheckSameShape(node(a).value, node(b).value, "add");
  Matrix out = node(a).value + node(b).value;
  int ai = a.id, bi = b.id;
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi](Graph& g, const Matrix& gr) {
                g.accumulate(ai, gr);
                g.accumulate(bi, gr);
              });
}

Var Graph::sub(Var a, Var b) {
  CheckSameShape(node(a).value, node(b).value, "sub");
  Matrix out = node(a).value - node(b).value;
  int ai = a.id, bi = b.id;
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi](Graph& g, const Matrix& gr) {
                g.accumulate(ai, gr);
                g.accumulate(bi, -gr);
              });
}

Var Graph::mul(Var a, Var b) {
  CheckSameShape(node(a).value, node(b).value, "mul");
  Matrix out = node(a).value.cwiseProduct(node(b).value);
  int ai = a.id, bi = b.id;
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi](Graph& g, const Matrix& gr) {
                if (g.nodes_[ai].needs_grad)
                  g.accumulate(ai, gr.cwiseProduct(g.nodes_[bi].value));
                if (g.nodes_[bi].needs_grad)
                  g.accumulate(bi, gr.cwiseProduct(g.nodes_[ai].value));
              });
}

Var Graph::div(Var a, Var b) {
  CheckSameShape(node(a).value, node(b).value, "div");
  Matrix out = node(a).value.cwiseQuotient(node(b).value);
  int ai = a.id, bi = b.id;
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi](Graph& g, const Matrix& gr) {
                const Matrix& B = g.nodes_[bi].value;
                if (g.nodes_[ai].needs_grad)
                  g.accumulate(ai, gr.cwiseQuotient(B));
                if (g.nodes_[bi].needs_grad) {
                  const Matrix& A = g.nodes_[ai].value;
                  g.accumulate(
                      bi, -gr.cwiseProduct(A).cwiseQuotient(B.cwiseProduct(B)));
                }
              });
}

Var Graph::minimum(Var a, Var b) {
  CheckSameShape(node(a).value, node(b).value, "minimum");
  Matrix out = node(a).value.cwiseMin(node(b).value);
  int ai = a.id, bi = b.id;
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi](Graph& g, const Matrix& gr) {
                const Matrix& A = g.nodes_[ai].value;
                const Matrix& B = g.nodes_[bi].value;
                Matrix mask = (A.array() <= B.array()).cast<double>();
                g.accumulate(ai, gr.cwiseProduct(mask));
                g.accumulate(bi, gr.cwiseProduct(Matrix::Ones(A.rows(), A.cols()) - mask));
              });
}

Var Graph::maximum(Var a, Var b) {
  CheckSameShape(node(a).value, node(b).value, "maximum");
  Matrix out = node(a).value.cwiseMax(node(b).value);
  int ai = a.id, bi = b.id;
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi](Graph& g, const Matrix& gr) {
                const Matrix& A = g.nodes_[ai].value;
                const Matrix& B = g.nodes_[bi].value;
                Matrix mask = (A.array() >= B.array()).cast<double>();
                g.accumulate(ai, gr.cwiseProduct(mask));
                g.accumulate(bi, gr.cwiseProduct(Matrix::Ones(A.rows(), A.cols()) - mask));
              });
}

Var Graph::add_rowvec(Var a, Var bias) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(bias).value;
  if (B.rows() != 1 || B.cols() != A.cols())
    throw ShapeError("add_rowvec: bias must be 1x" + std::to_string(A.cols()));
  Matrix out = A.rowwise() + B.row(0);
  int ai = a.id, bi = bias.id;
  return make(std::move(out), needs(a) || needs(bias),
              [ai, bi](Graph& g, const Matrix& gr) {
                g.accumulate(ai, gr);
                if (g.nodes_[bi].needs_grad)
                  g.accumulate(bi, gr.colwise().sum());
              });
}

Var Graph::mul_colvec(Var a, Var m) {
  const Matrix& A = node(a).value;
  const Matrix& M = node(m).value;
  if (M.cols() != 1 || M.rows() != A.rows())
    throw ShapeError("mul_colvec: m must be " + std::to_string(A.rows()) + "x1");
  Matrix out = A.array().colwise() * M.col(0).array();
  int ai = a.id, mi = m.id;
  return make(std::move(out), needs(a) || needs(m),
              [ai, mi](Graph& g, const Matrix& gr) {
                const Matrix& A = g.nodes_[ai].value;
                const Matrix& M = g.nodes_[mi].value;
                if (g.nodes_[ai].needs_grad)
                  g.accumulate(ai, gr.array().colwise() * M.col(0).array());
                if (g.nodes_[mi].needs_grad)
                  g.accumulate(mi, gr.cwiseProduct(A).rowwise().sum());
              });
}

Var Graph::scale(Var a, double s) {
  Matrix out = node(a).value * s;
  int ai = a.id;
  return make(std::move(out), needs(a),
              [ai, s](Graph& g, const Matrix& gr) { g.accumulate(ai, gr * s); });
}

Var Graph::add_scalar(Var a, double s) {
  Matrix out = node(a).value.array() + s;
  int ai = a.id;
  return make(std::move(out), needs(a),
              [ai](Graph& g, const Matrix& gr) { g.accumulate(ai, gr); });
}

Var Graph::transpose(Var a) {
  Matrix out = node(a).value.transpose();
  int ai = a.id;
  return make(std::move(out), needs(a), [ai](Graph& g, const Matrix& gr) {
    g.accumulate(ai, gr.transpose());
  });
}

Var Graph::relu(Var a) {
  Matrix out = node(a).value.cwiseMax(0.0);
  int ai = a.id;
  return make(std::move(out), needs(a), [ai](Graph& g, const Matrix& gr) {
    Matrix mask = (g.nodes_[ai].value.array() > 0.0).cast<double>();
    g.accumulate(ai, gr.cwiseProduct(mask));
  });
}

Var Graph::sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-node(a).value.array()).exp())).matrix();
  int ai = a.id;
  int self = static_cast<int>(nodes_.size());
  return make(std::move(out), needs(a), [ai, self](Graph& g, const Matrix& gr) {
    const Matrix& y = g.nodes_[self].value;
    Matrix dy = y.array() * (1.0 - y.array());
    g.accumulate(ai, gr.cwiseProduct(dy));
  });
}

Var Graph::tanh_op(Var a) {
  Matrix out = node(a).value.array().tanh();
  int ai = a.id;
  int self = static_cast<int>(nodes_.size());
  return make(std::move(out), needs(a), [ai, self](Graph& g, const Matrix& gr) {
    const Matrix& y = g.nodes_[self].value;
    Matrix dy = 1.0 - y.array().square();
    g.accumulate(ai, gr.cwiseProduct(dy));
  });
}

Var Graph::exp_op(Var a) {
  Matrix out = node(a).value.array().exp();
  int ai = a.id;
  int self = static_cast<int>(nodes_.size());
  return make(std::move(out), needs(a), [ai, self](Graph& g, const Matrix& gr) {
    g.accumulate(ai, gr.cwiseProduct(g.nodes_[self].value));
  });
}

Var Graph::log_op(Var a) {
  const Matrix& A = node(a).value;
  if ((A.array() <= 0.0).any()) throw NumericError("log: non-positive input");
  Matrix out = A.array().log();
  int ai = a.id;
  return make(std::move(out), needs(a), [ai](Graph& g, const Matrix& gr) {
    g.accumulate(ai, gr.cwiseQuotient(g.nodes_[ai].value));
  });
}

Var Graph::abs_op(Var a) {
  Matrix out = node(a).value.cwiseAbs();
  int ai = a.id;
  return make(std::move(out), needs(a), [ai](Graph& g, const Matrix& gr) {
    Matrix sign = g.nodes_[ai].value.array().sign();
    g.accumulate(ai, gr.cwiseProduct(sign));
  });
}

Var Graph::softmax_rows(Var a) {
  const Matrix& A = node(a).value;
  Matrix out(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i) {
    Eigen::RowVectorXd row = A.row(i);
    double m = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - m).exp();
    out.row(i) = e / e.sum();
  }
  int ai = a.id;
  int self = static_cast<int>(nodes_.size());
  return make(std::move(out), needs(a), [ai, self](Graph& g, const Matrix& gr) {
    const Matrix& y = g.nodes_[self].value;
    Matrix dx(y.rows(), y.cols());
    for (int i = 0; i < y.rows(); ++i) {
      double dot = gr.row(i).dot(y.row(i));
      dx.row(i) = (gr.row(i).array() - dot) * y.row(i).array();
    }
    g.accumulate(ai, dx);
  });
}

Var Graph::layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
  const Matrix& A = node(a).value;
  const Matrix& G = node(gamma).value;
  const Matrix& B = node(beta).value;
  if (G.rows() != 1 || G.cols() != A.cols() || B.rows() != 1 ||
      B.cols() != A.cols())
    throw ShapeError("layer_norm_rows: gamma/beta must be 1x" +
                     std::to_string(A.cols()));
  int N = static_cast<int>(A.rows()), D = static_cast<int>(A.cols());
  Matrix xhat(N, D), out(N, D);
  Eigen::VectorXd inv_std(N);
  for (int i = 0; i < N; ++i) {
    double mu = A.row(i).mean();
    double var = (A.row(i).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = (A.row(i).array() - mu) * is;
    out.row(i) = xhat.row(i).cwiseProduct(G.row(0)) + B.row(0);
  }
  int ai = a.id, gi = gamma.id, bi = beta.id;
  auto xhat_p = std::make_shared<Matrix>(std::move(xhat));
  auto istd_p = std::make_shared<Eigen::VectorXd>(std::move(inv_std));
  return make(
      std::move(out), needs(a) || needs(gamma) || needs(beta),
      [ai, gi, bi, xhat_p, istd_p, D](Graph& g, const Matrix& gr) {
        const Matrix& xh = *xhat_p;
        if (g.nodes_[gi].needs_grad)
          g.accumulate(gi, gr.cwiseProduct(xh).colwise().sum());
        if (g.nodes_[bi].needs_grad) g.accumulate(bi, gr.colwise().sum());
        if (g.nodes_[ai].needs_grad) {
          const Matrix& G = g.nodes_[gi].value;
          Matrix dx(gr.rows(), gr.cols());
          for (int i = 0; i < gr.rows(); ++i) {
            Eigen::RowVectorXd dxhat = gr.row(i).cwiseProduct(G.row(0));
            double m1 = dxhat.mean();
            double m2 = dxhat.cwiseProduct(xh.row(i)).mean();
            dx.row(i) =
                (*istd_p)(i) *
                (dxhat.array() - m1 - xh.row(i).array() * m2).matrix();
          }
          g.accumulate(ai, dx);
        }
      });
}

Var Graph::concat_rows(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.cols() != B.cols()) throw ShapeError("concat_rows: column mismatch");
  Matrix out(A.rows() + B.rows(), A.cols());
  out.topRows(A.rows()) = A;
  out.bottomRows(B.rows()) = B;
  int ai = a.id, bi = b.id;
  int na = static_cast<int>(A.rows()), nb = static_cast<int>(B.rows());
  return make(std::move(out), needs(a) || needs(b),
              [ai, bi, na, nb](Graph& g, const Matrix& gr) {
                g.accumulate(ai, gr.topRows(na));
                g.accumulate(bi, gr.bottomRows(nb));
              });
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty");
  int rows = static_cast<int>(node(parts[0]).value.rows());
  int cols = 0;
  bool ng = false;
  for (Var p : parts) {
    if (node(p).value.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += static_cast<int>(node(p).value.cols());
    ng = ng || needs(p);
  }
  Matrix out(rows, cols);
  std::vector<int> ids, offs, widths;
  int off = 0;
  for (Var p : parts) {
    int w = static_cast<int>(node(p).value.cols());
    out.middleCols(off, w) = node(p).value;
    ids.push_back(p.id);
    offs.push_back(off);
    widths.push_back(w);
    off += w;
  }
  return make(std::move(out), ng,
              [ids, offs, widths](Graph& g, const Matrix& gr) {
                for (size_t i = 0; i < ids.size(); ++i)
                  g.accumulate(ids[i], gr.middleCols(offs[i], widths[i]));
              });
}

Var Graph::slice_rows(Var a, int start, int len) {
  const Matrix& A = node(a).value;
  if (start < 0 || len < 0 || start + len > A.rows())
    throw ShapeError("slice_rows: out of range");
  Matrix out = A.middleRows(start, len);
  int ai = a.id;
  return make(std::move(out), needs(a),
              [ai, start, len](Graph& g, const Matrix& gr) {
                const Matrix& A = g.nodes_[ai].value;
                Matrix full = Matrix::Zero(A.rows(), A.cols());
                full.middleRows(start, len) = gr;
                g.accumulate(ai, full);
              });
}

Var Graph::slice_cols(Var a, int start, int len) {
  const Matrix& A = node(a).value;
  if (start < 0 || len < 0 || start + len > A.cols())
    throw ShapeError("slice_cols: out of range");
  Matrix out = A.middleCols(start, len);
  int ai = a.id;
  return make(std::move(out), needs(a),
              [ai, start, len](Graph& g, const Matrix& gr) {
                const Matrix& A = g.nodes_[ai].value;
                Matrix full = Matrix::Zero(A.rows(), A.cols());
                full.middleCols(start, len) = gr;
                g.accumulate(ai, full);
              });
}

Var Graph::select_rows(Var a, std::vector<int> idx) {
  const Matrix& A = node(a).value;
  for (int i : idx)
    if (i < 0 || i >= A.rows()) throw ShapeError("select_rows: index out of range");
  Matrix out(static_cast<int>(idx.size()), A.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = A.row(idx[i]);
  int ai = a.id;
  return make(std::move(out), needs(a),
              [ai, idx = std::move(idx)](Graph& g, const Matrix& gr) {
                const Matrix& A = g.nodes_[ai].value;
                Matrix full = Matrix::Zero(A.rows(), A.cols());
                for (size_t i = 0; i < idx.size(); ++i)
                  full.row(idx[i]) += gr.row(i);
                g.accumulate(ai, full);
              });
}

Var Graph::gather2d(Var a, const IntMatrix& src_row, const IntMatrix& src_col) {
  const Matrix& A = node(a).value;
  if (src_row.rows() != src_col.rows() || src_row.cols() != src_col.cols())
    throw ShapeError("gather2d: index shape mismatch");
  Matrix out(src_row.rows(), src_row.cols());
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j)
      out(i, j) = A(src_row(i, j), src_col(i, j));
  int ai = a.id;
  auto sr = std::make_shared<IntMatrix>(src_row);
  auto sc = std::make_shared<IntMatrix>(src_col);
  return make(std::move(out), needs(a),
              [ai, sr, sc](Graph& g, const Matrix& gr) {
                const Matrix& A = g.nodes_[ai].value;
                Matrix full = Matrix::Zero(A.rows(), A.cols());
                for (int i = 0; i < gr.rows(); ++i)
                  for (int j = 0; j < gr.cols(); ++j)
                    full((*sr)(i, j), (*sc)(i, j)) += gr(i, j);
                g.accumulate(ai, full);
              });
}

Var Graph::sum_all(Var a) {
  Matrix out(1, 1);
  out(0, 0) = node(a).value.sum();
  int ai = a.id;
  return make(std::move(out), needs(a), [ai](Graph& g, const Matrix& gr) {
    const Matrix& A = g.nodes_[ai].value;
    g.accumulate(ai, Matrix::Constant(A.rows(), A.cols(), gr(0, 0)));
  });
}

Var Graph::mean_all(Var a) {
  const Matrix& A = node(a).value;
  double n = static_cast<double>(A.size());
  Matrix out(1, 1);
  out(0, 0) = A.sum() / n;
  int ai = a.id;
  return make(std::move(out), needs(a), [ai, n](Graph& g, const Matrix& gr) {
    const Matrix& A = g.nodes_[ai].value;
    g.accumulate(ai, Matrix::Constant(A.rows(), A.cols(), gr(0, 0) / n));
  });
}

Var Graph::grl(Var a, double lambda) {
  if (!std::isfinite(lambda)) throw NumericError("grl: lambda must be finite");
  Matrix out = node(a).value;
  int ai = a.id;
  return make(std::move(out), needs(a),
              [ai, lambda](Graph& g, const Matrix& gr) {
                g.accumulate(ai, (-lambda) * gr);
              });
}

Var Graph::detach(Var a) { return make(node(a).value, false, nullptr); }

Var Graph::bce_with_logits(Var logits, const Matrix& targets) {
  const Matrix& Z = node(logits).value;
  CheckSameShape(Z, targets, "bce_with_logits");
  double n = static_cast<double>(Z.size());
  double acc = 0.0;
  for (int i = 0; i < Z.rows(); ++i)
    for (int j = 0; j < Z.cols(); ++j)
      acc += StableSoftplus(Z(i, j)) - targets(i, j) * Z(i, j);
  Matrix out(1, 1);
  out(0, 0) = acc / n;
  if (!std::isfinite(out(0, 0)))
    throw NumericError("bce_with_logits: non-finite loss");
  int zi = logits.id;
  auto tgt = std::make_shared<Matrix>(targets);
  return make(std::move(out), needs(logits),
              [zi, tgt, n](Graph& g, const Matrix& gr) {
                const Matrix& Z = g.nodes_[zi].value;
                Matrix p = (1.0 / (1.0 + (-Z.array()).exp())).matrix();
                g.accumulate(zi, (gr(0, 0) / n) * (p - *tgt));
              });
}

Var Graph::softmax_xent_rows(Var logits, const std::vector<int>& targets,
                             const std::vector<double>& class_weights) {
  const Matrix& Z = node(logits).value;
  if (static_cast<int>(targets.size()) != Z.rows())
    throw ShapeError("softmax_xent_rows: one target per row required");
  int N = static_cast<int>(Z.rows()), C = static_cast<int>(Z.cols());
  std::vector<double> w(N, 1.0);
  if (!class_weights.empty()) {
    if (static_cast<int>(class_weights.size()) != C)
      throw ShapeError("softmax_xent_rows: class_weights size mismatch");
    for (int i = 0; i < N; ++i) w[i] = class_weights[targets[i]];
  }
  double wsum = 0.0;
  for (double x : w) wsum += x;
  if (wsum <= 0.0) throw NumericError("softmax_xent_rows: zero total weight");

  Matrix probs(N, C);
  double loss = 0.0;
  for (int i = 0; i < N; ++i) {
    int t = targets[i];
    if (t < 0 || t >= C) throw ShapeError("softmax_xent_rows: target out of range");
    double m = Z.row(i).maxCoeff();
    Eigen::RowVectorXd e = (Z.row(i).array() - m).exp();
    double s = e.sum();
    probs.row(i) = e / s;
    loss += w[i] * (std::log(s) + m - Z(i, t));
  }
  Matrix out(1, 1);
  out(0, 0) = loss / wsum;
  int zi = logits.id;
  auto probs_p = std::make_shared<Matrix>(std::move(probs));
  auto t_p = std::make_shared<std::vector<int>>(targets);
  auto w_p = std::make_shared<std::vector<double>>(std::move(w));
  return make(std::move(out), needs(logits),
              [zi, probs_p, t_p, w_p, wsum](Graph& g, const Matrix& gr) {
                Matrix dz = *probs_p;
                for (int i = 0; i < dz.rows(); ++i) {
                  dz(i, (*t_p)[i]) -= 1.0;
                  dz.row(i) *= (*w_p)[i];
                }
                g.accumulate(zi, (gr(0, 0) / wsum) * dz);
              });
}

}  // namespace cefa::nn
