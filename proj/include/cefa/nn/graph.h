// include/cefa/nn/graph.h

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

#ifndef CEFA_NN_GRAPH_H_
#define CEFA_NN_GRAPH_H_

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cefa::nn {

using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A trainable tensor. Gradients accumulate into `grad` across backward calls
// until zeroed by the optimizer. A frozen parameter (trainable=false) acts as
// a constant: gradients still flow through ops that use it, but none are
// recorded for the parameter itself.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

// Non-owning registry of a module tree's parameters, in construction order.
using ParamList = std::vector<Parameter*>;

// Handle into a Graph's node tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape. Nodes are created in topological order;
// backward() walks the tape in reverse. One Graph instance is built per
// forward pass and discarded afterwards.
//
// With grad_enabled=false the tape stores values only (inference mode).
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {
    nodes_.reserve(1024);
  }

  bool grad_enabled() const { return grad_enabled_; }

  // --- leaves ---
  Var input(Matrix v);                  // constant
  Var input_tracked(Matrix v);          // constant whose gradient is recorded
  Var param(Parameter& p);

  const Matrix& value(Var v) const { return node(v).value; }
  // Recorded gradient; zero matrix if the node never received one.
  Matrix grad(Var v) const;

  // --- core ops ---
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var div(Var a, Var b);  // elementwise
  Var minimum(Var a, Var b);  // elementwise; ties route gradient to a
  Var maximum(Var a, Var b);
  Var add_rowvec(Var a, Var bias);   // bias is 1 x D, broadcast over rows
  Var mul_colvec(Var a, Var m);      // m is N x 1, broadcast over columns
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var neg(Var a) { return scale(a, -1.0); }
  Var transpose(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var tanh_op(Var a);
  Var exp_op(Var a);
  Var log_op(Var a);   // inputs must be strictly positive
  Var abs_op(Var a);
  Var square(Var a) { return mul(a, a); }
  Var softmax_rows(Var a);
  Var layer_norm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);
  Var concat_rows(Var a, Var b);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, int start, int len);
  Var slice_cols(Var a, int start, int len);
  Var select_rows(Var a, std::vector<int> idx);
  // out(i,j) = a(src_row(i,j), src_col(i,j)); backward scatter-adds.
  Var gather2d(Var a, const IntMatrix& src_row, const IntMatrix& src_col);
  Var sum_all(Var a);   // 1x1
  Var mean_all(Var a);  // 1x1

  // Gradient reversal: identity forward; backward maps upstream g to -lambda*g.
  Var grl(Var a, double lambda);
  // Forward copy; no gradient flows to a.
  Var detach(Var a);

  // --- fused losses (numerically stable) ---
  // mean over elements of softplus(z) - t*z  ==  BCE(sigmoid(z), t)
  Var bce_with_logits(Var logits, const Matrix& targets);
  // Per-row softmax cross-entropy with integer targets and per-class weights,
  // normalized by the summed weight of the targets (empty weights = all ones).
  Var softmax_xent_rows(Var logits, const std::vector<int>& targets,
                        const std::vector<double>& class_weights = {});

  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // empty until first accumulation
    bool needs_grad = false;
    Parameter* bound = nullptr;
    std::function<void(Graph&, const Matrix&)> backprop;  // arg: this node's grad
  };

  Node& node(Var v) { return nodes_.at(v.id); }
  const Node& node(Var v) const { return nodes_.at(v.id); }

  Var make(Matrix value, bool needs_grad,
           std::function<void(Graph&, const Matrix&)> backprop);
  void accumulate(int id, const Matrix& g);
  bool needs(Var v) const { return node(v).needs_grad; }

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

}  // namespace cefa::nn

#endif  // CEFA_NN_GRAPH_H_
