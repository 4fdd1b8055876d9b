// src/nn/optim.cc

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

#include "cefa/nn/optim.h"

#include <cmath>

namespace cefa::nn {

Adam::Adam(std::vector<ParamGroup> groups, double beta1, double beta2,
           double eps)
    : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  slots_.resize(groups_.size());
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    slots_[gi].resize(groups_[gi].params.size());
    for (size_t pi = 0; pi < groups_[gi].params.size(); ++pi) {
      const Parameter* p = groups_[gi].params[pi];
      slots_[gi][pi].m = Matrix::Zero(p->value.rows(), p->value.cols());
      slots_[gi][pi].v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t gi = 0; gi < groups_.size(); ++gi) {
    double lr = groups_[gi].lr;
    for (size_t pi = 0; pi < groups_[gi].params.size(); ++pi) {
      Parameter* p = groups_[gi].params[pi];
      if (!p->trainable) continue;
      Slot& s = slots_[gi][pi];
      s.m = beta1_ * s.m + (1.0 - beta1_) * p->grad;
      s.v = (beta2_ * s.v.array() +
             (1.0 - beta2_) * p->grad.array().square()).matrix();
      Matrix mhat = s.m / bc1;
      Matrix vhat = s.v / bc2;
      p->value.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& group : groups_)
    for (Parameter* p : group.params) p->zero_grad();
}

}  // namespace cefa::nn
