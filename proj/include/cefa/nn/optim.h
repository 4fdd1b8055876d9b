// include/cefa/nn/optim.h

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

#ifndef CEFA_NN_OPTIM_H_
#define CEFA_NN_OPTIM_H_

#include <vector>

#include "cefa/nn/graph.h"

namespace cefa::nn {

struct ParamGroup {
  ParamList params;
  double lr = 1e-3;
};

// Adam without weight decay. Frozen parameters are skipped entirely, so a
// parameter with zero gradient is bit-identical after step().
class Adam {
 public:
  explicit Adam(std::vector<ParamGroup> groups, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();

 private:
  struct Slot {
    Matrix m, v;
  };
  std::vector<ParamGroup> groups_;
  std::vector<std::vector<Slot>> slots_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace cefa::nn

#endif  // CEFA_NN_OPTIM_H_
