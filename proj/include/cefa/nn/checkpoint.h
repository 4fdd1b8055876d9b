// include/cefa/nn/checkpoint.h

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

#ifndef CEFA_NN_CHECKPOINT_H_
#define CEFA_NN_CHECKPOINT_H_

#include <cstdint>
#include <string>

#include "cefa/nn/modules.h"

namespace cefa::nn {

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Saves all parameters to a single binary archive. Each entry is keyed by the
// parameter's hierarchical name; the header carries `fingerprint`, a hash of
// every configuration key that determines tensor shapes. Values are stored as
// little-endian doubles in Eigen's native column-major order.
void SaveCheckpoint(const std::string& path, const ParamList& params,
                    std::uint64_t fingerprint);

// Restores parameters in place. Throws CheckpointError if the file is not a
// checkpoint, if `expected_fingerprint` differs from the stored one (the
// archive was written by a model with different shape-determining settings),
// or if any parameter is missing, extra, or shaped differently.
void LoadCheckpoint(const std::string& path, const ParamList& params,
                    std::uint64_t expected_fingerprint);

// FNV-1a hash over the raw bytes of every parameter value, in list order.
// Two calls return the same value iff no parameter changed bit-for-bit;
// used to verify that frozen modules stay untouched across training.
std::uint64_t ParameterChecksum(const ParamList& params);

}  // namespace cefa::nn

#endif  // CEFA_NN_CHECKPOINT_H_
