// include/cefa/cli/cli.h

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

#ifndef CEFA_CLI_CLI_H_
#define CEFA_CLI_CLI_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cefa/util/config.h"

namespace cefa::cli {

// Seed specification: a bare count "5" expands to {0,1,2,3,4}; a
// comma-separated list "3,7,11" is taken verbatim. An empty or
// non-numeric spec, or a count of zero, raises ConfigError.
std::vector<std::uint64_t> ParseSeeds(const std::string& spec);

// One cell of an ablation matrix: a preset plus config overrides applied
// on top of the base configuration.
struct MatrixCell {
  std::string name;
  std::string preset;
  std::map<std::string, std::string> overrides;
};

// Named matrices: "table3" covers the component on/off grid, "table4" the
// module-variant grid, "fig4" the generated-images-per-rare-class sweep.
// Unknown names raise ConfigError listing the available matrices.
std::vector<MatrixCell> AblationMatrix(const std::string& name);

// Mean and sample standard deviation over the seeds that completed.
struct CellStats {
  int n = 0;
  double mean_rare = 0, std_rare = 0;
  double mean_full = 0, std_full = 0;
  double mean_probe = 0;
};
CellStats Aggregate(const std::vector<double>& map_rare,
                    const std::vector<double>& map_full,
                    const std::vector<double>& probe_acc);

// Entry point behind main(): parses argv, dispatches the subcommand, and
// maps failures to exit codes (0 success, 1 configuration/validation
// error, 2 runtime failure). Never calls exit().
int RunCli(int argc, const char* const* argv);

}  // namespace cefa::cli

#endif  // CEFA_CLI_CLI_H_
