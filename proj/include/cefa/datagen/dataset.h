// include/cefa/datagen/dataset.h

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

#ifndef CEFA_DATAGEN_DATASET_H_
#define CEFA_DATAGEN_DATASET_H_

#include <string>
#include <vector>

#include "cefa/datagen/types.h"
#include "cefa/util/config.h"

namespace cefa::datagen {

// A manifest plus the samples it references, fully in memory.
struct BuiltDataset {
  DatasetManifest manifest;
  std::vector<Sample> samples;

  const Sample& by_id(const std::string& id) const;
  Sample& by_id(const std::string& id);
};

// Synthesizes the two-split long-tail dataset: per-category counts follow a
// Zipf-like head profile clamped at rare_threshold, with data.tail_classes
// categories held at data.tail_count (< rare_threshold) instances. Tail
// categories are spread evenly over the id range. Pure in (config, seed).
//
// category_counts tracks original-domain training annotations only; that is
// the count the rare/non-rare partition is defined over, and it does not
// change when generated samples are added later.
BuiltDataset BuildLongtailDataset(const Config& config, uint64_t seed);

// Adds per_rare_count generated-domain samples for each rare category to the
// train split. Generated samples are unlabeled (prompt metadata only).
// Returns the number of samples added.
int GenerateSupplement(const Config& config, BuiltDataset& ds,
                       int per_rare_count, uint64_t seed);

// On-disk layout: images/<sample_id>.png + annotations.json + manifest.json.
void SaveDataset(const BuiltDataset& ds, const std::string& dir);

enum class IngestFormat { internal, hico_style };

// Reads a dataset directory back. `internal` is the exact SaveDataset
// format (export -> ingest is the identity). `hico_style` reads a single
// annotations.json of records {file_name, annotations:[{bbox:[x1,y1,x2,y2],
// category_id}], hoi_annotation:[{subject_id, object_id, category_id}]}
// with pixel-space corner boxes; triplet categories are the distinct
// (verb, object) pairs in order of first discovery sort.
// Malformed entries are reported with file and entry index; a referenced
// image that does not exist is a hard error naming the reference.
BuiltDataset IngestExternal(const std::string& dir, IngestFormat format,
                            int rare_threshold = 10);

bool operator==(const Box& a, const Box& b);
bool operator==(const HOIAnnotation& a, const HOIAnnotation& b);
bool operator==(const DatasetManifest& a, const DatasetManifest& b);

}  // namespace cefa::datagen

#endif  // CEFA_DATAGEN_DATASET_H_
