// include/cefa/datagen/synth.h

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

#ifndef CEFA_DATAGEN_SYNTH_H_
#define CEFA_DATAGEN_SYNTH_H_

#include "cefa/datagen/types.h"
#include "cefa/util/config.h"

namespace cefa::datagen {

// Renders one scene: a "human" glyph and one object glyph whose spatial
// relation encodes the verb. Deterministic in (category, domain, seed).
//
// The generated domain renders the same semantics under a systematic
// appearance shift — textured background, global hue rotation, additive
// noise — parameterized by data.texture_amplitude / data.hue_delta /
// data.noise_sigma, and with spatial jitter damped by data.gen_jitter_scale.
//
// With data.verb_slots = object_coupled (default), the spatial slot used by
// verb v on object o is (v + 2*o) mod num_verbs: each object assigns its
// verbs to slots by its own permutation, so verb appearance learned on one
// object does not transfer to another. `independent` uses slot = v for all
// objects.
Sample SynthesizeScene(const Config& config, int triplet_category,
                       Domain domain, uint64_t seed);

}  // namespace cefa::datagen

#endif  // CEFA_DATAGEN_SYNTH_H_
