// include/cefa/datagen/png_io.h

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

#ifndef CEFA_DATAGEN_PNG_IO_H_
#define CEFA_DATAGEN_PNG_IO_H_

#include <string>

#include "cefa/datagen/types.h"

namespace cefa::datagen {

// 8-bit RGB. Values are clamped to [0,1] and quantized with round-half-up.
void WritePng(const std::string& path, const Image& img);

// Throws IoError on missing or non-PNG files. Grayscale/alpha inputs are
// expanded to RGB.
Image ReadPng(const std::string& path);

}  // namespace cefa::datagen

#endif  // CEFA_DATAGEN_PNG_IO_H_
