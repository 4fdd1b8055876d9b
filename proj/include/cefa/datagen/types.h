// include/cefa/datagen/types.h

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

#ifndef CEFA_DATAGEN_TYPES_H_
#define CEFA_DATAGEN_TYPES_H_

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cefa::datagen {

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg)
      : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Normalized center-x / center-y / width / height, all in [0,1].
struct Box {
  double cx = 0, cy = 0, w = 0, h = 0;
};

struct HOIAnnotation {
  Box human_box;
  Box object_box;
  int object_class = 0;
  int verb_class = 0;
};

// A (verb, object) pair maps to exactly one triplet category and back.
inline int TripletCategory(int verb, int object, int num_verbs) {
  return object * num_verbs + verb;
}
inline int VerbOfCategory(int category, int num_verbs) {
  return category % num_verbs;
}
inline int ObjectOfCategory(int category, int num_verbs) {
  return category / num_verbs;
}

enum class Domain { original, generated };

inline const char* DomainName(Domain d) {
  return d == Domain::original ? "original" : "generated";
}

// Row-major interleaved RGB, values in [0,1]. Rendering quantizes to 8 bits
// so an image read back from PNG equals the in-memory one bit-for-bit.
struct Image {
  int height = 0, width = 0;
  std::vector<double> pix;

  Image() = default;
  Image(int h, int w) : height(h), width(w), pix(3ull * h * w, 0.0) {}

  double& at(int y, int x, int c) { return pix[3ull * (y * width + x) + c]; }
  double at(int y, int x, int c) const {
    return pix[3ull * (y * width + x) + c];
  }
};

struct Sample {
  Image image;
  Domain domain = Domain::original;
  std::vector<HOIAnnotation> annotations;
  std::string sample_id;

  // Generated samples remember which category they were synthesized for,
  // together with the exact layout that was rendered. The trainer treats
  // them as unlabeled (pseudo-labeling path) unless told to trust these.
  int prompt_category = -1;
  std::vector<HOIAnnotation> prompt_annotations;
};

// Index over a dataset directory: split membership, per-category training
// instance counts, and the rare/non-rare partition they induce.
struct DatasetManifest {
  std::string root;
  int rare_threshold = 10;
  int num_verbs = 0;
  int num_objects = 0;
  // (verb, object) pair per triplet category id. Synthesized datasets
  // enumerate every pair densely (id = object * num_verbs + verb); ingested
  // datasets list only the pairs that occur.
  std::vector<std::pair<int, int>> category_pairs;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::map<int, int> category_counts;  // triplet category -> train instances

  int num_categories() const {
    return static_cast<int>(category_pairs.size());
  }

  // -1 when the pair has no category id.
  int category_of(int verb, int object) const {
    for (size_t i = 0; i < category_pairs.size(); ++i)
      if (category_pairs[i].first == verb &&
          category_pairs[i].second == object)
        return static_cast<int>(i);
    return -1;
  }

  void fill_dense_pairs() {
    category_pairs.clear();
    for (int o = 0; o < num_objects; ++o)
      for (int v = 0; v < num_verbs; ++v) category_pairs.emplace_back(v, o);
  }

  bool is_rare(int category) const {
    auto it = category_counts.find(category);
    int count = it == category_counts.end() ? 0 : it->second;
    return count < rare_threshold;
  }

  // rare and non-rare partition the categories: every category is in
  // exactly one of the two lists.
  std::vector<int> rare_categories() const {
    std::vector<int> out;
    for (int c = 0; c < num_categories(); ++c)
      if (is_rare(c)) out.push_back(c);
    return out;
  }
  std::vector<int> nonrare_categories() const {
    std::vector<int> out;
    for (int c = 0; c < num_categories(); ++c)
      if (!is_rare(c)) out.push_back(c);
    return out;
  }
};

inline void ValidateBox(const Box& b, const std::string& where) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(b.cx) || !in01(b.cy) || !in01(b.w) || !in01(b.h))
    throw ValidationError(where + ": box coordinate outside [0,1] (cx=" +
                          std::to_string(b.cx) + " cy=" + std::to_string(b.cy) +
                          " w=" + std::to_string(b.w) +
                          " h=" + std::to_string(b.h) + ")");
  if (b.w <= 0.0 || b.h <= 0.0)
    throw ValidationError(where + ": box width/height must be positive");
}

}  // namespace cefa::datagen

#endif  // CEFA_DATAGEN_TYPES_H_
