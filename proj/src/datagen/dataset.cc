// src/datagen/dataset.cc

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

#include "cefa/datagen/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "cefa/datagen/png_io.h"
#include "cefa/datagen/synth.h"
#include "cefa/util/rng.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cefa::datagen {

namespace {

std::string PadId(int v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s = "0" + s;
  return s;
}

json BoxToJson(const Box& b) { return json::array({b.cx, b.cy, b.w, b.h}); }

Box BoxFromJson(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw ValidationError(where + ": box must be a 4-element array");
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
        j[3].get<double>()};
  ValidateBox(b, where);
  return b;
}

json AnnotationsToJson(const std::vector<HOIAnnotation>& anns) {
  json arr = json::array();
  for (const HOIAnnotation& a : anns)
    arr.push_back({{"human_box", BoxToJson(a.human_box)},
                   {"object_box", BoxToJson(a.object_box)},
                   {"object_class", a.object_class},
                   {"verb_class", a.verb_class}});
  return arr;
}

std::vector<HOIAnnotation> AnnotationsFromJson(const json& arr,
                                               const std::string& where) {
  std::vector<HOIAnnotation> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& a = arr[i];
    std::string here = where + " annotation " + std::to_string(i);
    HOIAnnotation ann;
    ann.human_box = BoxFromJson(a.at("human_box"), here + " human_box");
    ann.object_box = BoxFromJson(a.at("object_box"), here + " object_box");
    ann.object_class = a.at("object_class").get<int>();
    ann.verb_class = a.at("verb_class").get<int>();
    if (ann.object_class < 0 || ann.verb_class < 0)
      throw ValidationError(here + ": negative class id");
    out.push_back(ann);
  }
  return out;
}

}  // namespace

const Sample& BuiltDataset::by_id(const std::string& id) const {
  for (const Sample& s : samples)
    if (s.sample_id == id) return s;
  throw ValidationError("sample id not found: " + id);
}

Sample& BuiltDataset::by_id(const std::string& id) {
  for (Sample& s : samples)
    if (s.sample_id == id) return s;
  throw ValidationError("sample id not found: " + id);
}

BuiltDataset BuildLongtailDataset(const Config& config, uint64_t seed) {
  int num_verbs = config.get_int("data.num_verbs");
  int num_objects = config.get_int("data.num_objects");
  int classes = num_verbs * num_objects;
  int rare_threshold = config.get_int("data.rare_threshold");
  int tail_classes = config.get_int("data.tail_classes");
  int tail_count = config.get_int("data.tail_count");
  int head_max = config.get_int("data.head_max");
  double zipf = config.get_double("data.zipf_exponent");
  int test_per_category = config.get_int("data.test_per_category");

  if (tail_classes < 0 || tail_classes > classes)
    throw ConfigError("data.tail_classes must be in [0, " +
                      std::to_string(classes) + "]");
  if (tail_classes > 0 && tail_count >= rare_threshold)
    throw ConfigError(
        "data.tail_count (" + std::to_string(tail_count) +
        ") must be below data.rare_threshold (" +
        std::to_string(rare_threshold) + ") for the tail to be rare");

  BuiltDataset ds;
  ds.manifest.rare_threshold = rare_threshold;
  ds.manifest.num_verbs = num_verbs;
  ds.manifest.num_objects = num_objects;
  ds.manifest.fill_dense_pairs();

  // Tail categories spread evenly over the id range; the rest follow a
  // Zipf profile clamped at rare_threshold so only the tail is rare.
  std::set<int> tail_ids;
  for (int i = 0; i < tail_classes; ++i)
    tail_ids.insert(static_cast<int>(
        static_cast<long long>(i) * classes / tail_classes));

  int head_rank = 0;
  for (int c = 0; c < classes; ++c) {
    int count;
    if (tail_ids.count(c)) {
      count = tail_count;
    } else {
      double raw = head_max * std::pow(1.0 / (head_rank + 1), zipf);
      count = std::max(rare_threshold,
                       static_cast<int>(std::floor(raw + 0.5)));
      ++head_rank;
    }
    ds.manifest.category_counts[c] = count;
  }

  for (int c = 0; c < classes; ++c) {
    int count = ds.manifest.category_counts[c];
    for (int i = 0; i < count; ++i) {
      uint64_t s =
          cefa::HashCombine(cefa::HashCombine(seed, 0x7261696eull /*train*/),
                            cefa::HashCombine(c, i));
      Sample sample = SynthesizeScene(config, c, Domain::original, s);
      sample.sample_id = "train_cat" + PadId(c, 3) + "_" + PadId(i, 4);
      ds.manifest.train_ids.push_back(sample.sample_id);
      ds.samples.push_back(std::move(sample));
    }
    for (int i = 0; i < test_per_category; ++i) {
      uint64_t s =
          cefa::HashCombine(cefa::HashCombine(seed, 0x74657374ull /*test*/),
                            cefa::HashCombine(c, i));
      Sample sample = SynthesizeScene(config, c, Domain::original, s);
      sample.sample_id = "test_cat" + PadId(c, 3) + "_" + PadId(i, 4);
      ds.manifest.test_ids.push_back(sample.sample_id);
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

int GenerateSupplement(const Config& config, BuiltDataset& ds,
                       int per_rare_count, uint64_t seed) {
  if (per_rare_count <= 0)
    throw ConfigError("per-rare generated count must be positive, got " +
                      std::to_string(per_rare_count));
  int added = 0;
  for (int c : ds.manifest.rare_categories()) {
    for (int i = 0; i < per_rare_count; ++i) {
      uint64_t s =
          cefa::HashCombine(cefa::HashCombine(seed, 0x67656eull /*gen*/),
                            cefa::HashCombine(c, i));
      Sample sample = SynthesizeScene(config, c, Domain::generated, s);
      sample.sample_id = "gen_cat" + PadId(c, 3) + "_" + PadId(i, 4);
      ds.manifest.train_ids.push_back(sample.sample_id);
      ds.samples.push_back(std::move(sample));
      ++added;
    }
  }
  return added;
}

void SaveDataset(const BuiltDataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");

  json anns = json::array();
  for (const Sample& s : ds.samples) {
    WritePng((fs::path(dir) / "images" / (s.sample_id + ".png")).string(),
             s.image);
    json rec = {{"sample_id", s.sample_id},
                {"domain", DomainName(s.domain)},
                {"annotations", AnnotationsToJson(s.annotations)}};
    if (s.prompt_category >= 0) {
      rec["prompt_category"] = s.prompt_category;
      rec["prompt_annotations"] = AnnotationsToJson(s.prompt_annotations);
    }
    anns.push_back(rec);
  }
  std::ofstream af((fs::path(dir) / "annotations.json").string());
  if (!af) throw IoError("cannot write annotations.json under " + dir);
  af << anns.dump(1) << "\n";

  json counts = json::array();
  for (int c = 0; c < ds.manifest.num_categories(); ++c) {
    auto it = ds.manifest.category_counts.find(c);
    counts.push_back(it == ds.manifest.category_counts.end() ? 0 : it->second);
  }
  json pairs = json::array();
  for (auto& [v, o] : ds.manifest.category_pairs)
    pairs.push_back(json::array({v, o}));
  json mf = {{"rare_threshold", ds.manifest.rare_threshold},
             {"num_verbs", ds.manifest.num_verbs},
             {"num_objects", ds.manifest.num_objects},
             {"category_pairs", pairs},
             {"category_counts", counts},
             {"splits",
              {{"train", ds.manifest.train_ids},
               {"test", ds.manifest.test_ids}}}};
  std::ofstream mfout((fs::path(dir) / "manifest.json").string());
  if (!mfout) throw IoError("cannot write manifest.json under " + dir);
  mfout << mf.dump(1) << "\n";
}

namespace {

json LoadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return j;
}

BuiltDataset IngestInternal(const std::string& dir) {
  fs::path root(dir);
  json mf = LoadJsonFile(root / "manifest.json");
  json anns = LoadJsonFile(root / "annotations.json");

  BuiltDataset ds;
  ds.manifest.root = dir;
  try {
    ds.manifest.rare_threshold = mf.at("rare_threshold").get<int>();
    ds.manifest.num_verbs = mf.at("num_verbs").get<int>();
    ds.manifest.num_objects = mf.at("num_objects").get<int>();
    for (const json& p : mf.at("category_pairs"))
      ds.manifest.category_pairs.emplace_back(p.at(0).get<int>(),
                                              p.at(1).get<int>());
    const json& counts = mf.at("category_counts");
    for (size_t c = 0; c < counts.size(); ++c)
      ds.manifest.category_counts[static_cast<int>(c)] = counts[c].get<int>();
    ds.manifest.train_ids =
        mf.at("splits").at("train").get<std::vector<std::string>>();
    ds.manifest.test_ids =
        mf.at("splits").at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError("manifest.json under " + dir + ": " + e.what());
  }

  for (size_t i = 0; i < anns.size(); ++i) {
    const json& rec = anns[i];
    std::string where =
        "annotations.json entry " + std::to_string(i) + " under " + dir;
    Sample s;
    try {
      s.sample_id = rec.at("sample_id").get<std::string>();
      std::string dom = rec.at("domain").get<std::string>();
      if (dom == "original")
        s.domain = Domain::original;
      else if (dom == "generated")
        s.domain = Domain::generated;
      else
        throw ValidationError(where + ": unknown domain `" + dom + "`");
      s.annotations = AnnotationsFromJson(rec.at("annotations"), where);
      if (rec.contains("prompt_category")) {
        s.prompt_category = rec.at("prompt_category").get<int>();
        s.prompt_annotations = AnnotationsFromJson(
            rec.at("prompt_annotations"), where + " (prompt)");
      }
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    fs::path img = root / "images" / (s.sample_id + ".png");
    if (!fs::exists(img))
      throw IoError(where + ": referenced image does not exist: " +
                    img.string());
    s.image = ReadPng(img.string());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// HICO-style records carry pixel-space corner boxes indexed by detection
// entries; every (verb, object-class) pair found becomes one triplet
// category, ids assigned in sorted (object, verb) order.
BuiltDataset IngestHicoStyle(const std::string& dir, int rare_threshold) {
  fs::path root(dir);
  json anns = LoadJsonFile(root / "annotations.json");

  BuiltDataset ds;
  ds.manifest.root = dir;
  ds.manifest.rare_threshold = rare_threshold;

  std::map<std::pair<int, int>, int> pair_count;  // (object, verb) -> count
  struct Raw {
    Sample sample;
    std::vector<std::pair<int, int>> pairs;  // (object, verb) per annotation
  };
  std::vector<Raw> raws;

  for (size_t i = 0; i < anns.size(); ++i) {
    const json& rec = anns[i];
    std::string where =
        "annotations.json entry " + std::to_string(i) + " under " + dir;
    Raw raw;
    try {
      std::string file_name = rec.at("file_name").get<std::string>();
      fs::path img = root / "images" / file_name;
      if (!fs::exists(img))
        throw IoError(where + ": referenced image does not exist: " +
                      img.string());
      raw.sample.image = ReadPng(img.string());
      raw.sample.sample_id =
          fs::path(file_name).stem().string();
      raw.sample.domain = Domain::original;

      const json& dets = rec.at("annotations");
      auto corner_box = [&](const json& det,
                            const std::string& here) -> Box {
        const json& bb = det.at("bbox");
        if (!bb.is_array() || bb.size() != 4)
          throw ValidationError(here + ": bbox must be [x1,y1,x2,y2]");
        double x1 = bb[0].get<double>(), y1 = bb[1].get<double>();
        double x2 = bb[2].get<double>(), y2 = bb[3].get<double>();
        int w = raw.sample.image.width, h = raw.sample.image.height;
        Box b{(x1 + x2) / 2.0 / w, (y1 + y2) / 2.0 / h, (x2 - x1) / w,
              (y2 - y1) / h};
        ValidateBox(b, here);
        return b;
      };

      for (const json& hoi : rec.at("hoi_annotation")) {
        int sub = hoi.at("subject_id").get<int>();
        int obj = hoi.at("object_id").get<int>();
        int verb = hoi.at("category_id").get<int>();
        if (sub < 0 || sub >= static_cast<int>(dets.size()) || obj < 0 ||
            obj >= static_cast<int>(dets.size()))
          throw ValidationError(where + ": hoi_annotation references "
                                "detection index out of range");
        HOIAnnotation a;
        a.human_box = corner_box(dets[sub], where + " subject bbox");
        a.object_box = corner_box(dets[obj], where + " object bbox");
        a.verb_class = verb;
        a.object_class = dets[obj].at("category_id").get<int>();
        raw.pairs.emplace_back(a.object_class, a.verb_class);
        pair_count[{a.object_class, a.verb_class}]++;
        raw.sample.annotations.push_back(a);
      }
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    raws.push_back(std::move(raw));
  }

  // Category ids in sorted (object, verb) order; class-id spaces sized by
  // the largest id seen.
  std::map<std::pair<int, int>, int> cat_of_pair;
  for (auto& [pair, count] : pair_count) {
    int id = static_cast<int>(ds.manifest.category_pairs.size());
    cat_of_pair[pair] = id;
    ds.manifest.category_pairs.emplace_back(pair.second, pair.first);
    ds.manifest.category_counts[id] = count;
  }
  int max_verb = -1, max_obj = -1;
  for (auto& [v, o] : ds.manifest.category_pairs) {
    max_verb = std::max(max_verb, v);
    max_obj = std::max(max_obj, o);
  }
  ds.manifest.num_verbs = max_verb + 1;
  ds.manifest.num_objects = max_obj + 1;

  for (Raw& raw : raws) {
    ds.manifest.train_ids.push_back(raw.sample.sample_id);
    ds.samples.push_back(std::move(raw.sample));
  }
  return ds;
}

}  // namespace

BuiltDataset IngestExternal(const std::string& dir, IngestFormat format,
                            int rare_threshold) {
  if (!fs::exists(dir)) throw IoError("dataset directory missing: " + dir);
  if (format == IngestFormat::internal) return IngestInternal(dir);
  return IngestHicoStyle(dir, rare_threshold);
}

bool operator==(const Box& a, const Box& b) {
  return a.cx == b.cx && a.cy == b.cy && a.w == b.w && a.h == b.h;
}

bool operator==(const HOIAnnotation& a, const HOIAnnotation& b) {
  return a.human_box == b.human_box && a.object_box == b.object_box &&
         a.object_class == b.object_class && a.verb_class == b.verb_class;
}

bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
  return a.rare_threshold == b.rare_threshold && a.num_verbs == b.num_verbs &&
         a.num_objects == b.num_objects &&
         a.category_pairs == b.category_pairs &&
         a.train_ids == b.train_ids && a.test_ids == b.test_ids &&
         a.category_counts == b.category_counts;
}

}  // namespace cefa::datagen
