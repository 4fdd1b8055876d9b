// src/datagen/synth.cc

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

#include "cefa/datagen/synth.h"

#include <algorithm>
#include <cmath>

#include "cefa/util/rng.h"

namespace cefa::datagen {

namespace {

struct Rgb {
  double r, g, b;
};

constexpr Rgb kHumanColor = {0.20, 0.35, 0.80};
constexpr Rgb kObjectColors[] = {
    {0.85, 0.25, 0.20},  // 0: square
    {0.95, 0.75, 0.15},  // 1: disk
    {0.20, 0.70, 0.30},  // 2: triangle
    {0.60, 0.30, 0.70},  // 3: bar
    {0.90, 0.45, 0.60},  // 4: diamond
};
constexpr int kMaxObjects =
    static_cast<int>(sizeof(kObjectColors) / sizeof(kObjectColors[0]));

struct Extent {
  double x0, y0, x1, y1;  // pixel-space half-open box
};

void FillPixel(Image& img, int y, int x, const Rgb& c) {
  if (y < 0 || y >= img.height || x < 0 || x >= img.width) return;
  img.at(y, x, 0) = c.r;
  img.at(y, x, 1) = c.g;
  img.at(y, x, 2) = c.b;
}

// Rasterizes by pixel-center membership; all shapes also report the exact
// extent used for the annotation box.
Extent DrawDisk(Image& img, double cx, double cy, double r, const Rgb& col) {
  for (int y = static_cast<int>(cy - r) - 1; y <= cy + r + 1; ++y)
    for (int x = static_cast<int>(cx - r) - 1; x <= cx + r + 1; ++x) {
      double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r * r) FillPixel(img, y, x, col);
    }
  return {cx - r, cy - r, cx + r, cy + r};
}

Extent DrawRect(Image& img, double cx, double cy, double hw, double hh,
                const Rgb& col) {
  for (int y = static_cast<int>(cy - hh) - 1; y <= cy + hh + 1; ++y)
    for (int x = static_cast<int>(cx - hw) - 1; x <= cx + hw + 1; ++x)
      if (std::abs(x + 0.5 - cx) <= hw && std::abs(y + 0.5 - cy) <= hh)
        FillPixel(img, y, x, col);
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

Extent DrawTriangle(Image& img, double cx, double cy, double half,
                    const Rgb& col) {
  // Upward isoceles triangle: apex (cx, cy-half), base at cy+half.
  for (int y = static_cast<int>(cy - half) - 1; y <= cy + half + 1; ++y)
    for (int x = static_cast<int>(cx - half) - 1; x <= cx + half + 1; ++x) {
      double py = y + 0.5, px = x + 0.5;
      if (py < cy - half || py > cy + half) continue;
      double t = (py - (cy - half)) / (2.0 * half);  // 0 at apex, 1 at base
      if (std::abs(px - cx) <= t * half) FillPixel(img, y, x, col);
    }
  return {cx - half, cy - half, cx + half, cy + half};
}

Extent DrawDiamond(Image& img, double cx, double cy, double half,
                   const Rgb& col) {
  for (int y = static_cast<int>(cy - half) - 1; y <= cy + half + 1; ++y)
    for (int x = static_cast<int>(cx - half) - 1; x <= cx + half + 1; ++x)
      if (std::abs(x + 0.5 - cx) + std::abs(y + 0.5 - cy) <= half)
        FillPixel(img, y, x, col);
  return {cx - half, cy - half, cx + half, cy + half};
}

Extent DrawObject(Image& img, int object_class, double cx, double cy,
                  double half, const Rgb& col) {
  switch (object_class) {
    case 0:
      return DrawRect(img, cx, cy, half, half, col);
    case 1:
      return DrawDisk(img, cx, cy, half, col);
    case 2:
      return DrawTriangle(img, cx, cy, half, col);
    case 3:
      return DrawRect(img, cx, cy, half * 1.5, half * 0.5, col);
    case 4:
      return DrawDiamond(img, cx, cy, half, col);
    default:
      throw ValidationError("object class " + std::to_string(object_class) +
                            " has no glyph");
  }
}

Extent DrawHuman(Image& img, double cx, double cy, double scale,
                 const Rgb& col) {
  // Head disk on a body rectangle; extent covers both.
  double head_r = 6.0 * scale;
  double body_hw = 7.0 * scale, body_hh = 13.0 * scale;
  double head_cy = cy - body_hh - head_r + 2.0 * scale;
  DrawDisk(img, cx, head_cy, head_r, col);
  DrawRect(img, cx, cy, body_hw, body_hh, col);
  return {cx - body_hw, head_cy - head_r, cx + body_hw, cy + body_hh};
}

Box ExtentToBox(const Extent& e, int size) {
  Box b;
  b.cx = (e.x0 + e.x1) / 2.0 / size;
  b.cy = (e.y0 + e.y1) / 2.0 / size;
  b.w = (e.x1 - e.x0) / size;
  b.h = (e.y1 - e.y0) / size;
  return b;
}

// Rotates hue by `delta` turns around the gray axis (standard RGB rotation).
void RotateHue(Image& img, double delta) {
  double angle = delta * 2.0 * M_PI;
  double c = std::cos(angle), s = std::sin(angle);
  double one_third = 1.0 / 3.0, sq = std::sqrt(1.0 / 3.0);
  double m[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m[i][j] = one_third * (1.0 - c) + (i == j ? c : 0.0);
  m[0][1] += -sq * s;
  m[0][2] += sq * s;
  m[1][0] += sq * s;
  m[1][2] += -sq * s;
  m[2][0] += -sq * s;
  m[2][1] += sq * s;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
      img.at(y, x, 0) = m[0][0] * r + m[0][1] * g + m[0][2] * b;
      img.at(y, x, 1) = m[1][0] * r + m[1][1] * g + m[1][2] * b;
      img.at(y, x, 2) = m[2][0] * r + m[2][1] * g + m[2][2] * b;
    }
}

void ClampAndQuantize(Image& img) {
  for (double& v : img.pix) {
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    v = std::floor(v * 255.0 + 0.5) / 255.0;
  }
}

}  // namespace

Sample SynthesizeScene(const Config& config, int triplet_category,
                       Domain domain, uint64_t seed) {
  int num_verbs = config.get_int("data.num_verbs");
  int num_objects = config.get_int("data.num_objects");
  int num_categories = num_verbs * num_objects;
  if (triplet_category < 0 || triplet_category >= num_categories)
    throw ValidationError("unknown triplet category " +
                          std::to_string(triplet_category) +
                          "; valid ids are [0, " +
                          std::to_string(num_categories) + ")");
  if (num_objects > kMaxObjects)
    throw ConfigError("data.num_objects exceeds the " +
                      std::to_string(kMaxObjects) + " available glyphs");

  int size = config.get_int("data.image_size");
  int verb = VerbOfCategory(triplet_category, num_verbs);
  int object = ObjectOfCategory(triplet_category, num_verbs);

  // Spatial slot carrying the verb. Object-coupled slots make each object
  // permute the verb->layout mapping its own way, so the relation must be
  // learned per category rather than shared across objects.
  int slot = verb;
  if (config.get("data.verb_slots") == "object_coupled")
    slot = (verb + 2 * object) % num_verbs;
  if (num_verbs > 6)
    throw ConfigError("data.num_verbs exceeds the 6 available layout slots");

  // One independent stream per (category, domain, seed).
  cefa::Rng rng(cefa::HashCombine(
      cefa::HashCombine(seed, static_cast<uint64_t>(triplet_category)),
      domain == Domain::original ? 1ull : 2ull));

  double u = size / 96.0;  // geometry designed on a 96px canvas
  double jitter = (domain == Domain::generated
                       ? config.get_double("data.gen_jitter_scale")
                       : 1.0);

  Image img(size, size);

  // Background.
  if (domain == Domain::original) {
    for (int y = 0; y < size; ++y) {
      double shade = 0.92 - 0.10 * (static_cast<double>(y) / size);
      for (int x = 0; x < size; ++x)
        FillPixel(img, y, x, {shade, shade, shade});
    }
  } else {
    // Textured background: two crossed sinusoids with a random phase.
    double amp = config.get_double("data.texture_amplitude");
    double ph1 = rng.uniform(0.0, 2.0 * M_PI);
    double ph2 = rng.uniform(0.0, 2.0 * M_PI);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double t = std::sin(2.0 * M_PI * x / (9.0 * u) + ph1) *
                   std::sin(2.0 * M_PI * y / (13.0 * u) + ph2);
        double shade = 0.78 + amp * t;
        FillPixel(img, y, x, {shade, shade, shade});
      }
  }

  // Human placement with jitter.
  double hx = size / 2.0 + rng.uniform(-4.0, 4.0) * u * jitter;
  double hy = size / 2.0 + rng.uniform(-3.0, 3.0) * u * jitter;
  double hscale = u * (1.0 + rng.uniform(-0.1, 0.1) * jitter);

  // Object placement by slot, relative to the human.
  double obj_half = 7.0 * u * (1.0 + rng.uniform(-0.15, 0.15) * jitter);
  double ox = hx, oy = hy;
  switch (slot) {
    case 0: oy = hy - 34.0 * u; break;                      // above
    case 1: oy = hy + 34.0 * u; break;                      // below
    case 2: ox = hx - 24.0 * u; break;                      // left
    case 3: ox = hx + 24.0 * u; break;                      // right
    case 4: ox = hx + 4.0 * u; oy = hy - 2.0 * u; break;    // overlapping
    case 5: ox = hx + 26.0 * u; oy = hy - 26.0 * u; break;  // far diagonal
    default: break;
  }
  ox += rng.uniform(-3.0, 3.0) * u * jitter;
  oy += rng.uniform(-3.0, 3.0) * u * jitter;

  // Draw order keeps the human visible in the overlap slot.
  Extent oe = DrawObject(img, object, ox, oy, obj_half, kObjectColors[object]);
  Extent he = DrawHuman(img, hx, hy, hscale, kHumanColor);

  if (domain == Domain::generated) {
    RotateHue(img, config.get_double("data.hue_delta"));
    double sigma = config.get_double("data.noise_sigma");
    for (double& v : img.pix) v += rng.normal(0.0, sigma);
  }
  ClampAndQuantize(img);

  Sample s;
  s.image = std::move(img);
  s.domain = domain;
  s.sample_id = "cat" + std::to_string(triplet_category) + "_" +
                DomainName(domain) + "_s" + std::to_string(seed);

  HOIAnnotation ann;
  ann.human_box = ExtentToBox(he, size);
  ann.object_box = ExtentToBox(oe, size);
  ann.object_class = object;
  ann.verb_class = verb;
  ValidateBox(ann.human_box, s.sample_id + " human_box");
  ValidateBox(ann.object_box, s.sample_id + " object_box");

  if (domain == Domain::original) {
    s.annotations.push_back(ann);
  } else {
    // Generated samples keep their layout as prompt metadata only; the
    // trainer pseudo-labels them unless configured to trust prompts.
    s.prompt_category = triplet_category;
    s.prompt_annotations.push_back(ann);
  }
  return s;
}

}  // namespace cefa::datagen
