#pragma once

#include <utility>
#include <vector>

#include "sketchseg/raster.hpp"
#include "sketchseg/rng.hpp"

namespace sketchseg {

struct AugmentConfig {
  std::vector<double> angles = {-30, -20, -10, 0, 10, 20, 30};  // degrees
  bool mirror = true;
  int erase_size = 31;
  int erase_count = 1;  // erased copies appended per rotation/mirror variant
  std::uint64_t seed = 0;
};

// Rotates both grids about the image center ((w-1)/2, (h-1)/2) on the same
// canvas, nearest-neighbor for both; uncovered pixels fill with 255 / class 0.
// Angle 0 is the bit-exact identity. Positive angles move the +x axis toward
// +y (downward in raster coordinates).
std::pair<GrayImage, LabelMap> rotate_pair(const GrayImage& img, const LabelMap& labels,
                                           double angle_deg);

// Horizontal flip of both grids.
std::pair<GrayImage, LabelMap> mirror_pair(const GrayImage& img, const LabelMap& labels);

// Whitens a uniformly random erase_size x erase_size window fully inside the
// image; the label map is returned unchanged.
std::pair<GrayImage, LabelMap> erase_pair(const GrayImage& img, const LabelMap& labels,
                                          const AugmentConfig& cfg, Rng& rng);

// Expands every item into |angles| x (mirror ? 2 : 1) rotation/mirror variants
// followed by erase_count erased copies of each variant; with defaults that is
// 14 base + 14 erased = 28 items per source. Deterministic given cfg.seed.
Dataset expand(const Dataset& dataset, const AugmentConfig& cfg);

}  // namespace sketchseg
