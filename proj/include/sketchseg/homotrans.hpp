#pragma once

#include "sketchseg/raster.hpp"

namespace sketchseg {

struct HtConfig {
  int threshold = 128;  // stroke iff intensity < threshold
};

// output(p) = true iff img(p) < cfg.threshold (strict).
BinaryImage binarize(const GrayImage& img, const HtConfig& cfg = {});

// Iterative two-subiteration thinning (Guo–Hall rule set) run to fixpoint,
// followed by a connectivity-preserving cleanup of any residual 2x2 blocks.
// The result is a subset of the input, contains no 2x2 all-foreground block,
// and keeps the 8-connected component count. Pixels outside the image count
// as background; isolated pixels survive.
BinaryImage skeletonize(const BinaryImage& mask);

// Maps any stroke image into the 1-pixel-thickness space: centerline pixels
// become 0, everything else 255.
GrayImage homogeneous_transform(const GrayImage& img, const HtConfig& cfg = {});

}  // namespace sketchseg
