#pragma once

#include <cstdint>
#include <vector>

#include "sketchseg/raster.hpp"

namespace sketchseg {

// Per-class pixel statistics over a training set and the derived
// median-frequency weights: phi[i] = t[i] / n[i], alpha[i] = median(phi) / phi[i].
struct ClassStats {
  int classes = 0;
  std::vector<std::uint64_t> t;    // total pixels of class i
  std::vector<std::uint64_t> n;    // images containing class i
  std::vector<double> phi;         // t[i] / n[i]; 0 when the class is absent
  double median = 0.0;             // median of phi over present classes
  std::vector<double> alpha;       // median / phi; 1 for absent classes
  double background_boost = 1.0;

  double alpha_of(int cls) const { return alpha[cls]; }
};

// Counts pixels and image occurrences per class over the dataset. Classes
// absent from the data are excluded from the median and get alpha = 1. The
// median over an even number of present classes is the mean of the two middle
// values. Background (class 0) participates like any other class.
ClassStats collect_stats(const Dataset& dataset, int classes);

// Same statistics over an explicit list of label maps.
ClassStats collect_stats(const std::vector<const LabelMap*>& maps, int classes);

// Scales the background weight: alpha[0] *= factor. All other weights are
// untouched.
ClassStats apply_background_boost(const ClassStats& stats, double factor);

}  // namespace sketchseg
