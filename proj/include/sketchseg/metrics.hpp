#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sketchseg/raster.hpp"

namespace sketchseg {

// n[i][j] = pixels of true class i predicted as class j.
struct ConfusionCounts {
  int classes = 0;
  std::vector<std::uint64_t> n;  // row-major C x C

  std::uint64_t at(int i, int j) const {
    return n[static_cast<std::size_t>(i) * classes + j];
  }
  std::uint64_t& at(int i, int j) { return n[static_cast<std::size_t>(i) * classes + j]; }
};

struct RetrievalRun {
  std::vector<std::vector<int>> rankings;  // per-query ordered candidate ids
  std::vector<int> truth;                  // per-query correct id
};

ConfusionCounts confusion(const LabelMap& pred, const LabelMap& gt);

// n_ii / (row_i + col_i - n_ii); empty when class i appears in neither
// prediction nor ground truth.
std::optional<double> class_iou(const ConfusionCounts& counts, int cls);

// Mean class IOU over the unique labels present in the ground truth. Set
// include_background = false to drop class 0 from that set.
double sketch_iou(const LabelMap& pred, const LabelMap& gt, bool include_background = true);

double average_iou(const std::vector<std::pair<const LabelMap*, const LabelMap*>>& pairs,
                   bool include_background = true);

// Fraction of queries whose truth id is within the first k ranking entries
// (k clamped to each ranking's length).
double top_k_accuracy(const RetrievalRun& run, int k);

}  // namespace sketchseg
