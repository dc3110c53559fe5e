#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sketchseg/classstats.hpp"
#include "sketchseg/raster.hpp"

namespace sketchseg {

// Per-pixel class scores, pixel-major (classes contiguous within a pixel).
struct LogitGrid {
  int width = 0;
  int height = 0;
  int classes = 0;
  std::vector<double> data;

  LogitGrid() = default;
  LogitGrid(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), classes(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::span<const double> pixel(int x, int y) const {
    return {data.data() + (static_cast<std::size_t>(y) * width + x) * classes,
            static_cast<std::size_t>(classes)};
  }
  std::span<double> pixel(int x, int y) {
    return {data.data() + (static_cast<std::size_t>(y) * width + x) * classes,
            static_cast<std::size_t>(classes)};
  }
};

// Per-pixel target distributions. Interior and background pixels are one-hot
// at the ground-truth class; pixels on a boundary between foreground classes
// carry a sparse distribution over the foreground classes seen in their 3x3
// window (background weight is always zero there).
struct SoftTarget {
  int width = 0;
  int height = 0;
  int classes = 0;
  std::vector<std::uint8_t> gt;          // ground-truth class per pixel
  std::vector<std::int32_t> soft_index;  // -1 = one-hot, else index into soft
  std::vector<std::vector<std::pair<std::uint8_t, double>>> soft;  // (class, lambda)

  bool is_soft(std::size_t pixel) const { return soft_index[pixel] >= 0; }
};

// -x_i + log sum_j exp(x_j), computed with the max-shift trick.
double standard_ce(std::span<const double> logits, int gt_class);

// Builds soft targets from a label map: a foreground pixel whose 3x3 window
// (clipped at borders, center included) holds >= 2 distinct foreground classes
// gets lambda_j proportional to the window count of class j (background count
// forced to 0); every other pixel is one-hot at its label.
SoftTarget compute_soft_targets(const LabelMap& labels);

// alpha_i * (-sum_j lambda_j x_j + log sum_k exp(x_k)) for one pixel, where i
// is the ground-truth class.
double soft_weighted_pixel_loss(std::span<const double> logits,
                                std::span<const std::pair<std::uint8_t, double>> lambda,
                                int gt_class, const ClassStats& stats);

// Grid aggregate: sum_p loss_p / sum_p alpha_{gt_p}.
double soft_weighted_loss(const LogitGrid& x, const SoftTarget& target, const ClassStats& stats);

// d/dx_k of soft_weighted_loss: alpha_i * (softmax(x)_k - lambda_k) per pixel,
// divided by the aggregate weight denominator.
LogitGrid soft_weighted_grad(const LogitGrid& x, const SoftTarget& target, const ClassStats& stats);

// Loss and gradient in one pass (the gradient shares the softmax work).
std::pair<double, LogitGrid> soft_weighted_loss_grad(const LogitGrid& x, const SoftTarget& target,
                                                     const ClassStats& stats);

// The same aggregation with lambda forced one-hot at the label.
double weighted_ce_loss(const LogitGrid& x, const LabelMap& labels, const ClassStats& stats);

}  // namespace sketchseg
