#include "sketchseg/swloss.hpp"

#include <algorithm>
#include <cmath>

namespace sketchseg {

namespace {

void check_finite(std::span<const double> logits) {
  for (double v : logits)
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "logits must be finite");
}

double log_sum_exp(std::span<const double> x) {
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

void check_shapes(const LogitGrid& x, int w, int h, int classes) {
  if (x.width != w || x.height != h || x.classes != classes)
    fail(Errc::SizeMismatch, "logit grid shape does not match target");
}

}  // namespace

double standard_ce(std::span<const double> logits, int gt_class) {
  if (gt_class < 0 || gt_class >= static_cast<int>(logits.size()))
    fail(Errc::LabelOutOfRange, "gt class out of range");
  check_finite(logits);
  return -logits[gt_class] + log_sum_exp(logits);
}

SoftTarget compute_soft_targets(const LabelMap& labels) {
  SoftTarget target;
  target.width = labels.width;
  target.height = labels.height;
  target.classes = labels.classes;
  target.gt = labels.data;
  target.soft_index.assign(labels.data.size(), -1);

  const int w = labels.width, h = labels.height;
  std::vector<int> counts(labels.classes);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int gt = labels.at(x, y);
      if (gt == 0) continue;  // background pixels stay one-hot
      std::fill(counts.begin(), counts.end(), 0);
      int distinct_fg = 0;
      for (int ny = std::max(0, y - 1); ny <= std::min(h - 1, y + 1); ++ny) {
        for (int nx = std::max(0, x - 1); nx <= std::min(w - 1, x + 1); ++nx) {
          int cls = labels.at(nx, ny);
          if (cls == 0) continue;  // f_0 = 0
          if (counts[cls]++ == 0) ++distinct_fg;
        }
      }
      if (distinct_fg < 2) continue;
      int total = 0;
      for (int c = 1; c < labels.classes; ++c) total += counts[c];
      std::vector<std::pair<std::uint8_t, double>> dist;
      for (int c = 1; c < labels.classes; ++c)
        if (counts[c] > 0)
          dist.emplace_back(static_cast<std::uint8_t>(c),
                            static_cast<double>(counts[c]) / total);
      target.soft_index[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::int32_t>(target.soft.size());
      target.soft.push_back(std::move(dist));
    }
  }
  return target;
}

double soft_weighted_pixel_loss(std::span<const double> logits,
                                std::span<const std::pair<std::uint8_t, double>> lambda,
                                int gt_class, const ClassStats& stats) {
  check_finite(logits);
  double dot = 0.0;
  for (const auto& [cls, weight] : lambda) dot += weight * logits[cls];
  return stats.alpha_of(gt_class) * (-dot + log_sum_exp(logits));
}

namespace {

// Shared accumulation for the loss, the gradient, or both. Sums run in
// row-major pixel order so results do not depend on scheduling.
std::pair<double, LogitGrid> accumulate(const LogitGrid& x, const SoftTarget& target,
                                        const ClassStats& stats, bool want_grad) {
  check_shapes(x, target.width, target.height, target.classes);
  const int classes = x.classes;
  const std::size_t pixels = static_cast<std::size_t>(x.width) * x.height;

  LogitGrid grad;
  if (want_grad) grad = LogitGrid(x.width, x.height, classes, 0.0);

  double loss_sum = 0.0;
  double alpha_sum = 0.0;
  std::vector<double> softmax(classes);
  for (std::size_t p = 0; p < pixels; ++p) {
    std::span<const double> logits(x.data.data() + p * classes,
                                   static_cast<std::size_t>(classes));
    check_finite(logits);
    const int gt = target.gt[p];
    const double alpha = stats.alpha_of(gt);
    alpha_sum += alpha;

    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double z = 0.0;
    for (int c = 0; c < classes; ++c) {
      softmax[c] = std::exp(logits[c] - m);
      z += softmax[c];
    }
    const double lse = m + std::log(z);

    double dot;
    if (target.is_soft(p)) {
      dot = 0.0;
      for (const auto& [cls, weight] : target.soft[target.soft_index[p]])
        dot += weight * logits[cls];
    } else {
      dot = logits[gt];
    }
    loss_sum += alpha * (-dot + lse);

    if (want_grad) {
      double* g = grad.data.data() + p * classes;
      for (int c = 0; c < classes; ++c) g[c] = alpha * softmax[c] / z;
      if (target.is_soft(p)) {
        for (const auto& [cls, weight] : target.soft[target.soft_index[p]])
          g[cls] -= alpha * weight;
      } else {
        g[gt] -= alpha;
      }
    }
  }

  if (want_grad) {
    const double inv = 1.0 / alpha_sum;
    for (double& g : grad.data) g *= inv;
  }
  return {loss_sum / alpha_sum, std::move(grad)};
}

}  // namespace

double soft_weighted_loss(const LogitGrid& x, const SoftTarget& target, const ClassStats& stats) {
  return accumulate(x, target, stats, false).first;
}

LogitGrid soft_weighted_grad(const LogitGrid& x, const SoftTarget& target,
                             const ClassStats& stats) {
  return accumulate(x, target, stats, true).second;
}

std::pair<double, LogitGrid> soft_weighted_loss_grad(const LogitGrid& x, const SoftTarget& target,
                                                     const ClassStats& stats) {
  return accumulate(x, target, stats, true);
}

double weighted_ce_loss(const LogitGrid& x, const LabelMap& labels, const ClassStats& stats) {
  check_shapes(x, labels.width, labels.height, labels.classes);
  SoftTarget one_hot;
  one_hot.width = labels.width;
  one_hot.height = labels.height;
  one_hot.classes = labels.classes;
  one_hot.gt = labels.data;
  one_hot.soft_index.assign(labels.data.size(), -1);
  return accumulate(x, one_hot, stats, false).first;
}

}  // namespace sketchseg
