#include "sketchseg/augment.hpp"

#include <cmath>

namespace sketchseg {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_pair(const GrayImage& img, const LabelMap& labels) {
  if (img.width != labels.width || img.height != labels.height)
    fail(Errc::SizeMismatch, "image and label dimensions differ");
}

}  // namespace

std::pair<GrayImage, LabelMap> rotate_pair(const GrayImage& img, const LabelMap& labels,
                                           double angle_deg) {
  check_pair(img, labels);
  if (angle_deg == 0.0) return {img, labels};

  const int w = img.width, h = img.height;
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double rad = angle_deg * kPi / 180.0;
  // Destination-to-source inverse mapping: rotate each output pixel back by
  // -angle and sample the nearest input pixel.
  const double c = std::cos(rad), s = std::sin(rad);
  GrayImage out_img(w, h, 255);
  LabelMap out_labels(w, h, labels.classes, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx = x - cx, dy = y - cy;
      double sx = c * dx + s * dy + cx;
      double sy = -s * dx + c * dy + cy;
      int ix = static_cast<int>(std::lround(sx));
      int iy = static_cast<int>(std::lround(sy));
      if (ix >= 0 && ix < w && iy >= 0 && iy < h) {
        out_img.at(x, y) = img.at(ix, iy);
        out_labels.at(x, y) = labels.at(ix, iy);
      }
    }
  }
  return {std::move(out_img), std::move(out_labels)};
}

std::pair<GrayImage, LabelMap> mirror_pair(const GrayImage& img, const LabelMap& labels) {
  check_pair(img, labels);
  const int w = img.width, h = img.height;
  GrayImage out_img(w, h);
  LabelMap out_labels(w, h, labels.classes, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out_img.at(x, y) = img.at(w - 1 - x, y);
      out_labels.at(x, y) = labels.at(w - 1 - x, y);
    }
  }
  return {std::move(out_img), std::move(out_labels)};
}

std::pair<GrayImage, LabelMap> erase_pair(const GrayImage& img, const LabelMap& labels,
                                          const AugmentConfig& cfg, Rng& rng) {
  check_pair(img, labels);
  if (cfg.erase_size < 1 || cfg.erase_size > img.width || cfg.erase_size > img.height)
    fail(Errc::BadConfig, "erase_size must fit inside the image");
  const int x0 = static_cast<int>(rng.next_below(img.width - cfg.erase_size + 1));
  const int y0 = static_cast<int>(rng.next_below(img.height - cfg.erase_size + 1));
  GrayImage out = img;
  for (int y = y0; y < y0 + cfg.erase_size; ++y)
    for (int x = x0; x < x0 + cfg.erase_size; ++x) out.at(x, y) = 255;
  return {std::move(out), labels};
}

Dataset expand(const Dataset& dataset, const AugmentConfig& cfg) {
  if (cfg.angles.empty()) fail(Errc::BadConfig, "angle list must be non-empty");
  Dataset out;
  out.class_names = dataset.class_names;
  const int mirror_states = cfg.mirror ? 2 : 1;
  for (std::size_t item_idx = 0; item_idx < dataset.items.size(); ++item_idx) {
    const DataItem& src = dataset.items[item_idx];
    std::vector<std::pair<GrayImage, LabelMap>> variants;
    for (int m = 0; m < mirror_states; ++m) {
      std::pair<GrayImage, LabelMap> base =
          m == 0 ? std::make_pair(src.image, src.labels) : mirror_pair(src.image, src.labels);
      for (double angle : cfg.angles)
        variants.push_back(rotate_pair(base.first, base.second, angle));
    }
    for (auto& v : variants)
      out.items.push_back({v.first, v.second, src.category, src.super_category});
    for (std::size_t v = 0; v < variants.size(); ++v) {
      for (int copy = 0; copy < cfg.erase_count; ++copy) {
        Rng rng = stream_rng(cfg.seed, item_idx, v, static_cast<std::uint64_t>(copy));
        auto erased = erase_pair(variants[v].first, variants[v].second, cfg, rng);
        out.items.push_back({std::move(erased.first), std::move(erased.second), src.category,
                             src.super_category});
      }
    }
  }
  return out;
}

}  // namespace sketchseg
