#include "sketchseg/classstats.hpp"

#include <algorithm>

namespace sketchseg {

ClassStats collect_stats(const std::vector<const LabelMap*>& maps, int classes) {
  if (maps.empty()) fail(Errc::EmptyDataset, "cannot collect stats over an empty dataset");
  if (classes < 1) fail(Errc::BadConfig, "classes must be >= 1");

  ClassStats stats;
  stats.classes = classes;
  stats.t.assign(classes, 0);
  stats.n.assign(classes, 0);
  std::vector<std::uint64_t> per_image(classes);
  for (const LabelMap* map : maps) {
    std::fill(per_image.begin(), per_image.end(), 0);
    for (std::uint8_t v : map->data) {
      if (v >= classes) fail(Errc::LabelOutOfRange, "label index >= classes in stats input");
      ++per_image[v];
    }
    for (int c = 0; c < classes; ++c) {
      stats.t[c] += per_image[c];
      if (per_image[c] > 0) ++stats.n[c];
    }
  }

  stats.phi.assign(classes, 0.0);
  std::vector<double> present;
  for (int c = 0; c < classes; ++c) {
    if (stats.n[c] > 0) {
      stats.phi[c] = static_cast<double>(stats.t[c]) / static_cast<double>(stats.n[c]);
      present.push_back(stats.phi[c]);
    }
  }
  if (present.empty()) fail(Errc::EmptyDataset, "no class present in stats input");
  std::sort(present.begin(), present.end());
  std::size_t mid = present.size() / 2;
  stats.median = present.size() % 2 == 1 ? present[mid] : 0.5 * (present[mid - 1] + present[mid]);

  stats.alpha.assign(classes, 1.0);
  for (int c = 0; c < classes; ++c)
    if (stats.n[c] > 0) stats.alpha[c] = stats.median / stats.phi[c];
  return stats;
}

ClassStats collect_stats(const Dataset& dataset, int classes) {
  std::vector<const LabelMap*> maps;
  maps.reserve(dataset.items.size());
  for (const DataItem& item : dataset.items) maps.push_back(&item.labels);
  return collect_stats(maps, classes);
}

ClassStats apply_background_boost(const ClassStats& stats, double factor) {
  if (factor <= 0) fail(Errc::BadConfig, "background boost factor must be > 0");
  ClassStats out = stats;
  out.alpha[0] *= factor;
  out.background_boost = stats.background_boost * factor;
  return out;
}

}  // namespace sketchseg
