#include "sketchseg/metrics.hpp"

#include <algorithm>

namespace sketchseg {

ConfusionCounts confusion(const LabelMap& pred, const LabelMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height || pred.classes != gt.classes)
    fail(Errc::SizeMismatch, "prediction and ground truth shapes differ");
  ConfusionCounts counts;
  counts.classes = gt.classes;
  counts.n.assign(static_cast<std::size_t>(gt.classes) * gt.classes, 0);
  for (std::size_t p = 0; p < gt.data.size(); ++p) ++counts.at(gt.data[p], pred.data[p]);
  return counts;
}

std::optional<double> class_iou(const ConfusionCounts& counts, int cls) {
  std::uint64_t row = 0, col = 0;
  for (int j = 0; j < counts.classes; ++j) {
    row += counts.at(cls, j);
    col += counts.at(j, cls);
  }
  std::uint64_t denom = row + col - counts.at(cls, cls);
  if (denom == 0) return std::nullopt;
  return static_cast<double>(counts.at(cls, cls)) / static_cast<double>(denom);
}

double sketch_iou(const LabelMap& pred, const LabelMap& gt, bool include_background) {
  ConfusionCounts counts = confusion(pred, gt);
  std::vector<bool> present(gt.classes, false);
  for (std::uint8_t v : gt.data) present[v] = true;
  double sum = 0.0;
  int n_p = 0;
  for (int c = include_background ? 0 : 1; c < gt.classes; ++c) {
    if (!present[c]) continue;
    // A class present in gt has a nonzero row sum, so its IOU is defined.
    sum += *class_iou(counts, c);
    ++n_p;
  }
  if (n_p == 0) fail(Errc::EmptyDataset, "ground truth has no classes to score");
  return sum / n_p;
}

double average_iou(const std::vector<std::pair<const LabelMap*, const LabelMap*>>& pairs,
                   bool include_background) {
  if (pairs.empty()) fail(Errc::EmptyDataset, "cannot average IOU over an empty list");
  double sum = 0.0;
  for (const auto& [pred, gt] : pairs) sum += sketch_iou(*pred, *gt, include_background);
  return sum / static_cast<double>(pairs.size());
}

double top_k_accuracy(const RetrievalRun& run, int k) {
  if (k < 1) fail(Errc::BadConfig, "k must be >= 1");
  if (run.rankings.size() != run.truth.size() || run.rankings.empty())
    fail(Errc::BadConfig, "retrieval run needs matching, non-empty rankings and truths");
  std::size_t hits = 0;
  for (std::size_t q = 0; q < run.rankings.size(); ++q) {
    const auto& ranking = run.rankings[q];
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
    for (std::size_t r = 0; r < take; ++r) {
      if (ranking[r] == run.truth[q]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(run.rankings.size());
}

}  // namespace sketchseg
