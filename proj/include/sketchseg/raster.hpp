#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sketchseg/error.hpp"

namespace sketchseg {

// 8-bit grayscale raster. 0 = black stroke, 255 = white background.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 255);
  GrayImage(int w, int h, std::vector<std::uint8_t> d);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
  bool operator==(const GrayImage&) const = default;
};

// Foreground mask (true = stroke).
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0/1, row-major

  BinaryImage() = default;
  BinaryImage(int w, int h, std::uint8_t fill = 0);
  BinaryImage(int w, int h, std::vector<std::uint8_t> d);

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  bool operator==(const BinaryImage&) const = default;
};

// Dense class-index grid. Index 0 is always the background class.
struct LabelMap {
  int width = 0;
  int height = 0;
  int classes = 1;
  std::vector<std::uint8_t> data;  // row-major class indices in [0, classes)

  LabelMap() = default;
  LabelMap(int w, int h, int c, std::uint8_t fill = 0);
  LabelMap(int w, int h, int c, std::vector<std::uint8_t> d);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const LabelMap&) const = default;
};

struct DataItem {
  GrayImage image;
  LabelMap labels;
  std::string category;
  std::string super_category;
};

// Paired images and annotations, grouped by category. class_names[cat][i] is
// the human-readable name of class index i (0 = "background").
struct Dataset {
  std::vector<DataItem> items;
  std::map<std::string, std::vector<std::string>> class_names;

  bool empty() const { return items.empty(); }
  // Distinct categories in first-appearance order.
  std::vector<std::string> categories() const;
  int classes_for(const std::string& category) const;
};

// --- file I/O -------------------------------------------------------------

// Loads an 8-bit grayscale image. Format is selected by content: PGM (P5,
// maxval 255) or PNG (8-bit grayscale, no alpha, no interlace).
GrayImage load_gray(const std::string& path);

// Writes `img` to `path`; encodes PNG when the extension is .png (case
// insensitive), PGM otherwise. load_gray(save_gray(x)) == x bit-exactly.
void save_gray(const GrayImage& img, const std::string& path);

// Loads a P5 PGM whose pixel values are class indices; values >= classes are
// a LabelOutOfRange error.
LabelMap load_labels(const std::string& path, int classes);

// Label maps are stored as raw class indices in a P5 PGM.
void save_labels(const LabelMap& labels, const std::string& path);

// Writes an 8-bit palette PNG mapping each class index through a fixed
// color table (see palette_color).
void save_label_palette_png(const LabelMap& labels, const std::string& path);
void palette_color(int class_index, std::uint8_t rgb[3]);

// --- dataset manifest -------------------------------------------------------

// One line per item: image-path<TAB>label-path<TAB>category<TAB>super-category.
// '#' lines are comments. Relative paths resolve against the manifest's
// directory. Per-category class count = max label index seen + 1.
Dataset load_manifest(const std::string& path);

struct ManifestEntry {
  std::string image_path;
  std::string label_path;
  std::string category;
  std::string super_category;
};

std::vector<ManifestEntry> read_manifest_entries(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

}  // namespace sketchseg
