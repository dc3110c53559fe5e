#include "sketchseg/raster.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace sketchseg {

namespace {

void check_dims(int w, int h, std::size_t len) {
  if (w < 1 || h < 1) fail(Errc::BadConfig, "raster dimensions must be >= 1");
  if (len != static_cast<std::size_t>(w) * h)
    fail(Errc::SizeMismatch, "data length does not match width*height");
}

}  // namespace

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
  check_dims(w, h, data.size());
}

GrayImage::GrayImage(int w, int h, std::vector<std::uint8_t> d)
    : width(w), height(h), data(std::move(d)) {
  check_dims(w, h, data.size());
}

BinaryImage::BinaryImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
  check_dims(w, h, data.size());
}

BinaryImage::BinaryImage(int w, int h, std::vector<std::uint8_t> d)
    : width(w), height(h), data(std::move(d)) {
  check_dims(w, h, data.size());
}

LabelMap::LabelMap(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), classes(c), data(static_cast<std::size_t>(w) * h, fill) {
  check_dims(w, h, data.size());
  if (c < 1 || c > 256) fail(Errc::BadConfig, "class count must be in [1, 256]");
  if (fill >= c) fail(Errc::LabelOutOfRange, "fill label out of range");
}

LabelMap::LabelMap(int w, int h, int c, std::vector<std::uint8_t> d)
    : width(w), height(h), classes(c), data(std::move(d)) {
  check_dims(w, h, data.size());
  if (c < 1 || c > 256) fail(Errc::BadConfig, "class count must be in [1, 256]");
  for (std::uint8_t v : data)
    if (v >= classes) fail(Errc::LabelOutOfRange, "label index >= classes");
}

std::vector<std::string> Dataset::categories() const {
  std::vector<std::string> out;
  for (const auto& item : items)
    if (std::find(out.begin(), out.end(), item.category) == out.end())
      out.push_back(item.category);
  return out;
}

int Dataset::classes_for(const std::string& category) const {
  auto it = class_names.find(category);
  if (it != class_names.end()) return static_cast<int>(it->second.size());
  int classes = 1;
  for (const auto& item : items)
    if (item.category == category) classes = std::max(classes, item.labels.classes);
  return classes;
}

// --- PGM (P5, maxval 255) ---------------------------------------------------

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::IoFailure, "read failed: " + path);
  return bytes;
}

void write_file(const std::string& path, const std::uint8_t* bytes, std::size_t len) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(len));
  out.flush();
  if (!out) fail(Errc::IoFailure, "write failed: " + path);
}

// Skips PGM whitespace and '#' comment lines, then parses a decimal token.
int parse_pgm_int(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (std::isspace(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) fail(Errc::MalformedHeader, "bad PGM header token");
  long v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos] - '0');
    if (v > 1 << 24) fail(Errc::MalformedHeader, "PGM header value too large");
    ++pos;
  }
  return static_cast<int>(v);
}

struct RawGray {
  int width, height;
  std::vector<std::uint8_t> pixels;
};

RawGray decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    fail(Errc::MalformedHeader, "not a P5 PGM: " + path);
  std::size_t pos = 2;
  int w = parse_pgm_int(bytes, pos);
  int h = parse_pgm_int(bytes, pos);
  int maxval = parse_pgm_int(bytes, pos);
  if (w < 1 || h < 1) fail(Errc::MalformedHeader, "bad PGM dimensions: " + path);
  if (maxval != 255) fail(Errc::WrongBitDepth, "PGM maxval must be 255: " + path);
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    fail(Errc::MalformedHeader, "missing separator after PGM maxval: " + path);
  ++pos;  // exactly one whitespace byte before the payload
  std::size_t need = static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos < need) fail(Errc::TruncatedPayload, "PGM payload truncated: " + path);
  return {w, h, std::vector<std::uint8_t>(bytes.begin() + pos, bytes.begin() + pos + need)};
}

std::vector<std::uint8_t> encode_pgm(int w, int h, const std::vector<std::uint8_t>& pixels) {
  std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

// --- PNG (8-bit grayscale subset, plus palette encode) -----------------------
//
// Container handling is done here directly on top of zlib; only the subset
// needed for sketches is supported: bit depth 8, color type 0 (grayscale,
// no alpha), no interlace.

constexpr std::uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
  put_be32(out, crc);
}

std::uint8_t paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

RawGray decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
    fail(Errc::MalformedHeader, "not a PNG: " + path);
  std::size_t pos = 8;
  int w = 0, h = 0;
  bool seen_ihdr = false, seen_iend = false;
  std::vector<std::uint8_t> idat;
  while (pos + 12 <= bytes.size()) {
    std::uint32_t len = be32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) fail(Errc::TruncatedPayload, "PNG chunk truncated: " + path);
    const std::uint8_t* type = &bytes[pos + 4];
    const std::uint8_t* payload = &bytes[pos + 8];
    std::uint32_t stored_crc = be32(&bytes[pos + 8 + len]);
    std::uint32_t actual_crc =
        static_cast<std::uint32_t>(crc32(0, type, static_cast<uInt>(4 + len)));
    if (stored_crc != actual_crc) fail(Errc::MalformedHeader, "PNG chunk CRC mismatch: " + path);
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail(Errc::MalformedHeader, "bad IHDR length: " + path);
      w = static_cast<int>(be32(payload));
      h = static_cast<int>(be32(payload + 4));
      int bit_depth = payload[8], color_type = payload[9];
      int interlace = payload[12];
      if (bit_depth != 8) fail(Errc::WrongBitDepth, "PNG bit depth must be 8: " + path);
      if (color_type != 0)
        fail(Errc::WrongBitDepth, "PNG color type must be grayscale without alpha: " + path);
      if (interlace != 0) fail(Errc::MalformedHeader, "interlaced PNG unsupported: " + path);
      if (w < 1 || h < 1) fail(Errc::MalformedHeader, "bad PNG dimensions: " + path);
      seen_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_iend = true;
      break;
    }
    pos += 12 + len;
  }
  if (!seen_ihdr || !seen_iend) fail(Errc::TruncatedPayload, "PNG missing IHDR/IEND: " + path);

  std::size_t raw_len = static_cast<std::size_t>(h) * (static_cast<std::size_t>(w) + 1);
  std::vector<std::uint8_t> raw(raw_len);
  uLongf dest_len = raw_len;
  int rc = uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size()));
  if (rc != Z_OK || dest_len != raw_len)
    fail(Errc::TruncatedPayload, "PNG pixel data corrupt: " + path);

  RawGray img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = &raw[static_cast<std::size_t>(y) * (w + 1)];
    std::uint8_t filter = row[0];
    std::uint8_t* dst = &img.pixels[static_cast<std::size_t>(y) * w];
    const std::uint8_t* up = y > 0 ? &img.pixels[static_cast<std::size_t>(y - 1) * w] : nullptr;
    for (int x = 0; x < w; ++x) {
      int a = x > 0 ? dst[x - 1] : 0;
      int b = up ? up[x] : 0;
      int c = (x > 0 && up) ? up[x - 1] : 0;
      int v = row[1 + x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: fail(Errc::MalformedHeader, "bad PNG filter type: " + path);
      }
      dst[x] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& src) {
  uLongf bound = compressBound(static_cast<uLong>(src.size()));
  std::vector<std::uint8_t> out(bound);
  int rc = compress2(out.data(), &bound, src.data(), static_cast<uLong>(src.size()),
                     Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK) fail(Errc::IoFailure, "deflate failed");
  out.resize(bound);
  return out;
}

std::vector<std::uint8_t> encode_png_gray(int w, int h, const std::vector<std::uint8_t>& pixels) {
  std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(w));
  put_be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // depth 8, gray, deflate, adaptive, no interlace
  put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(h) * (w + 1));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    const std::uint8_t* row = &pixels[static_cast<std::size_t>(y) * w];
    raw.insert(raw.end(), row, row + w);
  }
  put_chunk(out, "IDAT", zlib_deflate(raw));
  put_chunk(out, "IEND", {});
  return out;
}

bool has_png_extension(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return false;
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == "png";
}

bool looks_like_png(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0;
}

}  // namespace

GrayImage load_gray(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  RawGray raw = looks_like_png(bytes) ? decode_png(bytes, path) : decode_pgm(bytes, path);
  return GrayImage(raw.width, raw.height, std::move(raw.pixels));
}

void save_gray(const GrayImage& img, const std::string& path) {
  std::vector<std::uint8_t> bytes = has_png_extension(path)
                                        ? encode_png_gray(img.width, img.height, img.data)
                                        : encode_pgm(img.width, img.height, img.data);
  write_file(path, bytes.data(), bytes.size());
}

LabelMap load_labels(const std::string& path, int classes) {
  std::vector<std::uint8_t> bytes = read_file(path);
  RawGray raw = decode_pgm(bytes, path);
  for (std::uint8_t v : raw.pixels)
    if (v >= classes)
      fail(Errc::LabelOutOfRange,
           "label value " + std::to_string(v) + " >= classes in " + path);
  return LabelMap(raw.width, raw.height, classes, std::move(raw.pixels));
}

void save_labels(const LabelMap& labels, const std::string& path) {
  std::vector<std::uint8_t> bytes = encode_pgm(labels.width, labels.height, labels.data);
  write_file(path, bytes.data(), bytes.size());
}

void palette_color(int class_index, std::uint8_t rgb[3]) {
  // Class 0 is white; foreground classes cycle through a fixed 12-entry table.
  static const std::uint8_t table[12][3] = {
      {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
      {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
      {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
  };
  if (class_index == 0) {
    rgb[0] = rgb[1] = rgb[2] = 255;
    return;
  }
  const std::uint8_t* c = table[(class_index - 1) % 12];
  rgb[0] = c[0];
  rgb[1] = c[1];
  rgb[2] = c[2];
}

void save_label_palette_png(const LabelMap& labels, const std::string& path) {
  std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(labels.width));
  put_be32(ihdr, static_cast<std::uint32_t>(labels.height));
  ihdr.insert(ihdr.end(), {8, 3, 0, 0, 0});  // depth 8, palette
  put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> plte(static_cast<std::size_t>(labels.classes) * 3);
  for (int i = 0; i < labels.classes; ++i) palette_color(i, &plte[static_cast<std::size_t>(i) * 3]);
  put_chunk(out, "PLTE", plte);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(labels.height) * (labels.width + 1));
  for (int y = 0; y < labels.height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = &labels.data[static_cast<std::size_t>(y) * labels.width];
    raw.insert(raw.end(), row, row + labels.width);
  }
  put_chunk(out, "IDAT", zlib_deflate(raw));
  put_chunk(out, "IEND", {});
  write_file(path, out.data(), out.size());
}

// --- manifest ---------------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::vector<ManifestEntry> read_manifest_entries(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot open manifest: " + path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f = split_tabs(line);
    if (f.size() != 4)
      fail(Errc::BadManifest,
           path + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    entries.push_back({resolve(f[0]), resolve(f[1]), f[2], f[3]});
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write manifest: " + path);
  for (const auto& e : entries)
    out << e.image_path << '\t' << e.label_path << '\t' << e.category << '\t' << e.super_category
        << '\n';
  if (!out) fail(Errc::IoFailure, "manifest write failed: " + path);
}

Dataset load_manifest(const std::string& path) {
  std::vector<ManifestEntry> entries = read_manifest_entries(path);
  std::map<std::string, std::string> super_of;
  // First pass fixes per-category class counts so every item of a category
  // carries the same class space.
  std::map<std::string, int> max_label;
  std::vector<RawGray> raw_labels;
  raw_labels.reserve(entries.size());
  for (const auto& e : entries) {
    auto it = super_of.find(e.category);
    if (it == super_of.end()) {
      super_of[e.category] = e.super_category;
    } else if (it->second != e.super_category) {
      fail(Errc::BadManifest, "category " + e.category + " maps to two super-categories");
    }
    RawGray raw = decode_pgm(read_file(e.label_path), e.label_path);
    int& m = max_label[e.category];
    for (std::uint8_t v : raw.pixels) m = std::max(m, static_cast<int>(v));
    raw_labels.push_back(std::move(raw));
  }

  Dataset ds;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    int classes = max_label[e.category] + 1;
    DataItem item;
    item.image = load_gray(e.image_path);
    item.labels = LabelMap(raw_labels[i].width, raw_labels[i].height, classes,
                           std::move(raw_labels[i].pixels));
    if (item.image.width != item.labels.width || item.image.height != item.labels.height)
      fail(Errc::SizeMismatch, "image/label dimensions differ for " + e.image_path);
    item.category = e.category;
    item.super_category = e.super_category;
    ds.items.push_back(std::move(item));
  }
  for (const auto& [cat, m] : max_label) {
    std::vector<std::string> names = {"background"};
    for (int i = 1; i <= m; ++i) names.push_back("part" + std::to_string(i));
    ds.class_names[cat] = std::move(names);
  }
  return ds;
}

}  // namespace sketchseg
