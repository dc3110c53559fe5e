#include "sketchseg/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "sketchseg/homotrans.hpp"
#include "sketchseg/rng.hpp"

namespace sketchseg {
namespace synthgen {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Canvas {
  GrayImage image;
  LabelMap labels;

  Canvas(int size, int classes)
      : image(size, size, 255), labels(size, size, classes, 0) {}

  // Stamps a disc; the caller's draw order resolves contested pixels.
  void stamp(double cx, double cy, double radius, int cls) {
    const int x0 = static_cast<int>(std::floor(cx - radius));
    const int x1 = static_cast<int>(std::ceil(cx + radius));
    const int y0 = static_cast<int>(std::floor(cy - radius));
    const int y1 = static_cast<int>(std::ceil(cy + radius));
    if (x0 < 0 || y0 < 0 || x1 >= image.width || y1 >= image.height)
      fail(Errc::BadConfig, "template renders outside the canvas");
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy <= r2) {
          image.at(x, y) = 0;
          labels.at(x, y) = static_cast<std::uint8_t>(cls);
        }
      }
    }
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, double radius, int cls) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double x0 = pts[i].first, y0 = pts[i].second;
      const double x1 = pts[i + 1].first, y1 = pts[i + 1].second;
      const double len = std::hypot(x1 - x0, y1 - y0);
      const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.25)));
      for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        stamp(x0 + t * (x1 - x0), y0 + t * (y1 - y0), radius, cls);
      }
    }
  }

  void ellipse(double cx, double cy, double rx, double ry, double radius, int cls) {
    const double circumference = kPi * (3.0 * (rx + ry) - std::sqrt((3 * rx + ry) * (rx + 3 * ry)));
    const int steps = std::max(8, static_cast<int>(std::ceil(circumference / 0.25)));
    for (int s = 0; s < steps; ++s) {
      const double a = 2.0 * kPi * s / steps;
      stamp(cx + rx * std::cos(a), cy + ry * std::sin(a), radius, cls);
    }
  }
};

// Part classes.
enum { kHead = 1, kTorso = 2, kLeg = 3, kTail = 4 };        // quadruped
enum { kBody = 1, kWheel = 2, kWindow = 3 };                // vehicle

void draw_quadruped(Canvas& canvas, const CategorySpec& cat, const SynthSpec& spec, Rng& rng) {
  const double u = spec.canvas / 64.0;  // template coordinates are for a 64px canvas
  const double jit = spec.jitter;
  const double radius = spec.stroke_thickness * 0.5;
  auto j = [&](double range) { return rng.next_double(-range, range) * jit; };

  const double s = cat.scale;
  const double cx = spec.canvas / 2.0 + j(2.0) * u;
  const double cy = (33.0 + j(1.5)) * u;
  const double rx = (13.0 * cat.elongation + j(1.5)) * u * s;
  const double ry = (6.0 + j(1.0)) * u * s;

  // torso, then legs, head and tail on top so attachments stay single-label
  canvas.ellipse(cx, cy, rx, ry, radius, kTorso);

  const int legs = 4;
  const double ground = cy + ry + (9.0 + j(2.0)) * u * s;
  for (int i = 0; i < legs; ++i) {
    const double frac = -0.72 + 1.44 * i / (legs - 1);
    const double lx = cx + frac * rx + j(0.7) * u;
    const double ly = cy + ry * std::sqrt(std::max(0.0, 1.0 - frac * frac)) - 1.0 * u;
    canvas.polyline({{lx, ly}, {lx + j(1.2) * u, ground + j(1.0) * u}}, radius, kLeg);
  }

  const double head_r = (3.4 + j(0.5)) * u * s;
  const double hx = cx - rx - head_r * 0.35 + j(0.8) * u;
  const double hy = cy - ry - head_r * 0.55 + j(0.8) * u;
  canvas.ellipse(hx, hy, head_r, head_r, radius, kHead);
  // neck stroke ties the head circle to the torso outline
  canvas.polyline({{hx + head_r * 0.6, hy + head_r * 0.6}, {cx - rx * 0.82, cy - ry * 0.5}},
                  radius, kHead);

  const double tail_len = (4.5 + j(0.8)) * u * s * spec.minority_part_scale;
  const double tx = cx + rx - 0.5 * u;
  const double ty = cy - ry * 0.25 + j(1.0) * u;
  const double ang = -0.9 + j(0.35);
  canvas.polyline({{tx, ty},
                   {tx + tail_len * std::cos(ang), ty + tail_len * std::sin(ang)}},
                  radius, kTail);
}

void draw_vehicle(Canvas& canvas, const CategorySpec& cat, const SynthSpec& spec, Rng& rng) {
  const double u = spec.canvas / 64.0;
  const double jit = spec.jitter;
  const double radius = spec.stroke_thickness * 0.5;
  auto j = [&](double range) { return rng.next_double(-range, range) * jit; };

  const double s = cat.scale;
  const double cx = spec.canvas / 2.0 + j(2.0) * u;
  const double cy = (31.0 + j(1.5)) * u;
  const double hw = (17.0 * cat.elongation + j(1.5)) * u * s;  // half-width
  const double hh = (8.0 + j(1.0)) * u * s;                    // half-height

  canvas.polyline({{cx - hw, cy - hh},
                   {cx + hw, cy - hh},
                   {cx + hw, cy + hh},
                   {cx - hw, cy + hh},
                   {cx - hw, cy - hh}},
                  radius, kBody);

  const int wheels = cat.elongation > 1.15 ? 3 : 2;
  for (int i = 0; i < wheels; ++i) {
    const double frac = wheels == 1 ? 0.0 : -0.62 + 1.24 * i / (wheels - 1);
    const double wx = cx + frac * hw + j(0.8) * u;
    const double wy = cy + hh + (3.2 + j(0.7)) * u * s;
    canvas.ellipse(wx, wy, (4.0 + j(0.6)) * u * s, (4.0 + j(0.6)) * u * s, radius, kWheel);
  }

  const double win = (3.2 + j(0.5)) * u * s * spec.minority_part_scale;
  const double wx = cx - hw * 0.45 + j(1.5) * u;
  const double wy = cy - hh;  // window sits on the roof line so classes touch
  canvas.polyline({{wx - win, wy + win * 1.6},
                   {wx - win, wy},
                   {wx + win, wy},
                   {wx + win, wy + win * 1.6}},
                  radius, kWindow);
}

}  // namespace

std::vector<std::string> part_names(TemplateKind kind) {
  if (kind == TemplateKind::Quadruped) return {"background", "head", "torso", "leg", "tail"};
  return {"background", "body", "wheel", "window"};
}

SynthSpec default_spec() {
  SynthSpec spec;
  spec.categories = {
      {"shortbeast", "quadrupeds", TemplateKind::Quadruped, 1.0, 1.0},
      {"longbeast", "quadrupeds", TemplateKind::Quadruped, 0.92, 1.25},
      {"cart", "vehicles", TemplateKind::Vehicle, 0.95, 0.9},
      {"truck", "vehicles", TemplateKind::Vehicle, 1.0, 1.2},
  };
  return spec;
}

std::vector<std::pair<std::string, std::vector<std::string>>> taxonomy_of(const SynthSpec& spec) {
  std::vector<std::pair<std::string, std::vector<std::string>>> supers;
  for (const CategorySpec& cat : spec.categories) {
    auto it = std::find_if(supers.begin(), supers.end(),
                           [&](const auto& s) { return s.first == cat.super_category; });
    if (it == supers.end()) {
      supers.push_back({cat.super_category, {cat.name}});
    } else {
      it->second.push_back(cat.name);
    }
  }
  return supers;
}

Dataset generate(const SynthSpec& spec) {
  if (spec.categories.empty()) fail(Errc::BadConfig, "spec needs at least one category");
  if (spec.canvas < 8) fail(Errc::BadConfig, "canvas too small");
  if (spec.stroke_thickness < 1) fail(Errc::BadConfig, "stroke thickness must be >= 1");

  Dataset ds;
  for (std::size_t c = 0; c < spec.categories.size(); ++c) {
    const CategorySpec& cat = spec.categories[c];
    const int classes = static_cast<int>(part_names(cat.kind).size());
    ds.class_names[cat.name] = part_names(cat.kind);
    for (int i = 0; i < spec.images_per_category; ++i) {
      Rng rng = stream_rng(spec.seed, c, static_cast<std::uint64_t>(i));
      Canvas canvas(spec.canvas, classes);
      if (cat.kind == TemplateKind::Quadruped) {
        draw_quadruped(canvas, cat, spec, rng);
      } else {
        draw_vehicle(canvas, cat, spec, rng);
      }
      ds.items.push_back({std::move(canvas.image), std::move(canvas.labels), cat.name,
                          cat.super_category});
    }
  }
  return ds;
}

namespace {

std::size_t mask_distance(const BinaryImage& a, const BinaryImage& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) d += a.data[i] != b.data[i];
  return d;
}

}  // namespace

RetrievalFixtures generate_retrieval(const SynthSpec& spec) {
  Dataset sketches = generate(spec);
  SynthSpec thick = spec;
  thick.stroke_thickness = spec.stroke_thickness + 2;
  Dataset variants = generate(thick);

  const int n = static_cast<int>(sketches.items.size());
  if (n < 2) fail(Errc::BadConfig, "retrieval fixtures need at least two items");

  std::vector<BinaryImage> query_masks, gallery_masks;
  for (int i = 0; i < n; ++i) {
    query_masks.push_back(binarize(homogeneous_transform(sketches.items[i].image)));
    gallery_masks.push_back(binarize(homogeneous_transform(variants.items[i].image)));
  }

  auto rank_by_distance = [n](const std::vector<BinaryImage>& queries,
                              const std::vector<BinaryImage>& gallery) {
    RetrievalRun run;
    for (int q = 0; q < n; ++q) {
      std::vector<std::pair<std::size_t, int>> scored;
      for (int g = 0; g < n; ++g) scored.emplace_back(mask_distance(queries[q], gallery[g]), g);
      std::sort(scored.begin(), scored.end());
      std::vector<int> ranking;
      for (const auto& [dist, id] : scored) ranking.push_back(id);
      run.rankings.push_back(std::move(ranking));
      run.truth.push_back(q);
    }
    return run;
  };

  RetrievalFixtures fx;
  fx.exact = rank_by_distance(query_masks, query_masks);
  fx.jittered = rank_by_distance(query_masks, gallery_masks);

  for (int q = 0; q < n; ++q) {
    std::vector<int> ranking;
    ranking.push_back((q + 1) % n);  // a decoy ahead of the truth
    ranking.push_back(q);
    for (int g = 0; g < n; ++g)
      if (g != q && g != (q + 1) % n) ranking.push_back(g);
    fx.adversarial.rankings.push_back(std::move(ranking));
    fx.adversarial.truth.push_back(q);
  }
  return fx;
}

}  // namespace synthgen
}  // namespace sketchseg
