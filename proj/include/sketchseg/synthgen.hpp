#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sketchseg/metrics.hpp"
#include "sketchseg/raster.hpp"

namespace sketchseg {
namespace synthgen {

enum class TemplateKind { Quadruped, Vehicle };

// A category is a parameterized stick-figure template. Quadrupeds carry parts
// head/torso/leg/tail (classes 1..4), vehicles body/wheel/window (1..3).
struct CategorySpec {
  std::string name;
  std::string super_category;
  TemplateKind kind = TemplateKind::Quadruped;
  double scale = 1.0;       // overall proportions relative to the base template
  double elongation = 1.0;  // stretches the torso/body along x
};

struct SynthSpec {
  std::vector<CategorySpec> categories;
  int images_per_category = 200;
  int canvas = 64;
  int stroke_thickness = 3;
  double jitter = 1.0;              // multiplies all geometric perturbation ranges
  double minority_part_scale = 1.0; // grows the smallest parts; 1.0 keeps the
                                    // default >= 10x torso/tail pixel contrast
  std::uint64_t seed = 0;
};

// Two super-categories x two sub-categories, echoing a small category table.
SynthSpec default_spec();

std::vector<std::pair<std::string, std::vector<std::string>>> taxonomy_of(const SynthSpec& spec);
std::vector<std::string> part_names(TemplateKind kind);

// Renders the corpus: black-on-white thick strokes, label maps assigning each
// stroke pixel its part class (later-drawn parts win contested pixels).
// Deterministic given spec.seed; errors if a template would leave the canvas.
Dataset generate(const SynthSpec& spec);

// Desk-scale retrieval fixtures built from (sketch, thicker-variant) pairs.
struct RetrievalFixtures {
  RetrievalRun exact;        // gallery equals the queries; truth at distance 0
  RetrievalRun adversarial;  // constructed rankings with truth forced to rank 2
  RetrievalRun jittered;     // thick variants ranked by stroke-mask distance
};

RetrievalFixtures generate_retrieval(const SynthSpec& spec);

}  // namespace synthgen
}  // namespace sketchseg
