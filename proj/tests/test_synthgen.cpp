#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "sketchseg/homotrans.hpp"
#include "sketchseg/metrics.hpp"
#include "sketchseg/staged.hpp"
#include "sketchseg/synthgen.hpp"

using namespace sketchseg;
using namespace sketchseg::synthgen;

TEST_SUITE("synthgen") {

TEST_CASE("generation is deterministic for equal seeds") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 3;
  spec.seed = 1234;
  Dataset a = generate(spec);
  Dataset b = generate(spec);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].image == b.items[i].image);
    CHECK(a.items[i].labels == b.items[i].labels);
  }
  spec.seed = 1235;
  Dataset c = generate(spec);
  CHECK(a.items[0].image != c.items[0].image);
}

TEST_CASE("zero images per category yields an empty dataset") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 0;
  CHECK(generate(spec).items.empty());
}

TEST_CASE("image and labels agree pixel by pixel") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 5;
  spec.seed = 9;
  Dataset ds = generate(spec);
  for (const DataItem& item : ds.items) {
    for (std::size_t p = 0; p < item.image.data.size(); ++p) {
      CHECK((item.image.data[p] != 255) == (item.labels.data[p] != 0));
    }
  }
}

TEST_CASE("default quadrupeds have the required torso/tail imbalance") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 10;
  spec.seed = 7;
  Dataset ds = generate(spec);
  std::uint64_t torso = 0, tail = 0;
  int quadruped_items = 0;
  for (const DataItem& item : ds.items) {
    if (item.super_category != "quadrupeds") continue;
    ++quadruped_items;
    for (auto v : item.labels.data) {
      torso += v == 2;
      tail += v == 4;
    }
  }
  REQUIRE(quadruped_items == 20);
  CHECK(tail > 0);
  CHECK(torso > 10 * tail);
}

TEST_CASE("every category has at least two foreground parts present") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 2;
  spec.seed = 3;
  Dataset ds = generate(spec);
  for (const DataItem& item : ds.items) {
    std::map<int, int> counts;
    for (auto v : item.labels.data) ++counts[v];
    int fg_classes = 0;
    for (const auto& [cls, n] : counts) fg_classes += cls != 0;
    CHECK(fg_classes >= 2);
  }
}

TEST_CASE("strokes are thick before the homogeneous transform") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 2;
  spec.seed = 21;
  Dataset ds = generate(spec);
  for (const DataItem& item : ds.items) {
    BinaryImage mask = binarize(item.image);
    CHECK(oracles::has_2x2_block(mask));  // thickness >= 2 somewhere
    GrayImage thin = homogeneous_transform(item.image);
    CHECK_FALSE(oracles::has_2x2_block(binarize(thin)));
  }
}

TEST_CASE("emitted taxonomy satisfies the taxonomy invariants") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 1;
  Dataset ds = generate(spec);
  auto supers = taxonomy_of(spec);
  staged::Taxonomy tax = staged::make_taxonomy(supers, ds);
  CHECK(tax.supers.size() == 2);
  CHECK(tax.categories_in_order().size() == 4);
  CHECK(tax.super_classes.at("quadrupeds") == 5);
  CHECK(tax.super_classes.at("vehicles") == 4);
}

TEST_CASE("templates that leave the canvas are an error") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 1;
  spec.canvas = 16;  // far too small for the default geometry + thickness
  spec.stroke_thickness = 9;
  CHECK_THROWS_AS(generate(spec), Error);
}

TEST_CASE("retrieval fixtures behave as constructed") {
  SynthSpec spec = default_spec();
  spec.images_per_category = 4;
  spec.seed = 77;
  RetrievalFixtures fx = generate_retrieval(spec);

  CHECK(top_k_accuracy(fx.exact, 1) == 1.0);
  CHECK(top_k_accuracy(fx.adversarial, 1) == 0.0);
  CHECK(top_k_accuracy(fx.adversarial, 2) == 1.0);

  RetrievalFixtures fx2 = generate_retrieval(spec);
  for (int k = 1; k <= 5; ++k)
    CHECK(top_k_accuracy(fx.jittered, k) == top_k_accuracy(fx2.jittered, k));
  double prev = 0.0;
  for (int k = 1; k <= 16; ++k) {
    double acc = top_k_accuracy(fx.jittered, k);
    CHECK(acc >= prev);
    prev = acc;
  }
}

}  // TEST_SUITE
