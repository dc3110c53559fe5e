#include <doctest.h>

#include "sketchseg/augment.hpp"
#include "sketchseg/rng.hpp"

using namespace sketchseg;

namespace {

std::pair<GrayImage, LabelMap> checker(int w, int h, int classes) {
  GrayImage img(w, h);
  LabelMap labels(w, h, classes, 0);
  Rng rng(42);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_below(256));
  for (auto& v : labels.data) v = static_cast<std::uint8_t>(rng.next_below(classes));
  return {img, labels};
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("rotation by zero is the bit-exact identity") {
  auto [img, labels] = checker(17, 11, 4);
  auto [ri, rl] = rotate_pair(img, labels, 0.0);
  CHECK(ri == img);
  CHECK(rl == labels);
}

TEST_CASE("rotation fixes the center pixel") {
  GrayImage img(9, 9, 255);
  LabelMap labels(9, 9, 2, 0);
  img.at(4, 4) = 0;
  labels.at(4, 4) = 1;
  for (double angle : {10.0, 20.0, 30.0, -30.0}) {
    auto [ri, rl] = rotate_pair(img, labels, angle);
    CHECK(ri.at(4, 4) == 0);
    CHECK(rl.at(4, 4) == 1);
  }
}

TEST_CASE("90 degree rotation lands on the hand-computed coordinate") {
  // With center (2,2) and the inverse mapping used by rotate_pair, the
  // foreground pixel at (4,2) moves to (2,4) under a 90-degree rotation.
  GrayImage img(5, 5, 255);
  LabelMap labels(5, 5, 2, 0);
  img.at(4, 2) = 0;
  labels.at(4, 2) = 1;
  auto [ri, rl] = rotate_pair(img, labels, 90.0);
  CHECK(rl.at(2, 4) == 1);
  CHECK(ri.at(2, 4) == 0);
  int fg = 0;
  for (auto v : rl.data) fg += v != 0;
  CHECK(fg == 1);
}

TEST_CASE("rotation rejects size mismatches") {
  GrayImage img(4, 4);
  LabelMap labels(5, 4, 2, 0);
  CHECK_THROWS_AS(rotate_pair(img, labels, 10.0), Error);
  CHECK_THROWS_AS(mirror_pair(img, labels), Error);
}

TEST_CASE("mirroring is an involution and flips rows") {
  auto [img, labels] = checker(8, 6, 3);
  auto [mi, ml] = mirror_pair(img, labels);
  auto [mmi, mml] = mirror_pair(mi, ml);
  CHECK(mmi == img);
  CHECK(mml == labels);

  GrayImage two(2, 1, std::vector<std::uint8_t>{10, 200});
  LabelMap lab2(2, 1, 3, std::vector<std::uint8_t>{1, 2});
  auto [fi, fl] = mirror_pair(two, lab2);
  CHECK(fi.data == std::vector<std::uint8_t>{200, 10});
  CHECK(fl.data == std::vector<std::uint8_t>{2, 1});
}

TEST_CASE("erasing whitens exactly one window and keeps labels") {
  GrayImage img(321, 321, 0);  // all strokes
  LabelMap labels(321, 321, 2, 1);
  AugmentConfig cfg;
  Rng rng(99);
  auto [ei, el] = erase_pair(img, labels, cfg, rng);
  CHECK(el == labels);
  int white = 0;
  for (auto v : ei.data) white += v == 255;
  CHECK(white == 31 * 31);

  Rng rng_a(7), rng_b(7);
  auto a = erase_pair(img, labels, cfg, rng_a);
  auto b = erase_pair(img, labels, cfg, rng_b);
  CHECK(a.first == b.first);
}

TEST_CASE("erase window covering the whole image whitens it") {
  GrayImage img(31, 31, 0);
  LabelMap labels(31, 31, 2, 1);
  AugmentConfig cfg;
  Rng rng(1);
  auto [ei, el] = erase_pair(img, labels, cfg, rng);
  for (auto v : ei.data) CHECK(v == 255);
  CHECK(el == labels);
}

TEST_CASE("oversized erase window is rejected") {
  GrayImage img(16, 16, 0);
  LabelMap labels(16, 16, 2, 0);
  AugmentConfig cfg;
  Rng rng(1);
  CHECK_THROWS_AS(erase_pair(img, labels, cfg, rng), Error);
}

TEST_CASE("expand produces the documented counts") {
  Dataset ds;
  GrayImage img(40, 40, 255);
  img.at(20, 20) = 0;
  LabelMap labels(40, 40, 2, 0);
  labels.at(20, 20) = 1;
  ds.items.push_back({img, labels, "cat", "super"});

  AugmentConfig cfg;
  cfg.erase_size = 11;
  SUBCASE("defaults give 14 base variants and 28 with erasing") {
    cfg.erase_count = 0;
    CHECK(expand(ds, cfg).items.size() == 14);
    cfg.erase_count = 1;
    CHECK(expand(ds, cfg).items.size() == 28);
  }
  SUBCASE("identity-only config gives a single variant") {
    cfg.angles = {0.0};
    cfg.mirror = false;
    cfg.erase_count = 0;
    Dataset out = expand(ds, cfg);
    REQUIRE(out.items.size() == 1);
    CHECK(out.items[0].image == img);
  }
  SUBCASE("outputs keep source dimensions and categories") {
    Dataset out = expand(ds, cfg);
    for (const auto& item : out.items) {
      CHECK(item.image.width == 40);
      CHECK(item.labels.height == 40);
      CHECK(item.category == "cat");
    }
  }
}

TEST_CASE("expand is deterministic for equal seeds") {
  Dataset ds;
  auto [img, labels] = checker(33, 33, 3);
  ds.items.push_back({img, labels, "c", "s"});
  AugmentConfig cfg;
  cfg.erase_size = 9;
  cfg.seed = 1234;
  Dataset a = expand(ds, cfg);
  Dataset b = expand(ds, cfg);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].image == b.items[i].image);
    CHECK(a.items[i].labels == b.items[i].labels);
  }
}

TEST_CASE("empty angle list is rejected") {
  Dataset ds;
  auto [img, labels] = checker(12, 12, 2);
  ds.items.push_back({img, labels, "c", "s"});
  AugmentConfig cfg;
  cfg.angles.clear();
  CHECK_THROWS_AS(expand(ds, cfg), Error);
}

}  // TEST_SUITE
