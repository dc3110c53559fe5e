#include <doctest.h>

#include <algorithm>

#include "sketchseg/classstats.hpp"
#include "sketchseg/rng.hpp"

using namespace sketchseg;

namespace {

Dataset dataset_of(std::vector<LabelMap> maps) {
  Dataset ds;
  for (auto& m : maps) ds.items.push_back({GrayImage(m.width, m.height), std::move(m), "c", "s"});
  return ds;
}

}  // namespace

TEST_SUITE("classstats") {

TEST_CASE("single map counts match a direct tally") {
  Dataset ds = dataset_of({LabelMap(2, 2, 2, std::vector<std::uint8_t>{0, 0, 1, 1})});
  ClassStats stats = collect_stats(ds, 2);
  CHECK(stats.t == std::vector<std::uint64_t>{2, 2});
  CHECK(stats.n == std::vector<std::uint64_t>{1, 1});
  CHECK(stats.phi[0] == 2.0);
  CHECK(stats.phi[1] == 2.0);
  CHECK(stats.median == 2.0);
  CHECK(stats.alpha[0] == 1.0);
  CHECK(stats.alpha[1] == 1.0);
}

TEST_CASE("constructed phi values give the hand-computed weights") {
  // One 16x10 map: 100 px of class 1, 50 of class 2, 10 of class 3, no background.
  std::vector<std::uint8_t> data(160, 1);
  std::fill(data.begin() + 100, data.begin() + 150, 2);
  std::fill(data.begin() + 150, data.end(), 3);
  Dataset ds = dataset_of({LabelMap(16, 10, 4, std::move(data))});
  ClassStats stats = collect_stats(ds, 4);
  CHECK(stats.phi[1] == 100.0);
  CHECK(stats.phi[2] == 50.0);
  CHECK(stats.phi[3] == 10.0);
  CHECK(stats.median == 50.0);
  CHECK(stats.alpha[1] == 0.5);
  CHECK(stats.alpha[2] == 1.0);
  CHECK(stats.alpha[3] == 5.0);
  CHECK(stats.alpha[0] == 1.0);  // absent class
  CHECK(stats.n[0] == 0);
}

TEST_CASE("equal phi across classes gives unit weights") {
  Dataset ds = dataset_of({LabelMap(3, 2, 3, std::vector<std::uint8_t>{0, 0, 1, 1, 2, 2})});
  ClassStats stats = collect_stats(ds, 3);
  for (int c = 0; c < 3; ++c) CHECK(stats.alpha[c] == 1.0);
}

TEST_CASE("dataset order does not change the statistics") {
  LabelMap a(2, 2, 3, std::vector<std::uint8_t>{0, 1, 1, 2});
  LabelMap b(2, 2, 3, std::vector<std::uint8_t>{2, 2, 2, 0});
  LabelMap c(2, 2, 3, std::vector<std::uint8_t>{1, 1, 1, 1});
  ClassStats fwd = collect_stats(dataset_of({a, b, c}), 3);
  ClassStats rev = collect_stats(dataset_of({c, b, a}), 3);
  CHECK(fwd.t == rev.t);
  CHECK(fwd.n == rev.n);
  CHECK(fwd.phi == rev.phi);
  CHECK(fwd.alpha == rev.alpha);
}

TEST_CASE("duplicating every image leaves phi, median and alpha unchanged") {
  LabelMap a(2, 2, 3, std::vector<std::uint8_t>{0, 1, 1, 2});
  LabelMap b(2, 2, 3, std::vector<std::uint8_t>{2, 2, 1, 0});
  ClassStats base = collect_stats(dataset_of({a, b}), 3);
  ClassStats doubled = collect_stats(dataset_of({a, b, a, b}), 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(doubled.t[c] == 2 * base.t[c]);
    CHECK(doubled.n[c] == 2 * base.n[c]);
    CHECK(doubled.phi[c] == doctest::Approx(base.phi[c]).epsilon(1e-12));
    CHECK(doubled.alpha[c] == doctest::Approx(base.alpha[c]).epsilon(1e-12));
  }
  CHECK(doubled.median == doctest::Approx(base.median).epsilon(1e-12));
}

TEST_CASE("smaller average pixel count means strictly larger weight") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LabelMap> maps;
    for (int i = 0; i < 4; ++i) {
      LabelMap m(8, 8, 5, 0);
      for (auto& v : m.data) v = static_cast<std::uint8_t>(rng.next_below(5));
      maps.push_back(std::move(m));
    }
    ClassStats stats = collect_stats(dataset_of(std::move(maps)), 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (stats.n[i] == 0 || stats.n[j] == 0) continue;
        if (stats.phi[i] < stats.phi[j]) CHECK(stats.alpha[i] > stats.alpha[j]);
      }
    }
  }
}

TEST_CASE("median over an even class count averages the middle pair") {
  // phi = {5, 1, 2, 8} -> sorted {1,2,5,8}, median (2+5)/2 = 3.5.
  std::vector<std::uint8_t> data;
  for (int i = 0; i < 4; ++i) data.push_back(0);
  for (int i = 0; i < 1; ++i) data.push_back(1);
  for (int i = 0; i < 2; ++i) data.push_back(2);
  for (int i = 0; i < 8; ++i) data.push_back(3);
  data.push_back(0);  // pad to 16
  REQUIRE(data.size() == 16);
  Dataset ds = dataset_of({LabelMap(4, 4, 4, std::move(data))});
  ClassStats stats = collect_stats(ds, 4);
  CHECK(stats.phi[0] == 5.0);  // five background pixels after padding
  CHECK(stats.median == doctest::Approx(3.5));  // sorted {1,2,5,8} -> (2+5)/2
}

TEST_CASE("background boost scales only class zero") {
  Dataset ds = dataset_of({LabelMap(2, 2, 2, std::vector<std::uint8_t>{0, 0, 0, 1})});
  ClassStats stats = collect_stats(ds, 2);
  ClassStats boosted = apply_background_boost(stats, 2.0);
  CHECK(boosted.alpha[0] == 2.0 * stats.alpha[0]);
  CHECK(boosted.alpha[1] == stats.alpha[1]);
  CHECK(boosted.background_boost == 2.0);

  ClassStats same = apply_background_boost(stats, 1.0);
  CHECK(same.alpha == stats.alpha);

  ClassStats half;
  half = stats;
  half.alpha[0] = 0.5;
  CHECK(apply_background_boost(half, 2.0).alpha[0] == 1.0);

  CHECK_THROWS_AS(apply_background_boost(stats, 0.0), Error);
}

TEST_CASE("empty dataset is rejected") {
  Dataset ds;
  CHECK_THROWS_AS(collect_stats(ds, 3), Error);
}

}  // TEST_SUITE
