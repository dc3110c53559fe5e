#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "sketchseg/classstats.hpp"
#include "sketchseg/rng.hpp"
#include "sketchseg/tinynet.hpp"

using namespace sketchseg;
using namespace sketchseg::tinynet;

namespace {

GrayImage random_image(Rng& rng, int w, int h) {
  GrayImage img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_below(256));
  return img;
}

ClassStats unit_stats(int classes) {
  ClassStats s;
  s.classes = classes;
  s.t.assign(classes, 1);
  s.n.assign(classes, 1);
  s.phi.assign(classes, 1.0);
  s.median = 1.0;
  s.alpha.assign(classes, 1.0);
  return s;
}

double tensor_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("tinynet") {

TEST_CASE("initialization is seeded and validated") {
  ArchSpec arch = default_arch({{"a", 3}, {"b", 5}}, 6, 2, 2);
  BranchNet n1 = init_net(arch, 99);
  BranchNet n2 = init_net(arch, 99);
  CHECK(n1.trunk[0].weights.v == n2.trunk[0].weights.v);
  CHECK(n1.branches.at("b")[1].weights.v == n2.branches.at("b")[1].weights.v);
  BranchNet n3 = init_net(arch, 100);
  CHECK(n1.trunk[0].weights.v != n3.trunk[0].weights.v);
  for (double b : n1.trunk[0].bias.v) CHECK(b == 0.0);

  ArchSpec empty_trunk = arch;
  empty_trunk.trunk.clear();
  CHECK_THROWS_AS(init_net(empty_trunk, 1), Error);

  ArchSpec bad_head = arch;
  bad_head.heads["a"][0].in_channels = 4;  // trunk emits 6
  CHECK_THROWS_AS(init_net(bad_head, 1), Error);

  ArchSpec bad_chain = arch;
  bad_chain.trunk.push_back({7, 6, true});  // 6 -> 7 mismatch
  CHECK_THROWS_AS(init_net(bad_chain, 1), Error);
}

TEST_CASE("zero weights produce zero logits everywhere") {
  ArchSpec arch = default_arch({{"h", 4}}, 5, 2, 2);
  BranchNet net = init_net(arch, 3);
  for (auto& layer : net.trunk) {
    std::fill(layer.weights.v.begin(), layer.weights.v.end(), 0.0);
    std::fill(layer.bias.v.begin(), layer.bias.v.end(), 0.0);
  }
  for (auto& [name, head] : net.branches)
    for (auto& layer : head) {
      std::fill(layer.weights.v.begin(), layer.weights.v.end(), 0.0);
      std::fill(layer.bias.v.begin(), layer.bias.v.end(), 0.0);
    }
  Rng rng(1);
  GrayImage img = random_image(rng, 9, 7);
  LogitGrid out = forward(net, "h", img);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("forward is deterministic and rejects unknown branches") {
  ArchSpec arch = default_arch({{"h", 3}}, 6, 3, 2);
  BranchNet net = init_net(arch, 5);
  Rng rng(2);
  GrayImage img = random_image(rng, 12, 12);
  LogitGrid a = forward(net, "h", img);
  LogitGrid b = forward(net, "h", img);
  CHECK(a.data == b.data);
  CHECK_THROWS_AS(forward(net, "nope", img), Error);
}

TEST_CASE("interior logits are shift-equivariant") {
  ArchSpec arch = default_arch({{"h", 3}}, 6, 2, 2);  // 4 layers -> radius 4
  BranchNet net = init_net(arch, 8);
  const int w = 26, h = 26, dx = 3, dy = 2;
  Rng rng(4);
  GrayImage img(w, h, 255);
  for (int y = 8; y < 18; ++y)
    for (int x = 8; x < 18; ++x) img.at(x, y) = static_cast<std::uint8_t>(rng.next_below(256));

  GrayImage shifted(w, h, 255);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sx = x - dx, sy = y - dy;
      if (sx >= 0 && sx < w && sy >= 0 && sy < h) shifted.at(x, y) = img.at(sx, sy);
    }

  LogitGrid base = forward(net, "h", img);
  LogitGrid moved = forward(net, "h", shifted);
  const int radius = 4 + 1;
  for (int y = radius + dy; y < h - radius; ++y)
    for (int x = radius + dx; x < w - radius; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(moved.pixel(x, y)[c] ==
              doctest::Approx(base.pixel(x - dx, y - dy)[c]).epsilon(1e-12));
}

TEST_CASE("backward loss equals the forward loss") {
  ArchSpec arch = default_arch({{"h", 4}}, 5, 2, 2);
  BranchNet net = init_net(arch, 21);
  Rng rng(9);
  GrayImage img = random_image(rng, 10, 10);
  LabelMap labels = oracles::random_label_map(rng, 10, 10, 4);
  SoftTarget target = compute_soft_targets(labels);
  ClassStats stats = collect_stats({&labels}, 4);

  BackwardResult grads = backward(net, "h", img, target, stats);
  double loss = soft_weighted_loss(forward(net, "h", img), target, stats);
  CHECK(grads.loss == doctest::Approx(loss).epsilon(1e-10));
}

TEST_CASE("parameter gradients match finite differences") {
  ArchSpec arch = default_arch({{"h", 3}}, 4, 2, 2);
  BranchNet net = init_net(arch, 33);
  Rng rng(12);
  GrayImage img = random_image(rng, 8, 8);
  LabelMap labels = oracles::random_label_map(rng, 8, 8, 3);
  SoftTarget target = compute_soft_targets(labels);
  ClassStats stats = collect_stats({&labels}, 3);

  BackwardResult grads = backward(net, "h", img, target, stats);

  auto loss_at = [&](BranchNet& n) {
    return soft_weighted_loss(forward(n, "h", img), target, stats);
  };
  const double h = 1e-6;
  int checked = 0;
  double max_rel = 0.0;
  for (int coord = 0; coord < 24; ++coord) {
    // alternate across trunk / head, weights / bias
    bool in_trunk = coord % 2 == 0;
    std::size_t layer = (coord / 2) % 2;
    auto& layers = in_trunk ? net.trunk : net.branches.at("h");
    auto& g = in_trunk ? grads.trunk[layer] : grads.head[layer];
    bool use_bias = coord % 5 == 0;
    std::vector<double>& tensor = use_bias ? layers[layer].bias.v : layers[layer].weights.v;
    const std::vector<double>& gt = use_bias ? g.bias : g.weights;
    std::size_t idx = rng.next_below(tensor.size());

    double saved = tensor[idx];
    tensor[idx] = saved + h;
    double up = loss_at(net);
    tensor[idx] = saved - h;
    double down = loss_at(net);
    tensor[idx] = saved;
    double fd = (up - down) / (2 * h);
    double rel = std::abs(fd - gt[idx]) / std::max({std::abs(fd), std::abs(gt[idx]), 1e-8});
    max_rel = std::max(max_rel, rel);
    ++checked;
  }
  CHECK(checked >= 20);
  CHECK(max_rel < 1e-3);
}

TEST_CASE("frozen tensors get zero gradients and never move") {
  ArchSpec arch = default_arch({{"h", 3}}, 4, 2, 2);
  BranchNet net = init_net(arch, 7);
  net.freeze_trunk();
  std::vector<double> before = net.trunk[0].weights.v;

  Rng rng(14);
  GrayImage img = random_image(rng, 8, 8);
  LabelMap labels = oracles::random_label_map(rng, 8, 8, 3);
  SoftTarget target = compute_soft_targets(labels);
  ClassStats stats = collect_stats({&labels}, 3);

  OptimState opt;
  opt.config.base_lr = 0.05;
  opt.config.max_iter = 10;
  for (int i = 0; i < 10; ++i) {
    BackwardResult grads = backward(net, "h", img, target, stats);
    for (const auto& lg : grads.trunk) {
      for (double v : lg.weights) CHECK(v == 0.0);
      for (double v : lg.bias) CHECK(v == 0.0);
    }
    sgd_step(net, "h", grads, opt);
  }
  CHECK(net.trunk[0].weights.v == before);

  // fully frozen net: zero grads, finite loss
  for (auto& [name, head] : net.branches)
    for (auto& l : head) {
      l.weights.frozen = true;
      l.bias.frozen = true;
    }
  BackwardResult grads = backward(net, "h", img, target, stats);
  CHECK(std::isfinite(grads.loss));
  for (const auto& lg : grads.head)
    for (double v : lg.weights) CHECK(v == 0.0);
}

TEST_CASE("sgd step arithmetic") {
  ArchSpec arch = default_arch({{"h", 2}}, 3, 1, 1);
  BranchNet net = init_net(arch, 50);
  std::vector<double> w0 = net.trunk[0].weights.v;

  BackwardResult zero;
  zero.trunk.resize(1);
  zero.head.resize(1);
  zero.trunk[0].weights.assign(net.trunk[0].weights.v.size(), 0.0);
  zero.trunk[0].bias.assign(net.trunk[0].bias.v.size(), 0.0);
  zero.head[0].weights.assign(net.branches.at("h")[0].weights.v.size(), 0.0);
  zero.head[0].bias.assign(net.branches.at("h")[0].bias.v.size(), 0.0);

  SUBCASE("zero gradients leave parameters unchanged") {
    OptimState opt;
    opt.config.max_iter = 4;
    sgd_step(net, "h", zero, opt);
    CHECK(net.trunk[0].weights.v == w0);
    CHECK(opt.iter == 1);
  }

  SUBCASE("momentum zero performs a plain step, head gets the multiplier") {
    OptimState opt;
    opt.config.base_lr = 0.1;
    opt.config.momentum = 0.0;
    opt.config.power = 0.9;
    opt.config.max_iter = 100;
    opt.config.head_lr_multiplier = 10.0;
    BackwardResult g = zero;
    g.trunk[0].weights.assign(zero.trunk[0].weights.size(), 2.0);
    g.head[0].weights.assign(zero.head[0].weights.size(), 2.0);
    double head_w0 = net.branches.at("h")[0].weights.v[0];
    sgd_step(net, "h", g, opt);
    CHECK(net.trunk[0].weights.v[0] == doctest::Approx(w0[0] - 0.1 * 2.0).epsilon(1e-12));
    // final logit layer takes lr * 10
    CHECK(net.branches.at("h")[0].weights.v[0] ==
          doctest::Approx(head_w0 - 1.0 * 2.0).epsilon(1e-12));
  }

  SUBCASE("learning rate hits zero at max_iter") {
    OptimState opt;
    opt.config.base_lr = 0.1;
    opt.config.max_iter = 5;
    opt.iter = 5;
    CHECK(opt.lr() == 0.0);
    BackwardResult g = zero;
    g.trunk[0].weights.assign(zero.trunk[0].weights.size(), 3.0);
    std::vector<double> before = net.trunk[0].weights.v;
    sgd_step(net, "h", g, opt);
    CHECK(net.trunk[0].weights.v == before);
  }

  SUBCASE("poly decay is non-increasing") {
    OptimState opt;
    opt.config.base_lr = 0.2;
    opt.config.max_iter = 50;
    double prev = opt.lr();
    for (int i = 1; i <= 50; ++i) {
      opt.iter = i;
      CHECK(opt.lr() <= prev);
      CHECK(opt.lr() >= 0.0);
      prev = opt.lr();
    }
  }
}

TEST_CASE("training memorizes a single example") {
  ArchSpec arch = default_arch({{"h", 4}}, 8, 3, 2);
  BranchNet net = init_net(arch, 77);
  Rng rng(88);

  // one synthetic example with two touching parts
  GrayImage img(16, 16, 255);
  LabelMap labels(16, 16, 4, 0);
  for (int y = 4; y < 12; ++y) {
    img.at(5, y) = 0;
    labels.at(5, y) = 1;
    img.at(6, y) = 0;
    labels.at(6, y) = 2;
    img.at(10, y) = 0;
    labels.at(10, y) = 3;
  }
  SoftTarget target = compute_soft_targets(labels);
  ClassStats stats = collect_stats({&labels}, 4);

  OptimState opt;
  opt.config.base_lr = 0.05;
  opt.config.max_iter = 200;
  double initial = -1.0;
  double last = 0.0;
  for (int i = 0; i < 200; ++i) {
    BackwardResult grads = backward(net, "h", img, target, stats);
    if (initial < 0) initial = grads.loss;
    last = grads.loss;
    sgd_step(net, "h", grads, opt);
  }
  CHECK(last < 0.1 * initial);
}

TEST_CASE("training is bit-deterministic across repeats and thread counts") {
  auto run_once = [](int threads) {
    set_threads(threads);
    ArchSpec arch = default_arch({{"h", 3}}, 6, 2, 2);
    BranchNet net = init_net(arch, 5);
    Rng rng(6);
    GrayImage img = random_image(rng, 12, 12);
    LabelMap labels = oracles::random_label_map(rng, 12, 12, 3);
    SoftTarget target = compute_soft_targets(labels);
    ClassStats stats = collect_stats({&labels}, 3);
    OptimState opt;
    opt.config.base_lr = 0.03;
    opt.config.max_iter = 20;
    for (int i = 0; i < 20; ++i)
      sgd_step(net, "h", backward(net, "h", img, target, stats), opt);
    set_threads(0);
    return net.trunk[1].weights.v;
  };
  std::vector<double> a = run_once(1);
  std::vector<double> b = run_once(1);
  std::vector<double> c = run_once(8);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("checkpoints round trip exactly") {
  namespace fs = std::filesystem;
  ArchSpec arch = default_arch({{"x", 3}, {"y", 4}}, 5, 2, 2);
  BranchNet net = init_net(arch, 123);
  net.trunk[0].weights.frozen = true;
  OptimState opt;
  opt.config.base_lr = 0.07;
  opt.config.max_iter = 42;
  opt.iter = 17;
  opt.velocity["trunk.0.w"] = {1.5, -2.25, 0.0};

  fs::path path = fs::temp_directory_path() / "sketchseg-test-net.ckpt";
  save_checkpoint(net, opt, path.string());
  auto [net2, opt2] = load_checkpoint(path.string());

  CHECK(net2.trunk.size() == net.trunk.size());
  CHECK(net2.trunk[0].weights.frozen);
  CHECK(tensor_diff(net2.trunk[1].weights.v, net.trunk[1].weights.v) == 0.0);
  CHECK(net2.branches.at("y")[1].out_channels == 4);
  CHECK(net2.branches.at("y")[1].final_logit);
  CHECK(tensor_diff(net2.branches.at("x")[0].bias.v, net.branches.at("x")[0].bias.v) == 0.0);
  CHECK(opt2.iter == 17);
  CHECK(opt2.config.base_lr == 0.07);
  CHECK(opt2.velocity.at("trunk.0.w") == opt.velocity.at("trunk.0.w"));

  // forward agreement
  Rng rng(3);
  GrayImage img = random_image(rng, 9, 9);
  CHECK(forward(net, "x", img).data == forward(net2, "x", img).data);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/nothing.ckpt"), Error);
}

TEST_CASE("oversized inputs are rejected") {
  ArchSpec arch = default_arch({{"h", 2}}, 3, 1, 1);
  arch.max_dim = 16;
  BranchNet net = init_net(arch, 1);
  GrayImage big(32, 8, 255);
  CHECK_THROWS_AS(forward(net, "h", big), Error);
}

}  // TEST_SUITE
