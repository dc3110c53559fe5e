#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sketchseg/raster.hpp"
#include "sketchseg/swloss.hpp"

namespace sketchseg {
namespace tinynet {

// 3x3 kernels, stride 1, zero same-padding throughout.
struct LayerSpec {
  int in_channels = 0;
  int out_channels = 0;
  bool relu = true;
};

struct ArchSpec {
  std::vector<LayerSpec> trunk;                       // trunk[0].in_channels must be 1
  std::map<std::string, std::vector<LayerSpec>> heads;  // last layer emits logits (no relu)
  int max_dim = 1024;
};

// Trunk of `trunk_layers` conv layers at `channels` width, plus per-branch
// heads of `head_layers` layers whose final layer emits that branch's logits.
ArchSpec default_arch(const std::map<std::string, int>& branch_classes, int channels = 16,
                      int trunk_layers = 4, int head_layers = 2);

struct Tensor {
  std::vector<double> v;
  bool frozen = false;
};

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  bool relu = true;
  bool final_logit = false;  // last layer of a head; gets the head LR multiplier
  Tensor weights;            // [out][in][3][3]
  Tensor bias;               // [out]
};

struct BranchNet {
  std::vector<ConvLayer> trunk;
  std::map<std::string, std::vector<ConvLayer>> branches;
  int max_dim = 1024;

  int trunk_out_channels() const { return trunk.back().out_channels; }
  void freeze_trunk(bool frozen = true);
};

// Weights drawn from a seeded uniform distribution scaled by fan-in
// (bound sqrt(6 / fan_in)); biases zero. Bit-identical for equal seeds.
BranchNet init_net(const ArchSpec& arch, std::uint64_t seed);

// Per-pixel logits for the named branch at input resolution. Input features
// are (255 - intensity) / 255, so strokes are 1 and background 0.
LogitGrid forward(const BranchNet& net, const std::string& branch, const GrayImage& img);

struct LayerGrads {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct BackwardResult {
  double loss = 0.0;
  std::vector<LayerGrads> trunk;
  std::vector<LayerGrads> head;  // for the branch passed to backward()
};

// Loss and gradients of the soft-weighted loss for one sample. Frozen tensors
// get zero gradients; backpropagation stops below the deepest layer that still
// needs one.
BackwardResult backward(const BranchNet& net, const std::string& branch, const GrayImage& img,
                        const SoftTarget& target, const ClassStats& stats);

struct OptimConfig {
  double base_lr = 0.02;
  double head_lr_multiplier = 10.0;
  double momentum = 0.9;
  double power = 0.9;
  int max_iter = 1000;
};

// SGD with momentum under polynomial LR decay:
// lr(iter) = base_lr * (1 - iter/max_iter)^power.
struct OptimState {
  OptimConfig config;
  int iter = 0;
  std::map<std::string, std::vector<double>> velocity;  // per-tensor buffers

  double lr() const;
};

// v <- momentum*v + g; theta <- theta - lr_tensor*v. Final head logit layers
// use lr * head_lr_multiplier. Frozen tensors are untouched. Increments iter.
void sgd_step(BranchNet& net, const std::string& branch, const BackwardResult& grads,
              OptimState& opt);

// Versioned little-endian binary container with named tensors, freeze flags,
// and optimizer state (layout in README).
void save_checkpoint(const BranchNet& net, const OptimState& opt, const std::string& path);
std::pair<BranchNet, OptimState> load_checkpoint(const std::string& path);

// Caps within-layer parallelism (0 = all available cores). Results are
// identical for every setting.
void set_threads(int n);
int threads();

}  // namespace tinynet
}  // namespace sketchseg
