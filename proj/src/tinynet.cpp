#include "sketchseg/tinynet.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sketchseg/rng.hpp"

namespace sketchseg {
namespace tinynet {

namespace {

int g_threads = 0;

int effective_threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

// Channel-major activation planes.
struct Planes {
  int channels = 0, width = 0, height = 0;
  std::vector<double> v;

  Planes() = default;
  Planes(int c, int w, int h) : channels(c), width(w), height(h),
                                v(static_cast<std::size_t>(c) * w * h, 0.0) {}
  double* plane(int c) { return v.data() + static_cast<std::size_t>(c) * width * height; }
  const double* plane(int c) const {
    return v.data() + static_cast<std::size_t>(c) * width * height;
  }
};

// Copies `src` into a zero-padded (w+2)x(h+2) buffer per channel.
void pad_into(const Planes& src, std::vector<double>& padded) {
  const int w = src.width, h = src.height;
  const std::size_t pw = w + 2, ph = h + 2;
  padded.assign(static_cast<std::size_t>(src.channels) * pw * ph, 0.0);
  for (int c = 0; c < src.channels; ++c) {
    const double* sp = src.plane(c);
    double* pp = padded.data() + static_cast<std::size_t>(c) * pw * ph;
    for (int y = 0; y < h; ++y)
      std::memcpy(pp + (y + 1) * pw + 1, sp + static_cast<std::size_t>(y) * w,
                  static_cast<std::size_t>(w) * sizeof(double));
  }
}

// out[oc] = bias[oc] + sum_ic K_{oc,ic} * in[ic]; optional ReLU. `padded` is
// the zero-padded input. Each output plane is owned by one thread and filled
// in a fixed order, so results do not depend on the thread count.
void conv3x3_forward(const std::vector<double>& padded, int in_c, int w, int h,
                     const ConvLayer& layer, Planes& out) {
  const std::size_t pw = w + 2;
  const std::size_t ph = h + 2;
  const int out_c = layer.out_channels;
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int oc = 0; oc < out_c; ++oc) {
    double* op = out.plane(oc);
    std::fill(op, op + static_cast<std::size_t>(w) * h, layer.bias.v[oc]);
    for (int ic = 0; ic < in_c; ++ic) {
      const double* pp = padded.data() + static_cast<std::size_t>(ic) * pw * ph;
      const double* k = layer.weights.v.data() + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      for (int y = 0; y < h; ++y) {
        const double* r0 = pp + static_cast<std::size_t>(y) * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        double* orow = op + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
          orow[x] += k[0] * r0[x] + k[1] * r0[x + 1] + k[2] * r0[x + 2] +
                     k[3] * r1[x] + k[4] * r1[x + 1] + k[5] * r1[x + 2] +
                     k[6] * r2[x] + k[7] * r2[x + 1] + k[8] * r2[x + 2];
        }
      }
    }
    if (layer.relu)
      for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i)
        if (op[i] < 0.0) op[i] = 0.0;
  }
}

// dIn[ic] = sum_oc corr(dPre[oc], flipped K_{oc,ic}); `padded_dpre` is the
// zero-padded upstream gradient. Each input plane is owned by one thread.
void conv3x3_backward_input(const std::vector<double>& padded_dpre, const ConvLayer& layer,
                            int w, int h, Planes& din) {
  const std::size_t pw = w + 2;
  const std::size_t ph = h + 2;
  const int in_c = layer.in_channels;
  const int out_c = layer.out_channels;
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int ic = 0; ic < in_c; ++ic) {
    double* ip = din.plane(ic);
    std::fill(ip, ip + static_cast<std::size_t>(w) * h, 0.0);
    for (int oc = 0; oc < out_c; ++oc) {
      const double* pp = padded_dpre.data() + static_cast<std::size_t>(oc) * pw * ph;
      const double* k = layer.weights.v.data() + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      for (int y = 0; y < h; ++y) {
        const double* r0 = pp + static_cast<std::size_t>(y) * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        double* irow = ip + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
          irow[x] += k[8] * r0[x] + k[7] * r0[x + 1] + k[6] * r0[x + 2] +
                     k[5] * r1[x] + k[4] * r1[x + 1] + k[3] * r1[x + 2] +
                     k[2] * r2[x] + k[1] * r2[x + 1] + k[0] * r2[x + 2];
        }
      }
    }
  }
}

// dW[oc][ic][t] = sum_p dPre[oc][p] * padded_in[ic][p + t]; dB[oc] = sum dPre.
// All accumulators for a given oc live on one thread.
void conv3x3_backward_params(const std::vector<double>& padded_in, const Planes& dpre,
                             const ConvLayer& layer, LayerGrads& grads) {
  const int w = dpre.width, h = dpre.height;
  const std::size_t pw = w + 2;
  const std::size_t ph = h + 2;
  const int in_c = layer.in_channels;
  const int out_c = layer.out_channels;
  grads.weights.assign(layer.weights.v.size(), 0.0);
  grads.bias.assign(layer.bias.v.size(), 0.0);
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int oc = 0; oc < out_c; ++oc) {
    const double* dp = dpre.plane(oc);
    double db = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) db += dp[i];
    grads.bias[oc] = db;
    for (int ic = 0; ic < in_c; ++ic) {
      const double* pp = padded_in.data() + static_cast<std::size_t>(ic) * pw * ph;
      double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (int y = 0; y < h; ++y) {
        const double* drow = dp + static_cast<std::size_t>(y) * w;
        const double* r0 = pp + static_cast<std::size_t>(y) * pw;
        const double* r1 = r0 + pw;
        const double* r2 = r1 + pw;
        for (int x = 0; x < w; ++x) {
          const double d = drow[x];
          acc[0] += d * r0[x];
          acc[1] += d * r0[x + 1];
          acc[2] += d * r0[x + 2];
          acc[3] += d * r1[x];
          acc[4] += d * r1[x + 1];
          acc[5] += d * r1[x + 2];
          acc[6] += d * r2[x];
          acc[7] += d * r2[x + 1];
          acc[8] += d * r2[x + 2];
        }
      }
      double* wg = grads.weights.data() + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      for (int t = 0; t < 9; ++t) wg[t] = acc[t];
    }
  }
}

void validate_chain(const std::vector<LayerSpec>& layers, int expected_in,
                    const std::string& what) {
  int in = expected_in;
  for (const LayerSpec& l : layers) {
    if (l.in_channels != in)
      fail(Errc::BadConfig, what + ": layer input width " + std::to_string(l.in_channels) +
                                " does not match " + std::to_string(in));
    if (l.out_channels < 1) fail(Errc::BadConfig, what + ": layer output width must be >= 1");
    in = l.out_channels;
  }
}

ConvLayer make_layer(const LayerSpec& spec, Rng& rng) {
  ConvLayer layer;
  layer.in_channels = spec.in_channels;
  layer.out_channels = spec.out_channels;
  layer.relu = spec.relu;
  layer.weights.v.resize(static_cast<std::size_t>(spec.out_channels) * spec.in_channels * 9);
  const double bound = std::sqrt(6.0 / (static_cast<double>(spec.in_channels) * 9.0));
  for (double& w : layer.weights.v) w = rng.next_double(-bound, bound);
  layer.bias.v.assign(spec.out_channels, 0.0);
  return layer;
}

const std::vector<ConvLayer>& find_branch(const BranchNet& net, const std::string& branch) {
  auto it = net.branches.find(branch);
  if (it == net.branches.end()) fail(Errc::UnknownBranch, "unknown branch: " + branch);
  return it->second;
}

Planes image_features(const GrayImage& img) {
  Planes in(1, img.width, img.height);
  double* p = in.plane(0);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    p[i] = (255.0 - static_cast<double>(img.data[i])) / 255.0;
  return in;
}

void check_input(const BranchNet& net, const GrayImage& img) {
  if (img.width < 1 || img.height < 1 || img.width > net.max_dim || img.height > net.max_dim)
    fail(Errc::BadConfig, "input dimensions outside configured limits");
}

// Activations for every layer boundary: acts[0] is the input, acts[k+1] the
// (post-ReLU) output of layer k. Trunk layers come first, then the head.
std::vector<Planes> run_forward(const BranchNet& net, const std::vector<ConvLayer>& head,
                                const GrayImage& img) {
  std::vector<const ConvLayer*> layers;
  for (const ConvLayer& l : net.trunk) layers.push_back(&l);
  for (const ConvLayer& l : head) layers.push_back(&l);

  std::vector<Planes> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(image_features(img));
  std::vector<double> padded;
  for (const ConvLayer* layer : layers) {
    pad_into(acts.back(), padded);
    Planes out(layer->out_channels, img.width, img.height);
    conv3x3_forward(padded, layer->in_channels, img.width, img.height, *layer, out);
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

void set_threads(int n) { g_threads = n; }
int threads() { return effective_threads(); }

void BranchNet::freeze_trunk(bool frozen) {
  for (ConvLayer& l : trunk) {
    l.weights.frozen = frozen;
    l.bias.frozen = frozen;
  }
}

ArchSpec default_arch(const std::map<std::string, int>& branch_classes, int channels,
                      int trunk_layers, int head_layers) {
  if (trunk_layers < 1 || head_layers < 1 || channels < 1)
    fail(Errc::BadConfig, "architecture sizes must be >= 1");
  ArchSpec arch;
  arch.trunk.push_back({1, channels, true});
  for (int i = 1; i < trunk_layers; ++i) arch.trunk.push_back({channels, channels, true});
  for (const auto& [name, classes] : branch_classes) {
    std::vector<LayerSpec> head;
    for (int i = 0; i + 1 < head_layers; ++i) head.push_back({channels, channels, true});
    head.push_back({channels, classes, false});
    arch.heads[name] = std::move(head);
  }
  return arch;
}

BranchNet init_net(const ArchSpec& arch, std::uint64_t seed) {
  if (arch.trunk.empty()) fail(Errc::BadConfig, "trunk must have at least one layer");
  if (arch.trunk.front().in_channels != 1)
    fail(Errc::BadConfig, "trunk input must be single-channel");
  validate_chain(arch.trunk, 1, "trunk");
  const int trunk_out = arch.trunk.back().out_channels;
  for (const auto& [name, head] : arch.heads) {
    if (head.empty()) fail(Errc::BadConfig, "head " + name + " must have at least one layer");
    if (head.front().in_channels != trunk_out)
      fail(Errc::BadConfig, "head " + name + " input does not match trunk output");
    validate_chain(head, trunk_out, "head " + name);
    if (head.back().relu)
      fail(Errc::BadConfig, "head " + name + " must end in a linear logit layer");
  }

  BranchNet net;
  net.max_dim = arch.max_dim;
  // One derived stream per layer keeps initialization independent of how many
  // branches exist and of map iteration details.
  std::uint64_t layer_idx = 0;
  for (const LayerSpec& spec : arch.trunk) {
    Rng rng = stream_rng(seed, std::uint64_t{0}, layer_idx++);
    net.trunk.push_back(make_layer(spec, rng));
  }
  std::uint64_t branch_idx = 0;
  for (const auto& [name, head] : arch.heads) {
    std::vector<ConvLayer> layers;
    std::uint64_t head_layer_idx = 0;
    for (const LayerSpec& spec : head) {
      Rng rng = stream_rng(seed, branch_idx + 1, head_layer_idx++);
      layers.push_back(make_layer(spec, rng));
    }
    layers.back().final_logit = true;
    net.branches[name] = std::move(layers);
    ++branch_idx;
  }
  return net;
}

LogitGrid forward(const BranchNet& net, const std::string& branch, const GrayImage& img) {
  check_input(net, img);
  const std::vector<ConvLayer>& head = find_branch(net, branch);
  std::vector<Planes> acts = run_forward(net, head, img);
  const Planes& logits = acts.back();
  LogitGrid grid(img.width, img.height, logits.channels);
  for (int c = 0; c < logits.channels; ++c) {
    const double* p = logits.plane(c);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        grid.data[(static_cast<std::size_t>(y) * img.width + x) * logits.channels + c] =
            p[static_cast<std::size_t>(y) * img.width + x];
  }
  return grid;
}

BackwardResult backward(const BranchNet& net, const std::string& branch, const GrayImage& img,
                        const SoftTarget& target, const ClassStats& stats) {
  check_input(net, img);
  const std::vector<ConvLayer>& head = find_branch(net, branch);
  if (target.width != img.width || target.height != img.height)
    fail(Errc::SizeMismatch, "target shape does not match image");

  std::vector<const ConvLayer*> layers;
  for (const ConvLayer& l : net.trunk) layers.push_back(&l);
  for (const ConvLayer& l : head) layers.push_back(&l);
  const int n_layers = static_cast<int>(layers.size());
  const int w = img.width, h = img.height;

  std::vector<Planes> acts = run_forward(net, head, img);

  // Loss and dL/dlogits.
  const Planes& out = acts.back();
  const int classes = out.channels;
  if (classes != target.classes) fail(Errc::SizeMismatch, "branch classes do not match target");
  LogitGrid grid(w, h, classes);
  for (int c = 0; c < classes; ++c) {
    const double* p = out.plane(c);
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i)
      grid.data[i * classes + c] = p[i];
  }
  auto [loss, grad_grid] = soft_weighted_loss_grad(grid, target, stats);

  BackwardResult result;
  result.loss = loss;
  result.trunk.resize(net.trunk.size());
  result.head.resize(head.size());
  auto grads_of = [&](int k) -> LayerGrads& {
    return k < static_cast<int>(net.trunk.size())
               ? result.trunk[k]
               : result.head[k - static_cast<int>(net.trunk.size())];
  };
  for (int k = 0; k < n_layers; ++k) {
    grads_of(k).weights.assign(layers[k]->weights.v.size(), 0.0);
    grads_of(k).bias.assign(layers[k]->bias.v.size(), 0.0);
  }

  int deepest = n_layers;  // lowest layer index with an unfrozen tensor
  for (int k = 0; k < n_layers; ++k) {
    if (!layers[k]->weights.frozen || !layers[k]->bias.frozen) {
      deepest = k;
      break;
    }
  }
  if (deepest == n_layers) return result;  // everything frozen

  Planes dout(classes, w, h);
  for (int c = 0; c < classes; ++c) {
    double* p = dout.plane(c);
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i)
      p[i] = grad_grid.data[i * classes + c];
  }

  std::vector<double> padded;
  for (int k = n_layers - 1; k >= deepest; --k) {
    const ConvLayer& layer = *layers[k];
    // For ReLU layers the post-activation mask equals the pre-activation
    // sign, so acts[k+1] > 0 gates the gradient.
    if (layer.relu) {
      const Planes& post = acts[k + 1];
      for (std::size_t i = 0; i < dout.v.size(); ++i)
        if (post.v[i] <= 0.0) dout.v[i] = 0.0;
    }
    if (!layer.weights.frozen || !layer.bias.frozen) {
      pad_into(acts[k], padded);
      LayerGrads full;
      conv3x3_backward_params(padded, dout, layer, full);
      LayerGrads& dst = grads_of(k);
      if (!layer.weights.frozen) dst.weights = std::move(full.weights);
      if (!layer.bias.frozen) dst.bias = std::move(full.bias);
    }
    if (k > deepest) {
      pad_into(dout, padded);
      Planes din(layer.in_channels, w, h);
      conv3x3_backward_input(padded, layer, w, h, din);
      dout = std::move(din);
    }
  }
  return result;
}

double OptimState::lr() const {
  double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(config.max_iter);
  if (frac <= 0.0) return 0.0;
  return config.base_lr * std::pow(frac, config.power);
}

namespace {

void step_tensor(Tensor& tensor, const std::vector<double>& grad, double lr,
                 std::vector<double>& velocity, double momentum) {
  if (velocity.size() != tensor.v.size()) velocity.assign(tensor.v.size(), 0.0);
  for (std::size_t i = 0; i < tensor.v.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    tensor.v[i] -= lr * velocity[i];
  }
}

}  // namespace

void sgd_step(BranchNet& net, const std::string& branch, const BackwardResult& grads,
              OptimState& opt) {
  auto it = net.branches.find(branch);
  if (it == net.branches.end()) fail(Errc::UnknownBranch, "unknown branch: " + branch);
  std::vector<ConvLayer>& head = it->second;
  if (grads.trunk.size() != net.trunk.size() || grads.head.size() != head.size())
    fail(Errc::SizeMismatch, "gradient layout does not match network");

  const double lr = opt.lr();
  auto update = [&](ConvLayer& layer, const LayerGrads& g, const std::string& name) {
    const double lr_tensor = layer.final_logit ? lr * opt.config.head_lr_multiplier : lr;
    if (!layer.weights.frozen)
      step_tensor(layer.weights, g.weights, lr_tensor, opt.velocity[name + ".w"],
                  opt.config.momentum);
    if (!layer.bias.frozen)
      step_tensor(layer.bias, g.bias, lr_tensor, opt.velocity[name + ".b"],
                  opt.config.momentum);
  };
  for (std::size_t k = 0; k < net.trunk.size(); ++k)
    update(net.trunk[k], grads.trunk[k], "trunk." + std::to_string(k));
  for (std::size_t k = 0; k < head.size(); ++k)
    update(head[k], grads.head[k], "branch." + branch + "." + std::to_string(k));
  ++opt.iter;
}

// --- checkpoint io -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'S', 'E', 'G', 'N', 'E', 'T', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_bytes(std::ostream& out, const void* p, std::size_t len) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(len));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  put_bytes(out, v.data(), v.size() * sizeof(double));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(Errc::TruncatedPayload, "checkpoint truncated");
  return v;
}

std::string get_string(std::istream& in) {
  std::uint32_t len = get<std::uint32_t>(in);
  if (len > (1u << 20)) fail(Errc::MalformedHeader, "checkpoint string too long");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) fail(Errc::TruncatedPayload, "checkpoint truncated");
  return s;
}

std::vector<double> get_doubles(std::istream& in) {
  std::uint64_t len = get<std::uint64_t>(in);
  if (len > (1ull << 32)) fail(Errc::MalformedHeader, "checkpoint tensor too long");
  std::vector<double> v(len);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(len * sizeof(double)));
  if (!in) fail(Errc::TruncatedPayload, "checkpoint truncated");
  return v;
}

void put_layer(std::ostream& out, const ConvLayer& layer) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.in_channels));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.out_channels));
  put<std::uint8_t>(out, layer.relu ? 1 : 0);
  put<std::uint8_t>(out, layer.final_logit ? 1 : 0);
  put<std::uint8_t>(out, layer.weights.frozen ? 1 : 0);
  put<std::uint8_t>(out, layer.bias.frozen ? 1 : 0);
  put_doubles(out, layer.weights.v);
  put_doubles(out, layer.bias.v);
}

ConvLayer get_layer(std::istream& in) {
  ConvLayer layer;
  layer.in_channels = static_cast<int>(get<std::uint32_t>(in));
  layer.out_channels = static_cast<int>(get<std::uint32_t>(in));
  layer.relu = get<std::uint8_t>(in) != 0;
  layer.final_logit = get<std::uint8_t>(in) != 0;
  layer.weights.frozen = get<std::uint8_t>(in) != 0;
  layer.bias.frozen = get<std::uint8_t>(in) != 0;
  layer.weights.v = get_doubles(in);
  layer.bias.v = get_doubles(in);
  const std::size_t expect = static_cast<std::size_t>(layer.out_channels) * layer.in_channels * 9;
  if (layer.weights.v.size() != expect ||
      layer.bias.v.size() != static_cast<std::size_t>(layer.out_channels))
    fail(Errc::MalformedHeader, "checkpoint tensor shape mismatch");
  return layer;
}

}  // namespace

void save_checkpoint(const BranchNet& net, const OptimState& opt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot open checkpoint for writing: " + path);
  put_bytes(out, kMagic, 8);
  put<std::uint32_t>(out, 1);  // version
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.max_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.trunk.size()));
  for (const ConvLayer& l : net.trunk) put_layer(out, l);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.branches.size()));
  for (const auto& [name, head] : net.branches) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(head.size()));
    for (const ConvLayer& l : head) put_layer(out, l);
  }
  put<std::uint8_t>(out, 1);
  put<double>(out, opt.config.base_lr);
  put<double>(out, opt.config.head_lr_multiplier);
  put<double>(out, opt.config.momentum);
  put<double>(out, opt.config.power);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(opt.config.max_iter));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(opt.iter));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(opt.velocity.size()));
  for (const auto& [name, v] : opt.velocity) {
    put_string(out, name);
    put_doubles(out, v);
  }
  out.flush();
  if (!out) fail(Errc::IoFailure, "checkpoint write failed: " + path);
}

std::pair<BranchNet, OptimState> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    fail(Errc::MalformedHeader, "not a checkpoint file: " + path);
  std::uint32_t version = get<std::uint32_t>(in);
  if (version != 1) fail(Errc::MalformedHeader, "unsupported checkpoint version");

  BranchNet net;
  net.max_dim = static_cast<int>(get<std::uint32_t>(in));
  std::uint32_t trunk_layers = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < trunk_layers; ++i) net.trunk.push_back(get_layer(in));
  std::uint32_t branches = get<std::uint32_t>(in);
  for (std::uint32_t b = 0; b < branches; ++b) {
    std::string name = get_string(in);
    std::uint32_t layers = get<std::uint32_t>(in);
    std::vector<ConvLayer> head;
    for (std::uint32_t i = 0; i < layers; ++i) head.push_back(get_layer(in));
    net.branches[name] = std::move(head);
  }

  OptimState opt;
  if (get<std::uint8_t>(in) != 0) {
    opt.config.base_lr = get<double>(in);
    opt.config.head_lr_multiplier = get<double>(in);
    opt.config.momentum = get<double>(in);
    opt.config.power = get<double>(in);
    opt.config.max_iter = static_cast<int>(get<std::uint32_t>(in));
    opt.iter = static_cast<int>(get<std::uint32_t>(in));
    std::uint32_t entries = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < entries; ++i) {
      std::string name = get_string(in);
      opt.velocity[name] = get_doubles(in);
    }
  }
  return {std::move(net), std::move(opt)};
}

}  // namespace tinynet
}  // namespace sketchseg
