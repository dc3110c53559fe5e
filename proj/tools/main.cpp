#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "sketchseg/augment.hpp"
#include "sketchseg/classstats.hpp"
#include "sketchseg/homotrans.hpp"
#include "sketchseg/metrics.hpp"
#include "sketchseg/raster.hpp"
#include "sketchseg/rng.hpp"
#include "sketchseg/staged.hpp"
#include "sketchseg/swloss.hpp"
#include "sketchseg/synthgen.hpp"
#include "sketchseg/tinynet.hpp"

namespace fs = std::filesystem;
using namespace sketchseg;

namespace {

bool g_quiet = false;

void echo_config(const std::string& line) {
  if (!g_quiet) std::cerr << "config: " << line << "\n";
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// --- ht ----------------------------------------------------------------------

struct HtArgs {
  std::string in, out, manifest, out_dir;
  int threshold = 128;
};

int run_ht(const HtArgs& args) {
  HtConfig cfg{args.threshold};
  echo_config("threshold=" + std::to_string(args.threshold));
  if (!args.in.empty()) {
    echo_config("in=" + args.in + " out=" + args.out);
    save_gray(homogeneous_transform(load_gray(args.in), cfg), args.out);
    return 0;
  }
  echo_config("manifest=" + args.manifest + " out-dir=" + args.out_dir);
  fs::path base = fs::path(args.manifest).parent_path();
  fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> entries = read_manifest_entries(args.manifest);
  std::vector<ManifestEntry> out_entries;
  for (const ManifestEntry& e : entries) {
    auto rel = [&](const std::string& p) {
      fs::path fp(p);
      std::error_code ec;
      fs::path r = fs::relative(fp, base, ec);
      if (ec || r.empty() || r.native().starts_with("..")) r = fp.filename();
      return r;
    };
    fs::path img_rel = rel(e.image_path);
    fs::path lab_rel = rel(e.label_path);
    fs::create_directories((out_dir / img_rel).parent_path());
    fs::create_directories((out_dir / lab_rel).parent_path());
    save_gray(homogeneous_transform(load_gray(e.image_path), cfg), (out_dir / img_rel).string());
    fs::copy_file(e.label_path, out_dir / lab_rel, fs::copy_options::overwrite_existing);
    out_entries.push_back(
        {img_rel.string(), lab_rel.string(), e.category, e.super_category});
  }
  write_manifest(out_entries, (out_dir / "manifest.tsv").string());
  return 0;
}

// --- synth / augment ----------------------------------------------------------

void write_dataset(const Dataset& ds, const std::string& dir_path,
                   const std::vector<std::pair<std::string, std::vector<std::string>>>* taxonomy) {
  fs::path dir(dir_path);
  fs::create_directories(dir);
  std::vector<ManifestEntry> entries;
  std::map<std::string, int> counters;
  for (const DataItem& item : ds.items) {
    int idx = counters[item.category]++;
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%05d", item.category.c_str(), idx);
    std::string img_rel = std::string(name) + ".pgm";
    std::string lab_rel = std::string(name) + "_labels.pgm";
    save_gray(item.image, (dir / img_rel).string());
    save_labels(item.labels, (dir / lab_rel).string());
    entries.push_back({img_rel, lab_rel, item.category, item.super_category});
  }
  write_manifest(entries, (dir / "manifest.tsv").string());
  if (taxonomy) staged::write_taxonomy_file(*taxonomy, (dir / "taxonomy.tsv").string());
}

struct SynthArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  int per_category = 200;
  int canvas = 64;
  int thickness = 3;
  double jitter = 1.0;
  double minority_scale = 1.0;
};

int run_synth(const SynthArgs& args) {
  synthgen::SynthSpec spec = synthgen::default_spec();
  spec.seed = args.seed;
  spec.images_per_category = args.per_category;
  spec.canvas = args.canvas;
  spec.stroke_thickness = args.thickness;
  spec.jitter = args.jitter;
  spec.minority_part_scale = args.minority_scale;
  echo_config("seed=" + std::to_string(args.seed) +
              " per-category=" + std::to_string(args.per_category) +
              " canvas=" + std::to_string(args.canvas) +
              " thickness=" + std::to_string(args.thickness));
  Dataset ds = synthgen::generate(spec);
  auto taxonomy = synthgen::taxonomy_of(spec);
  write_dataset(ds, args.out_dir, &taxonomy);
  return 0;
}

struct AugmentArgs {
  std::string manifest, out_dir;
  std::uint64_t seed = 0;
  std::vector<double> angles = {-30, -20, -10, 0, 10, 20, 30};
  bool no_mirror = false;
  int erase_size = 31;
  int erase_count = 1;
};

int run_augment(const AugmentArgs& args) {
  AugmentConfig cfg;
  cfg.angles = args.angles;
  cfg.mirror = !args.no_mirror;
  cfg.erase_size = args.erase_size;
  cfg.erase_count = args.erase_count;
  cfg.seed = args.seed;
  echo_config("manifest=" + args.manifest + " out-dir=" + args.out_dir +
              " seed=" + std::to_string(args.seed) +
              " mirror=" + std::string(cfg.mirror ? "true" : "false") +
              " erase-size=" + std::to_string(cfg.erase_size) +
              " erase-count=" + std::to_string(cfg.erase_count));
  Dataset ds = load_manifest(args.manifest);
  Dataset expanded = expand(ds, cfg);
  write_dataset(expanded, args.out_dir, nullptr);
  return 0;
}

// --- stats ---------------------------------------------------------------------

struct StatsArgs {
  std::string manifest, out;
  int classes = 0;
  double bg_boost = 1.0;
};

int run_stats(const StatsArgs& args) {
  echo_config("manifest=" + args.manifest + " classes=" + std::to_string(args.classes) +
              " bg-boost=" + fmt6(args.bg_boost));
  Dataset ds = load_manifest(args.manifest);
  ClassStats stats = collect_stats(ds, args.classes);
  if (args.bg_boost != 1.0) stats = apply_background_boost(stats, args.bg_boost);
  std::string table = "class\tt\tn\tphi\talpha\n";
  for (int c = 0; c < stats.classes; ++c) {
    table += std::to_string(c) + "\t" + std::to_string(stats.t[c]) + "\t" +
             std::to_string(stats.n[c]) + "\t" + fmt6(stats.phi[c]) + "\t" +
             fmt6(stats.alpha[c]) + "\n";
  }
  std::cout << table;
  if (!args.out.empty()) {
    std::ofstream out(args.out, std::ios::trunc);
    if (!out) fail(Errc::IoFailure, "cannot write stats file: " + args.out);
    out << table;
  }
  return 0;
}

// --- loss-check ------------------------------------------------------------------

int run_loss_check(std::uint64_t seed, int cases) {
  echo_config("seed=" + std::to_string(seed) + " cases=" + std::to_string(cases));
  double max_rel = 0.0;
  const double h = 1e-5;
  for (int k = 0; k < cases; ++k) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(k));
    const int classes = 2 + static_cast<int>(rng.next_below(7));
    const int w = 2 + static_cast<int>(rng.next_below(3));
    const int hgt = 2 + static_cast<int>(rng.next_below(3));
    LabelMap labels(w, hgt, classes, 0);
    for (auto& v : labels.data) v = static_cast<std::uint8_t>(rng.next_below(classes));
    LogitGrid x(w, hgt, classes);
    for (auto& v : x.data) v = rng.next_double(-5.0, 5.0);
    SoftTarget target = compute_soft_targets(labels);
    ClassStats stats = collect_stats({&labels}, classes);

    LogitGrid grad = soft_weighted_grad(x, target, stats);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      LogitGrid xp = x, xm = x;
      xp.data[i] += h;
      xm.data[i] -= h;
      const double fd =
          (soft_weighted_loss(xp, target, stats) - soft_weighted_loss(xm, target, stats)) /
          (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad.data[i]), 1e-8});
      max_rel = std::max(max_rel, std::abs(fd - grad.data[i]) / denom);
    }
  }
  std::cout << "max_relative_error\t" << max_rel << "\n";
  return max_rel <= 1e-4 ? 0 : 2;
}

// --- train -------------------------------------------------------------------------

struct TrainArgs {
  std::string manifest, taxonomy, mode = "staged", out_dir;
  std::uint64_t seed = 0;
  int stage1_iters = 2000;
  int stage2_iters = 200;
  double lr = 0.05;
  double head_lr_mult = 10.0;
  double momentum = 0.9;
  double power = 0.9;
  std::string loss = "soft";
  double bg_boost = 1.0;
  int channels = 8;
  int trunk_layers = 4;
  int head_layers = 2;
  std::string test_manifest, pred_dir;
};

void write_loss_log(const staged::LossLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write log: " + path);
  for (const auto& [iter, loss] : log) out << iter << '\t' << fmt6(loss) << '\n';
}

int run_train(const TrainArgs& args) {
  staged::StagedPlan plan;
  plan.seed = args.seed;
  plan.stage1_iters = args.stage1_iters;
  plan.stage2_iters = args.stage2_iters;
  plan.channels = args.channels;
  plan.trunk_layers = args.trunk_layers;
  plan.head_layers = args.head_layers;
  plan.background_boost = args.bg_boost;
  if (args.mode == "staged") plan.mode = staged::TrainMode::Staged;
  else if (args.mode == "super") plan.mode = staged::TrainMode::SuperBranch;
  else if (args.mode == "full") plan.mode = staged::TrainMode::FullBranch;
  else if (args.mode == "independent") plan.mode = staged::TrainMode::Independent;
  else fail(Errc::BadConfig, "unknown mode: " + args.mode);
  if (args.loss == "soft") plan.loss = staged::LossKind::SoftWeighted;
  else if (args.loss == "weighted") plan.loss = staged::LossKind::WeightedCe;
  else if (args.loss == "ce") plan.loss = staged::LossKind::StandardCe;
  else fail(Errc::BadConfig, "unknown loss: " + args.loss);
  plan.stage1_opt.base_lr = args.lr;
  plan.stage1_opt.head_lr_multiplier = args.head_lr_mult;
  plan.stage1_opt.momentum = args.momentum;
  plan.stage1_opt.power = args.power;
  plan.stage2_opt = plan.stage1_opt;

  echo_config("manifest=" + args.manifest + " taxonomy=" + args.taxonomy + " mode=" + args.mode +
              " seed=" + std::to_string(args.seed) +
              " stage1-iters=" + std::to_string(args.stage1_iters) +
              " stage2-iters=" + std::to_string(args.stage2_iters) + " lr=" + fmt6(args.lr) +
              " loss=" + args.loss + " channels=" + std::to_string(args.channels));

  Dataset data = load_manifest(args.manifest);
  staged::Taxonomy tax = staged::make_taxonomy(staged::read_taxonomy_file(args.taxonomy), data);
  staged::TrainOutcome outcome = staged::train(data, tax, plan);

  fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  if (outcome.nets.size() == 1) {
    tinynet::save_checkpoint(*outcome.nets[0], {}, (out_dir / "model.ckpt").string());
  } else {
    for (const auto& [cat, route] : outcome.route)
      tinynet::save_checkpoint(*outcome.nets[route.first], {},
                               (out_dir / ("model." + cat + ".ckpt")).string());
  }
  if (!outcome.stage1_log.empty())
    write_loss_log(outcome.stage1_log, (out_dir / "stage1.tsv").string());
  for (const auto& [cat, log] : outcome.stage2_logs)
    write_loss_log(log, (out_dir / ("stage2." + cat + ".tsv")).string());

  if (!args.test_manifest.empty()) {
    if (args.pred_dir.empty()) fail(Errc::BadConfig, "--pred-dir required with --test-manifest");
    fs::path pred_dir(args.pred_dir);
    fs::create_directories(pred_dir);
    std::vector<ManifestEntry> test_entries = read_manifest_entries(args.test_manifest);
    std::vector<ManifestEntry> pred_entries;
    std::map<std::string, int> counters;
    for (const ManifestEntry& e : test_entries) {
      GrayImage img = load_gray(e.image_path);
      LabelMap pred = staged::predict(outcome, e.category, img);
      int idx = counters[e.category]++;
      char name[64];
      std::snprintf(name, sizeof(name), "pred_%s_%05d.pgm", e.category.c_str(), idx);
      save_labels(pred, (pred_dir / name).string());
      pred_entries.push_back({e.image_path, (pred_dir / name).string(), e.category,
                              e.super_category});
    }
    write_manifest(pred_entries, (pred_dir / "manifest.tsv").string());
  }
  return 0;
}

// --- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string pred_manifest, gt_manifest;
  bool per_category = false;
  bool no_background = false;
};

int run_eval(const EvalArgs& args) {
  echo_config("pred-manifest=" + args.pred_manifest + " gt-manifest=" + args.gt_manifest);
  std::vector<ManifestEntry> pred_entries = read_manifest_entries(args.pred_manifest);
  std::vector<ManifestEntry> gt_entries = read_manifest_entries(args.gt_manifest);
  if (pred_entries.size() != gt_entries.size())
    fail(Errc::BadManifest, "prediction and ground-truth manifests differ in length");

  // Entries pair up by line order; class spaces unify per category.
  std::map<std::string, int> classes;
  std::vector<LabelMap> preds, gts;
  std::vector<std::string> cats;
  for (std::size_t i = 0; i < pred_entries.size(); ++i) {
    if (pred_entries[i].category != gt_entries[i].category)
      fail(Errc::BadManifest, "category mismatch at manifest line " + std::to_string(i + 1));
    LabelMap pred = load_labels(pred_entries[i].label_path, 256);
    LabelMap gt = load_labels(gt_entries[i].label_path, 256);
    int c = 1;
    for (std::uint8_t v : pred.data) c = std::max(c, v + 1);
    for (std::uint8_t v : gt.data) c = std::max(c, v + 1);
    int& cc = classes[pred_entries[i].category];
    cc = std::max(cc, c);
    preds.push_back(std::move(pred));
    gts.push_back(std::move(gt));
    cats.push_back(pred_entries[i].category);
  }
  std::map<std::string, std::vector<double>> per_cat;
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int c = classes[cats[i]];
    LabelMap pred(preds[i].width, preds[i].height, c, preds[i].data);
    LabelMap gt(gts[i].width, gts[i].height, c, gts[i].data);
    double score = sketch_iou(pred, gt, !args.no_background);
    total += score;
    per_cat[cats[i]].push_back(score);
  }
  std::string table;
  if (args.per_category) {
    table += "category\tsketches\tmean_iou\n";
    for (const auto& [cat, scores] : per_cat) {
      double s = 0.0;
      for (double v : scores) s += v;
      table += cat + "\t" + std::to_string(scores.size()) + "\t" +
               fmt6(s / static_cast<double>(scores.size())) + "\n";
    }
  }
  table += "average\t" + std::to_string(preds.size()) + "\t" +
           fmt6(total / static_cast<double>(preds.size())) + "\n";
  std::cout << table;
  return 0;
}

// --- render -----------------------------------------------------------------------

int run_render(const std::string& in, const std::string& out, int classes) {
  echo_config("in=" + in + " out=" + out);
  LabelMap labels = load_labels(in, classes);
  save_label_palette_png(labels, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketch segmentation toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "cap worker threads (0 = all cores)")
      ->capture_default_str();
  app.add_flag("--quiet", g_quiet, "suppress the resolved-config echo");

  HtArgs ht_args;
  auto* ht_cmd = app.add_subcommand("ht", "homogeneous transformation of stroke images");
  ht_cmd->add_option("--in", ht_args.in, "input image (PGM or PNG)");
  ht_cmd->add_option("--out", ht_args.out, "output image path");
  ht_cmd->add_option("--manifest", ht_args.manifest, "batch mode: dataset manifest");
  ht_cmd->add_option("--out-dir", ht_args.out_dir, "batch mode: output directory");
  ht_cmd->add_option("--threshold", ht_args.threshold, "binarization threshold")
      ->capture_default_str();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic sketch corpus");
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "output directory")->required();
  synth_cmd->add_option("--per-category", synth_args.per_category, "images per category")
      ->capture_default_str();
  synth_cmd->add_option("--canvas", synth_args.canvas, "canvas size in pixels")
      ->capture_default_str();
  synth_cmd->add_option("--thickness", synth_args.thickness, "stroke thickness")
      ->capture_default_str();
  synth_cmd->add_option("--jitter", synth_args.jitter, "geometric jitter multiplier")
      ->capture_default_str();
  synth_cmd->add_option("--minority-scale", synth_args.minority_scale,
                        "scale factor for the smallest parts")
      ->capture_default_str();

  AugmentArgs aug_args;
  auto* aug_cmd = app.add_subcommand("augment", "rotation/mirror/erase augmentation");
  aug_cmd->add_option("--manifest", aug_args.manifest, "dataset manifest")->required();
  aug_cmd->add_option("--out-dir", aug_args.out_dir, "output directory")->required();
  aug_cmd->add_option("--angles", aug_args.angles, "rotation angles in degrees")
      ->delimiter(',')
      ->capture_default_str();
  aug_cmd->add_flag("--no-mirror", aug_args.no_mirror, "disable mirroring");
  aug_cmd->add_option("--erase-size", aug_args.erase_size, "erased window size")
      ->capture_default_str();
  aug_cmd->add_option("--erase-count", aug_args.erase_count, "erased copies per variant")
      ->capture_default_str();

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "per-class pixel statistics and weights");
  stats_cmd->add_option("--manifest", stats_args.manifest, "dataset manifest")->required();
  stats_cmd->add_option("--classes", stats_args.classes, "class count")->required();
  stats_cmd->add_option("--bg-boost", stats_args.bg_boost, "background weight multiplier")
      ->capture_default_str();
  stats_cmd->add_option("--out", stats_args.out, "also write the table to this file");

  int loss_cases = 100;
  auto* loss_cmd = app.add_subcommand("loss-check", "finite-difference gradient check");
  loss_cmd->add_option("--cases", loss_cases, "number of random cases")->capture_default_str();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a parser on a manifest");
  train_cmd->add_option("--manifest", train_args.manifest, "training manifest")->required();
  train_cmd->add_option("--taxonomy", train_args.taxonomy, "taxonomy file")->required();
  train_cmd->add_option("--mode", train_args.mode, "staged|super|full|independent")
      ->capture_default_str();
  train_cmd->add_option("--out", train_args.out_dir, "checkpoint/log directory")->required();
  train_cmd->add_option("--stage1-iters", train_args.stage1_iters, "stage-1 iterations")
      ->capture_default_str();
  train_cmd->add_option("--stage2-iters", train_args.stage2_iters,
                        "stage-2 iterations per category")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_args.lr, "base learning rate")->capture_default_str();
  train_cmd->add_option("--head-lr-mult", train_args.head_lr_mult,
                        "LR multiplier for final logit layers")
      ->capture_default_str();
  train_cmd->add_option("--momentum", train_args.momentum, "SGD momentum")
      ->capture_default_str();
  train_cmd->add_option("--power", train_args.power, "polynomial decay exponent")
      ->capture_default_str();
  train_cmd->add_option("--loss", train_args.loss, "soft|weighted|ce")->capture_default_str();
  train_cmd->add_option("--bg-boost", train_args.bg_boost, "background weight multiplier")
      ->capture_default_str();
  train_cmd->add_option("--channels", train_args.channels, "conv channel width")
      ->capture_default_str();
  train_cmd->add_option("--trunk-layers", train_args.trunk_layers, "trunk depth")
      ->capture_default_str();
  train_cmd->add_option("--head-layers", train_args.head_layers, "head depth")
      ->capture_default_str();
  train_cmd->add_option("--test-manifest", train_args.test_manifest,
                        "write predictions for this manifest");
  train_cmd->add_option("--pred-dir", train_args.pred_dir, "prediction output directory");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "IOU evaluation of predictions");
  eval_cmd->add_option("--pred-manifest", eval_args.pred_manifest, "predicted label maps")
      ->required();
  eval_cmd->add_option("--gt-manifest", eval_args.gt_manifest, "ground-truth label maps")
      ->required();
  eval_cmd->add_flag("--per-category", eval_args.per_category, "print per-category rows");
  eval_cmd->add_flag("--no-background", eval_args.no_background,
                     "exclude class 0 from per-sketch label sets");

  std::string render_in, render_out;
  int render_classes = 256;
  auto* render_cmd = app.add_subcommand("render", "palette visualization of a label map");
  render_cmd->add_option("--in", render_in, "label map (PGM)")->required();
  render_cmd->add_option("--out", render_out, "output PNG")->required();
  render_cmd->add_option("--classes", render_classes, "class count")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  tinynet::set_threads(threads);
  synth_args.seed = seed;
  aug_args.seed = seed;
  train_args.seed = seed;
  if (!g_quiet)
    std::cerr << "config: seed=" << seed << " threads=" << tinynet::threads() << "\n";

  try {
    if (ht_cmd->parsed()) {
      if (ht_args.in.empty() == ht_args.manifest.empty()) {
        std::cerr << "ht: need either --in/--out or --manifest/--out-dir\n";
        return 1;
      }
      if (!ht_args.in.empty() && ht_args.out.empty()) {
        std::cerr << "ht: --out required with --in\n";
        return 1;
      }
      if (!ht_args.manifest.empty() && ht_args.out_dir.empty()) {
        std::cerr << "ht: --out-dir required with --manifest\n";
        return 1;
      }
      return run_ht(ht_args);
    }
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (aug_cmd->parsed()) return run_augment(aug_args);
    if (stats_cmd->parsed()) return run_stats(stats_args);
    if (loss_cmd->parsed()) return run_loss_check(seed, loss_cases);
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (render_cmd->parsed()) return run_render(render_in, render_out, render_classes);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
