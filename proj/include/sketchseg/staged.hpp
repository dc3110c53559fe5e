#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sketchseg/raster.hpp"
#include "sketchseg/tinynet.hpp"

namespace sketchseg {
namespace staged {

// Category/super-category structure plus per-branch class spaces. Class slots
// are positional: class i of a sub-category maps to slot i of its super
// branch, whose width is the maximum over its sub-categories.
struct Taxonomy {
  std::vector<std::pair<std::string, std::vector<std::string>>> supers;  // file order
  std::map<std::string, std::string> super_of;
  std::map<std::string, int> category_classes;
  std::map<std::string, int> super_classes;

  std::vector<std::string> categories_in_order() const;
};

// Lines: super-name<TAB>category[,category...]; '#' comments ignored.
std::vector<std::pair<std::string, std::vector<std::string>>> read_taxonomy_file(
    const std::string& path);
void write_taxonomy_file(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& supers,
    const std::string& path);

// Validates the partition property and derives class spaces from the dataset.
Taxonomy make_taxonomy(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& supers,
    const Dataset& data);

enum class TrainMode { Independent, FullBranch, SuperBranch, Staged };
enum class LossKind { StandardCe, WeightedCe, SoftWeighted };

struct StagedPlan {
  int stage1_iters = 2000;
  int stage2_iters = 200;  // per category
  TrainMode mode = TrainMode::Staged;
  LossKind loss = LossKind::SoftWeighted;
  double background_boost = 1.0;
  std::uint64_t seed = 0;
  tinynet::OptimConfig stage1_opt{};
  tinynet::OptimConfig stage2_opt{};
  // Net shape for the desk-scale experiments (kept narrow so the full
  // benchmark fits a single-core CPU budget).
  int channels = 8;
  int trunk_layers = 4;
  int head_layers = 2;
};

using LossLog = std::vector<std::pair<int, double>>;

// A trained parser: categories route to (net, branch). Shared-trunk modes hold
// one net; independent mode holds one per category.
struct TrainOutcome {
  std::vector<std::shared_ptr<tinynet::BranchNet>> nets;
  std::map<std::string, std::pair<std::size_t, std::string>> route;
  LossLog stage1_log;
  std::map<std::string, LossLog> stage2_logs;
};

// Stage 1: trunk and super-category heads trained jointly; every sample is
// routed to its super-category's head, drawn in a seeded shuffled round-robin
// over categories. `net` must have one head per super-category.
tinynet::BranchNet train_stage1(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan,
                                tinynet::BranchNet net, LossLog* log = nullptr);

// Stage 2: freezes the trunk, replaces each super head with per-category
// copies (shared class slots copied, spare slots dropped), then fine-tunes
// each category head on its own data with fresh optimizer state.
tinynet::BranchNet train_stage2(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan,
                                tinynet::BranchNet net,
                                std::map<std::string, LossLog>* logs = nullptr);

// Baselines: Independent trains one isolated net per category; FullBranch a
// shared trunk with one head per category; SuperBranch a shared trunk with one
// head per super-category. Every baseline follows the stage-1 recipe for
// stage1_iters steps; independent nets each get the full budget on their own
// category's data.
TrainOutcome train_baseline(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan,
                            TrainMode mode);

// Dispatches on plan.mode.
TrainOutcome train(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan);

// Argmax prediction for one image, in the routed branch's class space.
LabelMap predict(const TrainOutcome& model, const std::string& category, const GrayImage& img);

struct EvalResult {
  double average_iou = 0.0;                          // over all test sketches
  std::map<std::string, double> per_category;        // mean sketch IOU
  std::map<std::string, std::vector<double>> class_iou_by_category;  // mean per-class IOU
};

EvalResult evaluate(const TrainOutcome& model, const Dataset& test_data);

}  // namespace staged
}  // namespace sketchseg
