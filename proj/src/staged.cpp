#include "sketchseg/staged.hpp"

#include <algorithm>
#include <fstream>

#include "sketchseg/metrics.hpp"
#include "sketchseg/rng.hpp"

namespace sketchseg {
namespace staged {

std::vector<std::string> Taxonomy::categories_in_order() const {
  std::vector<std::string> cats;
  for (const auto& [super, subs] : supers)
    for (const std::string& c : subs) cats.push_back(c);
  return cats;
}

std::vector<std::pair<std::string, std::vector<std::string>>> read_taxonomy_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot open taxonomy: " + path);
  std::vector<std::pair<std::string, std::vector<std::string>>> supers;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      fail(Errc::BadTaxonomy, path + ":" + std::to_string(line_no) + ": expected TAB separator");
    std::string super = line.substr(0, tab);
    std::vector<std::string> cats;
    std::string rest = line.substr(tab + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      std::size_t comma = rest.find(',', start);
      std::string cat = rest.substr(start, comma == std::string::npos ? comma : comma - start);
      if (cat.empty())
        fail(Errc::BadTaxonomy, path + ":" + std::to_string(line_no) + ": empty category name");
      cats.push_back(cat);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    supers.emplace_back(std::move(super), std::move(cats));
  }
  return supers;
}

void write_taxonomy_file(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& supers,
    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot write taxonomy: " + path);
  for (const auto& [super, cats] : supers) {
    out << super << '\t';
    for (std::size_t i = 0; i < cats.size(); ++i) out << (i ? "," : "") << cats[i];
    out << '\n';
  }
  if (!out) fail(Errc::IoFailure, "taxonomy write failed: " + path);
}

Taxonomy make_taxonomy(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& supers,
    const Dataset& data) {
  Taxonomy tax;
  tax.supers = supers;
  for (const auto& [super, cats] : supers) {
    if (cats.empty()) fail(Errc::BadTaxonomy, "super-category " + super + " has no categories");
    for (const std::string& cat : cats) {
      if (tax.super_of.count(cat))
        fail(Errc::BadTaxonomy, "category " + cat + " appears in two super-categories");
      tax.super_of[cat] = super;
    }
  }
  for (const std::string& cat : data.categories()) {
    if (!tax.super_of.count(cat))
      fail(Errc::BadTaxonomy, "category " + cat + " missing from taxonomy");
    tax.category_classes[cat] = data.classes_for(cat);
  }
  for (const auto& [super, cats] : supers) {
    int width = 1;
    for (const std::string& cat : cats) {
      auto it = tax.category_classes.find(cat);
      if (it != tax.category_classes.end()) width = std::max(width, it->second);
    }
    tax.super_classes[super] = width;
  }
  return tax;
}

namespace {

ClassStats uniform_stats(int classes) {
  ClassStats stats;
  stats.classes = classes;
  stats.t.assign(classes, 0);
  stats.n.assign(classes, 0);
  stats.phi.assign(classes, 0.0);
  stats.median = 0.0;
  stats.alpha.assign(classes, 1.0);
  return stats;
}

SoftTarget one_hot_targets(const LabelMap& labels) {
  SoftTarget t;
  t.width = labels.width;
  t.height = labels.height;
  t.classes = labels.classes;
  t.gt = labels.data;
  t.soft_index.assign(labels.data.size(), -1);
  return t;
}

// Widens a label map's class space without touching its indices, so category
// labels can be scored or trained against a super branch's wider head.
LabelMap widen_labels(const LabelMap& labels, int classes) {
  if (classes == labels.classes) return labels;
  return LabelMap(labels.width, labels.height, classes, labels.data);
}

struct BranchData {
  std::string branch;
  int classes = 0;
  std::vector<std::size_t> item_indices;
  ClassStats stats;
  std::vector<SoftTarget> targets;  // parallel to item_indices
};

// Precomputes per-branch statistics and targets in the branch's class space.
std::map<std::string, BranchData> prepare_branches(
    const Dataset& data, const std::map<std::string, std::string>& branch_of_category,
    const std::map<std::string, int>& branch_classes, const StagedPlan& plan) {
  std::map<std::string, BranchData> branches;
  for (const auto& [branch, classes] : branch_classes) {
    branches[branch].branch = branch;
    branches[branch].classes = classes;
  }
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    auto it = branch_of_category.find(data.items[i].category);
    if (it == branch_of_category.end())
      fail(Errc::BadTaxonomy, "category " + data.items[i].category + " has no branch");
    branches[it->second].item_indices.push_back(i);
  }
  for (auto& [branch, bd] : branches) {
    if (bd.item_indices.empty()) continue;
    std::vector<LabelMap> widened;
    widened.reserve(bd.item_indices.size());
    for (std::size_t idx : bd.item_indices)
      widened.push_back(widen_labels(data.items[idx].labels, bd.classes));
    if (plan.loss == LossKind::StandardCe) {
      bd.stats = uniform_stats(bd.classes);
    } else {
      std::vector<const LabelMap*> ptrs;
      for (const LabelMap& m : widened) ptrs.push_back(&m);
      bd.stats = collect_stats(ptrs, bd.classes);
      if (plan.background_boost != 1.0)
        bd.stats = apply_background_boost(bd.stats, plan.background_boost);
    }
    bd.targets.reserve(widened.size());
    for (const LabelMap& m : widened)
      bd.targets.push_back(plan.loss == LossKind::SoftWeighted ? compute_soft_targets(m)
                                                               : one_hot_targets(m));
  }
  return branches;
}

// Seeded shuffled pass over a category's items, reshuffled per epoch.
class ItemCursor {
 public:
  ItemCursor(std::size_t count, std::uint64_t seed, std::uint64_t stream)
      : count_(count), seed_(seed), stream_(stream) {
    reshuffle();
  }

  std::size_t next() {
    if (pos_ == order_.size()) {
      ++epoch_;
      reshuffle();
    }
    return order_[pos_++];
  }

 private:
  void reshuffle() {
    order_.resize(count_);
    for (std::size_t i = 0; i < count_; ++i) order_[i] = i;
    Rng rng = stream_rng(seed_, stream_, static_cast<std::uint64_t>(epoch_));
    for (std::size_t i = count_; i > 1; --i)
      std::swap(order_[i - 1], order_[rng.next_below(i)]);
    pos_ = 0;
  }

  std::size_t count_;
  std::uint64_t seed_, stream_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

// Joint training loop shared by stage 1 and the shared-trunk baselines: a
// round-robin over categories, each category visiting its items in seeded
// shuffled order, every sample routed to its category's branch.
void train_joint(const Dataset& data, const std::vector<std::string>& categories,
                 const std::map<std::string, std::string>& branch_of_category,
                 const std::map<std::string, int>& branch_classes, const StagedPlan& plan,
                 const tinynet::OptimConfig& opt_config, int iterations, std::uint64_t seed_tag,
                 tinynet::BranchNet& net, LossLog* log) {
  if (iterations == 0) return;
  std::map<std::string, BranchData> branches =
      prepare_branches(data, branch_of_category, branch_classes, plan);

  struct CatState {
    const BranchData* branch;
    std::vector<std::size_t> local;  // positions into branch->item_indices
    ItemCursor cursor;
  };
  std::vector<CatState> cats;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const std::string& cat = categories[c];
    const BranchData& bd = branches.at(branch_of_category.at(cat));
    std::vector<std::size_t> local;
    for (std::size_t i = 0; i < bd.item_indices.size(); ++i)
      if (data.items[bd.item_indices[i]].category == cat) local.push_back(i);
    if (local.empty()) fail(Errc::EmptyDataset, "no training items for category " + cat);
    const std::size_t count = local.size();
    cats.push_back({&bd, std::move(local), ItemCursor(count, plan.seed, hash_stream(seed_tag, c))});
  }

  tinynet::OptimState opt;
  opt.config = opt_config;
  opt.config.max_iter = iterations;
  for (int iter = 0; iter < iterations; ++iter) {
    CatState& cs = cats[iter % cats.size()];
    const BranchData& bd = *cs.branch;
    std::size_t local_idx = cs.local[cs.cursor.next()];
    std::size_t item_idx = bd.item_indices[local_idx];
    const DataItem& item = data.items[item_idx];
    tinynet::BackwardResult grads =
        tinynet::backward(net, bd.branch, item.image, bd.targets[local_idx], bd.stats);
    tinynet::sgd_step(net, bd.branch, grads, opt);
    if (log) log->emplace_back(iter, grads.loss);
  }
}

}  // namespace

tinynet::BranchNet train_stage1(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan,
                                tinynet::BranchNet net, LossLog* log) {
  std::map<std::string, std::string> branch_of;
  for (const auto& [cat, super] : tax.super_of) branch_of[cat] = super;
  train_joint(data, tax.categories_in_order(), branch_of, tax.super_classes, plan,
              plan.stage1_opt, plan.stage1_iters, hash_stream(plan.seed, 1), net, log);
  return net;
}

tinynet::BranchNet train_stage2(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan,
                                tinynet::BranchNet net,
                                std::map<std::string, LossLog>* logs) {
  net.freeze_trunk();

  // Replace each super head with one copy per sub-category, keeping the
  // shared class slots of the final logit layer.
  std::map<std::string, std::vector<tinynet::ConvLayer>> category_heads;
  for (const auto& [super, cats] : tax.supers) {
    auto it = net.branches.find(super);
    if (it == net.branches.end()) fail(Errc::UnknownBranch, "missing super head: " + super);
    for (const std::string& cat : cats) {
      auto cc = tax.category_classes.find(cat);
      if (cc == tax.category_classes.end()) continue;  // category absent from data
      std::vector<tinynet::ConvLayer> head = it->second;
      tinynet::ConvLayer& logit = head.back();
      const int want = cc->second;
      if (want < logit.out_channels) {
        const std::size_t row = static_cast<std::size_t>(logit.in_channels) * 9;
        logit.weights.v.resize(static_cast<std::size_t>(want) * row);
        logit.bias.v.resize(want);
        logit.out_channels = want;
      }
      category_heads[cat] = std::move(head);
    }
  }
  net.branches = std::move(category_heads);

  std::vector<std::string> cats = tax.categories_in_order();
  for (std::size_t c = 0; c < cats.size(); ++c) {
    const std::string& cat = cats[c];
    if (!net.branches.count(cat)) continue;
    StagedPlan sub_plan = plan;
    sub_plan.seed = hash_stream(plan.seed, 2, c);
    std::map<std::string, std::string> branch_of{{cat, cat}};
    std::map<std::string, int> classes{{cat, tax.category_classes.at(cat)}};
    LossLog* log = logs ? &(*logs)[cat] : nullptr;
    train_joint(data, {cat}, branch_of, classes, sub_plan, plan.stage2_opt, plan.stage2_iters,
                hash_stream(plan.seed, 3, c), net, log);
  }
  return net;
}

TrainOutcome train_baseline(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan,
                            TrainMode mode) {
  TrainOutcome out;
  std::vector<std::string> cats = tax.categories_in_order();
  if (mode == TrainMode::Independent) {
    for (std::size_t c = 0; c < cats.size(); ++c) {
      const std::string& cat = cats[c];
      if (!tax.category_classes.count(cat)) continue;
      std::map<std::string, int> branch_classes{{cat, tax.category_classes.at(cat)}};
      tinynet::ArchSpec arch = tinynet::default_arch(branch_classes, plan.channels,
                                                     plan.trunk_layers, plan.head_layers);
      tinynet::BranchNet net = tinynet::init_net(arch, hash_stream(plan.seed, 10, c));
      StagedPlan sub_plan = plan;
      sub_plan.seed = hash_stream(plan.seed, 11, c);
      std::map<std::string, std::string> branch_of{{cat, cat}};
      train_joint(data, {cat}, branch_of, branch_classes, sub_plan, plan.stage1_opt,
                  plan.stage1_iters, hash_stream(plan.seed, 12, c), net, nullptr);
      out.nets.push_back(std::make_shared<tinynet::BranchNet>(std::move(net)));
      out.route[cat] = {out.nets.size() - 1, cat};
    }
    return out;
  }

  std::map<std::string, std::string> branch_of;
  std::map<std::string, int> branch_classes;
  if (mode == TrainMode::FullBranch) {
    for (const std::string& cat : cats) {
      if (!tax.category_classes.count(cat)) continue;
      branch_of[cat] = cat;
      branch_classes[cat] = tax.category_classes.at(cat);
    }
  } else {  // SuperBranch
    for (const auto& [cat, super] : tax.super_of)
      if (tax.category_classes.count(cat)) branch_of[cat] = super;
    branch_classes = tax.super_classes;
  }
  tinynet::ArchSpec arch =
      tinynet::default_arch(branch_classes, plan.channels, plan.trunk_layers, plan.head_layers);
  tinynet::BranchNet net = tinynet::init_net(arch, plan.seed);
  train_joint(data, cats, branch_of, branch_classes, plan, plan.stage1_opt, plan.stage1_iters,
              hash_stream(plan.seed, 1), net, &out.stage1_log);
  out.nets.push_back(std::make_shared<tinynet::BranchNet>(std::move(net)));
  for (const auto& [cat, branch] : branch_of) out.route[cat] = {0, branch};
  return out;
}

TrainOutcome train(const Dataset& data, const Taxonomy& tax, const StagedPlan& plan) {
  if (plan.mode != TrainMode::Staged) return train_baseline(data, tax, plan, plan.mode);
  if (plan.stage1_iters <= 0 || plan.stage2_iters <= 0)
    fail(Errc::BadConfig, "staged mode requires positive iteration counts for both stages");

  TrainOutcome out;
  tinynet::ArchSpec arch =
      tinynet::default_arch(tax.super_classes, plan.channels, plan.trunk_layers, plan.head_layers);
  tinynet::BranchNet net = tinynet::init_net(arch, plan.seed);
  net = train_stage1(data, tax, plan, std::move(net), &out.stage1_log);
  net = train_stage2(data, tax, plan, std::move(net), &out.stage2_logs);
  out.nets.push_back(std::make_shared<tinynet::BranchNet>(std::move(net)));
  for (const std::string& cat : tax.categories_in_order())
    if (tax.category_classes.count(cat)) out.route[cat] = {0, cat};
  return out;
}

LabelMap predict(const TrainOutcome& model, const std::string& category, const GrayImage& img) {
  auto it = model.route.find(category);
  if (it == model.route.end()) fail(Errc::UnknownBranch, "no route for category: " + category);
  const auto& [net_idx, branch] = it->second;
  LogitGrid logits = tinynet::forward(*model.nets[net_idx], branch, img);
  LabelMap pred(img.width, img.height, logits.classes, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::span<const double> px = logits.pixel(x, y);
      int best = 0;
      for (int c = 1; c < logits.classes; ++c)
        if (px[c] > px[best]) best = c;
      pred.at(x, y) = static_cast<std::uint8_t>(best);
    }
  }
  return pred;
}

EvalResult evaluate(const TrainOutcome& model, const Dataset& test_data) {
  if (test_data.items.empty()) fail(Errc::EmptyDataset, "empty test set");
  EvalResult result;
  std::map<std::string, std::vector<double>> per_cat_scores;
  std::map<std::string, std::vector<std::vector<double>>> per_cat_class;  // [cat][class] samples
  double total = 0.0;
  for (const DataItem& item : test_data.items) {
    LabelMap pred = predict(model, item.category, item.image);
    LabelMap gt = pred.classes == item.labels.classes
                      ? item.labels
                      : LabelMap(item.labels.width, item.labels.height, pred.classes,
                                 item.labels.data);
    double score = sketch_iou(pred, gt);
    total += score;
    per_cat_scores[item.category].push_back(score);

    ConfusionCounts counts = confusion(pred, gt);
    auto& rows = per_cat_class[item.category];
    if (rows.empty()) rows.resize(gt.classes);
    for (int c = 0; c < gt.classes; ++c) {
      std::optional<double> iou = class_iou(counts, c);
      if (iou) rows[c].push_back(*iou);
    }
  }
  result.average_iou = total / static_cast<double>(test_data.items.size());
  for (const auto& [cat, scores] : per_cat_scores) {
    double s = 0.0;
    for (double v : scores) s += v;
    result.per_category[cat] = s / static_cast<double>(scores.size());
  }
  for (const auto& [cat, rows] : per_cat_class) {
    std::vector<double> means;
    for (const auto& samples : rows) {
      if (samples.empty()) {
        means.push_back(0.0);
        continue;
      }
      double s = 0.0;
      for (double v : samples) s += v;
      means.push_back(s / static_cast<double>(samples.size()));
    }
    result.class_iou_by_category[cat] = std::move(means);
  }
  return result;
}

}  // namespace staged
}  // namespace sketchseg
