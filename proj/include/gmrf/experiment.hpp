#ifndef GMRF_EXPERIMENT_HPP_
#define GMRF_EXPERIMENT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "gmrf/config.hpp"
#include "gmrf/error.hpp"
#include "gmrf/features.hpp"
#include "gmrf/net.hpp"
#include "gmrf/preprocess.hpp"
#include "gmrf/scene.hpp"
#include "gmrf/train.hpp"

namespace gmrf {

// ---------------------------------------------------------------------------
// Keyframes and actions

struct KeyframePolicy {
  double fps = 20.0;
  double interval_s = 3.0;
};

/// 0, k, 2k, ... below total_frames with k = round(fps * interval_s).
inline std::vector<long long> keyframe_indices(const KeyframePolicy& policy, long long total_frames) {
  detail::require(std::isfinite(policy.fps) && policy.fps > 0.0, "keyframes.fps", "fps must be > 0");
  detail::require(std::isfinite(policy.interval_s) && policy.interval_s > 0.0, "keyframes.interval",
                  "interval must be > 0");
  detail::require(total_frames >= 0, "keyframes.total", "total frame count must be >= 0");
  const long long stride = std::llround(policy.fps * policy.interval_s);
  detail::require(stride >= 1, "keyframes.stride", "fps * interval rounds to zero frames");
  std::vector<long long> out;
  for (long long i = 0; i < total_frames; i += stride) out.push_back(i);
  return out;
}

inline constexpr std::array<std::string_view, kSceneClassCount> kSceneActions = {
    "greet_occupants", "check_supplies", "dim_lights", "assist_cooking", "follow_person"};

inline std::string_view label_to_action(int class_id) {
  detail::require(class_id >= 0 && class_id < kSceneClassCount, "action.class", "scene class must be 0..4");
  return kSceneActions[static_cast<std::size_t>(class_id)];
}

// ---------------------------------------------------------------------------
// Synthetic experiment

/// Experiment settings. Keys of the config file are the member names.
struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<int> sizes{20, 30};
  std::vector<int> noise_levels{1, 2, 3};
  int trials = 1;
  int images_per_class = 40;
  double test_fraction = 0.2;
  bool equalize = true;
  /// Scenes are drawn this many pixels larger and trained on their five
  /// crops; evaluation uses the center crop. 0 disables augmentation.
  int augment_pad = 0;
  bool feature_selection = false;
  double selection_threshold = 0.9;
  int epochs = 20;
  double learning_rate = 0.05;
  int batch_size = 25;
  double margin = kDefaultMargin;
  std::vector<double> loss_weights{1.0, 1.0};
  int per_anchor = 1;

  void validate() const {
    detail::require(!sizes.empty() && !noise_levels.empty(), "config.grid", "sizes and noise_levels must be non-empty");
    for (int s : sizes) detail::require(s >= 10 && s <= 512, "config.sizes", "sizes must lie in 10..512");
    for (int n : noise_levels) detail::require(n >= 1 && n <= 3, "config.noise_levels", "noise levels must be 1..3");
    detail::require(trials >= 1, "config.trials", "trials must be >= 1");
    detail::require(images_per_class >= 1, "config.images_per_class", "images_per_class must be >= 1");
    detail::require(test_fraction > 0.0 && test_fraction < 1.0, "config.test_fraction", "test_fraction must lie in (0, 1)");
    detail::require(augment_pad >= 0 && augment_pad <= 64, "config.augment_pad", "augment_pad must lie in 0..64");
    detail::require(selection_threshold > 0.0 && selection_threshold <= 1.0, "config.selection_threshold",
                    "selection_threshold must lie in (0, 1]");
    LossWeights{loss_weights};
    detail::require(loss_weights.size() == 2, "config.loss_weights", "loss_weights takes two values");
    train_config(0).validate();
  }

  TrainConfig train_config(std::uint64_t train_seed) const {
    return {.epochs = epochs, .learning_rate = learning_rate, .batch_size = batch_size, .seed = train_seed,
            .margin = margin, .per_anchor = per_anchor, .augment_crop = 0};
  }

  /// Reads every key, rejecting unknown ones, and validates the result.
  static RunConfig from_config(KeyValueConfig& kv) {
    RunConfig c;
    c.seed = kv.get_u64("seed", c.seed);
    c.sizes = kv.get_int_list("sizes", c.sizes);
    c.noise_levels = kv.get_int_list("noise_levels", c.noise_levels);
    c.trials = static_cast<int>(kv.get_int("trials", c.trials));
    c.images_per_class = static_cast<int>(kv.get_int("images_per_class", c.images_per_class));
    c.test_fraction = kv.get_double("test_fraction", c.test_fraction);
    c.equalize = kv.get_bool("equalize", c.equalize);
    c.augment_pad = static_cast<int>(kv.get_int("augment_pad", c.augment_pad));
    c.feature_selection = kv.get_bool("feature_selection", c.feature_selection);
    c.selection_threshold = kv.get_double("selection_threshold", c.selection_threshold);
    c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
    c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
    c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
    c.margin = kv.get_double("margin", c.margin);
    c.loss_weights = kv.get_double_list("loss_weights", c.loss_weights);
    c.per_anchor = static_cast<int>(kv.get_int("per_anchor", c.per_anchor));
    kv.reject_unused();
    c.validate();
    return c;
  }
};

/// Sizes 20-30 are level 1, 40-50 level 2, ..., 100 and above level 5.
inline int game_level(int input_size) { return std::clamp((input_size - 20) / 20 + 1, 1, 5); }

struct ExperimentRow {
  int game_level = 1;
  int input_size = 0;
  int feature_complexity = 1;
  int noise_level = 1;
  int trial = 0;
  double accuracy = 0.0;
  std::size_t train_images = 0;
  std::size_t test_images = 0;
  int selected_features = -1;  // -1 when selection is disabled
  std::vector<double> loss_trace;
};

struct ExperimentFailure {
  std::string kind;
  std::string message;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;  // sorted by (input_size, noise_level, trial)
  std::optional<ExperimentFailure> failure;
};

inline constexpr std::string_view kReportHeader =
    "game_level,input_size,feature_complexity,noise_level,accuracy,robustness_error";

/// Deviations d_i = |acc_i - mean| over one level's rows, printed as
/// "mean(d)±(max(d)-min(d))/2" with two decimals.
inline std::string robustness_error(const std::vector<double>& accuracies) {
  detail::require(!accuracies.empty(), "report.empty", "no accuracies for this level");
  double mean = 0.0;
  for (double a : accuracies) mean += a;
  mean /= static_cast<double>(accuracies.size());
  double dsum = 0.0, dmin = INFINITY, dmax = 0.0;
  for (double a : accuracies) {
    const double d = std::abs(a - mean);
    dsum += d;
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f\xC2\xB1%.2f", dsum / static_cast<double>(accuracies.size()),
                (dmax - dmin) / 2.0);
  return buf;
}

/// Report CSV, one row per cell. Every row carries its level's robustness error. A
/// failed run ends with a "#failed,<kind>,<message>" line.
inline void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  std::map<int, std::vector<double>> by_level;
  for (const ExperimentRow& r : report.rows) by_level[r.game_level].push_back(r.accuracy);
  std::map<int, std::string> robustness;
  for (const auto& [level, accs] : by_level) robustness[level] = robustness_error(accs);
  out << kReportHeader << '\n';
  char buf[160];
  for (const ExperimentRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%d,%d*%d,%d,%d,%.2f,", r.game_level, r.input_size, r.input_size,
                  r.feature_complexity, r.noise_level, r.accuracy);
    out << buf << robustness[r.game_level] << '\n';
  }
  if (report.failure) out << "#failed," << report.failure->kind << ',' << report.failure->message << '\n';
}

namespace detail {

inline std::vector<int> nonconstant_columns(const Matrix& m) {
  std::vector<int> keep;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t r = 1; r < m.rows(); ++r) {
      if (m(r, c) != m(0, c)) {
        keep.push_back(static_cast<int>(c));
        break;
      }
    }
  }
  return keep;
}

/// Feature selection over the training images; returns the number of
/// representatives. Constant features are dropped before clustering.
inline int selected_feature_count(const Dataset& train, double threshold) {
  if (train.size() < 2) return 0;
  std::vector<std::vector<double>> rows;
  for (const Image& img : train.images) rows.push_back(extract_features(img));
  Matrix all(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) all(r, c) = rows[r][c];
  const auto keep = nonconstant_columns(all);
  if (keep.size() < 2) return static_cast<int>(keep.size());
  Matrix kept(rows.size(), keep.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < keep.size(); ++c) kept(r, c) = all(r, static_cast<std::size_t>(keep[c]));
  return static_cast<int>(cluster_and_select(kept, threshold).selected.size());
}

}  // namespace detail

/// One (size, noise, trial) cell: generate, preprocess, split, train, score.
inline ExperimentRow run_cell(const RunConfig& cfg, int size, int noise, int trial) {
  const auto s = static_cast<std::uint64_t>(size), n = static_cast<std::uint64_t>(noise),
             t = static_cast<std::uint64_t>(trial);
  const std::uint64_t data_seed = detail::mix_seed({cfg.seed, s, n, t, 1});
  const int per_class = cfg.images_per_class;
  const int n_test = std::clamp(static_cast<int>(std::lround(per_class * cfg.test_fraction)), 1, per_class);
  const int drawn = size + cfg.augment_pad;

  Dataset train_set, test_set;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < kSceneClassCount; ++c) {
      Image img = gen_scene(c, drawn, noise, detail::mix_seed({data_seed, static_cast<std::uint64_t>(i)}));
      if (cfg.equalize) img = equalize(img);
      Dataset& dst = i < per_class - n_test ? train_set : test_set;
      dst.images.push_back(std::move(img));
      dst.labels.push_back(c);
    }
  }

  ExperimentRow row;
  row.game_level = game_level(size);
  row.input_size = size;
  row.noise_level = noise;
  row.trial = trial;
  row.train_images = train_set.size();
  row.test_images = test_set.size();
  if (cfg.feature_selection) row.selected_features = detail::selected_feature_count(train_set, cfg.selection_threshold);

  NetSpec net = make_default_net(size, detail::mix_seed({cfg.seed, s, n, t, 2}));
  if (train_set.size() > 0) {
    TrainConfig tc = cfg.train_config(detail::mix_seed({cfg.seed, s, n, t, 3}));
    tc.augment_crop = cfg.augment_pad > 0 ? size : 0;
    TrainResult tr = train(std::move(net), train_set, tc, LossWeights(cfg.loss_weights));
    net = std::move(tr.net);
    row.loss_trace = std::move(tr.loss_trace);
  }
  row.accuracy = evaluate(net, test_set).accuracy;
  return row;
}

/// Runs every cell in (size, noise, trial) order. A library error stops the
/// run and is recorded in `failure`; completed rows are kept.
inline ExperimentReport run_experiment(const RunConfig& cfg) {
  cfg.validate();
  std::vector<int> sizes = cfg.sizes, noises = cfg.noise_levels;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  std::sort(noises.begin(), noises.end());
  noises.erase(std::unique(noises.begin(), noises.end()), noises.end());

  ExperimentReport report;
  try {
    for (int size : sizes)
      for (int noise : noises)
        for (int trial = 0; trial < cfg.trials; ++trial) report.rows.push_back(run_cell(cfg, size, noise, trial));
  } catch (const Error& e) {
    report.failure = ExperimentFailure{e.kind(), e.what()};
  }
  return report;
}

}  // namespace gmrf

#endif  // GMRF_EXPERIMENT_HPP_
