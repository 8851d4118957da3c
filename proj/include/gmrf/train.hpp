#ifndef GMRF_TRAIN_HPP_
#define GMRF_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/image.hpp"
#include "gmrf/net.hpp"
#include "gmrf/triplet.hpp"

namespace gmrf {

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
};

/// Batch objective. The default is a_1 * mean triplet loss + a_2 * mean
/// cross-entropy; `squared_error` switches to a_1 * mean 0.5*|scores - onehot|^2.
struct Objective {
  LossWeights weights;
  double margin = kDefaultMargin;
  bool squared_error = false;

  void validate() const {
    detail::require(margin > 0.0, "loss.margin", "margin must be > 0");
    detail::require(weights.size() == (squared_error ? 1u : 2u), "loss.weights",
                    squared_error ? "squared loss takes one weight" : "triplet + cross-entropy loss takes two weights");
  }
};

struct Batch {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  std::vector<Triplet> triplets;  // indices into inputs
};

struct BatchEvaluation {
  double loss = 0.0;
  std::vector<double> terms;
  std::vector<double> gradient;  // empty unless requested
  std::vector<ForwardCache> caches;
};

namespace detail {

/// Relu masks, max-pool winners and active hinges: the piecewise-linear
/// regime a parameter vector sits in.
inline std::vector<std::uint64_t> regime_signature(const NetSpec& net, const BatchEvaluation& ev,
                                                   const Batch& batch, double margin) {
  std::vector<std::uint64_t> sig;
  for (const ForwardCache& c : ev.caches) {
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
      if (net.layers[k].kind == LayerKind::kRelu) {
        for (double v : c.acts[k]) sig.push_back(v > 0.0);
      } else if (net.layers[k].kind == LayerKind::kPool && net.layers[k].pool == PoolKind::kMax) {
        sig.insert(sig.end(), c.pool_argmax[k].begin(), c.pool_argmax[k].end());
      }
    }
  }
  for (const Triplet& t : batch.triplets) {
    const auto e = [&](std::size_t i) { return ev.caches[i].embedding(); };
    sig.push_back(triplet_loss(e(t.anchor), e(t.positive), e(t.negative), margin) > 0.0);
  }
  return sig;
}

}  // namespace detail

/// Loss of `batch` under `params` and, if requested, its gradient.
inline BatchEvaluation evaluate_batch(const NetSpec& net, std::span<const double> params, const Batch& batch,
                                      const Objective& obj, bool want_gradient) {
  obj.validate();
  const std::size_t n = batch.inputs.size();
  detail::require(n > 0 && batch.labels.size() == n, "train.batch", "batch is empty or labels are missing");
  BatchEvaluation ev;
  ev.caches.reserve(n);
  for (const auto& x : batch.inputs) ev.caches.push_back(forward_cached(net, x, params));

  const std::size_t classes = ev.caches[0].output().size();
  const std::size_t dim = ev.caches[0].embedding().size();
  std::vector<std::vector<double>> d_out(n, std::vector<double>(classes, 0.0));
  std::vector<std::vector<double>> d_emb(n, std::vector<double>(obj.squared_error ? 0 : dim, 0.0));

  if (obj.squared_error) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = ev.caches[i].output();
      for (std::size_t k = 0; k < classes; ++k) {
        const double r = s[k] - (static_cast<int>(k) == batch.labels[i] ? 1.0 : 0.0);
        f += 0.5 * r * r;
        d_out[i][k] = obj.weights[0] * r / static_cast<double>(n);
      }
    }
    ev.terms = {f / static_cast<double>(n)};
  } else {
    double f1 = 0.0;
    const double scale1 = batch.triplets.empty() ? 0.0 : obj.weights[0] / static_cast<double>(batch.triplets.size());
    for (const Triplet& t : batch.triplets) {
      const auto a = ev.caches[t.anchor].embedding();
      const auto p = ev.caches[t.positive].embedding();
      const auto q = ev.caches[t.negative].embedding();
      const double l = triplet_loss(a, p, q, obj.margin);
      f1 += l;
      if (l <= 0.0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        d_emb[t.anchor][d] += scale1 * 2.0 * (q[d] - p[d]);
        d_emb[t.positive][d] += scale1 * 2.0 * (p[d] - a[d]);
        d_emb[t.negative][d] += scale1 * 2.0 * (a[d] - q[d]);
      }
    }
    double f2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f2 += cross_entropy(ev.caches[i].output(), batch.labels[i], d_out[i]);
      for (double& g : d_out[i]) g *= obj.weights[1] / static_cast<double>(n);
    }
    ev.terms = {batch.triplets.empty() ? 0.0 : f1 / static_cast<double>(batch.triplets.size()),
                f2 / static_cast<double>(n)};
  }
  ev.loss = combined_loss(obj.weights, ev.terms);

  if (want_gradient) {
    ev.gradient.assign(params.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) backward(net, ev.caches[i], params, d_out[i], d_emb[i], ev.gradient);
  }
  return ev;
}

struct GradCheckOptions {
  int parameters = 60;
  double step = 1e-4;
  std::uint64_t seed = 1;
  /// Denominator floor of the relative error, so parameters with a true
  /// gradient of 0 compare on an absolute scale.
  double floor = 1e-7;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  int checked = 0;
  int skipped_kinks = 0;
};

/// Central differences against the analytic gradient on randomly chosen
/// parameters. Parameters whose +-step crosses a relu, max-pool or hinge
/// boundary are skipped and replaced by another draw.
inline GradCheckReport grad_check(const NetSpec& net, const Batch& batch, const Objective& obj,
                                  const GradCheckOptions& opt = {}) {
  validate_net(net);
  detail::require(opt.parameters >= 1 && opt.step > 0.0, "gradcheck.options", "invalid grad_check options");
  std::vector<double> params = net.params;
  const BatchEvaluation base = evaluate_batch(net, params, batch, obj, true);
  const auto base_sig = detail::regime_signature(net, base, batch, obj.margin);

  std::vector<std::size_t> order(params.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(opt.seed);
  std::shuffle(order.begin(), order.end(), rng);

  GradCheckReport report;
  for (std::size_t idx : order) {
    if (report.checked >= opt.parameters) break;
    const double orig = params[idx];
    params[idx] = orig + opt.step;
    const BatchEvaluation plus = evaluate_batch(net, params, batch, obj, false);
    params[idx] = orig - opt.step;
    const BatchEvaluation minus = evaluate_batch(net, params, batch, obj, false);
    params[idx] = orig;
    if (detail::regime_signature(net, plus, batch, obj.margin) != base_sig ||
        detail::regime_signature(net, minus, batch, obj.margin) != base_sig) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * opt.step);
    const double analytic = base.gradient[idx];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), opt.floor});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(numeric - analytic) / denom);
    ++report.checked;
  }
  return report;
}

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 25;
  std::uint64_t seed = 1;
  double margin = kDefaultMargin;
  int per_anchor = 1;
  /// 0 disables augmentation; otherwise every image is replaced by its five
  /// crops of this size, and the network input must match it.
  int augment_crop = 0;

  void validate() const {
    detail::require(epochs >= 0, "train.epochs", "epochs must be >= 0");
    detail::require(std::isfinite(learning_rate) && learning_rate >= 0.0, "train.learning_rate",
                    "learning rate must be finite and >= 0");
    detail::require(batch_size >= 1, "train.batch_size", "batch size must be >= 1");
    detail::require(margin > 0.0, "train.margin", "margin must be > 0");
    detail::require(per_anchor >= 1, "train.per_anchor", "per_anchor must be >= 1");
    detail::require(augment_crop >= 0, "train.augment_crop", "augment crop must be >= 0");
  }
};

struct TrainResult {
  NetSpec net;
  std::vector<double> loss_trace;  // mean batch loss per epoch, before each update
  std::size_t skipped_anchors = 0;
};

namespace detail {

inline Batch make_batch(const std::vector<std::vector<double>>& inputs, std::span<const int> labels,
                        std::span<const std::size_t> members) {
  Batch b;
  for (std::size_t i : members) {
    b.inputs.push_back(inputs[i]);
    b.labels.push_back(labels[i]);
  }
  return b;
}

inline bool has_two_classes(std::span<const int> labels) {
  return std::any_of(labels.begin(), labels.end(), [&](int l) { return l != labels[0]; });
}

/// Mines triplets on the batch's current embeddings; returns skipped anchors.
inline std::size_t mine_into(const NetSpec& net, std::span<const double> params, Batch& b, int per_anchor,
                             std::uint64_t seed) {
  b.triplets.clear();
  if (!has_two_classes(b.labels)) return 0;
  std::vector<std::vector<double>> emb;
  for (const auto& x : b.inputs) {
    const ForwardCache c = forward_cached(net, x, params);
    emb.emplace_back(c.embedding().begin(), c.embedding().end());
  }
  MiningResult m = mine_triplets(emb, b.labels, per_anchor, seed);
  b.triplets = std::move(m.triplets);
  return m.skipped_anchors.size();
}

inline void check_dataset(const NetSpec& net, const Dataset& data, int crop) {
  detail::require(data.size() > 0, "train.dataset", "dataset is empty");
  detail::require(data.labels.size() == data.size(), "train.dataset", "label count differs from image count");
  const int classes = static_cast<int>(net.layers.back().out);
  std::vector<bool> seen(static_cast<std::size_t>(classes), false);
  for (int l : data.labels) {
    detail::require(l >= 0 && l < classes, "train.dataset", "label out of range for the network");
    seen[static_cast<std::size_t>(l)] = true;
  }
  detail::require(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }), "train.dataset",
                  "dataset must contain every class");
  for (const Image& img : data.images) {
    const int w = crop > 0 ? std::min(img.width(), img.height()) : img.width();
    detail::require(img.is_gray() && (crop > 0 ? w >= crop : (img.width() == net.input.w && img.height() == net.input.h)),
                    "train.dataset", "image shape does not match the network input");
  }
}

}  // namespace detail

/// Objective on the whole dataset, with triplets mined on the current net.
inline double evaluate_loss(const NetSpec& net, const Dataset& data, const Objective& obj, int per_anchor = 1,
                            std::uint64_t seed = 1) {
  std::vector<std::vector<double>> inputs;
  for (const Image& img : data.images) inputs.push_back(image_input(img));
  std::vector<std::size_t> all(inputs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Batch b = detail::make_batch(inputs, data.labels, all);
  if (!obj.squared_error) detail::mine_into(net, net.params, b, per_anchor, seed);
  return evaluate_batch(net, net.params, b, obj, false).loss;
}

/// Plain minibatch SGD. Each epoch shuffles with the seeded stream, mines
/// triplets per batch on the current embeddings and takes one step per batch.
inline TrainResult train(NetSpec net, const Dataset& data, const TrainConfig& cfg, const LossWeights& weights = {}) {
  cfg.validate();
  validate_net(net);
  detail::check_dataset(net, data, cfg.augment_crop);
  const Objective obj{weights, cfg.margin, false};
  obj.validate();
  if (cfg.augment_crop > 0) {
    detail::require(net.input == Shape{1, cfg.augment_crop, cfg.augment_crop}, "train.augment_crop",
                    "network input must match the augmentation crop");
  }

  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (cfg.augment_crop > 0) {
      for (const Image& c : augment(data.images[i], cfg.augment_crop)) {
        inputs.push_back(image_input(c));
        labels.push_back(data.labels[i]);
      }
    } else {
      inputs.push_back(image_input(data.images[i]));
      labels.push_back(data.labels[i]);
    }
  }

  TrainResult result;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> members(order.data() + start, std::min(bs, order.size() - start));
      Batch b = detail::make_batch(inputs, labels, members);
      result.skipped_anchors += detail::mine_into(net, net.params, b, cfg.per_anchor, rng());
      const BatchEvaluation ev = evaluate_batch(net, net.params, b, obj, true);
      for (std::size_t k = 0; k < net.params.size(); ++k) net.params[k] -= cfg.learning_rate * ev.gradient[k];
      total += ev.loss;
      ++batches;
    }
    result.loss_trace.push_back(total / static_cast<double>(batches));
  }
  validate_net(net);
  result.net = std::move(net);
  return result;
}

/// Predicts on an image at least as large as the network input, center
/// cropping when it is larger.
inline Prediction classify(const NetSpec& net, const Image& img) {
  if (img.width() == net.input.w && img.height() == net.input.h) return predict(net, img);
  detail::require(net.input.w == net.input.h, "net.input", "center cropping needs a square network input");
  return predict(net, center_crop(img, net.input.w));
}

/// "epoch,loss" rows, losses printed with 17 significant digits.
inline void write_loss_trace_csv(std::ostream& out, std::span<const double> trace) {
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, trace[e]);
    out << buf;
  }
}

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> predictions;
};

inline Evaluation evaluate(const NetSpec& net, const Dataset& data) {
  Evaluation e;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    e.predictions.push_back(classify(net, data.images[i]).label);
    hits += e.predictions.back() == data.labels[i];
  }
  e.accuracy = data.size() ? static_cast<double>(hits) / static_cast<double>(data.size()) : 0.0;
  return e;
}

}  // namespace gmrf

#endif  // GMRF_TRAIN_HPP_
