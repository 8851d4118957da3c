#ifndef GMRF_TRIPLET_HPP_
#define GMRF_TRIPLET_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/image.hpp"

namespace gmrf {

inline constexpr double kDefaultMargin = 0.5;

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Strictly positive weights of the multi-term loss.
class LossWeights {
 public:
  LossWeights() : a_{1.0, 1.0} {}
  explicit LossWeights(std::vector<double> a) : a_(std::move(a)) {
    detail::require(!a_.empty(), "loss.weights", "at least one loss weight is required");
    for (double v : a_) detail::require(std::isfinite(v) && v > 0.0, "loss.weights", "loss weights must be > 0");
  }
  std::span<const double> values() const { return a_; }
  std::size_t size() const { return a_.size(); }
  double operator[](std::size_t i) const { return a_[i]; }

 private:
  std::vector<double> a_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "triplet.dimension", "embedding dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// max(0, |a-p|^2 - |a-n|^2 + margin).
inline double triplet_loss(std::span<const double> a, std::span<const double> p, std::span<const double> n,
                           double margin = kDefaultMargin) {
  detail::require(margin > 0.0, "triplet.margin", "margin must be > 0");
  const double dap = squared_distance(a, p);
  const double dan = squared_distance(a, n);
  return std::max(0.0, dap - dan + margin);
}

inline double combined_loss(const LossWeights& w, std::span<const double> terms) {
  detail::require(terms.size() == w.size(), "loss.terms", "loss term count differs from weight count");
  double f = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) f += w[i] * terms[i];
  return f;
}

/// Softmax cross-entropy of `scores` against `label`; `grad` (if non-empty)
/// receives softmax - onehot.
inline double cross_entropy(std::span<const double> scores, int label, std::span<double> grad = {}) {
  detail::require(label >= 0 && static_cast<std::size_t>(label) < scores.size(), "loss.label",
                  "label out of range for the score vector");
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);
  if (!grad.empty()) {
    for (std::size_t k = 0; k < scores.size(); ++k) grad[k] = std::exp(scores[k] - log_z);
    grad[static_cast<std::size_t>(label)] -= 1.0;
  }
  return log_z - scores[static_cast<std::size_t>(label)];
}

struct MiningResult {
  std::vector<Triplet> triplets;
  std::vector<std::size_t> skipped_anchors;  // anchors whose class has one sample
};

/// For each anchor: nearest same-class positive and nearest other-class
/// negative (ties to the lowest index), then per_anchor - 1 seeded random
/// valid picks.
inline MiningResult mine_triplets(const std::vector<std::vector<double>>& embeddings, std::span<const int> labels,
                                  int per_anchor, std::uint64_t seed) {
  const std::size_t n = embeddings.size();
  detail::require(labels.size() == n, "mining.labels", "label count differs from embedding count");
  detail::require(per_anchor >= 1, "mining.per_anchor", "per_anchor must be >= 1");
  bool two_classes = false;
  for (std::size_t i = 1; i < n; ++i) two_classes = two_classes || labels[i] != labels[0];
  detail::require(two_classes, "mining.classes", "triplet mining needs at least two classes");

  std::mt19937_64 rng(seed);
  MiningResult out;
  std::vector<std::size_t> same, other;
  for (std::size_t a = 0; a < n; ++a) {
    same.clear();
    other.clear();
    std::size_t pos = n, neg = n;
    double dpos = INFINITY, dneg = INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      const double d = squared_distance(embeddings[a], embeddings[j]);
      if (labels[j] == labels[a]) {
        same.push_back(j);
        if (d < dpos) dpos = d, pos = j;
      } else {
        other.push_back(j);
        if (d < dneg) dneg = d, neg = j;
      }
    }
    if (same.empty()) {
      out.skipped_anchors.push_back(a);
      continue;
    }
    out.triplets.push_back({a, pos, neg});
    for (int k = 1; k < per_anchor; ++k) {
      std::uniform_int_distribution<std::size_t> ps(0, same.size() - 1), ns(0, other.size() - 1);
      const std::size_t p = same[ps(rng)];
      out.triplets.push_back({a, p, other[ns(rng)]});
    }
  }
  return out;
}

inline Image crop(const Image& img, int x0, int y0, int w, int h) {
  detail::require(x0 >= 0 && y0 >= 0 && w > 0 && h > 0 && x0 + w <= img.width() && y0 + h <= img.height(),
                  "augment.crop", "crop window outside the image");
  Image out(w, h, img.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

/// Centered crop with offset floor((dim - size) / 2).
inline Image center_crop(const Image& img, int size) {
  detail::require(size > 0 && size <= img.width() && size <= img.height(), "augment.crop",
                  "crop larger than the image");
  return crop(img, (img.width() - size) / 2, (img.height() - size) / 2, size, size);
}

/// Four corner crops and the centered crop, in order TL, TR, BL, BR, C.
inline std::array<Image, 5> augment(const Image& img, int size) {
  detail::require(size > 0 && size <= img.width() && size <= img.height(), "augment.crop",
                  "crop larger than the image");
  const int rx = img.width() - size, ry = img.height() - size;
  return {crop(img, 0, 0, size, size), crop(img, rx, 0, size, size), crop(img, 0, ry, size, size),
          crop(img, rx, ry, size, size), center_crop(img, size)};
}

}  // namespace gmrf

#endif  // GMRF_TRIPLET_HPP_
