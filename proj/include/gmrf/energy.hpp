#ifndef GMRF_ENERGY_HPP_
#define GMRF_ENERGY_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gmrf/cost_table.hpp"
#include "gmrf/error.hpp"
#include "gmrf/image.hpp"

namespace gmrf {

enum class PriorKind { kPotts, kQuadratic };

/// Labeling energy on a 4-connected grid:
///
///   U(X) = sum_p D(p, x_p) + beta * sum_{(p,q)} w_pq V(x_p, x_q)
///
/// V is the Potts indicator [a != b] or the squared distance between the
/// label coordinates ||c_a - c_b||^2. Label coordinates default to (l, 0), so
/// the quadratic prior is (a - b)^2 on label indices; registration games use
/// displacement vectors instead. Edge weights default to 1.
///
/// Each pixel is a player whose payoff is minus its local energy, and every
/// unilateral change of x_p changes U by exactly the change in p's local
/// energy, so U is an exact potential of the game.
class EnergyModel {
 public:
  using Coord = std::array<double, 2>;

  EnergyModel(int width, int height, CostTable data, double beta, PriorKind prior,
              std::vector<Coord> label_coords = {})
      : width_(width), height_(height), data_(std::move(data)), beta_(beta), prior_(prior),
        coords_(std::move(label_coords)) {
    detail::require(width > 0 && height > 0, "game.shape", "grid dimensions must be positive");
    detail::require(data_.sites() == static_cast<std::size_t>(width) * height, "game.size",
                    "data cost rows do not match the grid");
    detail::require(data_.all_finite(), "game.costs", "data costs must be finite");
    detail::require(beta >= 0.0 && std::isfinite(beta), "game.beta", "prior weight must be finite and >= 0");
    if (coords_.empty()) {
      for (int l = 0; l < data_.labels(); ++l) coords_.push_back({static_cast<double>(l), 0.0});
    }
    detail::require(coords_.size() == static_cast<std::size_t>(data_.labels()), "game.coords",
                    "one coordinate per label is required");
    const int nl = data_.labels();
    pair_.resize(static_cast<std::size_t>(nl) * nl);
    for (int a = 0; a < nl; ++a) {
      for (int b = 0; b < nl; ++b) {
        double v = 0.0;
        if (prior_ == PriorKind::kPotts) {
          v = a == b ? 0.0 : 1.0;
        } else {
          const double dx = coords_[a][0] - coords_[b][0], dy = coords_[a][1] - coords_[b][1];
          v = dx * dx + dy * dy;
        }
        pair_[static_cast<std::size_t>(a) * nl + b] = v;
      }
    }
    h_weights_.assign(static_cast<std::size_t>(width - 1) * height, 1.0);
    v_weights_.assign(static_cast<std::size_t>(width) * (height - 1), 1.0);
  }

  /// Per-edge weights: `horizontal` has (width-1)*height entries for edges
  /// (x,y)-(x+1,y); `vertical` has width*(height-1) for (x,y)-(x,y+1).
  void set_edge_weights(std::vector<double> horizontal, std::vector<double> vertical) {
    detail::require(horizontal.size() == h_weights_.size() && vertical.size() == v_weights_.size(),
                    "game.weights", "edge weight arrays have the wrong size");
    for (double w : horizontal) detail::require(w >= 0.0 && std::isfinite(w), "game.weights", "bad edge weight");
    for (double w : vertical) detail::require(w >= 0.0 && std::isfinite(w), "game.weights", "bad edge weight");
    h_weights_ = std::move(horizontal);
    v_weights_ = std::move(vertical);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t sites() const noexcept { return data_.sites(); }
  int label_count() const noexcept { return data_.labels(); }
  double beta() const noexcept { return beta_; }
  PriorKind prior() const noexcept { return prior_; }
  const CostTable& data_costs() const noexcept { return data_; }
  std::span<const Coord> label_coords() const noexcept { return coords_; }

  double data(std::size_t p, int label) const { return data_(p, label); }
  double pairwise(int a, int b) const { return pair_[static_cast<std::size_t>(a) * data_.labels() + b]; }
  double h_weight(int x, int y) const { return h_weights_[static_cast<std::size_t>(y) * (width_ - 1) + x]; }
  double v_weight(int x, int y) const { return v_weights_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Energy terms of `U` that involve pixel p when it takes `label`, with the
  /// rest of `labels` held fixed.
  double local_energy(const LabelField& labels, std::size_t p, int label) const {
    const int x = static_cast<int>(p % width_), y = static_cast<int>(p / width_);
    double pair = 0.0;
    if (x > 0) pair += h_weight(x - 1, y) * pairwise(label, labels[p - 1]);
    if (x + 1 < width_) pair += h_weight(x, y) * pairwise(label, labels[p + 1]);
    if (y > 0) pair += v_weight(x, y - 1) * pairwise(label, labels[p - width_]);
    if (y + 1 < height_) pair += v_weight(x, y) * pairwise(label, labels[p + width_]);
    return data_(p, label) + beta_ * pair;
  }

  void check_labels(const LabelField& labels) const {
    if (labels.width() != width_ || labels.height() != height_ || labels.label_count() != label_count()) {
      throw InvalidArgument("game.mismatch", "label field does not match the energy model");
    }
  }

 private:
  int width_;
  int height_;
  CostTable data_;
  double beta_;
  PriorKind prior_;
  std::vector<Coord> coords_;
  std::vector<double> pair_;
  std::vector<double> h_weights_;
  std::vector<double> v_weights_;
};

/// Total energy U(X). The Gibbs normalizer is never needed: every solver only
/// compares unnormalized energies.
inline double energy_of(const EnergyModel& model, const LabelField& labels) {
  model.check_labels(labels);
  double data = 0.0;
  for (std::size_t p = 0; p < model.sites(); ++p) data += model.data(p, labels[p]);
  double pair = 0.0;
  for (int y = 0; y < model.height(); ++y) {
    for (int x = 0; x + 1 < model.width(); ++x) pair += model.h_weight(x, y) * model.pairwise(labels.at(x, y), labels.at(x + 1, y));
  }
  for (int y = 0; y + 1 < model.height(); ++y) {
    for (int x = 0; x < model.width(); ++x) pair += model.v_weight(x, y) * model.pairwise(labels.at(x, y), labels.at(x, y + 1));
  }
  return data + model.beta() * pair;
}

/// Best response of player p: the current label if it is among the minimizers
/// of the local energy, else the lowest-index minimizer.
inline int best_response(const EnergyModel& model, const LabelField& labels, std::size_t p) {
  const int current = labels[p];
  int best = current;
  double best_energy = model.local_energy(labels, p, current);
  for (int l = 0; l < model.label_count(); ++l) {
    if (l == current) continue;
    const double e = model.local_energy(labels, p, l);
    if (e < best_energy) {
      best_energy = e;
      best = l;
    }
  }
  return best;
}

enum class SweepOrder { kRaster, kCheckerboard };

/// Visiting order of one sweep. Checkerboard visits all (x + y) even pixels,
/// then all odd ones; same-color pixels share no edge, so each half-sweep is
/// a set of independent best responses.
inline std::vector<std::size_t> sweep_sequence(int width, int height, SweepOrder order) {
  std::vector<std::size_t> seq;
  seq.reserve(static_cast<std::size_t>(width) * height);
  if (order == SweepOrder::kRaster) {
    for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p) seq.push_back(p);
    return seq;
  }
  for (int parity = 0; parity < 2; ++parity) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if ((x + y) % 2 == parity) seq.push_back(static_cast<std::size_t>(y) * width + x);
  }
  return seq;
}

struct SweepResult {
  LabelField labels;
  int changed = 0;
};

/// One pass of sequential best responses. Every switch strictly lowers the
/// player's local energy and therefore U.
inline SweepResult best_response_sweep(const EnergyModel& model, LabelField labels,
                                       SweepOrder order = SweepOrder::kRaster) {
  model.check_labels(labels);
  int changed = 0;
  for (std::size_t p : sweep_sequence(model.width(), model.height(), order)) {
    const int next = best_response(model, labels, p);
    if (next != labels[p]) {
      labels.set(p, next);
      ++changed;
    }
  }
  return {std::move(labels), changed};
}

struct NashWitness {
  std::size_t pixel = 0;
  int better_label = 0;
};

struct NashReport {
  bool is_nash = true;
  std::optional<NashWitness> witness;
};

/// Checks that no single pixel can strictly lower U by changing only its own
/// label. On failure reports the first such pixel in raster order together
/// with its best response.
inline NashReport nash_check(const EnergyModel& model, const LabelField& labels) {
  model.check_labels(labels);
  for (std::size_t p = 0; p < model.sites(); ++p) {
    const int br = best_response(model, labels, p);
    if (br != labels[p]) return {false, NashWitness{p, br}};
  }
  return {};
}

struct OracleResult {
  LabelField labels;
  double energy = 0.0;
};

inline constexpr double kOracleLimit = 1e6;

/// Enumerates every labeling in lexicographic order (pixel 0 most
/// significant) and returns the first one with the smallest energy.
inline OracleResult exhaustive_oracle(const EnergyModel& model) {
  const double count = std::pow(static_cast<double>(model.label_count()), static_cast<double>(model.sites()));
  if (count > kOracleLimit) {
    throw InvalidArgument("game.too_large", "exhaustive search limited to 1e6 labelings");
  }
  const std::size_t n = model.sites();
  const int nl = model.label_count();
  std::vector<int> digits(n, 0);
  OracleResult best{LabelField(model.width(), model.height(), nl, 0), 0.0};
  best.energy = energy_of(model, best.labels);
  while (true) {
    // Odometer increment, least significant digit = last pixel.
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++digits[i] < nl) break;
      digits[i] = 0;
      if (i == 0) return best;
    }
    LabelField candidate(model.width(), model.height(), nl, digits);
    const double e = energy_of(model, candidate);
    if (e < best.energy) best = {std::move(candidate), e};
  }
}

/// Pointwise data-cost argmin: the equilibrium when beta = 0.
inline LabelField pointwise_argmin(const EnergyModel& model) {
  std::vector<int> labels(model.sites());
  for (std::size_t p = 0; p < model.sites(); ++p) labels[p] = model.data_costs().argmin(p);
  return LabelField(model.width(), model.height(), model.label_count(), std::move(labels));
}

}  // namespace gmrf

#endif  // GMRF_ENERGY_HPP_
