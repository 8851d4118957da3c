#ifndef GMRF_FEATURES_HPP_
#define GMRF_FEATURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/image.hpp"
#include "gmrf/linalg.hpp"

namespace gmrf {

// ---------------------------------------------------------------------------
// Block feature vector

struct FeatureOptions {
  int grid = 2;            // blocks per side
  int bins = 16;           // histogram bins per block
  int edge_threshold = 0;  // a neighbour pair is an edge if |difference| > threshold
};

inline int feature_block_length(const FeatureOptions& o) { return 3 + o.bins; }
inline int feature_length(const FeatureOptions& o = {}) { return o.grid * o.grid * feature_block_length(o); }

/// Component names in vector order, e.g. "b0_mean", "b0_hist3", "b3_edge".
inline std::vector<std::string> feature_names(const FeatureOptions& o = {}) {
  std::vector<std::string> names;
  for (int b = 0; b < o.grid * o.grid; ++b) {
    const std::string prefix = "b" + std::to_string(b) + "_";
    names.push_back(prefix + "mean");
    names.push_back(prefix + "var");
    for (int k = 0; k < o.bins; ++k) names.push_back(prefix + "hist" + std::to_string(k));
    names.push_back(prefix + "edge");
  }
  return names;
}

/// Per block of a grid x grid partition (raster order): mean and variance of
/// the intensity scaled to [0, 1], a normalized `bins`-bin histogram, and the
/// fraction of 4-neighbour pairs inside the block whose intensities differ by
/// more than `edge_threshold`.
inline std::vector<double> extract_features(const Image& img, const FeatureOptions& o = {}) {
  require_gray(img, "extract_features");
  detail::require(img.width() >= 8 && img.height() >= 8, "features.size", "image must be at least 8x8");
  detail::require(o.grid >= 1 && o.bins >= 1 && o.bins <= 256, "features.options", "invalid feature options");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(feature_length(o)));
  for (int by = 0; by < o.grid; ++by) {
    for (int bx = 0; bx < o.grid; ++bx) {
      const int x0 = bx * img.width() / o.grid, x1 = (bx + 1) * img.width() / o.grid;
      const int y0 = by * img.height() / o.grid, y1 = (by + 1) * img.height() / o.grid;
      const double count = static_cast<double>((x1 - x0) * (y1 - y0));
      std::int64_t sum = 0, sum_sq = 0;
      std::vector<double> hist(static_cast<std::size_t>(o.bins), 0.0);
      int pairs = 0, edges = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const int v = img.at(x, y);
          sum += v;
          sum_sq += static_cast<std::int64_t>(v) * v;
          hist[static_cast<std::size_t>(v * o.bins / 256)] += 1.0;
          if (x + 1 < x1) ++pairs, edges += std::abs(v - img.at(x + 1, y)) > o.edge_threshold;
          if (y + 1 < y1) ++pairs, edges += std::abs(v - img.at(x, y + 1)) > o.edge_threshold;
        }
      }
      // Integer moments keep constant blocks at exactly zero variance.
      const auto n = static_cast<std::int64_t>((x1 - x0) * (y1 - y0));
      out.push_back(static_cast<double>(sum) / (255.0 * count));
      out.push_back(static_cast<double>(n * sum_sq - sum * sum) / (255.0 * 255.0 * count * count));
      for (double h : hist) out.push_back(h / count);
      out.push_back(pairs ? static_cast<double>(edges) / pairs : 0.0);
    }
  }
  return out;
}

/// CSV with a header of component names and one row per sample.
inline void write_features_csv(std::ostream& out, const std::vector<std::vector<double>>& rows,
                               const FeatureOptions& o = {}) {
  const auto names = feature_names(o);
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Feature projection Z h = x

struct ProjectionSystem {
  Matrix z;
  std::vector<double> rhs;
};

inline std::vector<double> solve_projection(const ProjectionSystem& sys) {
  detail::require(sys.z.rows() == sys.z.cols(), "projection.shape", "projection matrix must be square");
  detail::require(sys.rhs.size() == sys.z.rows(), "projection.shape", "right-hand side has the wrong length");
  return solve_linear(sys.z, sys.rhs);
}

// ---------------------------------------------------------------------------
// Agglomerative feature clustering and representative selection

struct FeatureClusterSet {
  std::vector<std::vector<int>> clusters;  // each sorted; ordered by smallest member
  double threshold = 0.0;
  std::vector<int> selected;  // one representative per cluster, same order as clusters
};

/// |Pearson correlation| between all pairs of columns of `samples`
/// (rows = samples). Values within 1e-12 of 1 are snapped to 1.
inline Matrix abs_correlation(const Matrix& samples) {
  const std::size_t n = samples.rows(), f = samples.cols();
  std::vector<std::vector<double>> centered(f);
  std::vector<double> norms(f);
  for (std::size_t j = 0; j < f; ++j) {
    auto col = samples.column(j);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double& v : col) v -= mean, ss += v * v;
    const double scale = std::max(1.0, std::abs(mean));
    if (!(std::sqrt(ss / static_cast<double>(n)) > 1e-12 * scale)) {
      throw InvalidArgument("features.degenerate", "feature column " + std::to_string(j) + " has zero variance");
    }
    norms[j] = std::sqrt(ss);
    centered[j] = std::move(col);
  }
  Matrix c(f, f, 1.0);
  for (std::size_t a = 0; a < f; ++a) {
    for (std::size_t b = a + 1; b < f; ++b) {
      double r = std::abs(dot(centered[a], centered[b]) / (norms[a] * norms[b]));
      if (r > 1.0 - 1e-12) r = 1.0;
      c(a, b) = c(b, a) = r;
    }
  }
  return c;
}

/// Repeatedly merges the two most similar clusters (average pairwise
/// |correlation|) while that similarity is >= threshold; the guard applies to
/// the first merge as well. Ties go to the pair with the smallest member
/// indices. Each cluster then contributes the member with the highest
/// F-completeness, the mean |correlation| with the other members of its
/// cluster (1 for singletons); ties go to the lowest index.
inline FeatureClusterSet cluster_and_select(const Matrix& samples, double threshold) {
  detail::require(samples.cols() >= 2, "features.count", "need at least two features");
  detail::require(samples.rows() >= 3, "features.samples", "need at least three samples");
  detail::require(threshold >= 0.0 && threshold <= 1.0, "features.threshold", "threshold must lie in [0, 1]");
  const Matrix corr = abs_correlation(samples);
  const int f = static_cast<int>(samples.cols());

  std::vector<std::vector<int>> clusters;
  for (int j = 0; j < f; ++j) clusters.push_back({j});
  auto similarity = [&corr](const std::vector<int>& a, const std::vector<int>& b) {
    double s = 0.0;
    for (int i : a)
      for (int j : b) s += corr(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return s / static_cast<double>(a.size() * b.size());
  };
  while (clusters.size() > 1) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double s = similarity(clusters[i], clusters[j]);
        if (s > best) best = s, bi = i, bj = j;
      }
    }
    if (best < threshold) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  FeatureClusterSet out{clusters, threshold, {}};
  for (const auto& cluster : out.clusters) {
    int rep = cluster.front();
    double rep_score = -1.0;
    for (int m : cluster) {
      double score = 1.0;
      if (cluster.size() > 1) {
        score = 0.0;
        for (int o : cluster)
          if (o != m) score += corr(static_cast<std::size_t>(m), static_cast<std::size_t>(o));
        score /= static_cast<double>(cluster.size() - 1);
      }
      if (score > rep_score) rep_score = score, rep = m;
    }
    out.selected.push_back(rep);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simplex-weighted ideal-point objective

/// Per-sample (rows) per-criterion (columns) scores with their column
/// extremes: the ideal point (max) and anti-ideal point (min).
struct ScoreTable {
  Matrix scores;
  std::vector<double> ideal;
  std::vector<double> anti_ideal;

  static ScoreTable from_scores(Matrix scores) {
    detail::require(scores.rows() >= 1 && scores.cols() >= 1, "scores.shape", "score table is empty");
    ScoreTable t{std::move(scores), {}, {}};
    for (std::size_t j = 0; j < t.scores.cols(); ++j) {
      const auto col = t.scores.column(j);
      t.ideal.push_back(*std::max_element(col.begin(), col.end()));
      t.anti_ideal.push_back(*std::min_element(col.begin(), col.end()));
    }
    return t;
  }

  std::size_t criteria() const noexcept { return scores.cols(); }
};

/// sum_i [sum_j w_j (H_ij - H_j^-)] / [sum_j w_j (H_j^+ - H_j^-)].
inline double weight_objective(const ScoreTable& t, std::span<const double> w) {
  double den = 0.0;
  for (std::size_t j = 0; j < t.criteria(); ++j) den += w[j] * (t.ideal[j] - t.anti_ideal[j]);
  double total = 0.0;
  for (std::size_t i = 0; i < t.scores.rows(); ++i) {
    double num = 0.0;
    for (std::size_t j = 0; j < t.criteria(); ++j) num += w[j] * (t.scores(i, j) - t.anti_ideal[j]);
    total += num / den;
  }
  return total;
}

/// Euclidean projection onto the probability simplex (sort-based).
inline std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  std::vector<double> w(v.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) sum += (w[j] = std::max(0.0, v[j] - tau));
  for (double& x : w) x /= sum;
  return w;
}

struct WeightResult {
  std::vector<double> weights;
  double objective = 0.0;
};

struct WeightOptions {
  double step = 0.05;
  int iterations = 500;
};

/// Projected-gradient ascent on the simplex from the uniform point; returns
/// the best iterate (strict improvements only, so flat objectives keep the
/// uniform weights). Each step moves `step` along the unit gradient, so the
/// path does not depend on the scale of the scores.
inline WeightResult optimize_weights(const ScoreTable& t, const WeightOptions& options = {}) {
  const std::size_t m = t.criteria();
  detail::require(t.ideal.size() == m && t.anti_ideal.size() == m, "scores.shape", "ideal points missing");
  for (std::size_t j = 0; j < m; ++j) {
    if (!(t.ideal[j] > t.anti_ideal[j])) {
      throw InvalidArgument("scores.zero_range", "criterion " + std::to_string(j) + " has zero range");
    }
  }
  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  WeightResult best{w, weight_objective(t, w)};
  std::vector<double> sum_gap(m, 0.0), range(m);
  for (std::size_t j = 0; j < m; ++j) {
    range[j] = t.ideal[j] - t.anti_ideal[j];
    for (std::size_t i = 0; i < t.scores.rows(); ++i) sum_gap[j] += t.scores(i, j) - t.anti_ideal[j];
  }
  for (int it = 0; it < options.iterations; ++it) {
    // f(w) = (w . S) / (w . r)  =>  df/dw_j = (S_j (w . r) - (w . S) r_j) / (w . r)^2
    const double num = dot(w, sum_gap), den = dot(w, range);
    std::vector<double> grad(m);
    for (std::size_t j = 0; j < m; ++j) grad[j] = (sum_gap[j] * den - num * range[j]) / (den * den);
    const double norm = std::sqrt(dot(grad, grad));
    if (!(norm > 0.0)) break;
    std::vector<double> stepped(m);
    for (std::size_t j = 0; j < m; ++j) stepped[j] = w[j] + options.step * grad[j] / norm;
    w = project_to_simplex(stepped);
    const double value = weight_objective(t, w);
    if (value > best.objective) best = {w, value};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Quadratic subproblem  min g.d + 1/2 d.H d  s.t.  c + Jc d <= 0,  h + Jh d = 0

struct ConstraintRow {
  double value = 0.0;
  std::vector<double> gradient;
};

struct QpSubproblem {
  std::vector<double> g;
  Matrix hessian;
  std::vector<ConstraintRow> inequalities;
  std::vector<ConstraintRow> equalities;
};

/// 1e-6 * trace(H) / n.
inline double default_damping(const Matrix& h) {
  double trace = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) trace += h(i, i);
  return h.rows() ? 1e-6 * trace / static_cast<double>(h.rows()) : 0.0;
}

namespace detail {

inline std::vector<double> solve_kkt(const Matrix& h, std::span<const double> g,
                                     const std::vector<const ConstraintRow*>& active) {
  const std::size_t n = g.size(), k = active.size();
  Matrix kkt(n + k, n + k);
  std::vector<double> rhs(n + k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] = -g[i];
    for (std::size_t j = 0; j < n; ++j) kkt(i, j) = h(i, j);
  }
  for (std::size_t r = 0; r < k; ++r) {
    rhs[n + r] = -active[r]->value;
    for (std::size_t j = 0; j < n; ++j) kkt(n + r, j) = kkt(j, n + r) = active[r]->gradient[j];
  }
  try {
    auto sol = solve_linear(std::move(kkt), std::move(rhs));
    sol.resize(n);
    return sol;
  } catch (const NumericalError&) {
    throw NumericalError("qp.singular", "KKT system is singular");
  }
}

}  // namespace detail

inline constexpr double kQpFeasibilityTolerance = 1e-8;

/// Search direction of the quadratic subproblem. Equalities are enforced
/// exactly through the KKT system of (H + damping I); inequalities use one
/// active-set pass: solve without them, add every violated row as an
/// equality, re-solve, then verify all linearized inequalities.
inline std::vector<double> qp_step(const QpSubproblem& sub, double damping) {
  const std::size_t n = sub.g.size();
  detail::require(n >= 1 && sub.hessian.rows() == n && sub.hessian.cols() == n, "qp.shape",
                  "Hessian does not match the gradient");
  detail::require(damping >= 0.0, "qp.damping", "damping must be nonnegative");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      detail::require(std::abs(sub.hessian(i, j) - sub.hessian(j, i)) <= 1e-9, "qp.symmetry",
                      "Hessian must be symmetric");
  for (const auto* rows : {&sub.inequalities, &sub.equalities})
    for (const ConstraintRow& r : *rows)
      detail::require(r.gradient.size() == n, "qp.shape", "constraint gradient has the wrong length");

  Matrix h = sub.hessian;
  for (std::size_t i = 0; i < n; ++i) h(i, i) += damping;
  if (!is_positive_definite(h)) {
    throw NumericalError("qp.not_positive_definite", "damped Hessian is not positive definite");
  }
  std::vector<const ConstraintRow*> active;
  for (const ConstraintRow& r : sub.equalities) active.push_back(&r);
  std::vector<double> d = detail::solve_kkt(h, sub.g, active);

  bool added = false;
  for (const ConstraintRow& r : sub.inequalities) {
    if (r.value + dot(r.gradient, d) > kQpFeasibilityTolerance) {
      active.push_back(&r);
      added = true;
    }
  }
  if (added) d = detail::solve_kkt(h, sub.g, active);
  for (const ConstraintRow& r : sub.inequalities) {
    if (r.value + dot(r.gradient, d) > kQpFeasibilityTolerance) {
      throw NumericalError("qp.infeasible", "linearized inequality constraints are infeasible after one pass");
    }
  }
  return d;
}

}  // namespace gmrf

#endif  // GMRF_FEATURES_HPP_
