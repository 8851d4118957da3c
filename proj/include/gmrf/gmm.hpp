#ifndef GMRF_GMM_HPP_
#define GMRF_GMM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "gmrf/cost_table.hpp"
#include "gmrf/error.hpp"
#include "gmrf/image.hpp"

namespace gmrf {

/// Variance floor (in normalized intensity units squared).
inline constexpr double kVarianceFloor = 1e-6;

/// One-dimensional Gaussian mixture.
struct GmmParams {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  int components() const noexcept { return static_cast<int>(weights.size()); }

  void validate() const {
    detail::require(!weights.empty(), "gmm.components", "mixture needs at least one component");
    detail::require(means.size() == weights.size() && variances.size() == weights.size(), "gmm.shape",
                    "weights, means and variances differ in length");
    double total = 0.0;
    for (std::size_t m = 0; m < weights.size(); ++m) {
      detail::require(weights[m] >= 0.0 && std::isfinite(means[m]), "gmm.params", "invalid mixture parameters");
      detail::require(variances[m] > 0.0 && std::isfinite(variances[m]), "gmm.variance",
                      "mixture variances must be positive");
      total += weights[m];
    }
    detail::require(std::abs(total - 1.0) <= 1e-9, "gmm.weights", "mixture weights must sum to 1");
  }
};

struct EmTrace {
  std::vector<double> loglik_per_iter;  // entry t is the log-likelihood after t updates
  int iterations_used = 0;
  bool converged = false;
  double epsilon = 0.0;
  int max_iters = 0;
};

/// Row-major N x M responsibility matrix.
struct Responsibilities {
  std::size_t samples = 0;
  int components = 0;
  std::vector<double> values;

  double operator()(std::size_t n, int m) const { return values[n * components + m]; }
  double& operator()(std::size_t n, int m) { return values[n * components + m]; }
};

inline double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * d * d / variance;
}

namespace detail {

// log(pi_m) + log N(x; mu_m, var_m) for every component, written into `out`.
inline void joint_log_densities(double x, const GmmParams& p, std::vector<double>& out) {
  out.resize(p.weights.size());
  for (std::size_t m = 0; m < p.weights.size(); ++m) {
    out[m] = (p.weights[m] > 0.0 ? std::log(p.weights[m]) : -std::numeric_limits<double>::infinity()) +
             log_normal_pdf(x, p.means[m], p.variances[m]);
  }
}

inline double log_sum_exp(std::span<const double> v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace detail

inline double log_likelihood(std::span<const double> data, const GmmParams& params) {
  std::vector<double> joint;
  double total = 0.0;
  for (double x : data) {
    detail::joint_log_densities(x, params, joint);
    total += detail::log_sum_exp(joint);
  }
  return total;
}

/// Posterior component probabilities r[n][m] proportional to pi_m N(x_n; mu_m, var_m).
inline Responsibilities e_step(std::span<const double> data, const GmmParams& params) {
  detail::require(!data.empty(), "gmm.empty", "e_step needs data");
  params.validate();
  Responsibilities r{data.size(), params.components(), {}};
  r.values.resize(data.size() * static_cast<std::size_t>(r.components));
  std::vector<double> joint;
  for (std::size_t n = 0; n < data.size(); ++n) {
    detail::joint_log_densities(data[n], params, joint);
    const double norm = detail::log_sum_exp(joint);
    for (int m = 0; m < r.components; ++m) r(n, m) = std::exp(joint[static_cast<std::size_t>(m)] - norm);
  }
  return r;
}

/// Closed-form maximizer of the expected complete-data log-likelihood;
/// variances are floored at kVarianceFloor.
inline GmmParams m_step(std::span<const double> data, const Responsibilities& resp) {
  detail::require(!data.empty() && resp.samples == data.size(), "gmm.shape",
                  "responsibility rows do not match the data");
  const int mcount = resp.components;
  GmmParams p;
  p.weights.assign(static_cast<std::size_t>(mcount), 0.0);
  p.means.assign(static_cast<std::size_t>(mcount), 0.0);
  p.variances.assign(static_cast<std::size_t>(mcount), 0.0);
  for (int m = 0; m < mcount; ++m) {
    double mass = 0.0, weighted = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
      mass += resp(n, m);
      weighted += resp(n, m) * data[n];
    }
    if (mass < 1e-12) {
      throw NumericalError("gmm.empty_component", "mixture component " + std::to_string(m) + " lost all mass");
    }
    const double mean = weighted / mass;
    double spread = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) spread += resp(n, m) * (data[n] - mean) * (data[n] - mean);
    const auto k = static_cast<std::size_t>(m);
    p.weights[k] = mass / static_cast<double>(data.size());
    p.means[k] = mean;
    p.variances[k] = std::max(spread / mass, kVarianceFloor);
  }
  double total = 0.0;
  for (double w : p.weights) total += w;
  for (double& w : p.weights) w /= total;
  return p;
}

/// Means at the (m + 0.5)/M quantiles, uniform weights, pooled variance.
inline GmmParams initial_params(std::span<const double> data, int components) {
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double x : sorted) mean += x;
  mean /= static_cast<double>(sorted.size());
  double var = 0.0;
  for (double x : sorted) var += (x - mean) * (x - mean);
  var = std::max(var / static_cast<double>(sorted.size()), kVarianceFloor);

  GmmParams p;
  for (int m = 0; m < components; ++m) {
    const double q = (m + 0.5) / components;
    const auto idx = std::min(sorted.size() - 1, static_cast<std::size_t>(q * static_cast<double>(sorted.size())));
    p.weights.push_back(1.0 / components);
    p.means.push_back(sorted[idx]);
    p.variances.push_back(var);
  }
  return p;
}

struct GmmFit {
  GmmParams params;
  EmTrace trace;
};

/// Alternates e_step and m_step until the absolute log-likelihood change drops
/// below `epsilon` or `max_iters` updates have been made. The quantile
/// initialization is fully deterministic; `seed` is accepted for interface
/// symmetry with the other solvers and does not change the result.
inline GmmFit fit_gmm(std::span<const double> data, int components, double epsilon, int max_iters,
                      std::uint64_t seed = 0) {
  (void)seed;
  detail::require(components >= 1, "gmm.components", "component count must be at least 1");
  detail::require(data.size() >= static_cast<std::size_t>(components), "gmm.too_few",
                  "need at least as many samples as components");
  detail::require(epsilon >= 0.0 && max_iters >= 1, "gmm.config", "invalid EM tolerance or iteration cap");

  GmmFit out;
  out.trace.epsilon = epsilon;
  out.trace.max_iters = max_iters;
  out.params = initial_params(data, components);
  out.trace.loglik_per_iter.push_back(log_likelihood(data, out.params));
  for (int it = 0; it < max_iters; ++it) {
    out.params = m_step(data, e_step(data, out.params));
    const double ll = log_likelihood(data, out.params);
    const double change = std::abs(ll - out.trace.loglik_per_iter.back());
    out.trace.loglik_per_iter.push_back(ll);
    out.trace.iterations_used = it + 1;
    if (change < epsilon) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

/// Intensities scaled to [0, 1], the units GMM parameters are fitted in.
inline std::vector<double> normalized_intensities(const Image& img) {
  require_gray(img, "normalized_intensities");
  std::vector<double> out;
  out.reserve(img.pixel_count());
  for (std::uint8_t v : img.pixels()) out.push_back(v / 255.0);
  return out;
}

/// cost(p, l) = -log N(y_p; mu_l, var_l) with y_p the normalized intensity.
/// Mixture weights are not included: the label prior comes from the MRF.
inline CostTable data_costs(const Image& img, const GmmParams& params) {
  params.validate();
  const auto ys = normalized_intensities(img);
  CostTable costs(ys.size(), params.components());
  for (std::size_t p = 0; p < ys.size(); ++p) {
    for (int l = 0; l < params.components(); ++l) {
      const auto k = static_cast<std::size_t>(l);
      costs(p, l) = -log_normal_pdf(ys[p], params.means[k], params.variances[k]);
    }
  }
  return costs;
}

}  // namespace gmrf

#endif  // GMRF_GMM_HPP_
