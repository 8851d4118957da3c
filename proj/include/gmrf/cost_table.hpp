#ifndef GMRF_COST_TABLE_HPP_
#define GMRF_COST_TABLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gmrf/error.hpp"

namespace gmrf {

/// Dense per-site, per-label cost matrix (site-major).
class CostTable {
 public:
  CostTable() = default;
  CostTable(std::size_t sites, int labels, double fill = 0.0)
      : sites_(sites), labels_(labels), values_(sites * static_cast<std::size_t>(labels), fill) {
    detail::require(labels >= 1, "costs.labels", "cost table needs at least one label");
  }

  std::size_t sites() const noexcept { return sites_; }
  int labels() const noexcept { return labels_; }

  double& operator()(std::size_t site, int label) { return values_[site * labels_ + label]; }
  double operator()(std::size_t site, int label) const { return values_[site * labels_ + label]; }

  std::span<const double> row(std::size_t site) const {
    return {values_.data() + site * labels_, static_cast<std::size_t>(labels_)};
  }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Subtracts the global minimum so every cost is >= 0. Per-site argmins and
  /// energy differences are unchanged.
  void shift_to_nonnegative() {
    if (values_.empty()) return;
    const double lo = *std::min_element(values_.begin(), values_.end());
    for (double& v : values_) v -= lo;
  }

  /// Index of the smallest cost at `site`, lowest label on ties.
  int argmin(std::size_t site) const {
    const auto r = row(site);
    return static_cast<int>(std::min_element(r.begin(), r.end()) - r.begin());
  }

 private:
  std::size_t sites_ = 0;
  int labels_ = 1;
  std::vector<double> values_;
};

}  // namespace gmrf

#endif  // GMRF_COST_TABLE_HPP_
