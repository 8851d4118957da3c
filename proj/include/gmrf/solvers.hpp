#ifndef GMRF_SOLVERS_HPP_
#define GMRF_SOLVERS_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <vector>

#include "gmrf/energy.hpp"
#include "gmrf/error.hpp"

namespace gmrf {

struct AnnealSchedule {
  double t0 = 2.0;
  double decay = 0.9;
  int sweeps_per_t = 5;
};

struct GameConfig {
  SweepOrder order = SweepOrder::kRaster;
  int max_sweeps = 100;  // ICM cap; for annealing, the number of stochastic sweeps
  AnnealSchedule schedule;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(max_sweeps >= 1, "game.config", "max_sweeps must be positive");
    detail::require(schedule.t0 > 0.0, "game.config", "initial temperature must be positive");
    detail::require(schedule.decay > 0.0 && schedule.decay < 1.0, "game.config", "decay must lie in (0, 1)");
    detail::require(schedule.sweeps_per_t >= 1, "game.config", "sweeps per temperature must be positive");
  }
};

/// One row per sweep. Row 0 is the initial labeling. temperature is 0 for
/// best-response (greedy) sweeps; in an annealing trace the first
/// zero-temperature row after the stochastic phase is the restart point.
struct TraceRow {
  int sweep = 0;
  double energy = 0.0;
  int changed = 0;
  double temperature = 0.0;
};

struct SolveResult {
  LabelField labels;
  std::vector<TraceRow> trace;
  bool converged = false;  // the final best-response phase reached a sweep with no change
};

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "sweep,energy,changed,temperature\n";
  const auto old_precision = out.precision(17);
  for (const TraceRow& r : trace) out << r.sweep << ',' << r.energy << ',' << r.changed << ',' << r.temperature << '\n';
  out.precision(old_precision);
}

namespace detail {

// Best-response sweeps until nothing changes or `cap` sweeps were made.
inline bool run_best_response(const EnergyModel& model, LabelField& labels, SweepOrder order, int cap,
                              std::vector<TraceRow>& trace) {
  for (int s = 0; s < cap; ++s) {
    SweepResult r = best_response_sweep(model, std::move(labels), order);
    labels = std::move(r.labels);
    trace.push_back({static_cast<int>(trace.size()), energy_of(model, labels), r.changed, 0.0});
    if (r.changed == 0) return true;
  }
  return false;
}

}  // namespace detail

/// Iterated conditional modes, i.e. best-response dynamics of the pixel game.
/// Because U is an exact potential and each change strictly lowers it, the
/// dynamics stop at a pure Nash equilibrium (a local minimum of U under
/// single-pixel moves). Global optimality is not implied.
inline SolveResult solve_icm(const EnergyModel& model, LabelField init, const GameConfig& config = {}) {
  config.validate();
  model.check_labels(init);
  SolveResult out{std::move(init), {}, false};
  out.trace.push_back({0, energy_of(model, out.labels), 0, 0.0});
  out.converged = detail::run_best_response(model, out.labels, config.order, config.max_sweeps, out.trace);
  return out;
}

/// Logit-response probabilities of pixel p at temperature T:
/// P(l) proportional to exp(-(E_p(l) - min E_p) / T).
inline std::vector<double> site_distribution(const EnergyModel& model, const LabelField& labels, std::size_t p,
                                             double temperature) {
  detail::require(temperature > 0.0, "game.temperature", "temperature must be positive");
  const int nl = model.label_count();
  std::vector<double> probs(static_cast<std::size_t>(nl));
  double lo = std::numeric_limits<double>::infinity();
  for (int l = 0; l < nl; ++l) {
    probs[static_cast<std::size_t>(l)] = model.local_energy(labels, p, l);
    lo = std::min(lo, probs[static_cast<std::size_t>(l)]);
  }
  double total = 0.0;
  for (double& v : probs) {
    v = std::exp(-(v - lo) / temperature);
    total += v;
  }
  for (double& v : probs) v /= total;
  return probs;
}

/// Draws one label from `probs` with a single uniform variate.
inline int sample_label(const std::vector<double>& probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t l = 0; l < probs.size(); ++l) {
    acc += probs[l];
    if (u < acc) return static_cast<int>(l);
  }
  // Rounding left u above the accumulated total: take the last label with mass.
  for (std::size_t l = probs.size(); l-- > 0;) {
    if (probs[l] > 0.0) return static_cast<int>(l);
  }
  return 0;
}

/// Simulated annealing by single-site Gibbs resampling (random relaxation).
/// The temperature starts at T0 and is multiplied by `decay` every
/// `sweeps_per_t` sweeps, for `max_sweeps` stochastic sweeps. The lowest
/// energy labeling visited is then polished by best-response sweeps to
/// convergence, so the result is a Nash equilibrium like solve_icm's.
inline SolveResult solve_anneal(const EnergyModel& model, LabelField init, const GameConfig& config = {}) {
  config.validate();
  model.check_labels(init);
  std::mt19937_64 rng(config.seed);
  SolveResult out{std::move(init), {}, false};
  out.trace.push_back({0, energy_of(model, out.labels), 0, 0.0});

  LabelField best = out.labels;
  double best_energy = out.trace.back().energy;
  const auto sequence = sweep_sequence(model.width(), model.height(), config.order);
  double temperature = config.schedule.t0;
  for (int s = 0; s < config.max_sweeps; ++s) {
    if (s > 0 && s % config.schedule.sweeps_per_t == 0) temperature *= config.schedule.decay;
    int changed = 0;
    for (std::size_t p : sequence) {
      const int next = sample_label(site_distribution(model, out.labels, p, temperature), rng);
      if (next != out.labels[p]) {
        out.labels.set(p, next);
        ++changed;
      }
    }
    const double e = energy_of(model, out.labels);
    out.trace.push_back({static_cast<int>(out.trace.size()), e, changed, temperature});
    if (e < best_energy) {
      best_energy = e;
      best = out.labels;
    }
  }
  out.labels = std::move(best);
  out.trace.push_back({static_cast<int>(out.trace.size()), best_energy, 0, 0.0});
  out.converged = detail::run_best_response(model, out.labels, config.order,
                                            std::numeric_limits<int>::max(), out.trace);
  return out;
}

}  // namespace gmrf

#endif  // GMRF_SOLVERS_HPP_
