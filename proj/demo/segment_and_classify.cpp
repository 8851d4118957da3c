// Library walkthrough: segment one synthetic scene with the pixel game, then
// train a small classifier and map its prediction to an action.
#include <cstdio>

#include "gmrf/experiment.hpp"
#include "gmrf/games.hpp"
#include "gmrf/gmm.hpp"
#include "gmrf/preprocess.hpp"
#include "gmrf/scene.hpp"
#include "gmrf/solvers.hpp"
#include "gmrf/train.hpp"

int main() {
  using namespace gmrf;
  const std::uint64_t seed = 7;

  // Segmentation: GMM intensity model, then ICM and annealing on the same game.
  const Image scene = gen_scene(2, 32, 2, seed);
  const auto intensities = normalized_intensities(scene);
  const GmmFit fit = fit_gmm(intensities, 3, 1e-6, 200);
  const EnergyModel model = build_segmentation_game(scene, fit.params, 1.0, PriorKind::kPotts);

  GameConfig gc;
  gc.seed = seed;
  const SolveResult icm = solve_icm(model, pointwise_argmin(model), gc);
  const SolveResult anneal = solve_anneal(model, pointwise_argmin(model), gc);
  std::printf("em iterations %d, final loglik %.3f\n", fit.trace.iterations_used,
              fit.trace.loglik_per_iter.back());
  std::printf("icm energy %.3f (nash %d), anneal energy %.3f (nash %d)\n", energy_of(model, icm.labels),
              nash_check(model, icm.labels).is_nash, energy_of(model, anneal.labels),
              nash_check(model, anneal.labels).is_nash);

  // Classification: 20 equalized scenes per class, short SGD run.
  Dataset data;
  for (int c = 0; c < kSceneClassCount; ++c) {
    for (int i = 0; i < 20; ++i) {
      data.images.push_back(equalize(gen_scene(c, 20, 1, seed * 1000 + std::uint64_t(c * 100 + i))));
      data.labels.push_back(c);
    }
  }
  TrainConfig tc;
  tc.epochs = 10;
  tc.seed = seed;
  const TrainResult tr = train(make_default_net(20, seed), data, tc);
  std::printf("loss %.4f -> %.4f\n", tr.loss_trace.front(), tr.loss_trace.back());

  const Image probe = equalize(gen_scene(4, 20, 1, 999));
  const Prediction p = classify(tr.net, probe);
  std::printf("probe (class 4) -> class %d, action %s\n", p.label, std::string(label_to_action(p.label)).c_str());
  return 0;
}
