#ifndef GMRF_GAMES_HPP_
#define GMRF_GAMES_HPP_

#include <vector>

#include "gmrf/energy.hpp"
#include "gmrf/gmm.hpp"
#include "gmrf/image.hpp"
#include "gmrf/smoothness.hpp"

namespace gmrf {

/// Segmentation game: Gaussian negative log-likelihood data terms (shifted to
/// be nonnegative), one label per mixture component, Potts or quadratic prior.
inline EnergyModel build_segmentation_game(const Image& img, const GmmParams& params, double beta,
                                           PriorKind prior) {
  CostTable costs = data_costs(img, params);
  costs.shift_to_nonnegative();
  return EnergyModel(img.width(), img.height(), std::move(costs), beta, prior);
}

/// Registration game over a discrete displacement set.
///
/// Data term: ((fixed(p) - moving(p + d_l)) / 255)^2 with edge-clamped
/// sampling of `moving`. Prior: squared distance between neighbouring
/// displacement vectors; the edge (p, p+x) is weighted by the mean a_xx of
/// its two pixels and (p, p+y) by the mean a_yy.
inline EnergyModel build_registration_game(const Image& fixed, const Image& moving,
                                           const DisplacementLabelSet& labels, double beta,
                                           const SmoothnessField& field) {
  require_gray(fixed, "build_registration_game");
  require_gray(moving, "build_registration_game");
  detail::require(fixed.width() == moving.width() && fixed.height() == moving.height(), "game.size",
                  "fixed and moving images differ in size");
  detail::require(field.width == fixed.width() && field.height == fixed.height() &&
                      field.coeffs.size() == fixed.pixel_count(),
                  "game.size", "smoothness field does not match the images");
  detail::require(ellipticity_check(field), "smooth.ellipticity", "coefficient field violates the ellipticity bound");

  const int w = fixed.width(), h = fixed.height();
  CostTable costs(fixed.pixel_count(), labels.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      for (int l = 0; l < labels.size(); ++l) {
        const double diff = (fixed.at(x, y) - moving.clamped(x + labels[l].dx, y + labels[l].dy)) / 255.0;
        costs(p, l) = diff * diff;
      }
    }
  }
  std::vector<EnergyModel::Coord> coords;
  for (const Offset& o : labels.offsets()) coords.push_back({static_cast<double>(o.dx), static_cast<double>(o.dy)});
  EnergyModel model(w, h, std::move(costs), beta, PriorKind::kQuadratic, std::move(coords));

  std::vector<double> horizontal, vertical;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) horizontal.push_back(0.5 * (field.at(x, y).xx + field.at(x + 1, y).xx));
  for (int y = 0; y + 1 < h; ++y)
    for (int x = 0; x < w; ++x) vertical.push_back(0.5 * (field.at(x, y).yy + field.at(x, y + 1).yy));
  model.set_edge_weights(std::move(horizontal), std::move(vertical));
  return model;
}

/// Displacement components of a registration labeling, as two real fields.
struct DisplacementField {
  std::vector<double> dx;
  std::vector<double> dy;
};

inline DisplacementField displacement_field(const LabelField& labels, const DisplacementLabelSet& set) {
  DisplacementField f;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    f.dx.push_back(set[labels[p]].dx);
    f.dy.push_back(set[labels[p]].dy);
  }
  return f;
}

}  // namespace gmrf

#endif  // GMRF_GAMES_HPP_
