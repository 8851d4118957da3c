#ifndef GMRF_SCENE_HPP_
#define GMRF_SCENE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/image.hpp"

namespace gmrf {

inline constexpr int kSceneClassCount = 5;

/// Names of the five indoor scene classes, indexed by class id.
inline constexpr std::array<std::string_view, kSceneClassCount> kSceneClassNames = {
    "living_room", "bathroom", "bedroom", "kitchen", "action"};

/// Standard deviation (intensity levels) of the additive noise at levels 1..3.
inline double scene_noise_sigma(int noise_level) {
  static constexpr std::array<double, 3> kSigma = {8.0, 18.0, 32.0};
  detail::require(noise_level >= 1 && noise_level <= 3, "scene.noise", "noise level must be 1..3");
  return kSigma[static_cast<std::size_t>(noise_level - 1)];
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Mixes several integers into one well-spread RNG seed.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

}  // namespace detail

namespace detail {

inline std::vector<double> scene_canvas(int class_id, int size, std::uint64_t seed) {
  detail::require(class_id >= 0 && class_id < kSceneClassCount, "scene.class", "class id must be 0..4");
  detail::require(size >= 8, "scene.size", "scene size must be at least 8");
  std::mt19937_64 rng(mix_seed({static_cast<std::uint64_t>(class_id), static_cast<std::uint64_t>(size), seed}));
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto uniform_int = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<double> canvas(static_cast<std::size_t>(size) * size, 0.0);
  auto px = [&](int x, int y) -> double& { return canvas[static_cast<std::size_t>(y) * size + x]; };
  const double s = static_cast<double>(size);

  switch (class_id) {
    case 0: {
      std::fill(canvas.begin(), canvas.end(), uniform(100.0, 140.0));
      const int rects = uniform_int(2, 3);
      for (int r = 0; r < rects; ++r) {
        const int w = std::max(2, static_cast<int>(uniform(0.25, 0.5) * s));
        const int h = std::max(2, static_cast<int>(uniform(0.25, 0.5) * s));
        const int x0 = uniform_int(0, size - w);
        const int y0 = uniform_int(0, size - h);
        const double v = uniform(0.0, 1.0) < 0.5 ? uniform(20.0, 60.0) : uniform(190.0, 235.0);
        for (int y = y0; y < y0 + h; ++y)
          for (int x = x0; x < x0 + w; ++x) px(x, y) = v;
      }
      break;
    }
    case 1: {
      const int period = std::max(2, static_cast<int>(std::lround(uniform(0.15, 0.25) * s)));
      const int phase = uniform_int(0, period - 1);
      const double lo = uniform(30.0, 70.0);
      const double hi = uniform(180.0, 225.0);
      for (int y = 0; y < size; ++y) {
        const bool bright = ((y + phase) % period) < period / 2;
        for (int x = 0; x < size; ++x) px(x, y) = bright ? hi : lo;
      }
      break;
    }
    case 2: {
      const double radius = uniform(0.22, 0.34) * s;
      const double cx = uniform(0.35, 0.65) * s;
      const double cy = uniform(0.35, 0.65) * s;
      const bool bright_disk = uniform(0.0, 1.0) < 0.5;
      const double inside = bright_disk ? uniform(190.0, 235.0) : uniform(20.0, 60.0);
      const double outside = bright_disk ? uniform(60.0, 110.0) : uniform(150.0, 200.0);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
          px(x, y) = dx * dx + dy * dy <= radius * radius ? inside : outside;
        }
      break;
    }
    case 3: {
      const bool horizontal = uniform(0.0, 1.0) < 0.5;
      const bool rising = uniform(0.0, 1.0) < 0.5;
      const double lo = uniform(10.0, 50.0);
      const double hi = uniform(200.0, 245.0);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          double t = (horizontal ? x : y) / (s - 1.0);
          if (!rising) t = 1.0 - t;
          px(x, y) = lo + t * (hi - lo);
        }
      break;
    }
    default: {
      const int cell = std::max(2, static_cast<int>(std::lround(uniform(0.1, 0.2) * s)));
      const int ox = uniform_int(0, cell - 1);
      const int oy = uniform_int(0, cell - 1);
      const double lo = uniform(20.0, 60.0);
      const double hi = uniform(190.0, 235.0);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) px(x, y) = (((x + ox) / cell + (y + oy) / cell) % 2 == 0) ? hi : lo;
      break;
    }
  }

  return canvas;
}

inline Image quantize(const std::vector<double>& canvas, int size) {
  Image out(size, size, 1);
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    out.pixels()[i] = static_cast<std::uint8_t>(std::clamp(std::round(canvas[i]), 0.0, 255.0));
  }
  return out;
}

}  // namespace detail

/// The noise-free template that gen_scene perturbs.
inline Image scene_template(int class_id, int size, std::uint64_t seed) {
  return detail::quantize(detail::scene_canvas(class_id, size, seed), size);
}

/// Procedural stand-in for an indoor scene photograph.
///
/// Templates (all geometry scales with `size`):
///   0 living_room  two or three flat rectangles on a mid-gray wall
///   1 bathroom     horizontal stripes (tiles) with a random period
///   2 bedroom      a bright or dark disk on a flat background
///   3 kitchen      a smooth linear ramp along a random axis/direction
///   4 action       a checkerboard with a random cell size
/// Each template draws its free parameters from an RNG seeded by (class,
/// size, seed), so all noise levels share one layout; Gaussian noise of
/// `scene_noise_sigma(noise_level)` from a second stream is added and the
/// result is rounded and clamped to [0, 255].
inline Image gen_scene(int class_id, int size, int noise_level, std::uint64_t seed) {
  const double sigma = scene_noise_sigma(noise_level);
  std::vector<double> canvas = detail::scene_canvas(class_id, size, seed);
  std::mt19937_64 rng(detail::mix_seed({static_cast<std::uint64_t>(class_id), static_cast<std::uint64_t>(size),
                                        seed, static_cast<std::uint64_t>(noise_level), 0x6E6F697365ULL}));
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : canvas) v += noise(rng);
  return detail::quantize(canvas, size);
}

}  // namespace gmrf

#endif  // GMRF_SCENE_HPP_
