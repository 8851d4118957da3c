#ifndef GMRF_PREPROCESS_HPP_
#define GMRF_PREPROCESS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/image.hpp"

namespace gmrf {

// ---------------------------------------------------------------------------
// Histogram equalization

struct HistogramSpec {
  std::array<std::size_t, 256> counts{};
  std::array<double, 256> cdf{};
  std::size_t total = 0;
};

inline HistogramSpec histogram(const Image& img) {
  require_gray(img, "histogram");
  HistogramSpec h;
  for (std::uint8_t v : img.pixels()) ++h.counts[v];
  h.total = img.pixel_count();
  std::size_t running = 0;
  for (std::size_t k = 0; k < 256; ++k) {
    running += h.counts[k];
    h.cdf[k] = static_cast<double>(running) / static_cast<double>(h.total);
  }
  return h;
}

/// Shannon entropy (bits) of the 256-bin intensity histogram.
inline double histogram_entropy(const Image& img) {
  const HistogramSpec h = histogram(img);
  double entropy = 0.0;
  for (std::size_t c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(h.total);
    entropy -= p * std::log2(p);
  }
  return entropy;
}

/// out(v) = floor((cdf(v) - cdf_min) / (1 - cdf_min) * 255), evaluated on
/// integer counts so the result is exact. Constant images come back unchanged.
inline Image equalize(const Image& img) {
  require_gray(img, "equalize");
  const HistogramSpec h = histogram(img);
  std::size_t first = 0;
  while (h.counts[first] == 0) ++first;
  const std::size_t min_count = h.counts[first];
  if (min_count == h.total) return img;

  std::array<std::uint8_t, 256> lut{};
  std::size_t running = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    running += h.counts[v];
    if (v < first) continue;
    lut[v] = static_cast<std::uint8_t>(((running - min_count) * 255) / (h.total - min_count));
  }
  Image out = img;
  for (std::uint8_t& v : out.pixels()) v = lut[v];
  return out;
}

// ---------------------------------------------------------------------------
// Frequency-domain filtering

enum class FilterMode { kLowpass, kHighpass };

namespace detail {

// In-place 1-D DFT of `data` sampled with `stride`; O(n^2) with a twiddle table.
inline void dft_1d(std::complex<double>* data, int n, int stride, bool inverse,
                   std::vector<std::complex<double>>& scratch) {
  scratch.assign(static_cast<std::size_t>(n), {});
  const double sign = inverse ? 1.0 : -1.0;
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc{};
    for (int t = 0; t < n; ++t) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(k) * t) % n) / n;
      acc += data[static_cast<std::ptrdiff_t>(t) * stride] * std::polar(1.0, angle);
    }
    scratch[static_cast<std::size_t>(k)] = inverse ? acc / static_cast<double>(n) : acc;
  }
  for (int k = 0; k < n; ++k) data[static_cast<std::ptrdiff_t>(k) * stride] = scratch[static_cast<std::size_t>(k)];
}

inline void dft_2d(std::vector<std::complex<double>>& grid, int width, int height, bool inverse) {
  std::vector<std::complex<double>> scratch;
  for (int y = 0; y < height; ++y) dft_1d(grid.data() + static_cast<std::ptrdiff_t>(y) * width, width, 1, inverse, scratch);
  for (int x = 0; x < width; ++x) dft_1d(grid.data() + x, height, width, inverse, scratch);
}

// Signed frequency index k in [-n/2, n/2] divided by n/2.
inline double normalized_frequency(int k, int n) {
  const int signed_k = k <= n / 2 ? k : k - n;
  return n > 1 ? static_cast<double>(signed_k) / (n / 2.0) : 0.0;
}

}  // namespace detail

/// Ideal circular frequency mask. The radial frequency of bin (u, v) is
/// sqrt(fu^2 + fv^2) / sqrt(2), where fu and fv are signed fractions of the
/// per-axis Nyquist frequency; the corner bin has radius 1, so a lowpass with
/// cutoff 1 keeps every bin. Lowpass keeps radius <= cutoff (always including
/// DC); highpass keeps radius > cutoff (never DC).
inline Image dft_enhance(const Image& img, FilterMode mode, double cutoff) {
  require_gray(img, "dft_enhance");
  detail::require(cutoff > 0.0 && cutoff <= 1.0, "dft.cutoff", "cutoff must lie in (0, 1]");
  const int w = img.width(), h = img.height();
  std::vector<std::complex<double>> grid(img.pixel_count());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(img.pixels()[i]);
  detail::dft_2d(grid, w, h, false);
  for (int v = 0; v < h; ++v) {
    const double fv = detail::normalized_frequency(v, h);
    for (int u = 0; u < w; ++u) {
      const double fu = detail::normalized_frequency(u, w);
      const double radius = std::sqrt(fu * fu + fv * fv) / std::numbers::sqrt2;
      const bool keep = (mode == FilterMode::kLowpass) ? (radius <= cutoff) : (radius > cutoff);
      if (!keep) grid[static_cast<std::size_t>(v) * w + u] = 0.0;
    }
  }
  detail::dft_2d(grid, w, h, true);
  Image out(w, h, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.pixels()[i] = static_cast<std::uint8_t>(std::clamp(std::round(grid[i].real()), 0.0, 255.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-level Haar wavelet enhancement

/// Orthonormal one-level 2-D Haar bands, each (width/2) x (height/2).
struct HaarBands {
  int width = 0;   // band width
  int height = 0;  // band height
  std::vector<double> ll, lh, hl, hh;
};

inline HaarBands haar_forward(const Image& img) {
  require_gray(img, "haar_forward");
  detail::require(img.width() % 2 == 0 && img.height() % 2 == 0, "haar.odd",
                  "Haar decomposition needs even width and height");
  HaarBands b;
  b.width = img.width() / 2;
  b.height = img.height() / 2;
  const std::size_t n = static_cast<std::size_t>(b.width) * b.height;
  b.ll.resize(n), b.lh.resize(n), b.hl.resize(n), b.hh.resize(n);
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const double a = img.at(2 * x, 2 * y), c = img.at(2 * x + 1, 2 * y);
      const double d = img.at(2 * x, 2 * y + 1), e = img.at(2 * x + 1, 2 * y + 1);
      const std::size_t i = static_cast<std::size_t>(y) * b.width + x;
      b.ll[i] = (a + c + d + e) / 2.0;
      b.lh[i] = (a - c + d - e) / 2.0;
      b.hl[i] = (a + c - d - e) / 2.0;
      b.hh[i] = (a - c - d + e) / 2.0;
    }
  }
  return b;
}

/// Inverse of haar_forward with the detail bands scaled by `detail_gain`,
/// rounded and clamped to [0, 255].
inline Image haar_inverse(const HaarBands& b, double detail_gain = 1.0) {
  Image out(2 * b.width, 2 * b.height, 1);
  auto put = [&out](int x, int y, double v) {
    out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  };
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * b.width + x;
      const double ll = b.ll[i], lh = detail_gain * b.lh[i], hl = detail_gain * b.hl[i], hh = detail_gain * b.hh[i];
      put(2 * x, 2 * y, (ll + lh + hl + hh) / 2.0);
      put(2 * x + 1, 2 * y, (ll - lh + hl - hh) / 2.0);
      put(2 * x, 2 * y + 1, (ll + lh - hl - hh) / 2.0);
      put(2 * x + 1, 2 * y + 1, (ll - lh - hl + hh) / 2.0);
    }
  }
  return out;
}

inline constexpr std::array<double, 4> kHaarGainGrid = {1.0, 1.25, 1.5, 2.0};

struct HaarOptions {
  bool equalize_low = true;
  std::vector<double> gains{kHaarGainGrid.begin(), kHaarGainGrid.end()};
};

/// Equalizes the LL band (as block-mean intensities) and scales the detail
/// bands by the grid gain whose reconstruction has the highest histogram
/// entropy; the smallest gain wins ties.
inline Image haar_enhance(const Image& img, const HaarOptions& options = {}) {
  HaarBands bands = haar_forward(img);
  if (options.equalize_low) {
    Image low(bands.width, bands.height, 1);
    for (std::size_t i = 0; i < bands.ll.size(); ++i) {
      low.pixels()[i] = static_cast<std::uint8_t>(std::clamp(std::round(bands.ll[i] / 2.0), 0.0, 255.0));
    }
    const Image eq = equalize(low);
    for (std::size_t i = 0; i < bands.ll.size(); ++i) bands.ll[i] = 2.0 * eq.pixels()[i];
  }
  detail::require(!options.gains.empty(), "haar.gains", "gain grid is empty");
  Image best;
  double best_entropy = -1.0;
  for (double gain : options.gains) {
    Image candidate = haar_inverse(bands, gain);
    const double entropy = histogram_entropy(candidate);
    if (entropy > best_entropy) {
      best_entropy = entropy;
      best = std::move(candidate);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Least-squares bias model y = a + b x + u

struct BiasModel {
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<double> residuals;
  double sse = 0.0;

  double predict(double x) const { return intercept + slope * x; }
};

inline double bias_sse(std::span<const double> xs, std::span<const double> ys, double intercept, double slope) {
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - intercept - slope * xs[i];
    sse += r * r;
  }
  return sse;
}

inline BiasModel fit_bias(std::span<const double> xs, std::span<const double> ys) {
  detail::require(xs.size() == ys.size(), "bias.length", "xs and ys differ in length");
  detail::require(xs.size() >= 2, "bias.samples", "need at least two samples");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n, my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("bias.degenerate", "xs are all equal; slope is undetermined");

  BiasModel m;
  m.slope = sxy / sxx;
  m.intercept = my - m.slope * mx;
  m.residuals.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    m.residuals[i] = ys[i] - m.intercept - m.slope * xs[i];
    m.sse += m.residuals[i] * m.residuals[i];
  }
  return m;
}

}  // namespace gmrf

#endif  // GMRF_PREPROCESS_HPP_
