#ifndef GMRF_IMAGE_HPP_
#define GMRF_IMAGE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "gmrf/error.hpp"

namespace gmrf {

/// Row-major 8-bit raster with one (gray) or three (RGB) interleaved channels.
class Image {
 public:
  Image() = default;

  Image(int width, int height, int channels = 1, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    check_shape(width, height, channels);
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  Image(int width, int height, int channels, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    check_shape(width, height, channels);
    detail::require(pixels_.size() == static_cast<std::size_t>(width) * height * channels,
                    "image.size", "pixel buffer does not match width*height*channels");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  bool is_gray() const noexcept { return channels_ == 1; }

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  /// Edge-clamped read: coordinates outside the raster take the nearest border pixel.
  std::uint8_t clamped(int x, int y, int c = 0) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1), c);
  }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static void check_shape(int width, int height, int channels) {
    detail::require(width > 0 && height > 0, "image.shape", "image dimensions must be positive");
    detail::require(channels == 1 || channels == 3, "image.channels", "channels must be 1 or 3");
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> pixels_;
};

/// Gray = round((299 R + 587 G + 114 B) / 1000). Gray images are returned as-is.
inline Image to_gray(const Image& img) {
  if (img.is_gray()) return img;
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int weighted = 299 * img.at(x, y, 0) + 587 * img.at(x, y, 1) + 114 * img.at(x, y, 2);
      out.at(x, y) = static_cast<std::uint8_t>((weighted + 500) / 1000);
    }
  }
  return out;
}

inline void require_gray(const Image& img, const char* op) {
  detail::require(img.is_gray(), "image.channels", std::string(op) + " expects a single-channel image");
}

/// Per-pixel discrete strategy: a class label or an index into a displacement set.
class LabelField {
 public:
  LabelField() = default;

  LabelField(int width, int height, int label_count, int fill = 0)
      : width_(width), height_(height), label_count_(label_count) {
    detail::require(width > 0 && height > 0, "labels.shape", "label field dimensions must be positive");
    detail::require(label_count >= 1, "labels.count", "label count must be at least 1");
    detail::require(fill >= 0 && fill < label_count, "labels.range", "fill label out of range");
    labels_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  LabelField(int width, int height, int label_count, std::vector<int> labels)
      : width_(width), height_(height), label_count_(label_count), labels_(std::move(labels)) {
    detail::require(width > 0 && height > 0, "labels.shape", "label field dimensions must be positive");
    detail::require(label_count >= 1, "labels.count", "label count must be at least 1");
    detail::require(labels_.size() == static_cast<std::size_t>(width) * height, "labels.size",
                    "label buffer does not match width*height");
    for (int l : labels_) {
      detail::require(l >= 0 && l < label_count, "labels.range", "label out of range");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int label_count() const noexcept { return label_count_; }
  std::size_t size() const noexcept { return labels_.size(); }

  int operator[](std::size_t p) const { return labels_[p]; }
  int at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }

  void set(std::size_t p, int label) {
    detail::require(label >= 0 && label < label_count_, "labels.range", "label out of range");
    labels_[p] = label;
  }

  std::span<const int> labels() const noexcept { return labels_; }

  friend bool operator==(const LabelField&, const LabelField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int label_count_ = 1;
  std::vector<int> labels_;
};

/// Labels spread over 0..255 for viewing: label l maps to round(255 l / (L-1)).
inline Image labels_to_image(const LabelField& labels) {
  Image out(labels.width(), labels.height(), 1);
  const int span = std::max(1, labels.label_count() - 1);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    out.pixels()[p] = static_cast<std::uint8_t>((255 * labels[p] + span / 2) / span);
  }
  return out;
}

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Ordered, duplicate-free list of integer displacements that contains (0,0).
class DisplacementLabelSet {
 public:
  explicit DisplacementLabelSet(std::vector<Offset> offsets) : offsets_(std::move(offsets)) {
    detail::require(!offsets_.empty(), "displacement.empty", "displacement set is empty");
    bool has_zero = false;
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      const Offset& o = offsets_[i];
      has_zero = has_zero || (o.dx == 0 && o.dy == 0);
      radius_ = std::max({radius_, std::abs(o.dx), std::abs(o.dy)});
      for (std::size_t j = 0; j < i; ++j) {
        detail::require(!(offsets_[j] == o), "displacement.duplicate", "duplicate displacement offset");
      }
    }
    detail::require(has_zero, "displacement.zero", "displacement set must contain (0,0)");
  }

  /// Full square window [-r, r]^2 in raster order (dy outer, dx inner).
  static DisplacementLabelSet square(int radius) {
    detail::require(radius >= 0, "displacement.radius", "radius must be nonnegative");
    std::vector<Offset> offsets;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) offsets.push_back({dx, dy});
    }
    return DisplacementLabelSet(std::move(offsets));
  }

  int radius() const noexcept { return radius_; }
  int size() const noexcept { return static_cast<int>(offsets_.size()); }
  const Offset& operator[](int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  std::span<const Offset> offsets() const noexcept { return offsets_; }

  int index_of(Offset o) const {
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      if (offsets_[i] == o) return static_cast<int>(i);
    }
    return -1;
  }

 private:
  std::vector<Offset> offsets_;
  int radius_ = 0;
};

}  // namespace gmrf

#endif  // GMRF_IMAGE_HPP_
