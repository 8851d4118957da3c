#ifndef GMRF_PNM_HPP_
#define GMRF_PNM_HPP_

#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/image.hpp"

namespace gmrf {

namespace detail {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads an unsigned decimal token.
  long next_number(const char* field) {
    skip_separators();
    if (pos_ >= bytes_.size() || !is_digit(bytes_[pos_])) {
      throw ParseError(ParseError::Reason::kHeader, std::string("expected ") + field + " in PNM header");
    }
    long value = 0;
    while (pos_ < bytes_.size() && is_digit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) {
        throw ParseError(ParseError::Reason::kHeader, std::string(field) + " is too large");
      }
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ParseError(ParseError::Reason::kHeader, "missing whitespace before PNM raster");
    }
    return pos_ + 1;
  }

 private:
  static bool is_digit(std::uint8_t c) { return c >= '0' && c <= '9'; }
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace detail

/// Decodes a binary P5 (gray) or P6 (RGB) image with maxval 255.
inline Image read_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError(ParseError::Reason::kHeader, "not a binary P5/P6 file");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  detail::PnmHeaderReader reader(bytes);
  const long width = reader.next_number("width");
  const long height = reader.next_number("height");
  const long maxval = reader.next_number("maxval");
  if (width <= 0 || height <= 0) {
    throw ParseError(ParseError::Reason::kHeader, "PNM dimensions must be positive");
  }
  if (maxval != 255) {
    throw ParseError(ParseError::Reason::kMaxval, "only maxval 255 is supported, got " + std::to_string(maxval));
  }
  const std::size_t start = reader.payload_start();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (bytes.size() < start || bytes.size() - start < need) {
    throw ParseError(ParseError::Reason::kTruncated,
                     "PNM raster truncated: need " + std::to_string(need) + " bytes, have " +
                         std::to_string(bytes.size() < start ? 0 : bytes.size() - start));
  }
  std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(start + need));
  return Image(static_cast<int>(width), static_cast<int>(height), channels, std::move(pixels));
}

/// Canonical encoding: "P5\n<w> <h>\n255\n" (or P6) followed by the raster.
inline std::vector<std::uint8_t> write_pnm(const Image& img) {
  const std::string header = std::string(img.is_gray() ? "P5" : "P6") + "\n" + std::to_string(img.width()) +
                             " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

inline Image load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("io.open", "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_pnm(bytes);
}

inline void save_pnm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("io.open", "cannot write " + path);
  const auto bytes = write_pnm(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace gmrf

#endif  // GMRF_PNM_HPP_
