#ifndef GMRF_CHECKPOINT_HPP_
#define GMRF_CHECKPOINT_HPP_

// Checkpoint layout, all integers little-endian:
//
//   8 bytes   magic "GMRFNET\0"
//   u32       version (1)
//   u32 x 3   input channels, height, width
//   u32       layer count L
//   L x 8 u32 kind, kernel_h, kernel_w, in, out, stride, pool, window
//   u64       parameter count P
//   P x f64   parameters (IEEE-754 binary64), layer order, weights then bias
//
// Layer kinds: 1 conv, 2 pool, 3 relu, 4 flatten, 5 dense. Pool: 0 max, 1 average.
// Conv weights are [out][in][kh][kw], dense weights [out][in].

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <type_traits>
#include <string>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/net.hpp"

namespace gmrf {

inline constexpr std::array<char, 8> kCheckpointMagic = {'G', 'M', 'R', 'F', 'N', 'E', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class LeReader {
 public:
  explicit LeReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) throw FormatError("checkpoint.truncated", "checkpoint ends early");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> write_checkpoint(const NetSpec& net) {
  validate_net(net);
  std::vector<std::uint8_t> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  for (int v : {net.input.c, net.input.h, net.input.w}) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const LayerSpec& l : net.layers) {
    for (std::uint32_t v : {static_cast<std::uint32_t>(l.kind), static_cast<std::uint32_t>(l.kernel_h),
                            static_cast<std::uint32_t>(l.kernel_w), static_cast<std::uint32_t>(l.in),
                            static_cast<std::uint32_t>(l.out), static_cast<std::uint32_t>(l.stride),
                            static_cast<std::uint32_t>(l.pool), static_cast<std::uint32_t>(l.window)}) {
      detail::put_le<std::uint32_t>(out, v);
    }
  }
  detail::put_le<std::uint64_t>(out, net.params.size());
  for (double p : net.params) detail::put_le<double>(out, p);
  return out;
}

inline NetSpec read_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCheckpointMagic.size() ||
      std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0) {
    throw FormatError("checkpoint.magic", "not a network checkpoint");
  }
  detail::LeReader r(bytes.subspan(kCheckpointMagic.size()));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint.version", "unsupported checkpoint version " + std::to_string(version));
  }
  NetSpec net;
  const auto dim = [&] {
    const auto v = r.get<std::uint32_t>();
    if (v == 0 || v > (1u << 20)) throw FormatError("checkpoint.layout", "dimension out of range");
    return static_cast<int>(v);
  };
  net.input = {dim(), dim(), dim()};
  const auto layer_count = r.get<std::uint32_t>();
  if (layer_count == 0 || layer_count > 1024) throw FormatError("checkpoint.layout", "layer count out of range");
  std::size_t offset = 0;
  for (std::uint32_t k = 0; k < layer_count; ++k) {
    std::array<std::uint32_t, 8> f{};
    for (auto& v : f) {
      v = r.get<std::uint32_t>();
      if (v > (1u << 24)) throw FormatError("checkpoint.layout", "layer field out of range");
    }
    if (f[0] < 1 || f[0] > 5 || f[6] > 1) throw FormatError("checkpoint.layout", "unknown layer or pool kind");
    LayerSpec l{static_cast<LayerKind>(f[0]), static_cast<int>(f[1]), static_cast<int>(f[2]), static_cast<int>(f[3]),
                static_cast<int>(f[4]), static_cast<int>(f[5]), static_cast<PoolKind>(f[6]), static_cast<int>(f[7]),
                offset};
    offset += l.param_count();
    net.layers.push_back(l);
  }
  const auto count = r.get<std::uint64_t>();
  if (count != offset) throw FormatError("checkpoint.layout", "parameter count does not match the layer table");
  net.params.reserve(offset);
  for (std::uint64_t i = 0; i < count; ++i) net.params.push_back(r.get<double>());
  if (!r.done()) throw FormatError("checkpoint.layout", "trailing bytes after the parameters");
  try {
    validate_net(net);
  } catch (const InvalidArgument& e) {
    throw FormatError("checkpoint.layout", e.what());
  }
  return net;
}

inline void save_checkpoint(const NetSpec& net, const std::string& path) {
  const auto bytes = write_checkpoint(net);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io.open", "cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("io.write", "failed writing " + path);
}

inline NetSpec load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io.open", "cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return read_checkpoint(bytes);
}

}  // namespace gmrf

#endif  // GMRF_CHECKPOINT_HPP_
