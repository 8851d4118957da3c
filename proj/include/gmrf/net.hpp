#ifndef GMRF_NET_HPP_
#define GMRF_NET_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gmrf/error.hpp"
#include "gmrf/image.hpp"

namespace gmrf {

/// Channel-major (C x H x W) activation volume. Vectors are C x 1 x 1.
struct Shape {
  int c = 1;
  int h = 1;
  int w = 1;
  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind : std::uint32_t { kConv = 1, kPool = 2, kRelu = 3, kFlatten = 4, kDense = 5 };
enum class PoolKind : std::uint32_t { kMax = 0, kAverage = 1 };

/// One layer of the stack. Only the fields relevant to `kind` are used:
/// conv uses kernel/in/out/stride, pool uses pool/window/stride, dense uses
/// in/out. Parameters live in NetSpec::params starting at `offset`.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int kernel_h = 0;
  int kernel_w = 0;
  int in = 0;
  int out = 0;
  int stride = 1;
  PoolKind pool = PoolKind::kMax;
  int window = 0;
  std::size_t offset = 0;

  std::size_t weight_count() const {
    switch (kind) {
      case LayerKind::kConv: return static_cast<std::size_t>(out) * in * kernel_h * kernel_w;
      case LayerKind::kDense: return static_cast<std::size_t>(out) * in;
      default: return 0;
    }
  }
  std::size_t param_count() const {
    return weight_count() + ((kind == LayerKind::kConv || kind == LayerKind::kDense) ? static_cast<std::size_t>(out) : 0);
  }
};

/// A feed-forward layer stack with all parameters in one flat vector.
/// The embedding of an input is the activation entering the last dense layer.
struct NetSpec {
  Shape input;
  std::vector<LayerSpec> layers;
  std::vector<double> params;

  std::size_t param_count() const { return params.size(); }
};

/// Output shape of `layer` for input `in`; throws on incompatible shapes.
inline Shape layer_output_shape(const LayerSpec& layer, const Shape& in) {
  switch (layer.kind) {
    case LayerKind::kConv: {
      detail::require(in.c == layer.in, "net.shape", "conv input channels mismatch");
      detail::require(layer.kernel_h <= in.h && layer.kernel_w <= in.w && layer.stride >= 1, "net.shape",
                      "conv kernel larger than its input");
      return {layer.out, (in.h - layer.kernel_h) / layer.stride + 1, (in.w - layer.kernel_w) / layer.stride + 1};
    }
    case LayerKind::kPool:
      detail::require(layer.window >= 1 && layer.window <= in.h && layer.window <= in.w && layer.stride >= 1,
                      "net.shape", "pool window larger than its input");
      return {in.c, (in.h - layer.window) / layer.stride + 1, (in.w - layer.window) / layer.stride + 1};
    case LayerKind::kRelu: return in;
    case LayerKind::kFlatten: return {static_cast<int>(in.size()), 1, 1};
    case LayerKind::kDense:
      detail::require(in.h == 1 && in.w == 1 && in.c == layer.in, "net.shape", "dense input size mismatch");
      return {layer.out, 1, 1};
  }
  throw InvalidArgument("net.layer", "unknown layer kind");
}

/// Validates shapes, parameter offsets and finiteness; returns per-layer
/// output shapes.
inline std::vector<Shape> validate_net(const NetSpec& net) {
  detail::require(!net.layers.empty(), "net.empty", "network has no layers");
  std::vector<Shape> shapes;
  Shape s = net.input;
  std::size_t offset = 0;
  for (const LayerSpec& l : net.layers) {
    detail::require(l.offset == offset, "net.params", "parameter offsets are not contiguous");
    offset += l.param_count();
    s = layer_output_shape(l, s);
    shapes.push_back(s);
  }
  detail::require(offset == net.params.size(), "net.params", "parameter vector has the wrong length");
  for (double p : net.params) detail::require(std::isfinite(p), "net.params", "non-finite parameter");
  detail::require(net.layers.back().kind == LayerKind::kDense, "net.layout", "last layer must be dense");
  return shapes;
}

/// Fluent construction with seeded uniform init in +-sqrt(6 / (fan_in + fan_out)); biases start at 0.
class NetBuilder {
 public:
  explicit NetBuilder(Shape input) { net_.input = input; current_ = input; }

  NetBuilder& conv(int kernel, int out, int stride = 1) {
    return add({LayerKind::kConv, kernel, kernel, current_.c, out, stride, PoolKind::kMax, 0, 0});
  }
  NetBuilder& max_pool(int window, int stride) {
    return add({LayerKind::kPool, 0, 0, 0, 0, stride, PoolKind::kMax, window, 0});
  }
  NetBuilder& avg_pool(int window, int stride) {
    return add({LayerKind::kPool, 0, 0, 0, 0, stride, PoolKind::kAverage, window, 0});
  }
  NetBuilder& relu() { return add({LayerKind::kRelu}); }
  NetBuilder& flatten() { return add({LayerKind::kFlatten}); }
  NetBuilder& dense(int out) {
    return add({LayerKind::kDense, 0, 0, static_cast<int>(current_.size()), out, 1, PoolKind::kMax, 0, 0});
  }

  NetSpec build(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    net_.params.assign(offset_, 0.0);
    for (const LayerSpec& l : net_.layers) {
      if (l.weight_count() == 0) continue;
      const int receptive = l.kind == LayerKind::kConv ? l.kernel_h * l.kernel_w : 1;
      const double limit = std::sqrt(6.0 / static_cast<double>((l.in + l.out) * receptive));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (std::size_t i = 0; i < l.weight_count(); ++i) net_.params[l.offset + i] = u(rng);
    }
    validate_net(net_);
    return net_;
  }

 private:
  NetBuilder& add(LayerSpec l) {
    l.offset = offset_;
    current_ = layer_output_shape(l, current_);
    offset_ += l.param_count();
    net_.layers.push_back(l);
    return *this;
  }

  NetSpec net_;
  Shape current_;
  std::size_t offset_ = 0;
};

inline constexpr int kDefaultEmbedding = 32;

/// conv3x3(8) - relu - maxpool2 - conv3x3(16) - relu - maxpool2 - flatten -
/// dense(32) - relu - dense(classes).
inline NetSpec make_default_net(int input_size, std::uint64_t seed, int classes = 5) {
  detail::require(input_size >= 10, "net.shape", "default network needs inputs of at least 10x10");
  return NetBuilder({1, input_size, input_size})
      .conv(3, 8).relu().max_pool(2, 2)
      .conv(3, 16).relu().max_pool(2, 2)
      .flatten().dense(kDefaultEmbedding).relu().dense(classes)
      .build(seed);
}

/// Intensities / 255 as a 1 x H x W volume.
inline std::vector<double> image_input(const Image& img) {
  require_gray(img, "image_input");
  std::vector<double> x(img.pixel_count());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = img.pixels()[i] / 255.0;
  return x;
}

/// Activations of one forward pass: acts[0] is the input, acts[k+1] the
/// output of layer k. pool_argmax[k] records max-pool winners (input index
/// per output element) for layer k.
struct ForwardCache {
  std::vector<Shape> shapes;  // shapes[k] matches acts[k]
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<std::size_t>> pool_argmax;

  std::span<const double> output() const { return acts.back(); }
  /// Input to the last dense layer.
  std::span<const double> embedding() const { return acts[acts.size() - 2]; }
};

namespace detail {

inline void conv_forward(const LayerSpec& l, std::span<const double> p, const Shape& is, const Shape& os,
                         std::span<const double> in, std::vector<double>& out) {
  out.assign(os.size(), 0.0);
  const double* w = p.data() + l.offset;
  const double* b = w + l.weight_count();
  for (int o = 0; o < os.c; ++o) {
    for (int y = 0; y < os.h; ++y) {
      for (int x = 0; x < os.w; ++x) {
        double acc = b[o];
        for (int i = 0; i < is.c; ++i) {
          const double* wk = w + ((static_cast<std::size_t>(o) * is.c + i) * l.kernel_h) * l.kernel_w;
          const double* plane = in.data() + static_cast<std::size_t>(i) * is.h * is.w;
          for (int ky = 0; ky < l.kernel_h; ++ky) {
            const double* row = plane + static_cast<std::size_t>(y * l.stride + ky) * is.w + x * l.stride;
            for (int kx = 0; kx < l.kernel_w; ++kx) acc += wk[ky * l.kernel_w + kx] * row[kx];
          }
        }
        out[(static_cast<std::size_t>(o) * os.h + y) * os.w + x] = acc;
      }
    }
  }
}

inline void conv_backward(const LayerSpec& l, std::span<const double> p, const Shape& is, const Shape& os,
                          std::span<const double> in, std::span<const double> dout, std::vector<double>& din,
                          std::span<double> grad) {
  din.assign(is.size(), 0.0);
  const double* w = p.data() + l.offset;
  double* dw = grad.data() + l.offset;
  double* db = dw + l.weight_count();
  for (int o = 0; o < os.c; ++o) {
    for (int y = 0; y < os.h; ++y) {
      for (int x = 0; x < os.w; ++x) {
        const double g = dout[(static_cast<std::size_t>(o) * os.h + y) * os.w + x];
        if (g == 0.0) continue;
        db[o] += g;
        for (int i = 0; i < is.c; ++i) {
          const std::size_t kbase = ((static_cast<std::size_t>(o) * is.c + i) * l.kernel_h) * l.kernel_w;
          const std::size_t pbase = static_cast<std::size_t>(i) * is.h * is.w;
          for (int ky = 0; ky < l.kernel_h; ++ky) {
            const std::size_t rbase = pbase + static_cast<std::size_t>(y * l.stride + ky) * is.w + x * l.stride;
            for (int kx = 0; kx < l.kernel_w; ++kx) {
              dw[kbase + ky * l.kernel_w + kx] += g * in[rbase + kx];
              din[rbase + kx] += g * w[kbase + ky * l.kernel_w + kx];
            }
          }
        }
      }
    }
  }
}

inline void pool_forward(const LayerSpec& l, const Shape& is, const Shape& os, std::span<const double> in,
                         std::vector<double>& out, std::vector<std::size_t>& argmax) {
  out.assign(os.size(), 0.0);
  argmax.assign(l.pool == PoolKind::kMax ? os.size() : 0, 0);
  const double area = static_cast<double>(l.window) * l.window;
  for (int c = 0; c < os.c; ++c) {
    for (int y = 0; y < os.h; ++y) {
      for (int x = 0; x < os.w; ++x) {
        const std::size_t o = (static_cast<std::size_t>(c) * os.h + y) * os.w + x;
        double best = -INFINITY, sum = 0.0;
        std::size_t best_at = 0;
        for (int wy = 0; wy < l.window; ++wy) {
          for (int wx = 0; wx < l.window; ++wx) {
            const std::size_t i = (static_cast<std::size_t>(c) * is.h + y * l.stride + wy) * is.w + x * l.stride + wx;
            sum += in[i];
            if (in[i] > best) best = in[i], best_at = i;
          }
        }
        if (l.pool == PoolKind::kMax) {
          out[o] = best;
          argmax[o] = best_at;
        } else {
          out[o] = sum / area;
        }
      }
    }
  }
}

inline void pool_backward(const LayerSpec& l, const Shape& is, const Shape& os, std::span<const double> dout,
                          const std::vector<std::size_t>& argmax, std::vector<double>& din) {
  din.assign(is.size(), 0.0);
  const double area = static_cast<double>(l.window) * l.window;
  for (int c = 0; c < os.c; ++c) {
    for (int y = 0; y < os.h; ++y) {
      for (int x = 0; x < os.w; ++x) {
        const std::size_t o = (static_cast<std::size_t>(c) * os.h + y) * os.w + x;
        if (l.pool == PoolKind::kMax) {
          din[argmax[o]] += dout[o];
          continue;
        }
        for (int wy = 0; wy < l.window; ++wy)
          for (int wx = 0; wx < l.window; ++wx)
            din[(static_cast<std::size_t>(c) * is.h + y * l.stride + wy) * is.w + x * l.stride + wx] += dout[o] / area;
      }
    }
  }
}

inline void dense_forward(const LayerSpec& l, std::span<const double> p, std::span<const double> in,
                          std::vector<double>& out) {
  const double* w = p.data() + l.offset;
  const double* b = w + l.weight_count();
  out.assign(static_cast<std::size_t>(l.out), 0.0);
  for (int o = 0; o < l.out; ++o) {
    double acc = b[o];
    const double* row = w + static_cast<std::size_t>(o) * l.in;
    for (int i = 0; i < l.in; ++i) acc += row[i] * in[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] = acc;
  }
}

inline void dense_backward(const LayerSpec& l, std::span<const double> p, std::span<const double> in,
                           std::span<const double> dout, std::vector<double>& din, std::span<double> grad) {
  const double* w = p.data() + l.offset;
  double* dw = grad.data() + l.offset;
  double* db = dw + l.weight_count();
  din.assign(static_cast<std::size_t>(l.in), 0.0);
  for (int o = 0; o < l.out; ++o) {
    const double g = dout[static_cast<std::size_t>(o)];
    if (g == 0.0) continue;
    db[o] += g;
    const std::size_t base = static_cast<std::size_t>(o) * l.in;
    for (int i = 0; i < l.in; ++i) {
      dw[base + i] += g * in[static_cast<std::size_t>(i)];
      din[static_cast<std::size_t>(i)] += g * w[base + i];
    }
  }
}

}  // namespace detail

/// Runs the stack on a C x H x W input volume, keeping every activation.
inline ForwardCache forward_cached(const NetSpec& net, std::span<const double> input,
                                   std::span<const double> params) {
  detail::require(input.size() == net.input.size(), "net.input", "input size does not match the network");
  ForwardCache cache;
  cache.shapes.push_back(net.input);
  cache.acts.emplace_back(input.begin(), input.end());
  cache.pool_argmax.resize(net.layers.size());
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const LayerSpec& l = net.layers[k];
    const Shape is = cache.shapes.back();
    const Shape os = layer_output_shape(l, is);
    std::vector<double> out;
    const std::vector<double>& in = cache.acts.back();
    switch (l.kind) {
      case LayerKind::kConv: detail::conv_forward(l, params, is, os, in, out); break;
      case LayerKind::kPool: detail::pool_forward(l, is, os, in, out, cache.pool_argmax[k]); break;
      case LayerKind::kRelu:
        out = in;
        for (double& v : out) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::kFlatten: out = in; break;
      case LayerKind::kDense: detail::dense_forward(l, params, in, out); break;
    }
    cache.shapes.push_back(os);
    cache.acts.push_back(std::move(out));
  }
  return cache;
}

inline ForwardCache forward_cached(const NetSpec& net, std::span<const double> input) {
  return forward_cached(net, input, net.params);
}

/// Backpropagates d(loss)/d(output) plus an optional extra gradient injected
/// at the embedding, accumulating parameter gradients into `grad`.
inline void backward(const NetSpec& net, const ForwardCache& cache, std::span<const double> params,
                     std::span<const double> d_output, std::span<const double> d_embedding, std::span<double> grad) {
  detail::require(grad.size() == params.size(), "net.grad", "gradient buffer has the wrong length");
  std::vector<double> dcur(d_output.begin(), d_output.end()), dnext;
  const std::size_t embedding_act = cache.acts.size() - 2;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const LayerSpec& l = net.layers[k];
    const Shape& is = cache.shapes[k];
    const Shape& os = cache.shapes[k + 1];
    const std::vector<double>& in = cache.acts[k];
    switch (l.kind) {
      case LayerKind::kConv: detail::conv_backward(l, params, is, os, in, dcur, dnext, grad); break;
      case LayerKind::kPool: detail::pool_backward(l, is, os, dcur, cache.pool_argmax[k], dnext); break;
      case LayerKind::kRelu:
        dnext = dcur;
        for (std::size_t i = 0; i < dnext.size(); ++i)
          if (!(in[i] > 0.0)) dnext[i] = 0.0;
        break;
      case LayerKind::kFlatten: dnext = dcur; break;
      case LayerKind::kDense: detail::dense_backward(l, params, in, dcur, dnext, grad); break;
    }
    dcur.swap(dnext);
    if (k == embedding_act && !d_embedding.empty()) {
      for (std::size_t i = 0; i < dcur.size(); ++i) dcur[i] += d_embedding[i];
    }
  }
}

struct ForwardResult {
  std::vector<double> embedding;
  std::vector<double> scores;
};

inline ForwardResult forward(const NetSpec& net, const Image& img) {
  detail::require(img.is_gray() && img.width() == net.input.w && img.height() == net.input.h && net.input.c == 1,
                  "net.input", "image shape does not match the network input");
  const ForwardCache cache = forward_cached(net, image_input(img));
  return {{cache.embedding().begin(), cache.embedding().end()}, {cache.output().begin(), cache.output().end()}};
}

struct Prediction {
  int label = 0;
  std::vector<double> scores;
};

/// Argmax of the class scores; ties go to the lowest class index.
inline Prediction predict(const NetSpec& net, const Image& img) {
  ForwardResult r = forward(net, img);
  const auto it = std::max_element(r.scores.begin(), r.scores.end());
  return {static_cast<int>(it - r.scores.begin()), std::move(r.scores)};
}

}  // namespace gmrf

#endif  // GMRF_NET_HPP_
