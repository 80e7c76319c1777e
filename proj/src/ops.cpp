#include "depthguard/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace depthguard {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require_same_dtype(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.dtype() != b.dtype())
    fail(ErrorCode::invalid_argument, std::string(op) + ": dtype mismatch (" +
                                          std::string(to_string(a.dtype())) + " vs " +
                                          std::string(to_string(b.dtype())) + ")");
}

Tensor finished(Tensor t, std::string_view op) {
  check_finite(t, op);
  return t;
}

// ---------------------------------------------------------------------------
// Elementwise unary

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& x, std::string op, Fwd fwd, Bwd bwd) {
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = x.data<T>();
    auto dst = out.mutable_data<T>();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<T>(fwd(static_cast<double>(src[i])));
  });
  finished(out, op);
  const Tensor xs = x.detach();
  const Tensor ys = out.detach();
  return record(out, op, {x}, [xs, ys, bwd](const Tensor& g) {
    Tensor gx = Tensor::zeros(xs.shape(), xs.dtype());
    dispatch(xs.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto xv = xs.data<T>();
      auto yv = ys.data<T>();
      auto gv = g.data<T>();
      auto dst = gx.mutable_data<T>();
      for (std::size_t i = 0; i < xv.size(); ++i)
        dst[i] = static_cast<T>(bwd(static_cast<double>(xv[i]), static_cast<double>(yv[i]),
                                    static_cast<double>(gv[i])));
    });
    return std::vector<Tensor>{gx};
  });
}

// ---------------------------------------------------------------------------
// Elementwise binary with single-element broadcast

enum class Bin { add, sub, mul, div };

Shape broadcast_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.numel() == 1) return a.shape();
  if (a.numel() == 1) return b.shape();
  fail(ErrorCode::shape_mismatch, std::string(op) + ": incompatible shapes " + to_string(a.shape()) +
                                      " and " + to_string(b.shape()));
}

// Sums a full-size gradient down to the operand's shape.
template <typename T>
Tensor reduce_to(const Tensor& full, const Tensor& operand) {
  if (full.shape() == operand.shape()) return full;
  double acc = 0.0;
  for (auto v : full.data<T>()) acc += v;
  return Tensor::full(operand.shape(), acc, operand.dtype());
}

Tensor binary(const Tensor& a, const Tensor& b, Bin kind, const char* op) {
  require_same_dtype(a, b, op);
  const Shape shape = broadcast_shape(a, b, op);
  Tensor out = Tensor::zeros(shape, a.dtype());
  const std::size_t n = numel_of(shape);
  const std::size_t sa = a.numel() == n ? 1 : 0;
  const std::size_t sb = b.numel() == n ? 1 : 0;
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto av = a.data<T>();
    auto bv = b.data<T>();
    auto ov = out.mutable_data<T>();
    switch (kind) {
      case Bin::add: for (std::size_t i = 0; i < n; ++i) ov[i] = av[i * sa] + bv[i * sb]; break;
      case Bin::sub: for (std::size_t i = 0; i < n; ++i) ov[i] = av[i * sa] - bv[i * sb]; break;
      case Bin::mul: for (std::size_t i = 0; i < n; ++i) ov[i] = av[i * sa] * bv[i * sb]; break;
      case Bin::div: for (std::size_t i = 0; i < n; ++i) ov[i] = av[i * sa] / bv[i * sb]; break;
    }
  });
  finished(out, op);
  const Tensor ad = a.detach();
  const Tensor bd = b.detach();
  return record(out, op, {a, b}, [ad, bd, kind, sa, sb, n](const Tensor& g) {
    Tensor ga = Tensor::zeros(g.shape(), g.dtype());
    Tensor gb = Tensor::zeros(g.shape(), g.dtype());
    std::vector<Tensor> result(2);
    dispatch(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto av = ad.data<T>();
      auto bv = bd.data<T>();
      auto gv = g.data<T>();
      auto gav = ga.mutable_data<T>();
      auto gbv = gb.mutable_data<T>();
      for (std::size_t i = 0; i < n; ++i) {
        const T x = av[i * sa];
        const T y = bv[i * sb];
        switch (kind) {
          case Bin::add: gav[i] = gv[i]; gbv[i] = gv[i]; break;
          case Bin::sub: gav[i] = gv[i]; gbv[i] = -gv[i]; break;
          case Bin::mul: gav[i] = gv[i] * y; gbv[i] = gv[i] * x; break;
          case Bin::div: gav[i] = gv[i] / y; gbv[i] = -gv[i] * x / (y * y); break;
        }
      }
      result[0] = reduce_to<T>(ga, ad);
      result[1] = reduce_to<T>(gb, bd);
    });
    return result;
  });
}

// ---------------------------------------------------------------------------
// Convolution helpers

struct ConvGeometry {
  std::size_t c_in, h, w, c_out, k, stride, pad, h_out, w_out;
  std::size_t patch() const { return c_in * k * k; }
  std::size_t pixels() const { return h_out * w_out; }
  bool trivial() const { return k == 1 && stride == 1 && pad == 0; }
};

template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* col) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((c * g.k + ky) * g.k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.h_out; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          T* dst = row + oy * g.w_out;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.w_out, T(0));
            continue;
          }
          const T* src = in + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.w_out; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* out) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((c * g.k + ky) * g.k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.h_out; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          T* dst = out + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* src = row + oy * g.w_out;
          for (std::size_t ox = 0; ox < g.w_out; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Bilinear tables for exact 2x upsampling with half-pixel centers

struct Tap {
  std::size_t i0, i1;
  double w0, w1;
};

std::vector<Tap> upsample_taps(std::size_t n) {
  std::vector<Tap> taps(2 * n);
  for (std::size_t o = 0; o < 2 * n; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    if (src < 0.0) src = 0.0;
    const auto i0 = static_cast<std::size_t>(src);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double l = src - static_cast<double>(i0);
    taps[o] = {i0, i1, 1.0 - l, l};
  }
  return taps;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Bin::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Bin::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Bin::mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, Bin::div, "div"); }

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, "add_scalar", [s](double x) { return x + s; },
               [](double, double, double g) { return g; });
}

Tensor scalar_mul(const Tensor& a, double s) {
  return unary(a, "scalar_mul", [s](double x) { return x * s; },
               [s](double, double, double g) { return g * s; });
}

Tensor neg(const Tensor& a) {
  return unary(a, "neg", [](double x) { return -x; }, [](double, double, double g) { return -g; });
}

Tensor abs(const Tensor& a) {
  return unary(a, "abs", [](double x) { return std::abs(x); },
               [](double x, double, double g) { return x > 0 ? g : (x < 0 ? -g : 0.0); });
}

Tensor ln(const Tensor& a) {
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto v = a.data<T>();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] > T(0)))
        fail(ErrorCode::domain, "ln: non-positive argument " + std::to_string(static_cast<double>(v[i])) +
                                    " at flat index " + std::to_string(i));
  });
  return unary(a, "ln", [](double x) { return std::log(x); },
               [](double x, double, double g) { return g / x; });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); },
               [](double, double y, double g) { return g * y; });
}

Tensor sqrt(const Tensor& a) {
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto v = a.data<T>();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] < T(0)) fail(ErrorCode::domain, "sqrt: negative argument at flat index " + std::to_string(i));
  });
  return unary(a, "sqrt", [](double x) { return std::sqrt(x); },
               [](double, double y, double g) { return y > 0 ? g / (2.0 * y) : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, "square", [](double x) { return x * x; },
               [](double x, double, double g) { return 2.0 * x * g; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) fail(ErrorCode::invalid_argument, "clamp: lo > hi");
  return unary(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double, double g) { return (x > lo && x < hi) ? g : 0.0; });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double, double g) { return x > 0 ? g : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y, double g) { return g * y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, "softplus",
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double, double g) {
        if (x >= 0) return g / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return g * e / (1.0 + e);
      });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    for (auto v : a.data<T>()) acc += static_cast<double>(v);
  });
  Tensor out = finished(Tensor::scalar(acc, a.dtype()), "sum");
  const Shape shape = a.shape();
  return record(out, "sum", {a}, [shape](const Tensor& g) {
    return std::vector<Tensor>{Tensor::full(shape, g.item(), g.dtype())};
  });
}

Tensor mean(const Tensor& a) {
  double acc = 0.0;
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    for (auto v : a.data<T>()) acc += static_cast<double>(v);
  });
  const double n = static_cast<double>(a.numel());
  Tensor out = finished(Tensor::scalar(acc / n, a.dtype()), "mean");
  const Shape shape = a.shape();
  return record(out, "mean", {a}, [shape, n](const Tensor& g) {
    return std::vector<Tensor>{Tensor::full(shape, g.item() / n, g.dtype())};
  });
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  if (input.ndim() != 3) fail(ErrorCode::shape_mismatch, "conv2d: input must be [C,H,W], got " + to_string(input.shape()));
  if (weight.ndim() != 4)
    fail(ErrorCode::shape_mismatch, "conv2d: weight must be [C_out,C_in,k,k], got " + to_string(weight.shape()));
  require_same_dtype(input, weight, "conv2d");
  if (stride == 0) fail(ErrorCode::invalid_argument, "conv2d: stride must be positive");
  ConvGeometry g{};
  g.c_in = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.c_out = weight.dim(0);
  g.k = weight.dim(2);
  g.stride = stride;
  g.pad = padding;
  if (weight.dim(1) != g.c_in)
    fail(ErrorCode::shape_mismatch, "conv2d: weight expects " + std::to_string(weight.dim(1)) +
                                        " input channels, input has " + std::to_string(g.c_in));
  if (weight.dim(3) != g.k) fail(ErrorCode::shape_mismatch, "conv2d: kernel must be square");
  if (g.k % 2 == 0) fail(ErrorCode::invalid_argument, "conv2d: kernel size must be odd");
  if (bias.defined()) {
    require_same_dtype(input, bias, "conv2d");
    if (bias.shape() != Shape{g.c_out})
      fail(ErrorCode::shape_mismatch, "conv2d: bias must be [C_out], got " + to_string(bias.shape()));
  }
  if (g.h + 2 * padding < g.k || g.w + 2 * padding < g.k)
    fail(ErrorCode::shape_mismatch, "conv2d: kernel larger than padded input " + to_string(input.shape()));
  g.h_out = (g.h + 2 * padding - g.k) / stride + 1;
  g.w_out = (g.w + 2 * padding - g.k) / stride + 1;

  Tensor out = Tensor::zeros({g.c_out, g.h_out, g.w_out}, input.dtype());
  auto col_store = std::make_shared<detail::Storage>();
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = input.data<T>().data();
    const T* col = in;
    if (!g.trivial()) {
      std::vector<T> buffer(g.patch() * g.pixels());
      im2col(in, g, buffer.data());
      col_store->buffer = std::move(buffer);
      col = std::get<std::vector<T>>(col_store->buffer).data();
    }
    ConstMatMap<T> wm(weight.data<T>().data(), g.c_out, g.patch());
    ConstMatMap<T> cm(col, g.patch(), g.pixels());
    MatMap<T> om(out.mutable_data<T>().data(), g.c_out, g.pixels());
    om.noalias() = wm * cm;
    if (bias.defined()) {
      const auto bv = bias.data<T>();
      for (std::size_t c = 0; c < g.c_out; ++c) om.row(c).array() += bv[c];
    }
  });
  finished(out, "conv2d");

  const Tensor in_d = input.detach();
  const Tensor w_d = weight.detach();
  const bool need_input = input.requires_grad();
  const bool need_weight = weight.requires_grad();
  const bool need_bias = bias.defined() && bias.requires_grad();
  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return record(out, "conv2d", std::move(inputs),
                [g, in_d, w_d, col_store, need_input, need_weight, need_bias](const Tensor& grad) {
                  std::vector<Tensor> result(3);
                  dispatch(grad.dtype(), [&](auto tag) {
                    using T = decltype(tag);
                    const T* col = g.trivial() ? in_d.data<T>().data()
                                               : std::get<std::vector<T>>(col_store->buffer).data();
                    ConstMatMap<T> gm(grad.data<T>().data(), g.c_out, g.pixels());
                    if (need_weight) {
                      Tensor gw = Tensor::zeros(w_d.shape(), w_d.dtype());
                      MatMap<T> gwm(gw.mutable_data<T>().data(), g.c_out, g.patch());
                      ConstMatMap<T> cm(col, g.patch(), g.pixels());
                      gwm.noalias() = gm * cm.transpose();
                      result[1] = gw;
                    }
                    if (need_bias) {
                      Tensor gb = Tensor::zeros({g.c_out}, grad.dtype());
                      auto gbv = gb.mutable_data<T>();
                      const auto gv = grad.data<T>();
                      for (std::size_t c = 0; c < g.c_out; ++c) {
                        double acc = 0.0;
                        for (std::size_t p = 0; p < g.pixels(); ++p) acc += gv[c * g.pixels() + p];
                        gbv[c] = static_cast<T>(acc);
                      }
                      result[2] = gb;
                    }
                    if (need_input) {
                      Tensor gi = Tensor::zeros(in_d.shape(), in_d.dtype());
                      ConstMatMap<T> wm(w_d.data<T>().data(), g.c_out, g.patch());
                      if (g.trivial()) {
                        MatMap<T> gim(gi.mutable_data<T>().data(), g.patch(), g.pixels());
                        gim.noalias() = wm.transpose() * gm;
                      } else {
                        RowMat<T> dcol(g.patch(), g.pixels());
                        dcol.noalias() = wm.transpose() * gm;
                        col2im(dcol.data(), g, gi.mutable_data<T>().data());
                      }
                      result[0] = gi;
                    }
                  });
                  return result;
                });
}

Tensor bilinear_upsample2x(const Tensor& input) {
  if (input.ndim() != 3)
    fail(ErrorCode::shape_mismatch, "bilinear_upsample2x: input must be [C,H,W], got " + to_string(input.shape()));
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h < 2 || w < 2)
    fail(ErrorCode::invalid_argument, "bilinear_upsample2x: degenerate extent " + to_string(input.shape()));
  const auto ty = upsample_taps(h);
  const auto tx = upsample_taps(w);
  const std::size_t ho = 2 * h, wo = 2 * w;
  Tensor out = Tensor::zeros({c, ho, wo}, input.dtype());
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = input.data<T>().data();
    T* o = out.mutable_data<T>().data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* plane = in + ch * h * w;
      for (std::size_t y = 0; y < ho; ++y) {
        const T* r0 = plane + ty[y].i0 * w;
        const T* r1 = plane + ty[y].i1 * w;
        const T wy0 = static_cast<T>(ty[y].w0), wy1 = static_cast<T>(ty[y].w1);
        T* dst = o + (ch * ho + y) * wo;
        for (std::size_t x = 0; x < wo; ++x) {
          const T wx0 = static_cast<T>(tx[x].w0), wx1 = static_cast<T>(tx[x].w1);
          dst[x] = wy0 * (wx0 * r0[tx[x].i0] + wx1 * r0[tx[x].i1]) + wy1 * (wx0 * r1[tx[x].i0] + wx1 * r1[tx[x].i1]);
        }
      }
    }
  });
  finished(out, "bilinear_upsample2x");
  const Shape in_shape = input.shape();
  return record(out, "bilinear_upsample2x", {input}, [in_shape, ty, tx](const Tensor& g) {
    const std::size_t c = in_shape[0], h = in_shape[1], w = in_shape[2];
    const std::size_t ho = 2 * h, wo = 2 * w;
    Tensor gi = Tensor::zeros(in_shape, g.dtype());
    dispatch(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* gv = g.data<T>().data();
      T* dst = gi.mutable_data<T>().data();
      for (std::size_t ch = 0; ch < c; ++ch) {
        T* plane = dst + ch * h * w;
        for (std::size_t y = 0; y < ho; ++y) {
          T* r0 = plane + ty[y].i0 * w;
          T* r1 = plane + ty[y].i1 * w;
          const T wy0 = static_cast<T>(ty[y].w0), wy1 = static_cast<T>(ty[y].w1);
          const T* src = gv + (ch * ho + y) * wo;
          for (std::size_t x = 0; x < wo; ++x) {
            const T wx0 = static_cast<T>(tx[x].w0), wx1 = static_cast<T>(tx[x].w1);
            r0[tx[x].i0] += src[x] * wy0 * wx0;
            r0[tx[x].i1] += src[x] * wy0 * wx1;
            r1[tx[x].i0] += src[x] * wy1 * wx0;
            r1[tx[x].i1] += src[x] * wy1 * wx1;
          }
        }
      }
    });
    return std::vector<Tensor>{gi};
  });
}

Tensor forward_diff(const Tensor& a, Axis axis) {
  if (a.ndim() < 2) fail(ErrorCode::shape_mismatch, "forward_diff: need at least 2 dims, got " + to_string(a.shape()));
  const std::size_t h = a.dim(a.ndim() - 2), w = a.dim(a.ndim() - 1);
  const std::size_t planes = a.numel() / (h * w);
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* src = a.data<T>().data();
    T* dst = out.mutable_data<T>().data();
    for (std::size_t p = 0; p < planes; ++p) {
      const T* s = src + p * h * w;
      T* d = dst + p * h * w;
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          if (axis == Axis::u)
            d[i * w + j] = j + 1 < w ? s[i * w + j + 1] - s[i * w + j] : T(0);
          else
            d[i * w + j] = i + 1 < h ? s[(i + 1) * w + j] - s[i * w + j] : T(0);
        }
    }
  });
  finished(out, "forward_diff");
  return record(out, "forward_diff", {a}, [h, w, planes, axis](const Tensor& g) {
    Tensor gi = Tensor::zeros(g.shape(), g.dtype());
    dispatch(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* gv = g.data<T>().data();
      T* dst = gi.mutable_data<T>().data();
      for (std::size_t p = 0; p < planes; ++p) {
        const T* s = gv + p * h * w;
        T* d = dst + p * h * w;
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) {
            const T v = s[i * w + j];
            if (axis == Axis::u && j + 1 < w) {
              d[i * w + j + 1] += v;
              d[i * w + j] -= v;
            } else if (axis == Axis::v && i + 1 < h) {
              d[(i + 1) * w + j] += v;
              d[i * w + j] -= v;
            }
          }
      }
    });
    return std::vector<Tensor>{gi};
  });
}

Tensor sign(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto src = a.data<T>();
    auto dst = out.mutable_data<T>();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T(0) ? T(1) : (src[i] < T(0) ? T(-1) : T(0));
  });
  return out;
}

}  // namespace depthguard
