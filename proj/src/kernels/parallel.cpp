#include <algorithm>
#include <cstddef>

#include "iadfp/kernels.hpp"

namespace iadfp::kernels {

namespace {
using Index = std::ptrdiff_t;
Index as_index(std::size_t v) { return static_cast<Index>(v); }
}  // namespace

void dense_forward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < as_index(d.batch); ++n) {
    const double* xr = x.data() + static_cast<std::size_t>(n) * d.in;
    double* yr = y.data() + static_cast<std::size_t>(n) * d.out;
    for (std::size_t o = 0; o < d.out; ++o) {
      const double* wr = w.data() + o * d.in;
      double acc = b[o];
      for (std::size_t i = 0; i < d.in; ++i) acc += xr[i] * wr[i];
      yr[o] = acc;
    }
  }
}

void dense_backward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                    std::span<double> db) {
#pragma omp parallel for schedule(static)
  for (Index o = 0; o < as_index(d.out); ++o) {
    const auto ou = static_cast<std::size_t>(o);
    double* dwr = dw.data() + ou * d.in;
    std::fill(dwr, dwr + d.in, 0.0);
    double bias = 0.0;
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double g = dy[n * d.out + ou];
      if (g == 0.0) continue;
      bias += g;
      const double* xr = x.data() + n * d.in;
      for (std::size_t i = 0; i < d.in; ++i) dwr[i] += g * xr[i];
    }
    db[ou] = bias;
  }
  if (dx.empty()) return;
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < as_index(d.batch); ++n) {
    const auto nu = static_cast<std::size_t>(n);
    double* dxr = dx.data() + nu * d.in;
    std::fill(dxr, dxr + d.in, 0.0);
    for (std::size_t o = 0; o < d.out; ++o) {
      const double g = dy[nu * d.out + o];
      if (g == 0.0) continue;
      const double* wr = w.data() + o * d.in;
      for (std::size_t i = 0; i < d.in; ++i) dxr[i] += g * wr[i];
    }
  }
}

void conv2d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  const std::size_t oh = d.out_height();
  const std::size_t ow = d.out_width();
  const std::size_t k = d.kernel;
  const std::size_t plane = oh * ow;
#pragma omp parallel for schedule(static)
  for (Index job = 0; job < as_index(d.batch * d.out_ch); ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / d.out_ch;
    const std::size_t o = static_cast<std::size_t>(job) % d.out_ch;
    double* yp = y.data() + (n * d.out_ch + o) * plane;
    std::fill(yp, yp + plane, b[o]);
    for (std::size_t ch = 0; ch < d.in_ch; ++ch) {
      const double* xp = x.data() + (n * d.in_ch + ch) * d.height * d.width;
      const double* wk = w.data() + (o * d.in_ch + ch) * k * k;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const double wv = wk[i * k + j];
          for (std::size_t r = 0; r < oh; ++r) {
            const double* xrow = xp + (r + i) * d.width + j;
            double* yrow = yp + r * ow;
            for (std::size_t c = 0; c < ow; ++c) yrow[c] += wv * xrow[c];
          }
        }
    }
  }
}

void conv2d_backward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
  const std::size_t oh = d.out_height();
  const std::size_t ow = d.out_width();
  const std::size_t k = d.kernel;
  const std::size_t plane = oh * ow;
  const std::size_t in_plane = d.height * d.width;

#pragma omp parallel for schedule(static)
  for (Index oi = 0; oi < as_index(d.out_ch); ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    double* dwo = dw.data() + o * d.in_ch * k * k;
    std::fill(dwo, dwo + d.in_ch * k * k, 0.0);
    double bias = 0.0;
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double* gp = dy.data() + (n * d.out_ch + o) * plane;
      for (std::size_t p = 0; p < plane; ++p) bias += gp[p];
      for (std::size_t ch = 0; ch < d.in_ch; ++ch) {
        const double* xp = x.data() + (n * d.in_ch + ch) * in_plane;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < oh; ++r) {
              const double* xrow = xp + (r + i) * d.width + j;
              const double* grow = gp + r * ow;
              for (std::size_t c = 0; c < ow; ++c) acc += grow[c] * xrow[c];
            }
            dwo[(ch * k + i) * k + j] += acc;
          }
      }
    }
    db[o] = bias;
  }

  if (dx.empty()) return;
#pragma omp parallel for schedule(static)
  for (Index job = 0; job < as_index(d.batch * d.in_ch); ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / d.in_ch;
    const std::size_t ch = static_cast<std::size_t>(job) % d.in_ch;
    double* dxp = dx.data() + (n * d.in_ch + ch) * in_plane;
    std::fill(dxp, dxp + in_plane, 0.0);
    for (std::size_t o = 0; o < d.out_ch; ++o) {
      const double* gp = dy.data() + (n * d.out_ch + o) * plane;
      const double* wk = w.data() + (o * d.in_ch + ch) * k * k;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const double wv = wk[i * k + j];
          for (std::size_t r = 0; r < oh; ++r) {
            double* dxrow = dxp + (r + i) * d.width + j;
            const double* grow = gp + r * ow;
            for (std::size_t c = 0; c < ow; ++c) dxrow[c] += wv * grow[c];
          }
        }
    }
  }
}

void maxpool2_forward(const PoolDims& d, std::span<const double> x, std::span<double> y,
                      std::span<std::uint32_t> argmax) {
  const std::size_t oh = d.out_height();
  const std::size_t ow = d.out_width();
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < as_index(d.batch * d.channels); ++p) {
    const auto plane = static_cast<std::size_t>(p);
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t c = 0; c < ow; ++c) {
        std::size_t best = (plane * d.height + 2 * r) * d.width + 2 * c;
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 2; ++j) {
            const std::size_t idx = (plane * d.height + 2 * r + i) * d.width + 2 * c + j;
            if (x[idx] > x[best]) best = idx;
          }
        const std::size_t out = (plane * oh + r) * ow + c;
        y[out] = x[best];
        argmax[out] = static_cast<std::uint32_t>(best);
      }
  }
}

void maxpool2_backward(const PoolDims& d, std::span<const double> dy,
                       std::span<const std::uint32_t> argmax, std::span<double> dx) {
  const std::size_t in_plane = d.height * d.width;
  const std::size_t out_plane = d.out_height() * d.out_width();
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < as_index(d.batch * d.channels); ++p) {
    const auto plane = static_cast<std::size_t>(p);
    std::fill(dx.begin() + static_cast<Index>(plane * in_plane),
              dx.begin() + static_cast<Index>((plane + 1) * in_plane), 0.0);
    for (std::size_t o = plane * out_plane; o < (plane + 1) * out_plane; ++o) {
      dx[argmax[o]] += dy[o];
    }
  }
}

}  // namespace iadfp::kernels
