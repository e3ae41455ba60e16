#include <algorithm>

#include "iadfp/kernels.hpp"

namespace iadfp::kernels::reference {

void dense_forward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t o = 0; o < d.out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < d.in; ++i) acc += x[n * d.in + i] * w[o * d.in + i];
      y[n * d.out + o] = acc;
    }
  }
}

void dense_backward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                    std::span<double> db) {
  std::fill(dw.begin(), dw.end(), 0.0);
  std::fill(db.begin(), db.end(), 0.0);
  if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t o = 0; o < d.out; ++o) {
      const double g = dy[n * d.out + o];
      db[o] += g;
      for (std::size_t i = 0; i < d.in; ++i) {
        dw[o * d.in + i] += g * x[n * d.in + i];
        if (!dx.empty()) dx[n * d.in + i] += g * w[o * d.in + i];
      }
    }
  }
}

void conv2d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  const std::size_t oh = d.out_height();
  const std::size_t ow = d.out_width();
  const std::size_t k = d.kernel;
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t o = 0; o < d.out_ch; ++o)
      for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
          double acc = b[o];
          for (std::size_t ch = 0; ch < d.in_ch; ++ch)
            for (std::size_t i = 0; i < k; ++i)
              for (std::size_t j = 0; j < k; ++j)
                acc += x[((n * d.in_ch + ch) * d.height + r + i) * d.width + c + j] *
                       w[((o * d.in_ch + ch) * k + i) * k + j];
          y[((n * d.out_ch + o) * oh + r) * ow + c] = acc;
        }
}

void conv2d_backward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
  const std::size_t oh = d.out_height();
  const std::size_t ow = d.out_width();
  const std::size_t k = d.kernel;
  std::fill(dw.begin(), dw.end(), 0.0);
  std::fill(db.begin(), db.end(), 0.0);
  if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t o = 0; o < d.out_ch; ++o)
      for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
          const double g = dy[((n * d.out_ch + o) * oh + r) * ow + c];
          db[o] += g;
          for (std::size_t ch = 0; ch < d.in_ch; ++ch)
            for (std::size_t i = 0; i < k; ++i)
              for (std::size_t j = 0; j < k; ++j) {
                const std::size_t xi = ((n * d.in_ch + ch) * d.height + r + i) * d.width + c + j;
                const std::size_t wi = ((o * d.in_ch + ch) * k + i) * k + j;
                dw[wi] += g * x[xi];
                if (!dx.empty()) dx[xi] += g * w[wi];
              }
        }
}

void maxpool2_forward(const PoolDims& d, std::span<const double> x, std::span<double> y,
                      std::span<std::uint32_t> argmax) {
  const std::size_t oh = d.out_height();
  const std::size_t ow = d.out_width();
  for (std::size_t plane = 0; plane < d.batch * d.channels; ++plane)
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

}  // namespace iadfp::kernels::reference
