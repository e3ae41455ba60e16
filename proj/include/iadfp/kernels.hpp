#pragma once

// Data-parallel layer kernels.
//
// `iadfp::kernels` holds the OpenMP versions used by the network; the
// `reference` namespace holds plain serial loops kept as the test oracle and
// the benchmark baseline. Every parallel kernel assigns each output element to
// exactly one thread and sums in a fixed order, so results do not depend on
// the thread count.
//
// Layouts are row-major: dense x[N, in], w[out, in]; conv x[N, C, H, W],
// w[O, C, k, k]. Convolution is valid-padded with stride 1; pooling is 2x2
// with stride 2 and drops a trailing odd row/column.

#include <cstddef>
#include <cstdint>
#include <span>

namespace iadfp::kernels {

struct DenseDims {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
};

struct ConvDims {
  std::size_t batch;
  std::size_t in_ch;
  std::size_t height;
  std::size_t width;
  std::size_t out_ch;
  std::size_t kernel;

  std::size_t out_height() const { return height - kernel + 1; }
  std::size_t out_width() const { return width - kernel + 1; }
};

struct PoolDims {
  std::size_t batch;
  std::size_t channels;
  std::size_t height;
  std::size_t width;

  std::size_t out_height() const { return height / 2; }
  std::size_t out_width() const { return width / 2; }
};

// y = x w^T + b
void dense_forward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y);
// dx (optional, may be empty) = dy w; dw = dy^T x; db = sum_n dy. dw/db overwritten.
void dense_backward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                    std::span<double> db);

void conv2d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
void conv2d_backward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);

// argmax receives, per output element, the flat input index of the winner.
void maxpool2_forward(const PoolDims& d, std::span<const double> x, std::span<double> y,
                      std::span<std::uint32_t> argmax);
void maxpool2_backward(const PoolDims& d, std::span<const double> dy,
                       std::span<const std::uint32_t> argmax, std::span<double> dx);

namespace reference {

void dense_forward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y);
void dense_backward(const DenseDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                    std::span<double> db);
void conv2d_forward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
void conv2d_backward(const ConvDims& d, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);
void maxpool2_forward(const PoolDims& d, std::span<const double> x, std::span<double> y,
                      std::span<std::uint32_t> argmax);

}  // namespace reference
}  // namespace iadfp::kernels
