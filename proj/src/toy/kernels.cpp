#include "filterlens/toy/kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace filterlens::toy::kernels {

namespace {

using std::ptrdiff_t;
using std::size_t;

inline size_t idx4(size_t c_count, size_t side, size_t n, size_t c, size_t y, size_t x) {
  return ((n * c_count + c) * side + y) * side + x;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------------------------
namespace serial {

template <class T>
void conv3x3_forward(const ConvShape& s, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> bias, std::span<T> output) {
  const auto side = static_cast<ptrdiff_t>(s.side);
  for (size_t n = 0; n < s.batch; ++n)
    for (size_t o = 0; o < s.out_channels; ++o)
      for (ptrdiff_t y = 0; y < side; ++y)
        for (ptrdiff_t x = 0; x < side; ++x) {
          T acc = bias[o];
          for (size_t c = 0; c < s.in_channels; ++c)
            for (ptrdiff_t ky = 0; ky < 3; ++ky)
              for (ptrdiff_t kx = 0; kx < 3; ++kx) {
                const ptrdiff_t iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= side || ix < 0 || ix >= side) continue;
                acc += weight[((o * s.in_channels + c) * 3 + ky) * 3 + kx] *
                       input[idx4(s.in_channels, s.side, n, c, iy, ix)];
              }
          output[idx4(s.out_channels, s.side, n, o, y, x)] = acc;
        }
}

template <class T>
void conv3x3_backward_weights(const ConvShape& s, std::span<const T> input, std::span<const T> grad_output,
                              std::span<T> grad_weight, std::span<T> grad_bias) {
  const auto side = static_cast<ptrdiff_t>(s.side);
  for (size_t o = 0; o < s.out_channels; ++o) {
    T gb = 0;
    for (size_t n = 0; n < s.batch; ++n)
      for (ptrdiff_t y = 0; y < side; ++y)
        for (ptrdiff_t x = 0; x < side; ++x) gb += grad_output[idx4(s.out_channels, s.side, n, o, y, x)];
    grad_bias[o] = gb;
    for (size_t c = 0; c < s.in_channels; ++c)
      for (ptrdiff_t ky = 0; ky < 3; ++ky)
        for (ptrdiff_t kx = 0; kx < 3; ++kx) {
          T acc = 0;
          for (size_t n = 0; n < s.batch; ++n)
            for (ptrdiff_t y = 0; y < side; ++y)
              for (ptrdiff_t x = 0; x < side; ++x) {
                const ptrdiff_t iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= side || ix < 0 || ix >= side) continue;
                acc += grad_output[idx4(s.out_channels, s.side, n, o, y, x)] *
                       input[idx4(s.in_channels, s.side, n, c, iy, ix)];
              }
          grad_weight[((o * s.in_channels + c) * 3 + ky) * 3 + kx] = acc;
        }
  }
}

template <class T>
void conv3x3_backward_input(const ConvShape& s, std::span<const T> grad_output, std::span<const T> weight,
                            std::span<T> grad_input) {
  const auto side = static_cast<ptrdiff_t>(s.side);
  for (size_t n = 0; n < s.batch; ++n)
    for (size_t c = 0; c < s.in_channels; ++c)
      for (ptrdiff_t iy = 0; iy < side; ++iy)
        for (ptrdiff_t ix = 0; ix < side; ++ix) {
          T acc = 0;
          for (size_t o = 0; o < s.out_channels; ++o)
            for (ptrdiff_t ky = 0; ky < 3; ++ky)
              for (ptrdiff_t kx = 0; kx < 3; ++kx) {
                const ptrdiff_t y = iy - ky + 1, x = ix - kx + 1;
                if (y < 0 || y >= side || x < 0 || x >= side) continue;
                acc += grad_output[idx4(s.out_channels, s.side, n, o, y, x)] *
                       weight[((o * s.in_channels + c) * 3 + ky) * 3 + kx];
              }
          grad_input[idx4(s.in_channels, s.side, n, c, iy, ix)] = acc;
        }
}

template <class T>
void relu_forward(std::span<const T> input, std::span<T> output) {
  for (size_t i = 0; i < input.size(); ++i) output[i] = input[i] > T(0) ? input[i] : T(0);
}

template <class T>
void relu_backward(std::span<const T> pre_activation, std::span<const T> grad_output, std::span<T> grad_input) {
  for (size_t i = 0; i < pre_activation.size(); ++i) grad_input[i] = pre_activation[i] > T(0) ? grad_output[i] : T(0);
}

template <class T>
void maxpool2_forward(const PoolShape& s, std::span<const T> input, std::span<T> output,
                      std::span<std::uint32_t> argmax) {
  const size_t out_side = s.side / 2;
  for (size_t n = 0; n < s.batch; ++n)
    for (size_t c = 0; c < s.channels; ++c)
      for (size_t y = 0; y < out_side; ++y)
        for (size_t x = 0; x < out_side; ++x) {
          size_t best = idx4(s.channels, s.side, n, c, 2 * y, 2 * x);
          for (size_t dy = 0; dy < 2; ++dy)
            for (size_t dx = 0; dx < 2; ++dx) {
              const size_t k = idx4(s.channels, s.side, n, c, 2 * y + dy, 2 * x + dx);
              if (input[k] > input[best]) best = k;
            }
          const size_t o = idx4(s.channels, out_side, n, c, y, x);
          output[o] = input[best];
          argmax[o] = static_cast<std::uint32_t>(best);
        }
}

template <class T>
void maxpool2_backward(const PoolShape& s, std::span<const T> grad_output, std::span<const std::uint32_t> argmax,
                       std::span<T> grad_input) {
  std::fill(grad_input.begin(), grad_input.begin() + static_cast<ptrdiff_t>(s.batch * s.channels * s.side * s.side),
            T(0));
  const size_t out_count = s.batch * s.channels * (s.side / 2) * (s.side / 2);
  for (size_t o = 0; o < out_count; ++o) grad_input[argmax[o]] += grad_output[o];
}

template <class T>
void dense_forward(const DenseShape& s, std::span<const T> input, std::span<const T> weight, std::span<T> output) {
  for (size_t n = 0; n < s.batch; ++n)
    for (size_t j = 0; j < s.outputs; ++j) {
      T acc = 0;
      for (size_t i = 0; i < s.inputs; ++i) acc += input[n * s.inputs + i] * weight[i * s.outputs + j];
      output[n * s.outputs + j] = acc;
    }
}

template <class T>
void dense_backward_weights(const DenseShape& s, std::span<const T> input, std::span<const T> grad_output,
                            std::span<T> grad_weight) {
  for (size_t i = 0; i < s.inputs; ++i)
    for (size_t j = 0; j < s.outputs; ++j) {
      T acc = 0;
      for (size_t n = 0; n < s.batch; ++n) acc += input[n * s.inputs + i] * grad_output[n * s.outputs + j];
      grad_weight[i * s.outputs + j] = acc;
    }
}

template <class T>
void dense_backward_input(const DenseShape& s, std::span<const T> grad_output, std::span<const T> weight,
                          std::span<T> grad_input) {
  for (size_t n = 0; n < s.batch; ++n)
    for (size_t i = 0; i < s.inputs; ++i) {
      T acc = 0;
      for (size_t j = 0; j < s.outputs; ++j) acc += weight[i * s.outputs + j] * grad_output[n * s.outputs + j];
      grad_input[n * s.inputs + i] = acc;
    }
}

}  // namespace serial

// ---------------------------------------------------------------------------------------------
// OpenMP
// ---------------------------------------------------------------------------------------------
namespace parallel {

template <class T>
void conv3x3_forward(const ConvShape& s, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> bias, std::span<T> output) {
  const auto side = static_cast<ptrdiff_t>(s.side);
  const size_t plane = s.side * s.side;
  const auto planes = static_cast<ptrdiff_t>(s.batch * s.out_channels);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t p = 0; p < planes; ++p) {
    const size_t n = static_cast<size_t>(p) / s.out_channels;
    const size_t o = static_cast<size_t>(p) % s.out_channels;
    T* out = output.data() + static_cast<size_t>(p) * plane;
    std::fill(out, out + plane, bias[o]);
    for (size_t c = 0; c < s.in_channels; ++c) {
      const T* in = input.data() + (n * s.in_channels + c) * plane;
      const T* w = weight.data() + (o * s.in_channels + c) * 9;
      for (ptrdiff_t ky = 0; ky < 3; ++ky)
        for (ptrdiff_t kx = 0; kx < 3; ++kx) {
          const T wv = w[ky * 3 + kx];
          const ptrdiff_t y0 = std::max<ptrdiff_t>(0, 1 - ky), y1 = std::min<ptrdiff_t>(side, side + 1 - ky);
          const ptrdiff_t x0 = std::max<ptrdiff_t>(0, 1 - kx), x1 = std::min<ptrdiff_t>(side, side + 1 - kx);
          for (ptrdiff_t y = y0; y < y1; ++y) {
            T* orow = out + y * side;
            const T* irow = in + (y + ky - 1) * side;
            for (ptrdiff_t x = x0; x < x1; ++x) orow[x] += wv * irow[x + kx - 1];
          }
        }
    }
  }
}

template <class T>
void conv3x3_backward_weights(const ConvShape& s, std::span<const T> input, std::span<const T> grad_output,
                              std::span<T> grad_weight, std::span<T> grad_bias) {
  const auto side = static_cast<ptrdiff_t>(s.side);
  const size_t plane = s.side * s.side;
  const auto outs = static_cast<ptrdiff_t>(s.out_channels);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t op = 0; op < outs; ++op) {
    const auto o = static_cast<size_t>(op);
    T gb = 0;
    for (size_t n = 0; n < s.batch; ++n) {
      const T* go = grad_output.data() + (n * s.out_channels + o) * plane;
      for (size_t k = 0; k < plane; ++k) gb += go[k];
    }
    grad_bias[o] = gb;
    for (size_t c = 0; c < s.in_channels; ++c)
      for (ptrdiff_t ky = 0; ky < 3; ++ky)
        for (ptrdiff_t kx = 0; kx < 3; ++kx) {
          const ptrdiff_t y0 = std::max<ptrdiff_t>(0, 1 - ky), y1 = std::min<ptrdiff_t>(side, side + 1 - ky);
          const ptrdiff_t x0 = std::max<ptrdiff_t>(0, 1 - kx), x1 = std::min<ptrdiff_t>(side, side + 1 - kx);
          T acc = 0;
          for (size_t n = 0; n < s.batch; ++n) {
            const T* go = grad_output.data() + (n * s.out_channels + o) * plane;
            const T* in = input.data() + (n * s.in_channels + c) * plane;
            for (ptrdiff_t y = y0; y < y1; ++y) {
              const T* grow = go + y * side;
              const T* irow = in + (y + ky - 1) * side;
              for (ptrdiff_t x = x0; x < x1; ++x) acc += grow[x] * irow[x + kx - 1];
            }
          }
          grad_weight[((o * s.in_channels + c) * 3 + static_cast<size_t>(ky)) * 3 + static_cast<size_t>(kx)] = acc;
        }
  }
}

template <class T>
void conv3x3_backward_input(const ConvShape& s, std::span<const T> grad_output, std::span<const T> weight,
                            std::span<T> grad_input) {
  const auto side = static_cast<ptrdiff_t>(s.side);
  const size_t plane = s.side * s.side;
  const auto planes = static_cast<ptrdiff_t>(s.batch * s.in_channels);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t p = 0; p < planes; ++p) {
    const size_t n = static_cast<size_t>(p) / s.in_channels;
    const size_t c = static_cast<size_t>(p) % s.in_channels;
    T* gi = grad_input.data() + static_cast<size_t>(p) * plane;
    std::fill(gi, gi + plane, T(0));
    for (size_t o = 0; o < s.out_channels; ++o) {
      const T* go = grad_output.data() + (n * s.out_channels + o) * plane;
      const T* w = weight.data() + (o * s.in_channels + c) * 9;
      for (ptrdiff_t ky = 0; ky < 3; ++ky)
        for (ptrdiff_t kx = 0; kx < 3; ++kx) {
          const T wv = w[ky * 3 + kx];
          // input (iy, ix) receives grad_output (iy - ky + 1, ix - kx + 1)
          const ptrdiff_t y0 = std::max<ptrdiff_t>(0, ky - 1), y1 = std::min<ptrdiff_t>(side, side + ky - 1);
          const ptrdiff_t x0 = std::max<ptrdiff_t>(0, kx - 1), x1 = std::min<ptrdiff_t>(side, side + kx - 1);
          for (ptrdiff_t iy = y0; iy < y1; ++iy) {
            T* irow = gi + iy * side;
            const T* grow = go + (iy - ky + 1) * side;
            for (ptrdiff_t ix = x0; ix < x1; ++ix) irow[ix] += grow[ix - kx + 1] * wv;
          }
        }
    }
  }
}

template <class T>
void relu_forward(std::span<const T> input, std::span<T> output) {
  const auto n = static_cast<ptrdiff_t>(input.size());
#pragma omp parallel for simd schedule(static)
  for (ptrdiff_t i = 0; i < n; ++i) output[i] = input[i] > T(0) ? input[i] : T(0);
}

template <class T>
void relu_backward(std::span<const T> pre_activation, std::span<const T> grad_output, std::span<T> grad_input) {
  const auto n = static_cast<ptrdiff_t>(pre_activation.size());
#pragma omp parallel for simd schedule(static)
  for (ptrdiff_t i = 0; i < n; ++i) grad_input[i] = pre_activation[i] > T(0) ? grad_output[i] : T(0);
}

template <class T>
void maxpool2_forward(const PoolShape& s, std::span<const T> input, std::span<T> output,
                      std::span<std::uint32_t> argmax) {
  const size_t out_side = s.side / 2;
  const auto planes = static_cast<ptrdiff_t>(s.batch * s.channels);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t p = 0; p < planes; ++p) {
    const size_t in_base = static_cast<size_t>(p) * s.side * s.side;
    const size_t out_base = static_cast<size_t>(p) * out_side * out_side;
    for (size_t y = 0; y < out_side; ++y)
      for (size_t x = 0; x < out_side; ++x) {
        size_t best = in_base + (2 * y) * s.side + 2 * x;
        for (size_t dy = 0; dy < 2; ++dy)
          for (size_t dx = 0; dx < 2; ++dx) {
            const size_t k = in_base + (2 * y + dy) * s.side + 2 * x + dx;
            if (input[k] > input[best]) best = k;
          }
        output[out_base + y * out_side + x] = input[best];
        argmax[out_base + y * out_side + x] = static_cast<std::uint32_t>(best);
      }
  }
}

template <class T>
void maxpool2_backward(const PoolShape& s, std::span<const T> grad_output, std::span<const std::uint32_t> argmax,
                       std::span<T> grad_input) {
  const size_t out_plane = (s.side / 2) * (s.side / 2);
  const size_t in_plane = s.side * s.side;
  const auto planes = static_cast<ptrdiff_t>(s.batch * s.channels);
  // Pool windows do not overlap, so each plane scatters only into its own input plane.
#pragma omp parallel for schedule(static)
  for (ptrdiff_t p = 0; p < planes; ++p) {
    const auto pp = static_cast<size_t>(p);
    std::fill(grad_input.begin() + static_cast<ptrdiff_t>(pp * in_plane),
              grad_input.begin() + static_cast<ptrdiff_t>((pp + 1) * in_plane), T(0));
    for (size_t k = 0; k < out_plane; ++k) {
      const size_t o = pp * out_plane + k;
      grad_input[argmax[o]] += grad_output[o];
    }
  }
}

template <class T>
void dense_forward(const DenseShape& s, std::span<const T> input, std::span<const T> weight, std::span<T> output) {
  const auto rows = static_cast<ptrdiff_t>(s.batch);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t np = 0; np < rows; ++np) {
    const auto n = static_cast<size_t>(np);
    T* out = output.data() + n * s.outputs;
    std::fill(out, out + s.outputs, T(0));
    const T* in = input.data() + n * s.inputs;
    for (size_t i = 0; i < s.inputs; ++i) {
      const T a = in[i];
      const T* w = weight.data() + i * s.outputs;
      for (size_t j = 0; j < s.outputs; ++j) out[j] += a * w[j];
    }
  }
}

template <class T>
void dense_backward_weights(const DenseShape& s, std::span<const T> input, std::span<const T> grad_output,
                            std::span<T> grad_weight) {
  const auto rows = static_cast<ptrdiff_t>(s.inputs);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t ip = 0; ip < rows; ++ip) {
    const auto i = static_cast<size_t>(ip);
    T* gw = grad_weight.data() + i * s.outputs;
    std::fill(gw, gw + s.outputs, T(0));
    for (size_t n = 0; n < s.batch; ++n) {
      const T a = input[n * s.inputs + i];
      const T* go = grad_output.data() + n * s.outputs;
      for (size_t j = 0; j < s.outputs; ++j) gw[j] += a * go[j];
    }
  }
}

template <class T>
void dense_backward_input(const DenseShape& s, std::span<const T> grad_output, std::span<const T> weight,
                          std::span<T> grad_input) {
  const auto rows = static_cast<ptrdiff_t>(s.batch);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t np = 0; np < rows; ++np) {
    const auto n = static_cast<size_t>(np);
    const T* go = grad_output.data() + n * s.outputs;
    for (size_t i = 0; i < s.inputs; ++i) {
      const T* w = weight.data() + i * s.outputs;
      T acc = 0;
      for (size_t j = 0; j < s.outputs; ++j) acc += w[j] * go[j];
      grad_input[n * s.inputs + i] = acc;
    }
  }
}

}  // namespace parallel

#define FILTERLENS_INSTANTIATE(NS, T)                                                                          \
  template void NS::conv3x3_forward<T>(const ConvShape&, std::span<const T>, std::span<const T>,              \
                                       std::span<const T>, std::span<T>);                                    \
  template void NS::conv3x3_backward_weights<T>(const ConvShape&, std::span<const T>, std::span<const T>,     \
                                                std::span<T>, std::span<T>);                                 \
  template void NS::conv3x3_backward_input<T>(const ConvShape&, std::span<const T>, std::span<const T>,       \
                                              std::span<T>);                                                 \
  template void NS::relu_forward<T>(std::span<const T>, std::span<T>);                                       \
  template void NS::relu_backward<T>(std::span<const T>, std::span<const T>, std::span<T>);                  \
  template void NS::maxpool2_forward<T>(const PoolShape&, std::span<const T>, std::span<T>,                  \
                                        std::span<std::uint32_t>);                                           \
  template void NS::maxpool2_backward<T>(const PoolShape&, std::span<const T>,                               \
                                         std::span<const std::uint32_t>, std::span<T>);                      \
  template void NS::dense_forward<T>(const DenseShape&, std::span<const T>, std::span<const T>, std::span<T>); \
  template void NS::dense_backward_weights<T>(const DenseShape&, std::span<const T>, std::span<const T>,      \
                                              std::span<T>);                                                 \
  template void NS::dense_backward_input<T>(const DenseShape&, std::span<const T>, std::span<const T>,        \
                                            std::span<T>);

FILTERLENS_INSTANTIATE(serial, float)
FILTERLENS_INSTANTIATE(serial, double)
FILTERLENS_INSTANTIATE(parallel, float)
FILTERLENS_INSTANTIATE(parallel, double)

#undef FILTERLENS_INSTANTIATE

}  // namespace filterlens::toy::kernels
