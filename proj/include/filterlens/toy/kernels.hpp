#pragma once

// Data-parallel kernels of the toy network. Every kernel exists twice:
//   serial::   straightforward loops, one output element at a time (the reference)
//   parallel:: OpenMP over independent output planes/rows with cache-friendlier loop order
// Both accumulate every output element in the same order, so with fp contraction disabled
// their results are bit-identical and independent of the thread count.
//
// Layouts (row-major): activations batch x channels x side x side; conv weights
// out x in x 3 x 3; dense weights inputs x outputs.

#include <cstddef>
#include <cstdint>
#include <span>

namespace filterlens::toy::kernels {

struct ConvShape {
  std::size_t batch = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t side = 0;  // input and output side ("same" padding)
};

struct DenseShape {
  std::size_t batch = 0;
  std::size_t inputs = 0;
  std::size_t outputs = 0;
};

struct PoolShape {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t side = 0;  // input side; output side is side / 2
};

enum class Backend { Serial, Parallel };

#define FILTERLENS_KERNEL_DECLS                                                                              \
  template <class T>                                                                                         \
  void conv3x3_forward(const ConvShape& s, std::span<const T> input, std::span<const T> weight,              \
                       std::span<const T> bias, std::span<T> output);                                        \
  template <class T>                                                                                         \
  void conv3x3_backward_weights(const ConvShape& s, std::span<const T> input, std::span<const T> grad_output, \
                                std::span<T> grad_weight, std::span<T> grad_bias);                           \
  template <class T>                                                                                         \
  void conv3x3_backward_input(const ConvShape& s, std::span<const T> grad_output, std::span<const T> weight,  \
                              std::span<T> grad_input);                                                      \
  template <class T>                                                                                         \
  void relu_forward(std::span<const T> input, std::span<T> output);                                          \
  template <class T>                                                                                         \
  void relu_backward(std::span<const T> pre_activation, std::span<const T> grad_output,                      \
                     std::span<T> grad_input);                                                               \
  template <class T>                                                                                         \
  void maxpool2_forward(const PoolShape& s, std::span<const T> input, std::span<T> output,                   \
                        std::span<std::uint32_t> argmax);                                                    \
  template <class T>                                                                                         \
  void maxpool2_backward(const PoolShape& s, std::span<const T> grad_output,                                 \
                         std::span<const std::uint32_t> argmax, std::span<T> grad_input);                    \
  template <class T>                                                                                         \
  void dense_forward(const DenseShape& s, std::span<const T> input, std::span<const T> weight,               \
                     std::span<T> output);                                                                   \
  template <class T>                                                                                         \
  void dense_backward_weights(const DenseShape& s, std::span<const T> input, std::span<const T> grad_output,  \
                              std::span<T> grad_weight);                                                     \
  template <class T>                                                                                         \
  void dense_backward_input(const DenseShape& s, std::span<const T> grad_output, std::span<const T> weight,   \
                            std::span<T> grad_input);

namespace serial {
FILTERLENS_KERNEL_DECLS
}  // namespace serial

namespace parallel {
FILTERLENS_KERNEL_DECLS
}  // namespace parallel

#undef FILTERLENS_KERNEL_DECLS

}  // namespace filterlens::toy::kernels
