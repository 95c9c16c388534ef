#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "filterlens/toy/kernels.hpp"

namespace filterlens::toy {

using kernels::Backend;

struct Architecture {
  std::size_t input_side = 16;
  std::size_t input_channels = 1;
  std::vector<std::size_t> filters{8, 16, 32};  // one conv block per entry
  std::size_t classes = 5;

  /// Spatial side after `depth` blocks (each ends in a 2x2 max-pool).
  std::size_t side_at(std::size_t depth) const { return input_side >> depth; }
  std::size_t channels_at(std::size_t depth) const { return depth == 0 ? input_channels : filters[depth - 1]; }
  std::size_t units_at(std::size_t depth) const { return side_at(depth) * side_at(depth); }
  std::size_t features_at(std::size_t depth) const { return channels_at(depth) * units_at(depth); }

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

/// 3x3 "same" convolution with bias, then ReLU, then 2x2 max-pool.
template <class T>
struct ConvBlock {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<T> weight;  // out x in x 3 x 3
  std::vector<T> bias;

  bool operator==(const ConvBlock&) const = default;
};

/// Fully connected map to the label outputs. Bias-free by construction.
template <class T>
struct LinearHead {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<T> weight;  // inputs x outputs; row = (channel, unit), matching AFCC mask rows

  bool operator==(const LinearHead&) const = default;
};

/// Head with weights uniform in +-sqrt(1/fan_in).
template <class T>
LinearHead<T> random_head(std::size_t inputs, std::size_t outputs, std::uint64_t seed);

template <class T>
class TinyCnn {
 public:
  TinyCnn() = default;
  /// All-zero weights.
  explicit TinyCnn(Architecture arch);
  /// He-uniform conv weights, zero conv biases, random head.
  static TinyCnn initialized(Architecture arch, std::uint64_t seed);

  const Architecture& architecture() const noexcept { return arch_; }
  std::size_t depth() const noexcept { return blocks_.size(); }

  std::vector<ConvBlock<T>>& blocks() noexcept { return blocks_; }
  const std::vector<ConvBlock<T>>& blocks() const noexcept { return blocks_; }
  LinearHead<T>& head() noexcept { return head_; }
  const LinearHead<T>& head() const noexcept { return head_; }

  /// First `depth` blocks of this trunk with the given head attached at that depth.
  TinyCnn truncated(std::size_t depth, LinearHead<T> head) const;

  template <class U>
  TinyCnn<U> cast() const;

  std::size_t parameter_count() const;

  bool operator==(const TinyCnn&) const = default;

 private:
  template <class>
  friend class TinyCnn;
  Architecture arch_;
  std::vector<ConvBlock<T>> blocks_;
  LinearHead<T> head_;
};

template <class T>
struct BlockActivations {
  std::vector<T> input;
  std::vector<T> pre_activation;  // conv output
  std::vector<T> rectified;
  std::vector<T> pooled;
  std::vector<std::uint32_t> argmax;
};

template <class T>
struct ForwardPass {
  std::size_t batch = 0;
  std::size_t start_block = 0;
  std::vector<BlockActivations<T>> blocks;  // blocks start_block .. depth-1
  std::vector<T> features;                  // head input, batch x features
  std::vector<T> logits;                    // batch x classes (output fields)
};

/// Runs blocks [start_block, depth) then the head. `input` holds activations at start_block.
template <class T>
ForwardPass<T> forward(const TinyCnn<T>& net, std::span<const T> input, std::size_t batch,
                       std::size_t start_block = 0, Backend backend = Backend::Parallel);

/// Activations after block `to - 1` given activations at block `from` (no head).
template <class T>
std::vector<T> propagate(const TinyCnn<T>& net, std::span<const T> input, std::size_t batch, std::size_t from,
                         std::size_t to, Backend backend = Backend::Parallel);

template <class T>
struct Gradients {
  std::vector<std::vector<T>> block_weight;  // empty for frozen blocks
  std::vector<std::vector<T>> block_bias;
  std::vector<T> head;
};

enum class Reduction { Mean, Sum };

template <class T>
struct LossAndGradients {
  double loss = 0;       // data loss + L2 term
  double data_loss = 0;  // softmax cross-entropy, reduced per `reduction`
  std::size_t correct = 0;
  Gradients<T> grads;
};

/// Softmax cross-entropy plus (l2/2)*||w||^2 over the trainable parameters (blocks from
/// start_block onward, and the head).
template <class T>
LossAndGradients<T> compute_gradients(const TinyCnn<T>& net, std::span<const T> input, std::span<const int> labels,
                                      std::size_t batch, double l2, std::size_t start_block = 0,
                                      Reduction reduction = Reduction::Mean, Backend backend = Backend::Parallel);

/// (1/2)*||w||^2 over blocks from start_block onward plus the head.
template <class T>
double l2_penalty(const TinyCnn<T>& net, std::size_t start_block = 0);

/// Loss only, same definition as compute_gradients.
template <class T>
double compute_loss(const TinyCnn<T>& net, std::span<const T> input, std::span<const int> labels, std::size_t batch,
                    double l2, std::size_t start_block = 0, Reduction reduction = Reduction::Mean,
                    Backend backend = Backend::Parallel);

extern template class TinyCnn<float>;
extern template class TinyCnn<double>;

}  // namespace filterlens::toy
