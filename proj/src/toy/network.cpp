#include "filterlens/toy/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "filterlens/errors.hpp"
#include "filterlens/toy/seeds.hpp"

namespace filterlens::toy {

namespace k = kernels;

void Architecture::validate() const {
  if (input_side == 0 || input_channels == 0) throw DimensionError("input must be non-empty");
  if (classes < 2) throw DimensionError("at least two classes are required");
  if ((input_side >> filters.size()) == 0 || input_side % (std::size_t{1} << filters.size()) != 0) {
    throw DimensionError("input side " + std::to_string(input_side) + " cannot be halved " +
                         std::to_string(filters.size()) + " times");
  }
  for (std::size_t f : filters) {
    if (f == 0) throw DimensionError("every block needs at least one filter");
  }
}

template <class T>
LinearHead<T> random_head(std::size_t inputs, std::size_t outputs, std::uint64_t seed) {
  LinearHead<T> h{inputs, outputs, std::vector<T>(inputs * outputs)};
  std::mt19937_64 rng(seed);
  const double bound = std::sqrt(1.0 / static_cast<double>(inputs));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (T& w : h.weight) w = static_cast<T>(u(rng));
  return h;
}

template <class T>
TinyCnn<T>::TinyCnn(Architecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  for (std::size_t b = 0; b < arch_.filters.size(); ++b) {
    const std::size_t in = arch_.channels_at(b), out = arch_.filters[b];
    blocks_.push_back({in, out, std::vector<T>(out * in * 9), std::vector<T>(out)});
  }
  const std::size_t d = arch_.filters.size();
  head_ = {arch_.features_at(d), arch_.classes, std::vector<T>(arch_.features_at(d) * arch_.classes)};
}

template <class T>
TinyCnn<T> TinyCnn<T>::initialized(Architecture arch, std::uint64_t seed) {
  TinyCnn net(std::move(arch));
  for (std::size_t b = 0; b < net.blocks_.size(); ++b) {
    ConvBlock<T>& blk = net.blocks_[b];
    std::mt19937_64 rng(derive_seed(seed, b + 1));
    const double bound = std::sqrt(6.0 / static_cast<double>(blk.in_channels * 9));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (T& w : blk.weight) w = static_cast<T>(u(rng));
  }
  net.head_ = random_head<T>(net.head_.inputs, net.head_.outputs, derive_seed(seed, 0));
  return net;
}

template <class T>
TinyCnn<T> TinyCnn<T>::truncated(std::size_t depth, LinearHead<T> head) const {
  if (depth > blocks_.size()) throw DimensionError("probe depth " + std::to_string(depth) + " exceeds network depth");
  if (head.inputs != arch_.features_at(depth) || head.outputs != arch_.classes ||
      head.weight.size() != head.inputs * head.outputs) {
    throw DimensionError("head does not fit depth " + std::to_string(depth));
  }
  TinyCnn out;
  out.arch_ = arch_;
  out.arch_.filters.resize(depth);
  out.blocks_.assign(blocks_.begin(), blocks_.begin() + static_cast<std::ptrdiff_t>(depth));
  out.head_ = std::move(head);
  return out;
}

template <class T>
template <class U>
TinyCnn<U> TinyCnn<T>::cast() const {
  auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
  TinyCnn<U> out;
  out.arch_ = arch_;
  for (const ConvBlock<T>& b : blocks_) out.blocks_.push_back({b.in_channels, b.out_channels, conv(b.weight), conv(b.bias)});
  out.head_ = {head_.inputs, head_.outputs, conv(head_.weight)};
  return out;
}

template <class T>
std::size_t TinyCnn<T>::parameter_count() const {
  std::size_t n = head_.weight.size();
  for (const ConvBlock<T>& b : blocks_) n += b.weight.size() + b.bias.size();
  return n;
}

namespace {

template <class T>
struct Ops {
  Backend backend;

#define FILTERLENS_DISPATCH(name)                                                      \
  template <class... A>                                                                \
  void name(A&&... a) const {                                                          \
    if (backend == Backend::Serial)                                                    \
      k::serial::name<T>(std::forward<A>(a)...);                                       \
    else                                                                               \
      k::parallel::name<T>(std::forward<A>(a)...);                                     \
  }
  FILTERLENS_DISPATCH(conv3x3_forward)
  FILTERLENS_DISPATCH(conv3x3_backward_weights)
  FILTERLENS_DISPATCH(conv3x3_backward_input)
  FILTERLENS_DISPATCH(relu_forward)
  FILTERLENS_DISPATCH(relu_backward)
  FILTERLENS_DISPATCH(maxpool2_forward)
  FILTERLENS_DISPATCH(maxpool2_backward)
  FILTERLENS_DISPATCH(dense_forward)
  FILTERLENS_DISPATCH(dense_backward_weights)
  FILTERLENS_DISPATCH(dense_backward_input)
#undef FILTERLENS_DISPATCH
};

template <class T>
std::span<const T> cs(const std::vector<T>& v) {
  return {v.data(), v.size()};
}

void check_labels(std::span<const int> labels, std::size_t batch, std::size_t classes) {
  if (labels.size() != batch) throw DimensionError("one label per batch row is required");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw std::out_of_range("label out of range");
  }
}

}  // namespace

template <class T>
double l2_penalty(const TinyCnn<T>& net, std::size_t start_block) {
  double s = 0;
  auto add = [&s](const std::vector<T>& v) {
    for (T w : v) s += static_cast<double>(w) * static_cast<double>(w);
  };
  for (std::size_t b = start_block; b < net.depth(); ++b) {
    add(net.blocks()[b].weight);
    add(net.blocks()[b].bias);
  }
  add(net.head().weight);
  return 0.5 * s;
}

template <class T>
ForwardPass<T> forward(const TinyCnn<T>& net, std::span<const T> input, std::size_t batch, std::size_t start_block,
                       Backend backend) {
  const Architecture& a = net.architecture();
  if (start_block > net.depth()) throw DimensionError("start block beyond network depth");
  if (input.size() != batch * a.features_at(start_block)) {
    throw DimensionError("input holds " + std::to_string(input.size()) + " values, expected " +
                         std::to_string(batch * a.features_at(start_block)));
  }
  const Ops<T> ops{backend};
  ForwardPass<T> fp;
  fp.batch = batch;
  fp.start_block = start_block;
  std::vector<T> current(input.begin(), input.end());
  for (std::size_t b = start_block; b < net.depth(); ++b) {
    const ConvBlock<T>& blk = net.blocks()[b];
    const std::size_t side = a.side_at(b);
    BlockActivations<T> act;
    act.input = std::move(current);
    act.pre_activation.resize(batch * blk.out_channels * side * side);
    act.rectified.resize(act.pre_activation.size());
    act.pooled.resize(act.pre_activation.size() / 4);
    act.argmax.resize(act.pooled.size());
    ops.conv3x3_forward(k::ConvShape{batch, blk.in_channels, blk.out_channels, side}, cs(act.input), cs(blk.weight),
                        cs(blk.bias), std::span<T>(act.pre_activation));
    ops.relu_forward(cs(act.pre_activation), std::span<T>(act.rectified));
    ops.maxpool2_forward(k::PoolShape{batch, blk.out_channels, side}, cs(act.rectified), std::span<T>(act.pooled),
                         std::span<std::uint32_t>(act.argmax));
    current = act.pooled;
    fp.blocks.push_back(std::move(act));
  }
  fp.features = std::move(current);
  fp.logits.resize(batch * a.classes);
  ops.dense_forward(k::DenseShape{batch, net.head().inputs, a.classes}, cs(fp.features), cs(net.head().weight),
                    std::span<T>(fp.logits));
  return fp;
}

template <class T>
std::vector<T> propagate(const TinyCnn<T>& net, std::span<const T> input, std::size_t batch, std::size_t from,
                         std::size_t to, Backend backend) {
  const Architecture& a = net.architecture();
  if (from > to || to > net.depth()) throw DimensionError("invalid block range");
  if (input.size() != batch * a.features_at(from)) throw DimensionError("input size does not match block " + std::to_string(from));
  const Ops<T> ops{backend};
  std::vector<T> current(input.begin(), input.end());
  for (std::size_t b = from; b < to; ++b) {
    const ConvBlock<T>& blk = net.blocks()[b];
    const std::size_t side = a.side_at(b);
    std::vector<T> pre(batch * blk.out_channels * side * side), rect(pre.size()), pooled(pre.size() / 4);
    std::vector<std::uint32_t> argmax(pooled.size());
    ops.conv3x3_forward(k::ConvShape{batch, blk.in_channels, blk.out_channels, side}, cs(current), cs(blk.weight),
                        cs(blk.bias), std::span<T>(pre));
    ops.relu_forward(cs(pre), std::span<T>(rect));
    ops.maxpool2_forward(k::PoolShape{batch, blk.out_channels, side}, cs(rect), std::span<T>(pooled),
                         std::span<std::uint32_t>(argmax));
    current = std::move(pooled);
  }
  return current;
}

namespace {

// Softmax cross-entropy over the logits; fills the logit gradient (unscaled: p - onehot).
template <class T>
double softmax_xent(std::span<const T> logits, std::span<const int> labels, std::size_t classes,
                    std::vector<T>* grad, std::size_t* correct) {
  double total = 0;
  const std::size_t batch = labels.size();
  if (grad) grad->assign(batch * classes, T(0));
  std::vector<double> p(classes);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* z = logits.data() + n * classes;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < classes; ++j)
      if (z[j] > z[arg]) arg = j;
    const double zmax = static_cast<double>(z[arg]);
    double sum = 0;
    for (std::size_t j = 0; j < classes; ++j) sum += (p[j] = std::exp(static_cast<double>(z[j]) - zmax));
    const auto y = static_cast<std::size_t>(labels[n]);
    total += std::log(sum) - (static_cast<double>(z[y]) - zmax);
    if (correct && arg == y) ++*correct;
    if (grad) {
      for (std::size_t j = 0; j < classes; ++j) {
        (*grad)[n * classes + j] = static_cast<T>(p[j] / sum - (j == y ? 1.0 : 0.0));
      }
    }
  }
  return total;
}

}  // namespace

template <class T>
LossAndGradients<T> compute_gradients(const TinyCnn<T>& net, std::span<const T> input, std::span<const int> labels,
                                      std::size_t batch, double l2, std::size_t start_block, Reduction reduction,
                                      Backend backend) {
  const Architecture& a = net.architecture();
  check_labels(labels, batch, a.classes);
  if (batch == 0) throw DimensionError("empty batch");
  const ForwardPass<T> fp = forward(net, input, batch, start_block, backend);
  const Ops<T> ops{backend};

  LossAndGradients<T> out;
  std::vector<T> glogits;
  const double xent = softmax_xent(cs(fp.logits), labels, a.classes, &glogits, &out.correct);
  const double scale = reduction == Reduction::Mean ? 1.0 / static_cast<double>(batch) : 1.0;
  out.data_loss = xent * scale;
  out.loss = out.data_loss + l2 * l2_penalty(net, start_block);
  if (scale != 1.0) {
    for (T& g : glogits) g = static_cast<T>(static_cast<double>(g) * scale);
  }

  const LinearHead<T>& head = net.head();
  const k::DenseShape ds{batch, head.inputs, head.outputs};
  out.grads.head.resize(head.weight.size());
  ops.dense_backward_weights(ds, cs(fp.features), cs(glogits), std::span<T>(out.grads.head));
  for (std::size_t i = 0; i < head.weight.size(); ++i) out.grads.head[i] += static_cast<T>(l2) * head.weight[i];

  out.grads.block_weight.resize(net.depth());
  out.grads.block_bias.resize(net.depth());
  if (start_block == net.depth()) return out;

  std::vector<T> grad(fp.features.size());
  ops.dense_backward_input(ds, cs(glogits), cs(head.weight), std::span<T>(grad));
  for (std::size_t b = net.depth(); b-- > start_block;) {
    const ConvBlock<T>& blk = net.blocks()[b];
    const BlockActivations<T>& act = fp.blocks[b - start_block];
    const std::size_t side = a.side_at(b);
    std::vector<T> grect(act.rectified.size());
    ops.maxpool2_backward(k::PoolShape{batch, blk.out_channels, side}, cs(grad), std::span<const std::uint32_t>(act.argmax),
                          std::span<T>(grect));
    std::vector<T> gpre(grect.size());
    ops.relu_backward(cs(act.pre_activation), cs(grect), std::span<T>(gpre));
    const k::ConvShape shape{batch, blk.in_channels, blk.out_channels, side};
    std::vector<T>& gw = out.grads.block_weight[b];
    std::vector<T>& gb = out.grads.block_bias[b];
    gw.resize(blk.weight.size());
    gb.resize(blk.bias.size());
    ops.conv3x3_backward_weights(shape, cs(act.input), cs(gpre), std::span<T>(gw), std::span<T>(gb));
    for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += static_cast<T>(l2) * blk.weight[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += static_cast<T>(l2) * blk.bias[i];
    if (b > start_block) {
      grad.assign(act.input.size(), T(0));
      ops.conv3x3_backward_input(shape, cs(gpre), cs(blk.weight), std::span<T>(grad));
    }
  }
  return out;
}

template <class T>
double compute_loss(const TinyCnn<T>& net, std::span<const T> input, std::span<const int> labels, std::size_t batch,
                    double l2, std::size_t start_block, Reduction reduction, Backend backend) {
  check_labels(labels, batch, net.architecture().classes);
  if (batch == 0) throw DimensionError("empty batch");
  const ForwardPass<T> fp = forward(net, input, batch, start_block, backend);
  const double xent = softmax_xent<T>(cs(fp.logits), labels, net.architecture().classes, nullptr, nullptr);
  const double scale = reduction == Reduction::Mean ? 1.0 / static_cast<double>(batch) : 1.0;
  return xent * scale + l2 * l2_penalty(net, start_block);
}

template class TinyCnn<float>;
template class TinyCnn<double>;
template TinyCnn<double> TinyCnn<float>::cast<double>() const;
template TinyCnn<float> TinyCnn<double>::cast<float>() const;
template TinyCnn<float> TinyCnn<float>::cast<float>() const;
template TinyCnn<double> TinyCnn<double>::cast<double>() const;

#define FILTERLENS_INSTANTIATE(T)                                                                                   \
  template LinearHead<T> random_head<T>(std::size_t, std::size_t, std::uint64_t);                                  \
  template std::vector<T> propagate<T>(const TinyCnn<T>&, std::span<const T>, std::size_t, std::size_t,           \
                                       std::size_t, Backend);                                                      \
  template double l2_penalty<T>(const TinyCnn<T>&, std::size_t);                                                  \
  template ForwardPass<T> forward<T>(const TinyCnn<T>&, std::span<const T>, std::size_t, std::size_t, Backend);    \
  template LossAndGradients<T> compute_gradients<T>(const TinyCnn<T>&, std::span<const T>, std::span<const int>,   \
                                                    std::size_t, double, std::size_t, Reduction, Backend);         \
  template double compute_loss<T>(const TinyCnn<T>&, std::span<const T>, std::span<const int>, std::size_t, double, \
                                  std::size_t, Reduction, Backend);

FILTERLENS_INSTANTIATE(float)
FILTERLENS_INSTANTIATE(double)

#undef FILTERLENS_INSTANTIATE

}  // namespace filterlens::toy
