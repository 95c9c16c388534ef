#include "filterlens/toy/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "filterlens/errors.hpp"
#include "filterlens/toy/seeds.hpp"

namespace filterlens::toy {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(l2 >= 0)) throw std::invalid_argument("l2 must be >= 0");
  if (!(decay_factor > 0 && decay_factor <= 1)) throw std::invalid_argument("decay_factor must lie in (0, 1]");
  if (decay_every == 0) throw std::invalid_argument("decay_every must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  return learning_rate * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

namespace {

constexpr std::size_t kEvalChunk = 256;

std::size_t count_correct(const TinyCnn<float>& net, std::span<const float> inputs, std::span<const int> labels,
                          std::size_t start_block, Backend backend) {
  const std::size_t width = net.architecture().features_at(start_block);
  const std::size_t classes = net.architecture().classes;
  std::size_t correct = 0;
  for (std::size_t lo = 0; lo < labels.size(); lo += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, labels.size() - lo);
    const auto fp = forward(net, inputs.subspan(lo * width, n * width), n, start_block, backend);
    for (std::size_t i = 0; i < n; ++i) {
      const float* z = fp.logits.data() + i * classes;
      const auto arg = static_cast<std::size_t>(std::max_element(z, z + classes) - z);
      if (static_cast<int>(arg) == labels[lo + i]) ++correct;
    }
  }
  return correct;
}

double mean_loss(const TinyCnn<float>& net, std::span<const float> inputs, std::span<const int> labels,
                 std::size_t start_block, double l2) {
  const std::size_t width = net.architecture().features_at(start_block);
  double total = 0;
  for (std::size_t lo = 0; lo < labels.size(); lo += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, labels.size() - lo);
    total += compute_loss(net, inputs.subspan(lo * width, n * width), labels.subspan(lo, n), n, 0.0, start_block,
                          Reduction::Sum);
  }
  return total / static_cast<double>(labels.size()) + l2 * l2_penalty(net, start_block);
}

// PyTorch-style Nesterov step: v = mu*v + g; w -= lr*(g + mu*v).
void nesterov_step(std::vector<float>& w, std::vector<float>& v, const std::vector<float>& g, double lr, double mu) {
  const auto flr = static_cast<float>(lr), fmu = static_cast<float>(mu);
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = fmu * v[i] + g[i];
    w[i] -= flr * (g[i] + fmu * v[i]);
  }
}

bool mask_is_held(const std::vector<float>& head, const AfccMask& mask) {
  const auto flags = mask.flags();
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (!flags[i] && head[i] != 0.0f) return false;
  }
  return true;
}

}  // namespace

double evaluate(const TinyCnn<float>& net, const Dataset& set, Backend backend) {
  if (set.size() == 0) throw std::invalid_argument("cannot evaluate on an empty set");
  return static_cast<double>(count_correct(net, set.pixels, set.labels, 0, backend)) /
         static_cast<double>(set.size());
}

TrainHistory train(TinyCnn<float>& net, const DataSplit& data, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const std::size_t start = options.first_trainable_block;
  if (start > net.depth()) throw DimensionError("first trainable block beyond network depth");
  if (data.train.size() == 0) throw std::invalid_argument("empty training set");
  const LinearHead<float>& head = net.head();
  if (options.head_mask) {
    const FcTopology& t = options.head_mask->topology();
    if (t.rows() != head.inputs || t.labels != head.outputs) {
      throw DimensionError("mask topology (" + std::to_string(t.rows()) + " x " + std::to_string(t.labels) +
                           ") does not match the head (" + std::to_string(head.inputs) + " x " +
                           std::to_string(head.outputs) + ")");
    }
    apply_mask_in_place(std::span<float>(net.head().weight), *options.head_mask);
  }

  // Frozen blocks never change, so their output is computed once.
  const std::vector<float> train_in =
      start == 0 ? data.train.pixels : propagate(net, std::span<const float>(data.train.pixels), data.train.size(), 0, start);
  std::vector<float> test_in;
  if (options.evaluate_each_epoch && data.test.size() > 0) {
    test_in = start == 0 ? data.test.pixels
                         : propagate(net, std::span<const float>(data.test.pixels), data.test.size(), 0, start);
  }
  const std::size_t width = net.architecture().features_at(start);
  const std::size_t n = data.train.size();

  TrainHistory history;
  history.initial_loss = mean_loss(net, train_in, data.train.labels, start, config.l2);

  std::vector<std::vector<float>> vel_w(net.depth()), vel_b(net.depth());
  for (std::size_t b = start; b < net.depth(); ++b) {
    vel_w[b].assign(net.blocks()[b].weight.size(), 0.0f);
    vel_b[b].assign(net.blocks()[b].bias.size(), 0.0f);
  }
  std::vector<float> vel_head(head.weight.size(), 0.0f);

  std::vector<std::size_t> order(n);
  std::vector<float> batch_in;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.learning_rate_at(epoch);
    double loss_sum = 0;
    for (std::size_t lo = 0; lo < n; lo += config.batch_size) {
      const std::size_t bs = std::min(config.batch_size, n - lo);
      batch_in.resize(bs * width);
      batch_labels.resize(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t r = order[lo + i];
        std::copy_n(train_in.begin() + static_cast<std::ptrdiff_t>(r * width), width,
                    batch_in.begin() + static_cast<std::ptrdiff_t>(i * width));
        batch_labels[i] = data.train.labels[r];
      }
      auto lg = compute_gradients(net, std::span<const float>(batch_in), std::span<const int>(batch_labels), bs,
                                  config.l2, start, Reduction::Mean);
      if (!std::isfinite(lg.loss)) throw TrainingFailure(epoch, "loss became non-finite");
      loss_sum += lg.loss * static_cast<double>(bs);
      if (options.head_mask) apply_mask_in_place(std::span<float>(lg.grads.head), *options.head_mask);
      for (std::size_t b = start; b < net.depth(); ++b) {
        nesterov_step(net.blocks()[b].weight, vel_w[b], lg.grads.block_weight[b], lr, config.momentum);
        nesterov_step(net.blocks()[b].bias, vel_b[b], lg.grads.block_bias[b], lr, config.momentum);
      }
      nesterov_step(net.head().weight, vel_head, lg.grads.head, lr, config.momentum);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) throw TrainingFailure(epoch, "loss became non-finite");
    history.epoch_loss.push_back(epoch_loss);
    if (options.head_mask && !mask_is_held(net.head().weight, *options.head_mask)) history.mask_held = false;
    if (!test_in.empty()) {
      history.test_accuracy.push_back(static_cast<double>(count_correct(net, test_in, data.test.labels, start,
                                                                        Backend::Parallel)) /
                                      static_cast<double>(data.test.size()));
    }
  }
  return history;
}

}  // namespace filterlens::toy
