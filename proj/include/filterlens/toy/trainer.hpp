#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "filterlens/afcc.hpp"
#include "filterlens/toy/dataset.hpp"
#include "filterlens/toy/network.hpp"

namespace filterlens::toy {

/// Mini-batch SGD with Nesterov momentum, L2 and step decay: the learning rate is multiplied
/// by decay_factor every decay_every epochs.
struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double l2 = 5e-4;
  double decay_factor = 0.5;
  std::size_t decay_every = 5;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
  double learning_rate_at(std::size_t epoch) const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainOptions {
  std::size_t first_trainable_block = 0;  // blocks before this stay frozen
  const AfccMask* head_mask = nullptr;    // dropped head weights are zeroed and held at zero
  bool evaluate_each_epoch = true;
};

struct TrainHistory {
  double initial_loss = 0;  // mean training loss before the first update
  std::vector<double> epoch_loss;
  std::vector<double> test_accuracy;
  bool mask_held = true;  // every masked head weight was exactly zero after every epoch
};

/// Trains `net` in place on data.train, reporting accuracy on data.test.
/// Throws TrainingFailure if the loss becomes non-finite.
TrainHistory train(TinyCnn<float>& net, const DataSplit& data, const TrainConfig& config,
                   const TrainOptions& options = {});

/// Stage 1: every block and the head.
inline TrainHistory train_full(TinyCnn<float>& net, const DataSplit& data, const TrainConfig& config) {
  return train(net, data, config);
}

/// Fraction of `set` classified correctly by the full network.
double evaluate(const TinyCnn<float>& net, const Dataset& set, Backend backend = Backend::Parallel);

}  // namespace filterlens::toy
