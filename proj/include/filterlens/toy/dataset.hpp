#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace filterlens::toy {

struct SyntheticSpec {
  std::size_t classes = 5;
  std::size_t image_side = 16;
  double noise_std = 0.8;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 100;
  std::uint64_t pattern_seed = 1;
  std::uint64_t sample_seed = 2;
  std::size_t max_shift = 4;  // uniform integer translation in [-max_shift, max_shift] per axis

  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

/// Single-channel images, row-major, pixel range [-1, 1].
struct Dataset {
  std::size_t side = 0;
  std::size_t classes = 0;
  std::vector<float> pixels;  // size() x side x side
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t pixels_per_image() const noexcept { return side * side; }
  std::span<const float> image(std::size_t i) const {
    return {pixels.data() + i * pixels_per_image(), pixels_per_image()};
  }
  /// Copies the listed rows into a new dataset.
  Dataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;
};

struct DataSplit {
  Dataset train;
  Dataset test;
};

/// Noise-free class template (background -1, strokes +1).
std::vector<float> class_pattern(const SyntheticSpec& spec, std::size_t label);

DataSplit generate_dataset(const SyntheticSpec& spec);

}  // namespace filterlens::toy
