#include "filterlens/toy/dataset.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

#include "filterlens/toy/seeds.hpp"

namespace filterlens::toy {

void SyntheticSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("synthetic task needs at least 2 classes");
  if (image_side < 8) throw std::invalid_argument("image side must be at least 8");
  if (train_per_class == 0 || test_per_class == 0) throw std::invalid_argument("every class needs train and test images");
  if (!(noise_std >= 0)) throw std::invalid_argument("noise_std must be non-negative");
  if (2 * max_shift >= image_side) throw std::invalid_argument("max_shift too large for the image side");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.side = side;
  out.classes = classes;
  out.pixels.reserve(rows.size() * pixels_per_image());
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) throw std::out_of_range("subset row out of range");
    const auto img = image(r);
    out.pixels.insert(out.pixels.end(), img.begin(), img.end());
    out.labels.push_back(labels[r]);
  }
  return out;
}

namespace {

enum class Stroke { Horizontal, Vertical, Diagonal, AntiDiagonal, Box, Cross };

struct Primitive {
  Stroke kind;
  int y, x, len;
};

using Canvas = std::vector<float>;

void plot(Canvas& c, int side, int y, int x) {
  if (y >= 0 && y < side && x >= 0 && x < side) c[static_cast<std::size_t>(y * side + x)] = 1.0f;
}

void draw(Canvas& c, int side, const Primitive& p) {
  switch (p.kind) {
    case Stroke::Horizontal:
      for (int i = 0; i < p.len; ++i) plot(c, side, p.y, p.x + i);
      break;
    case Stroke::Vertical:
      for (int i = 0; i < p.len; ++i) plot(c, side, p.y + i, p.x);
      break;
    case Stroke::Diagonal:
      for (int i = 0; i < p.len; ++i) plot(c, side, p.y + i, p.x + i);
      break;
    case Stroke::AntiDiagonal:
      for (int i = 0; i < p.len; ++i) plot(c, side, p.y + i, p.x + p.len - 1 - i);
      break;
    case Stroke::Box:
      for (int i = 0; i < p.len; ++i) {
        plot(c, side, p.y, p.x + i);
        plot(c, side, p.y + p.len - 1, p.x + i);
        plot(c, side, p.y + i, p.x);
        plot(c, side, p.y + i, p.x + p.len - 1);
      }
      break;
    case Stroke::Cross: {
      const int h = p.len / 2;
      for (int i = 0; i < p.len; ++i) {
        plot(c, side, p.y + h, p.x + i);
        plot(c, side, p.y + i, p.x + h);
      }
      break;
    }
  }
}

// K+1 primitives; class c draws primitives c and c+1, so neighbouring classes share a stroke
// and are locally confusable.
std::vector<Primitive> primitive_pool(const SyntheticSpec& spec) {
  std::mt19937_64 rng(derive_seed(spec.pattern_seed, 0x5041545445524eULL));
  const int side = static_cast<int>(spec.image_side);
  const int margin = static_cast<int>(spec.max_shift);
  std::vector<Primitive> pool;
  for (std::size_t c = 0; c <= spec.classes; ++c) {
    const auto kind = static_cast<Stroke>(c % 6);
    std::uniform_int_distribution<int> len_d(side / 3, side / 2);
    const int len = len_d(rng);
    std::uniform_int_distribution<int> pos(margin, std::max(margin, side - margin - len));
    pool.push_back({kind, pos(rng), pos(rng), len});
  }
  return pool;
}

Canvas render(const SyntheticSpec& spec, const std::vector<Primitive>& pool, std::size_t label) {
  const int side = static_cast<int>(spec.image_side);
  Canvas c(spec.image_side * spec.image_side, -1.0f);
  draw(c, side, pool[label]);
  draw(c, side, pool[label + 1]);
  return c;
}

Dataset sample(const SyntheticSpec& spec, const std::vector<Canvas>& patterns, std::size_t per_class,
               std::uint64_t seed) {
  Dataset d;
  d.side = spec.image_side;
  d.classes = spec.classes;
  const std::size_t n = per_class * spec.classes;
  d.pixels.resize(n * d.pixels_per_image());
  d.labels.resize(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto shift_max = static_cast<int>(spec.max_shift);
  std::uniform_int_distribution<int> shift(-shift_max, shift_max);
  const int side = static_cast<int>(spec.image_side);
  // Interleave classes so any prefix is roughly balanced.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % spec.classes;
    d.labels[i] = static_cast<int>(label);
    const int dy = shift(rng), dx = shift(rng);
    float* px = d.pixels.data() + i * d.pixels_per_image();
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const int sy = y - dy, sx = x - dx;
        double v = (sy >= 0 && sy < side && sx >= 0 && sx < side)
                       ? patterns[label][static_cast<std::size_t>(sy * side + sx)]
                       : -1.0;
        v += spec.noise_std * noise(rng);
        px[y * side + x] = static_cast<float>(std::clamp(v, -1.0, 1.0));
      }
  }
  return d;
}

}  // namespace

std::vector<float> class_pattern(const SyntheticSpec& spec, std::size_t label) {
  spec.validate();
  if (label >= spec.classes) throw std::out_of_range("label " + std::to_string(label) + " out of range");
  return render(spec, primitive_pool(spec), label);
}

DataSplit generate_dataset(const SyntheticSpec& spec) {
  spec.validate();
  const auto pool = primitive_pool(spec);
  std::vector<Canvas> patterns;
  for (std::size_t c = 0; c < spec.classes; ++c) patterns.push_back(render(spec, pool, c));
  return {sample(spec, patterns, spec.train_per_class, derive_seed(spec.sample_seed, 1)),
          sample(spec, patterns, spec.test_per_class, derive_seed(spec.sample_seed, 2))};
}

}  // namespace filterlens::toy
