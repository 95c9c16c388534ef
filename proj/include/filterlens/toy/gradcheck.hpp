#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "filterlens/toy/network.hpp"

namespace filterlens::toy {

struct GradCheckOptions {
  Architecture architecture{8, 2, {3, 4}, 3};
  std::size_t batch = 3;
  double l2 = 1e-3;
  double step = 1e-6;
  std::size_t start_block = 0;
  std::size_t max_per_group = 0;  // 0 checks every parameter; otherwise an evenly spaced subset
  std::uint64_t seed = 0;
  Backend backend = Backend::Parallel;
};

struct GradCheckGroup {
  std::string name;  // "block<b>.weight", "block<b>.bias" or "head"
  std::size_t checked = 0;
  double max_relative_error = 0;
};

struct GradCheckReport {
  double max_relative_error = 0;
  std::size_t checked = 0;
  std::vector<GradCheckGroup> groups;
};

/// Below this magnitude gradients are compared absolutely rather than relatively.
inline constexpr double kGradCheckFloor = 1e-4;

/// |a - n| / max(|a|, |n|, kGradCheckFloor)
double relative_error(double analytic, double numeric);

/// Analytic gradients of a random double-precision net (random biases, inputs and labels)
/// against central differences of the loss.
GradCheckReport gradient_check(const GradCheckOptions& options);

}  // namespace filterlens::toy
