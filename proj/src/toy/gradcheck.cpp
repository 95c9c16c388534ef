#include "filterlens/toy/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "filterlens/toy/seeds.hpp"

namespace filterlens::toy {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport gradient_check(const GradCheckOptions& options) {
  TinyCnn<double> net = TinyCnn<double>::initialized(options.architecture, options.seed);
  std::mt19937_64 rng(derive_seed(options.seed, 0x4743));
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (ConvBlock<double>& b : net.blocks())
    for (double& v : b.bias) v = u(rng);

  const Architecture& a = net.architecture();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> input(options.batch * a.features_at(options.start_block));
  for (double& x : input) x = normal(rng);
  // Activations fed past a pool are rectified, so keep them non-negative there.
  if (options.start_block > 0)
    for (double& x : input) x = std::abs(x);
  std::vector<int> labels(options.batch);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(a.classes) - 1);
  for (int& y : labels) y = pick(rng);

  const std::span<const double> in(input);
  const std::span<const int> lab(labels);
  const auto lg = compute_gradients(net, in, lab, options.batch, options.l2, options.start_block, Reduction::Mean,
                                    options.backend);
  auto loss = [&] {
    return compute_loss(net, in, lab, options.batch, options.l2, options.start_block, Reduction::Mean, options.backend);
  };

  GradCheckReport report;
  auto check = [&](std::string name, std::vector<double>& params, const std::vector<double>& grads) {
    GradCheckGroup g{std::move(name), 0, 0.0};
    const std::size_t n = params.size();
    const std::size_t count = options.max_per_group == 0 ? n : std::min(n, options.max_per_group);
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t i = count == n ? s : s * n / count;
      const double saved = params[i];
      params[i] = saved + options.step;
      const double up = loss();
      params[i] = saved - options.step;
      const double down = loss();
      params[i] = saved;
      const double numeric = (up - down) / (2 * options.step);
      g.max_relative_error = std::max(g.max_relative_error, relative_error(grads[i], numeric));
      ++g.checked;
    }
    report.max_relative_error = std::max(report.max_relative_error, g.max_relative_error);
    report.checked += g.checked;
    report.groups.push_back(std::move(g));
  };

  for (std::size_t b = options.start_block; b < net.depth(); ++b) {
    check("block" + std::to_string(b) + ".weight", net.blocks()[b].weight, lg.grads.block_weight[b]);
    check("block" + std::to_string(b) + ".bias", net.blocks()[b].bias, lg.grads.block_bias[b]);
  }
  check("head", net.head().weight, lg.grads.head);
  return report;
}

}  // namespace filterlens::toy
