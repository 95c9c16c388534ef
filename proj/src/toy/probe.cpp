#include "filterlens/toy/probe.hpp"

#include <stdexcept>
#include <string>

#include "filterlens/errors.hpp"
#include "filterlens/toy/seeds.hpp"

namespace filterlens::toy {

std::string_view to_string(EvalSplit split) { return split == EvalSplit::Test ? "test" : "train"; }

std::optional<EvalSplit> parse_eval_split(std::string_view text) {
  if (text == "test") return EvalSplit::Test;
  if (text == "train") return EvalSplit::Train;
  return std::nullopt;
}

namespace {

void check_depth(const TinyCnn<float>& net, std::size_t depth) {
  if (depth == 0 || depth > net.depth()) {
    throw DimensionError("probe depth must lie in [1, " + std::to_string(net.depth()) + "], got " +
                         std::to_string(depth));
  }
}

void check_head(const TinyCnn<float>& net, std::size_t depth, const LinearHead<float>& head) {
  const Architecture& a = net.architecture();
  if (head.inputs != a.features_at(depth) || head.outputs != a.classes || head.weight.size() != head.inputs * head.outputs) {
    throw DimensionError("head does not match the activations at depth " + std::to_string(depth));
  }
}

std::vector<std::size_t> label_counts(const Dataset& eval, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (int y : eval.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw std::out_of_range("label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) throw std::invalid_argument("label " + std::to_string(c) + " has no evaluation images");
  }
  return counts;
}

}  // namespace

FieldBundle single_filter_matrices(const TinyCnn<float>& net, std::size_t depth, const LinearHead<float>& head,
                                   const Dataset& eval, std::string layer_name) {
  check_depth(net, depth);
  check_head(net, depth, head);
  const Architecture& a = net.architecture();
  const std::size_t labels = a.classes, filters = a.channels_at(depth), units = a.units_at(depth);
  const std::vector<std::size_t> counts = label_counts(eval, labels);
  const std::vector<float> act = propagate(net, std::span<const float>(eval.pixels), eval.size(), 0, depth);
  const std::size_t width = filters * units;

  FieldBundle bundle{std::move(layer_name), labels, filters, units, std::vector<FieldMatrix>(filters, FieldMatrix(labels))};
  const auto nf = static_cast<std::ptrdiff_t>(filters);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t fp = 0; fp < nf; ++fp) {
    const auto f = static_cast<std::size_t>(fp);
    FieldMatrix& m = bundle.matrices[f];
    std::vector<double> field(labels);
    for (std::size_t n = 0; n < eval.size(); ++n) {
      std::fill(field.begin(), field.end(), 0.0);
      const float* x = act.data() + n * width + f * units;
      for (std::size_t u = 0; u < units; ++u) {
        const double av = x[u];
        const float* w = head.weight.data() + (f * units + u) * labels;
        for (std::size_t j = 0; j < labels; ++j) field[j] += static_cast<double>(w[j]) * av;
      }
      const auto i = static_cast<std::size_t>(eval.labels[n]);
      for (std::size_t j = 0; j < labels; ++j) m(i, j) += field[j];
    }
    for (std::size_t i = 0; i < labels; ++i)
      for (std::size_t j = 0; j < labels; ++j) m(i, j) /= static_cast<double>(counts[i]);
  }
  return bundle;
}

FieldMatrix full_head_matrix(const TinyCnn<float>& net, std::size_t depth, const LinearHead<float>& head,
                             const Dataset& eval) {
  check_depth(net, depth);
  check_head(net, depth, head);
  const std::size_t labels = net.architecture().classes;
  const std::vector<std::size_t> counts = label_counts(eval, labels);
  const std::vector<float> act = propagate(net, std::span<const float>(eval.pixels), eval.size(), 0, depth);
  FieldMatrix m(labels);
  for (std::size_t n = 0; n < eval.size(); ++n) {
    const auto i = static_cast<std::size_t>(eval.labels[n]);
    for (std::size_t r = 0; r < head.inputs; ++r) {
      const double av = act[n * head.inputs + r];
      for (std::size_t j = 0; j < labels; ++j) m(i, j) += static_cast<double>(head.weight[r * labels + j]) * av;
    }
  }
  for (std::size_t i = 0; i < labels; ++i)
    for (std::size_t j = 0; j < labels; ++j) m(i, j) /= static_cast<double>(counts[i]);
  return m;
}

FieldBundle round_to_float32(FieldBundle bundle) {
  for (FieldMatrix& m : bundle.matrices)
    for (double& v : m.values()) v = static_cast<double>(static_cast<float>(v));
  return bundle;
}

ProbeResult train_probe(const TinyCnn<float>& net, std::size_t depth, const DataSplit& data, const TrainConfig& config,
                        EvalSplit split) {
  check_depth(net, depth);
  const Architecture& a = net.architecture();
  TinyCnn<float> probe_net =
      net.truncated(depth, random_head<float>(a.features_at(depth), a.classes, derive_seed(config.seed, 0x4845 + depth)));
  ProbeResult r;
  r.depth = depth;
  r.history = train(probe_net, data, config, TrainOptions{depth, nullptr, true});
  r.accuracy = evaluate(probe_net, data.test);
  r.head = probe_net.head();
  const Dataset& eval = split == EvalSplit::Test ? data.test : data.train;
  r.bundle = single_filter_matrices(net, depth, r.head, eval,
                                    "block" + std::to_string(depth) + "/" + std::string(to_string(split)));
  return r;
}

AfccResult afcc_retrain(const TinyCnn<float>& net, const ProbeResult& probe, const AfccMask& mask,
                        const DataSplit& data, const TrainConfig& config, const AfccOptions& options) {
  check_depth(net, probe.depth);
  AfccResult out;
  out.network = net.truncated(probe.depth, probe.head);
  TrainOptions opts;
  opts.first_trainable_block = options.train_last_conv ? probe.depth - 1 : probe.depth;
  opts.head_mask = &mask;
  out.history = train(out.network, data, config, opts);
  out.accuracy = evaluate(out.network, data.test);
  return out;
}

}  // namespace filterlens::toy
