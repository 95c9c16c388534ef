#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "filterlens/afcc.hpp"
#include "filterlens/field_bundle.hpp"
#include "filterlens/toy/trainer.hpp"

namespace filterlens::toy {

/// Which split the single-filter matrices are averaged over.
enum class EvalSplit { Test, Train };

std::string_view to_string(EvalSplit split);
std::optional<EvalSplit> parse_eval_split(std::string_view text);

struct ProbeResult {
  std::size_t depth = 0;  // number of trunk blocks feeding the head
  LinearHead<float> head;
  double accuracy = 0;  // test accuracy of trunk[0, depth) + head
  TrainHistory history;
  FieldBundle bundle;  // single-filter matrices at this depth
};

/// Stage 2 and 3: freezes the first `depth` blocks of `net`, trains a fresh random head on
/// their pooled output, then measures one matrix per filter by silencing every other filter.
ProbeResult train_probe(const TinyCnn<float>& net, std::size_t depth, const DataSplit& data, const TrainConfig& config,
                        EvalSplit split = EvalSplit::Test);

/// Entry (i, j) for filter f: mean over `eval` images of label i of
/// sum_u head[(f, u), j] * a_{f,u}, accumulated in double.
FieldBundle single_filter_matrices(const TinyCnn<float>& net, std::size_t depth, const LinearHead<float>& head,
                                   const Dataset& eval, std::string layer_name);

/// Mean output fields of the whole head, same convention.
FieldMatrix full_head_matrix(const TinyCnn<float>& net, std::size_t depth, const LinearHead<float>& head,
                             const Dataset& eval);

/// Rounds every entry to the nearest float32, i.e. what an FFB1 round trip yields.
FieldBundle round_to_float32(FieldBundle bundle);

struct AfccOptions {
  bool train_last_conv = false;  // also update the block feeding the head
};

struct AfccResult {
  double accuracy = 0;
  TrainHistory history;
  TinyCnn<float> network;  // probe trunk + masked head after retraining
};

/// Zeroes the dropped head weights of the probe and retrains with them held at zero.
AfccResult afcc_retrain(const TinyCnn<float>& net, const ProbeResult& probe, const AfccMask& mask,
                        const DataSplit& data, const TrainConfig& config, const AfccOptions& options = {});

}  // namespace filterlens::toy
