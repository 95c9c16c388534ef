#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "filterlens/afcc.hpp"
#include "filterlens/cluster.hpp"
#include "filterlens/report.hpp"
#include "filterlens/snr.hpp"
#include "filterlens/toy/probe.hpp"

namespace filterlens::toy {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  SyntheticSpec data;
  Architecture architecture;
  TrainConfig trunk{0.02, 0.9, 5e-4, 0.5, 5, 32, 15, 0};
  TrainConfig probe{0.05, 0.9, 5e-4, 0.5, 5, 32, 15, 0};
  TrainConfig afcc{0.05, 0.9, 5e-4, 0.5, 5, 32, 10, 0};
  double threshold = kDefaultThreshold;
  ScanOrder order = ScanOrder::Forward;
  EvalSplit split = EvalSplit::Test;
  bool afcc_train_last_conv = false;
  std::vector<std::size_t> probe_depths;  // empty: every block boundary
  std::uint64_t seed = 0;

  PipelineConfig() { reseed(0); }

  /// Reseeds sampling, initialization and every training stage from one value.
  void reseed(std::uint64_t master);
  std::uint64_t init_seed() const;
  std::vector<std::size_t> depths() const;
  void validate() const;
};

/// Unknown keys are rejected; missing keys keep their defaults. "seed" derives every stage
/// seed first, so explicitly given stage seeds take precedence.
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig load_pipeline_config(const std::string& path);

struct DepthResult {
  ProbeResult probe;
  std::vector<FilterAnalysis> analyses;
  LayerStats stats;
  LabelBreakdown boolean_breakdown;
  LabelBreakdown field_breakdown;
};

struct AfccOutcome {
  std::size_t depth = 0;
  AfccMask mask;
  MaskStats stats;
  double baseline_accuracy = 0;  // unmasked probe
  AfccResult retrained;
};

struct PipelineResult {
  PipelineConfig config;
  double full_accuracy = 0;
  TrainHistory trunk_history;
  TinyCnn<float> network;
  std::vector<DepthResult> depths;
  std::optional<AfccOutcome> afcc;
};

struct PipelineStages {
  bool afcc = true;
};

/// Stage 1 once, then Stages 2-3 and cluster analysis at each probe depth, then AFCC on the
/// deepest probe.
PipelineResult run_pipeline(const PipelineConfig& config, PipelineStages stages = {});

/// depth,N_f,U,accuracy,n,N_c,C_s
std::string summary_csv(const PipelineResult& result);
nlohmann::json afcc_json(const AfccOutcome& outcome);

/// Writes per-depth bundles, reports and breakdowns, summary.csv and the AFCC mask/summary.
/// Returns the paths written.
std::vector<std::string> write_artifacts(const PipelineResult& result, const std::string& directory);

}  // namespace filterlens::toy
