#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "filterlens/field_bundle.hpp"

namespace filterlens {

inline constexpr double kDefaultThreshold = 0.3;

class BooleanMatrix {
 public:
  BooleanMatrix() = default;
  explicit BooleanMatrix(std::size_t side) : side_(side), bits_(side * side, 0) {}

  static BooleanMatrix from_rows(std::initializer_list<std::initializer_list<int>> rows);

  std::size_t side() const noexcept { return side_; }
  bool operator()(std::size_t row, std::size_t col) const { return bits_[row * side_ + col] != 0; }
  void set(std::size_t row, std::size_t col, bool on) { bits_[row * side_ + col] = on ? 1 : 0; }

  std::size_t count_ones() const noexcept;

  bool operator==(const BooleanMatrix&) const = default;

 private:
  std::size_t side_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Set of labels whose full pairwise block is above threshold. Labels kept ascending.
struct Cluster {
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t element_count() const noexcept { return labels.size() * labels.size(); }
  bool contains(std::size_t label) const;

  bool operator==(const Cluster&) const = default;
};

enum class ScanOrder { Forward, Reverse };

std::string_view to_string(ScanOrder order);
std::optional<ScanOrder> parse_scan_order(std::string_view text);

struct FilterAnalysis {
  std::size_t filter_index = 0;
  double threshold = kDefaultThreshold;
  ScanOrder order = ScanOrder::Forward;
  bool degenerate = false;  // max entry <= 0; no clusters by definition
  FieldMatrix normalized;
  BooleanMatrix clipped;
  std::vector<Cluster> clusters;
  std::size_t noise = 0;       // n: above-threshold elements outside every cluster block
  std::size_t ones_total = 0;

  bool operator==(const FilterAnalysis&) const = default;
};

/// Layer-level aggregates in the shape of a per-layer results row.
struct LayerStats {
  std::size_t filters = 0;
  std::size_t labels = 0;
  double threshold = kDefaultThreshold;
  double mean_noise = 0.0;                // n
  double mean_clusters_per_filter = 0.0;  // N_c
  std::optional<double> pooled_mean_cluster_size;  // C_s; empty when no filter has a cluster
  std::size_t total_clusters = 0;

  bool operator==(const LayerStats&) const = default;
};

bool is_degenerate(const FieldMatrix& matrix);

/// Divides by the maximal entry. A matrix whose maximum is <= 0 maps to all zeros.
FieldMatrix normalize(const FieldMatrix& matrix);

/// Bit is set iff the entry is strictly above `threshold`.
BooleanMatrix clip(const FieldMatrix& matrix, double threshold);

/// Greedy diagonal scan: each diagonal 1 joins the earliest-created cluster it can complete
/// (symmetric 1s against every member), otherwise seeds a new cluster.
std::vector<Cluster> find_clusters(const BooleanMatrix& bits, ScanOrder order = ScanOrder::Forward);

/// Count of ones outside all cluster blocks. Throws IntegrityError if the clusters are not
/// disjoint full blocks of `bits`.
std::size_t external_noise(const BooleanMatrix& bits, std::span<const Cluster> clusters);

FilterAnalysis analyze_filter(const FieldMatrix& matrix, double threshold = kDefaultThreshold,
                              ScanOrder order = ScanOrder::Forward, std::size_t filter_index = 0);

/// Analyzes every filter of a bundle. Filters are processed concurrently; results are in filter order.
std::vector<FilterAnalysis> analyze_layer(const FieldBundle& bundle, double threshold = kDefaultThreshold,
                                          ScanOrder order = ScanOrder::Forward);
/// Single-threaded reference for analyze_layer.
std::vector<FilterAnalysis> analyze_layer_serial(const FieldBundle& bundle, double threshold = kDefaultThreshold,
                                                 ScanOrder order = ScanOrder::Forward);

LayerStats aggregate_layer(std::span<const FilterAnalysis> analyses, std::size_t labels);

}  // namespace filterlens
