#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "filterlens/cluster.hpp"

namespace filterlens {

/// A ratio that may be unbounded (zero denominator). Never encoded as a sentinel number.
struct SnrValue {
  double value = 0.0;
  bool unbounded = false;

  static SnrValue ratio(double numerator, double denominator);
  bool operator==(const SnrValue&) const = default;
};

struct SnrEstimate {
  double cluster_size = 0;       // C_s
  double clusters_per_filter = 0;  // N_c
  std::size_t filters = 0;       // N_f
  std::size_t labels = 0;        // N_l
  double noise_per_filter = 0;   // n

  double signal = 0;
  double noise_internal = 0;
  double noise_external = 0;
  SnrValue snr_internal;
  SnrValue snr_external;
};

/// Mean appearances of a label on cluster diagonals across the layer: C_s*N_c*N_f/N_l.
double signal_estimate(double cluster_size, double clusters_per_filter, std::size_t filters, std::size_t labels);
/// Mean appearances of other labels inside the clusters carrying a label's signal.
double internal_noise_estimate(double cluster_size, double signal, std::size_t labels);
/// Out-of-cluster noise spread uniformly over the matrix cells: n*N_f/N_l^2.
double external_noise_estimate(double noise_per_filter, std::size_t filters, std::size_t labels);
/// C_s*N_c*N_l/n; unbounded when n == 0.
SnrValue snr_external(double cluster_size, double clusters_per_filter, std::size_t labels, double noise_per_filter);

SnrEstimate estimate_snr(double cluster_size, double clusters_per_filter, std::size_t filters, std::size_t labels,
                         double noise_per_filter);
SnrEstimate estimate_snr(const LayerStats& stats);

enum class BreakdownMode {
  Boolean,          // count above-threshold bits
  Field,            // sum normalized fields over the same above-threshold cells
  FieldAllElements  // diagnostic: also includes sub-threshold cells
};

std::string_view to_string(BreakdownMode mode);
std::optional<BreakdownMode> parse_breakdown_mode(std::string_view text);

struct LabelBreakdown {
  BreakdownMode mode = BreakdownMode::Boolean;
  std::vector<double> signal;
  std::vector<double> noise_internal;
  std::vector<double> noise_external;

  double mean_signal() const;
  double mean_noise_internal() const;
  double mean_noise_external() const;
};

/// Per-label signal and noise summed over all filters of a layer, row by row.
LabelBreakdown per_label_breakdown(std::span<const FilterAnalysis> analyses, BreakdownMode mode);

/// "label,signal,noise_I,noise_E" rows.
void write_breakdown_csv(const LabelBreakdown& breakdown, std::ostream& os);

struct ErrorPoint {
  double labels = 0;  // K
  double error = 0;   // 1 - accuracy
};

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

/// Unweighted least squares of error on K. Needs at least two distinct K.
LinearFit fit_error_vs_k(std::span<const ErrorPoint> points);

/// Reads "K,error" rows; a header line is optional.
std::vector<ErrorPoint> read_error_points_csv(std::istream& is);

}  // namespace filterlens
