#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "filterlens/cluster.hpp"

namespace filterlens {

/// Shape of a probe head: (filters*units) input rows by `labels` output columns.
struct FcTopology {
  std::size_t filters = 0;  // N_f
  std::size_t units = 0;    // U
  std::size_t labels = 0;   // N_l

  std::size_t rows() const noexcept { return filters * units; }
  std::size_t total_weights() const noexcept { return filters * units * labels; }
  bool operator==(const FcTopology&) const = default;
};

/// Keep/drop flag per head weight, indexed (filter, unit, label) with label fastest.
/// Flags are uniform across the units of a filter.
class AfccMask {
 public:
  AfccMask() = default;
  /// Builds from per-(filter,label) flags, replicated across units.
  AfccMask(FcTopology topology, const std::vector<std::uint8_t>& filter_label_keep);

  static AfccMask all(FcTopology topology, bool keep);

  const FcTopology& topology() const noexcept { return topology_; }
  bool keep(std::size_t filter, std::size_t unit, std::size_t label) const {
    return keep_[(filter * topology_.units + unit) * topology_.labels + label] != 0;
  }
  bool keep_filter_label(std::size_t filter, std::size_t label) const { return keep(filter, 0, label); }
  /// Row-major flags matching a (filters*units) x labels weight array.
  std::span<const std::uint8_t> flags() const noexcept { return keep_; }

  std::size_t kept() const noexcept;

  bool operator==(const AfccMask&) const = default;

 private:
  friend AfccMask read_mask(std::istream&);
  FcTopology topology_;
  std::vector<std::uint8_t> keep_;
};

struct MaskStats {
  std::size_t kept = 0;
  std::size_t zeroed = 0;
  double reduction_fraction = 0;
  double estimator = 0;  // N_f * U * C_s * N_c
};

/// Keeps (f, u, j) iff label j lies in the union of filter f's cluster labels.
AfccMask build_mask(std::span<const FilterAnalysis> analyses, const FcTopology& topology);
/// Same, from per-filter cluster lists (e.g. a stored analysis report).
AfccMask build_mask(std::span<const std::vector<Cluster>> clusters_per_filter, const FcTopology& topology);

MaskStats mask_stats(const AfccMask& mask, const LayerStats& layer_stats);

/// Returns a copy of `weights` with dropped positions set to zero.
std::vector<double> apply_mask(std::span<const double> weights, const AfccMask& mask);

template <class T>
void apply_mask_in_place(std::span<T> weights, const AfccMask& mask);

extern template void apply_mask_in_place<float>(std::span<float>, const AfccMask&);
extern template void apply_mask_in_place<double>(std::span<double>, const AfccMask&);

// AFM1: "AFM1", u32 version, u32 N_f, u32 U, u32 N_l, then N_f*U*N_l bytes of 0/1.
inline constexpr std::uint32_t kMaskFormatVersion = 1;
inline constexpr std::size_t kMaskHeaderSize = 20;

std::size_t write_mask(const AfccMask& mask, std::ostream& sink);
AfccMask read_mask(std::istream& source);

void save_mask(const AfccMask& mask, const std::string& path);
AfccMask load_mask(const std::string& path);

}  // namespace filterlens
