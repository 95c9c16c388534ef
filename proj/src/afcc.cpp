#include "filterlens/afcc.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"
#include "filterlens/errors.hpp"

namespace filterlens {

namespace {

constexpr std::array<char, 4> kMagic{'A', 'F', 'M', '1'};

void check_topology(const FcTopology& t) {
  if (t.filters == 0 || t.units == 0 || t.labels == 0) {
    throw DimensionError("topology dimensions must be positive");
  }
}

}  // namespace

AfccMask::AfccMask(FcTopology topology, const std::vector<std::uint8_t>& filter_label_keep)
    : topology_(topology), keep_(topology.total_weights(), 0) {
  check_topology(topology);
  if (filter_label_keep.size() != topology.filters * topology.labels) {
    throw DimensionError("expected " + std::to_string(topology.filters * topology.labels) +
                         " filter-label flags, got " + std::to_string(filter_label_keep.size()));
  }
  for (std::size_t f = 0; f < topology.filters; ++f) {
    for (std::size_t u = 0; u < topology.units; ++u) {
      const std::size_t row = f * topology.units + u;
      for (std::size_t j = 0; j < topology.labels; ++j) {
        keep_[row * topology.labels + j] = filter_label_keep[f * topology.labels + j] != 0 ? 1 : 0;
      }
    }
  }
}

AfccMask AfccMask::all(FcTopology topology, bool keep) {
  return AfccMask(topology, std::vector<std::uint8_t>(topology.filters * topology.labels, keep ? 1 : 0));
}

std::size_t AfccMask::kept() const noexcept {
  return static_cast<std::size_t>(std::count(keep_.begin(), keep_.end(), std::uint8_t{1}));
}

AfccMask build_mask(std::span<const std::vector<Cluster>> clusters_per_filter, const FcTopology& topology) {
  check_topology(topology);
  if (clusters_per_filter.size() != topology.filters) {
    throw DimensionError("mask needs " + std::to_string(topology.filters) + " filters, got " +
                         std::to_string(clusters_per_filter.size()));
  }
  std::vector<std::uint8_t> flags(topology.filters * topology.labels, 0);
  for (std::size_t f = 0; f < clusters_per_filter.size(); ++f) {
    for (const Cluster& c : clusters_per_filter[f]) {
      for (std::size_t label : c.labels) {
        if (label >= topology.labels) {
          throw DimensionError("cluster label " + std::to_string(label) + " of filter " + std::to_string(f) +
                               " out of range");
        }
        flags[f * topology.labels + label] = 1;
      }
    }
  }
  return AfccMask(topology, flags);
}

AfccMask build_mask(std::span<const FilterAnalysis> analyses, const FcTopology& topology) {
  std::vector<std::vector<Cluster>> clusters;
  clusters.reserve(analyses.size());
  for (const FilterAnalysis& a : analyses) {
    if (a.clipped.side() != topology.labels) {
      throw DimensionError("filter " + std::to_string(a.filter_index) + " analysis does not have " +
                           std::to_string(topology.labels) + " labels");
    }
    clusters.push_back(a.clusters);
  }
  return build_mask(std::span<const std::vector<Cluster>>(clusters), topology);
}

MaskStats mask_stats(const AfccMask& mask, const LayerStats& layer_stats) {
  const FcTopology& t = mask.topology();
  MaskStats s;
  s.kept = mask.kept();
  s.zeroed = t.total_weights() - s.kept;
  s.reduction_fraction = t.total_weights() == 0
                             ? 0.0
                             : static_cast<double>(s.zeroed) / static_cast<double>(t.total_weights());
  s.estimator = static_cast<double>(t.filters * t.units) * layer_stats.pooled_mean_cluster_size.value_or(0.0) *
                layer_stats.mean_clusters_per_filter;
  return s;
}

template <class T>
void apply_mask_in_place(std::span<T> weights, const AfccMask& mask) {
  const FcTopology& t = mask.topology();
  if (weights.size() != t.total_weights()) {
    throw DimensionError("weight array has " + std::to_string(weights.size()) + " entries, mask expects " +
                         std::to_string(t.total_weights()));
  }
  const auto flags = mask.flags();
  const auto rows = static_cast<std::ptrdiff_t>(t.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * t.labels;
    for (std::size_t j = 0; j < t.labels; ++j) {
      if (flags[base + j] == 0) weights[base + j] = T(0);
    }
  }
}

template void apply_mask_in_place<float>(std::span<float>, const AfccMask&);
template void apply_mask_in_place<double>(std::span<double>, const AfccMask&);

std::vector<double> apply_mask(std::span<const double> weights, const AfccMask& mask) {
  std::vector<double> out(weights.begin(), weights.end());
  apply_mask_in_place<double>(out, mask);
  return out;
}

std::size_t write_mask(const AfccMask& mask, std::ostream& sink) {
  const FcTopology& t = mask.topology();
  constexpr auto u32max = std::numeric_limits<std::uint32_t>::max();
  if (t.filters > u32max || t.units > u32max || t.labels > u32max) {
    throw std::invalid_argument("mask dimensions exceed 32-bit range");
  }
  detail::LeWriter out(sink);
  out.bytes(kMagic.data(), kMagic.size());
  out.u32(kMaskFormatVersion);
  out.u32(static_cast<std::uint32_t>(t.filters));
  out.u32(static_cast<std::uint32_t>(t.units));
  out.u32(static_cast<std::uint32_t>(t.labels));
  const auto flags = mask.flags();
  out.bytes(reinterpret_cast<const char*>(flags.data()), flags.size());
  return out.written();
}

AfccMask read_mask(std::istream& source) {
  detail::LeReader in(source);
  std::array<char, 4> magic{};
  in.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) {
    throw FormatError(FormatError::Kind::BadMagic, 0,
                      "bad magic \"" + std::string(magic.data(), magic.size()) + "\", expected AFM1");
  }
  const std::uint32_t version = in.u32("version");
  if (version != kMaskFormatVersion) {
    throw FormatError(FormatError::Kind::UnsupportedVersion, 4, "unsupported AFM1 version " + std::to_string(version));
  }
  FcTopology t;
  t.filters = in.u32("filter count");
  t.units = in.u32("units per filter");
  t.labels = in.u32("label count");
  if (t.filters == 0 || t.units == 0 || t.labels == 0) {
    throw FormatError(FormatError::Kind::InvalidHeader, 8, "mask dimensions must be positive");
  }

  AfccMask mask;
  mask.topology_ = t;
  // Read row by row so a corrupted header cannot force a huge allocation before truncation is seen.
  std::vector<char> row(t.labels);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const std::uint64_t row_start = in.offset();
    in.bytes(row.data(), row.size(), "mask payload");
    for (std::size_t j = 0; j < t.labels; ++j) {
      const auto b = static_cast<std::uint8_t>(row[j]);
      if (b > 1) {
        throw FormatError(FormatError::Kind::InvalidValue, row_start + j,
                          "mask byte must be 0 or 1, got " + std::to_string(b));
      }
      mask.keep_.push_back(b);
    }
    if (r % t.units != 0) {
      const std::size_t first = (r - r % t.units) * t.labels;
      if (!std::equal(mask.keep_.end() - static_cast<std::ptrdiff_t>(t.labels), mask.keep_.end(),
                      mask.keep_.begin() + static_cast<std::ptrdiff_t>(first))) {
        throw FormatError(FormatError::Kind::InvalidValue, row_start,
                          "mask flags differ across units of filter " + std::to_string(r / t.units));
      }
    }
  }
  return mask;
}

void save_mask(const AfccMask& mask, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(0, "cannot open " + path + " for writing");
  write_mask(mask, os);
  os.flush();
  if (!os) throw IoError(0, "flush failed for " + path);
}

AfccMask load_mask(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(0, "cannot open " + path);
  return read_mask(is);
}

}  // namespace filterlens
