#include "filterlens/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "filterlens/errors.hpp"

namespace filterlens {

BooleanMatrix BooleanMatrix::from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  BooleanMatrix m(rows.size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != rows.size()) throw DimensionError("boolean matrix rows must form a square");
    std::size_t j = 0;
    for (int v : row) m.set(i, j++, v != 0);
    ++i;
  }
  return m;
}

std::size_t BooleanMatrix::count_ones() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool Cluster::contains(std::size_t label) const {
  return std::binary_search(labels.begin(), labels.end(), label);
}

std::string_view to_string(ScanOrder order) {
  return order == ScanOrder::Forward ? "forward" : "reverse";
}

std::optional<ScanOrder> parse_scan_order(std::string_view text) {
  if (text == "forward") return ScanOrder::Forward;
  if (text == "reverse") return ScanOrder::Reverse;
  return std::nullopt;
}

bool is_degenerate(const FieldMatrix& matrix) {
  const auto values = matrix.values();
  if (values.empty()) return true;
  return *std::max_element(values.begin(), values.end()) <= 0.0;
}

FieldMatrix normalize(const FieldMatrix& matrix) {
  FieldMatrix out(matrix.side());
  if (is_degenerate(matrix)) return out;
  const auto in = matrix.values();
  const double peak = *std::max_element(in.begin(), in.end());
  auto dst = out.values();
  for (std::size_t k = 0; k < in.size(); ++k) dst[k] = in[k] / peak;
  return out;
}

BooleanMatrix clip(const FieldMatrix& matrix, double threshold) {
  const std::size_t side = matrix.side();
  BooleanMatrix bits(side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) bits.set(i, j, matrix(i, j) > threshold);
  }
  return bits;
}

std::vector<Cluster> find_clusters(const BooleanMatrix& bits, ScanOrder order) {
  const std::size_t side = bits.side();
  std::vector<Cluster> clusters;

  auto visit = [&](std::size_t j) {
    if (!bits(j, j)) return;
    for (Cluster& c : clusters) {
      const bool completes = std::all_of(c.labels.begin(), c.labels.end(),
                                         [&](std::size_t k) { return bits(k, j) && bits(j, k); });
      if (completes) {
        c.labels.push_back(j);
        return;
      }
    }
    clusters.push_back(Cluster{{j}});
  };

  if (order == ScanOrder::Forward) {
    for (std::size_t j = 0; j < side; ++j) visit(j);
  } else {
    for (std::size_t j = side; j-- > 0;) visit(j);
  }
  for (Cluster& c : clusters) std::sort(c.labels.begin(), c.labels.end());
  return clusters;
}

std::size_t external_noise(const BooleanMatrix& bits, std::span<const Cluster> clusters) {
  const std::size_t side = bits.side();
  std::vector<bool> used(side, false);
  std::size_t inside = 0;
  for (const Cluster& c : clusters) {
    if (c.labels.empty()) throw IntegrityError("empty cluster");
    for (std::size_t a : c.labels) {
      if (a >= side) throw IntegrityError("cluster label " + std::to_string(a) + " out of range");
      if (used[a]) throw IntegrityError("label " + std::to_string(a) + " appears in two clusters");
      used[a] = true;
      for (std::size_t b : c.labels) {
        if (!bits(a, b)) {
          throw IntegrityError("cluster block element (" + std::to_string(a) + "," + std::to_string(b) +
                               ") is below threshold");
        }
      }
    }
    inside += c.element_count();
  }
  return bits.count_ones() - inside;
}

FilterAnalysis analyze_filter(const FieldMatrix& matrix, double threshold, ScanOrder order,
                              std::size_t filter_index) {
  if (!std::isfinite(threshold)) throw std::invalid_argument("threshold must be finite");
  if (!matrix.all_finite()) {
    throw std::invalid_argument("filter " + std::to_string(filter_index) + " has non-finite entries");
  }
  FilterAnalysis a;
  a.filter_index = filter_index;
  a.threshold = threshold;
  a.order = order;
  a.degenerate = is_degenerate(matrix);
  a.normalized = normalize(matrix);
  if (a.degenerate) {
    a.clipped = BooleanMatrix(matrix.side());
    return a;
  }
  a.clipped = clip(a.normalized, threshold);
  a.clusters = find_clusters(a.clipped, order);
  a.ones_total = a.clipped.count_ones();
  a.noise = external_noise(a.clipped, a.clusters);
  return a;
}

namespace {

// Everything analyze_filter could reject is checked up front; exceptions must not leave a parallel region.
void check_layer(const FieldBundle& bundle, double threshold) {
  if (!std::isfinite(threshold)) throw std::invalid_argument("threshold must be finite");
  const auto report = validate(bundle);
  if (!report.ok()) throw std::invalid_argument("invalid bundle: " + report.issues.front().message);
}

}  // namespace

std::vector<FilterAnalysis> analyze_layer(const FieldBundle& bundle, double threshold, ScanOrder order) {
  check_layer(bundle, threshold);
  const auto count = static_cast<std::ptrdiff_t>(bundle.matrices.size());
  std::vector<FilterAnalysis> out(bundle.matrices.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t f = 0; f < count; ++f) {
    const auto idx = static_cast<std::size_t>(f);
    out[idx] = analyze_filter(bundle.matrices[idx], threshold, order, idx);
  }
  return out;
}

std::vector<FilterAnalysis> analyze_layer_serial(const FieldBundle& bundle, double threshold, ScanOrder order) {
  check_layer(bundle, threshold);
  std::vector<FilterAnalysis> out;
  out.reserve(bundle.matrices.size());
  for (std::size_t f = 0; f < bundle.matrices.size(); ++f) {
    out.push_back(analyze_filter(bundle.matrices[f], threshold, order, f));
  }
  return out;
}

LayerStats aggregate_layer(std::span<const FilterAnalysis> analyses, std::size_t labels) {
  if (analyses.empty()) throw std::invalid_argument("cannot aggregate an empty layer");
  LayerStats s;
  s.filters = analyses.size();
  s.labels = labels;
  s.threshold = analyses.front().threshold;

  double noise_sum = 0.0;
  std::size_t size_sum = 0;
  for (const FilterAnalysis& a : analyses) {
    if (a.clipped.side() != labels) {
      throw DimensionError("filter " + std::to_string(a.filter_index) + " has side " +
                           std::to_string(a.clipped.side()) + ", layer has " + std::to_string(labels) +
                           " labels");
    }
    noise_sum += static_cast<double>(a.noise);
    s.total_clusters += a.clusters.size();
    for (const Cluster& c : a.clusters) size_sum += c.size();
  }
  const auto n = static_cast<double>(analyses.size());
  s.mean_noise = noise_sum / n;
  s.mean_clusters_per_filter = static_cast<double>(s.total_clusters) / n;
  if (s.total_clusters > 0) {
    s.pooled_mean_cluster_size = static_cast<double>(size_sum) / static_cast<double>(s.total_clusters);
  }
  return s;
}

}  // namespace filterlens
