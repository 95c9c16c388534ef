#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "filterlens/afcc.hpp"
#include "filterlens/cluster.hpp"
#include "filterlens/field_bundle.hpp"

namespace filterlens {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReportedFilter {
  std::size_t index = 0;
  std::vector<Cluster> clusters;
  std::size_t noise = 0;
  std::size_t ones_total = 0;
  bool degenerate = false;

  bool operator==(const ReportedFilter&) const = default;
};

/// Serializable outcome of analyzing one layer bundle.
struct AnalysisReport {
  std::string layer_name;
  std::size_t labels = 0;
  std::size_t filters = 0;
  std::size_t units = 0;
  double threshold = kDefaultThreshold;
  ScanOrder order = ScanOrder::Forward;
  std::vector<ReportedFilter> filter_results;
  LayerStats stats;

  std::vector<std::vector<Cluster>> clusters_per_filter() const;
  FcTopology topology() const { return {filters, units, labels}; }

  bool operator==(const AnalysisReport&) const = default;
};

AnalysisReport make_report(const FieldBundle& bundle, std::span<const FilterAnalysis> analyses,
                           const LayerStats& stats);

nlohmann::json to_json(const AnalysisReport& report);
nlohmann::json to_json(const LayerStats& stats);
nlohmann::json to_json(const MaskStats& stats);
AnalysisReport report_from_json(const nlohmann::json& doc);

void save_report(const AnalysisReport& report, const std::string& path);
AnalysisReport load_report(const std::string& path);

/// Rebuilds full analyses from a bundle plus the clusters a report recorded for it, re-deriving
/// the normalized and clipped matrices at the report's threshold. Throws if the two disagree.
std::vector<FilterAnalysis> rehydrate_analyses(const FieldBundle& bundle, const AnalysisReport& report);

}  // namespace filterlens
