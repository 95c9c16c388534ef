#include "filterlens/report.hpp"

#include <algorithm>
#include <fstream>

#include "filterlens/errors.hpp"

namespace filterlens {

using nlohmann::json;

namespace {

constexpr const char* kReportFormat = "filterlens-analysis";
constexpr int kReportVersion = 1;

template <class T>
T require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw ReportError(std::string("report is missing \"") + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ReportError(std::string("report field \"") + key + "\" has the wrong type: " + e.what());
  }
}

}  // namespace

std::vector<std::vector<Cluster>> AnalysisReport::clusters_per_filter() const {
  std::vector<std::vector<Cluster>> out;
  out.reserve(filter_results.size());
  for (const ReportedFilter& f : filter_results) out.push_back(f.clusters);
  return out;
}

AnalysisReport make_report(const FieldBundle& bundle, std::span<const FilterAnalysis> analyses,
                           const LayerStats& stats) {
  if (analyses.size() != bundle.filters) throw DimensionError("one analysis per bundle filter is required");
  AnalysisReport r;
  r.layer_name = bundle.layer_name;
  r.labels = bundle.labels;
  r.filters = bundle.filters;
  r.units = bundle.units;
  r.threshold = stats.threshold;
  r.order = analyses.empty() ? ScanOrder::Forward : analyses.front().order;
  r.stats = stats;
  for (const FilterAnalysis& a : analyses) {
    r.filter_results.push_back({a.filter_index, a.clusters, a.noise, a.ones_total, a.degenerate});
  }
  return r;
}

json to_json(const LayerStats& stats) {
  json j;
  j["filters"] = stats.filters;
  j["labels"] = stats.labels;
  j["threshold"] = stats.threshold;
  j["mean_noise"] = stats.mean_noise;
  j["mean_clusters_per_filter"] = stats.mean_clusters_per_filter;
  j["pooled_mean_cluster_size"] =
      stats.pooled_mean_cluster_size ? json(*stats.pooled_mean_cluster_size) : json(nullptr);
  j["total_clusters"] = stats.total_clusters;
  return j;
}

json to_json(const MaskStats& stats) {
  json j;
  j["kept"] = stats.kept;
  j["zeroed"] = stats.zeroed;
  j["reduction_fraction"] = stats.reduction_fraction;
  j["estimator"] = stats.estimator;
  return j;
}

json to_json(const AnalysisReport& report) {
  json j;
  j["format"] = kReportFormat;
  j["version"] = kReportVersion;
  j["layer_name"] = report.layer_name;
  j["labels"] = report.labels;
  j["filters"] = report.filters;
  j["units"] = report.units;
  j["threshold"] = report.threshold;
  j["order"] = std::string(to_string(report.order));
  json filters = json::array();
  for (const ReportedFilter& f : report.filter_results) {
    json clusters = json::array();
    for (const Cluster& c : f.clusters) clusters.push_back(c.labels);
    filters.push_back({{"index", f.index},
                       {"clusters", clusters},
                       {"noise", f.noise},
                       {"ones_total", f.ones_total},
                       {"degenerate", f.degenerate}});
  }
  j["filter_results"] = std::move(filters);
  j["layer_stats"] = to_json(report.stats);
  return j;
}

AnalysisReport report_from_json(const json& doc) {
  if (require<std::string>(doc, "format") != kReportFormat) throw ReportError("not an analysis report");
  if (require<int>(doc, "version") != kReportVersion) throw ReportError("unsupported report version");

  AnalysisReport r;
  r.layer_name = require<std::string>(doc, "layer_name");
  r.labels = require<std::size_t>(doc, "labels");
  r.filters = require<std::size_t>(doc, "filters");
  r.units = require<std::size_t>(doc, "units");
  r.threshold = require<double>(doc, "threshold");
  const auto order = parse_scan_order(require<std::string>(doc, "order"));
  if (!order) throw ReportError("unknown scan order");
  r.order = *order;

  const json& filters = doc.at("filter_results");
  if (!filters.is_array() || filters.size() != r.filters) {
    throw ReportError("filter_results must hold one entry per filter");
  }
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const json& f = filters[i];
    ReportedFilter rf;
    rf.index = require<std::size_t>(f, "index");
    if (rf.index != i) throw ReportError("filter_results must be in filter-index order");
    for (const json& c : f.at("clusters")) {
      Cluster cl{c.get<std::vector<std::size_t>>()};
      std::sort(cl.labels.begin(), cl.labels.end());
      for (std::size_t label : cl.labels) {
        if (label >= r.labels) throw ReportError("cluster label out of range in filter " + std::to_string(i));
      }
      rf.clusters.push_back(std::move(cl));
    }
    rf.noise = require<std::size_t>(f, "noise");
    rf.ones_total = require<std::size_t>(f, "ones_total");
    rf.degenerate = require<bool>(f, "degenerate");
    r.filter_results.push_back(std::move(rf));
  }

  const json& s = doc.at("layer_stats");
  r.stats.filters = require<std::size_t>(s, "filters");
  r.stats.labels = require<std::size_t>(s, "labels");
  r.stats.threshold = require<double>(s, "threshold");
  r.stats.mean_noise = require<double>(s, "mean_noise");
  r.stats.mean_clusters_per_filter = require<double>(s, "mean_clusters_per_filter");
  if (s.contains("pooled_mean_cluster_size") && !s.at("pooled_mean_cluster_size").is_null()) {
    r.stats.pooled_mean_cluster_size = require<double>(s, "pooled_mean_cluster_size");
  }
  r.stats.total_clusters = require<std::size_t>(s, "total_clusters");
  return r;
}

void save_report(const AnalysisReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(0, "cannot open " + path + " for writing");
  os << to_json(report).dump(2) << '\n';
  if (!os) throw IoError(0, "write failed for " + path);
}

AnalysisReport load_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(0, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
  try {
    return report_from_json(doc);
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
}

std::vector<FilterAnalysis> rehydrate_analyses(const FieldBundle& bundle, const AnalysisReport& report) {
  if (bundle.labels != report.labels || bundle.filters != report.filters || bundle.units != report.units) {
    throw DimensionError("bundle shape (N_l=" + std::to_string(bundle.labels) + ", N_f=" +
                         std::to_string(bundle.filters) + ", U=" + std::to_string(bundle.units) +
                         ") does not match report (N_l=" + std::to_string(report.labels) + ", N_f=" +
                         std::to_string(report.filters) + ", U=" + std::to_string(report.units) + ")");
  }
  const auto check = validate(bundle);
  if (!check.ok()) throw std::invalid_argument("invalid bundle: " + check.issues.front().message);

  std::vector<FilterAnalysis> out;
  out.reserve(bundle.filters);
  for (std::size_t f = 0; f < bundle.filters; ++f) {
    const ReportedFilter& rf = report.filter_results[f];
    FilterAnalysis a;
    a.filter_index = f;
    a.threshold = report.threshold;
    a.order = report.order;
    a.degenerate = is_degenerate(bundle.matrices[f]);
    a.normalized = normalize(bundle.matrices[f]);
    a.clipped = a.degenerate ? BooleanMatrix(bundle.labels) : clip(a.normalized, report.threshold);
    a.clusters = rf.clusters;
    a.ones_total = a.clipped.count_ones();
    a.noise = external_noise(a.clipped, a.clusters);
    if (a.degenerate != rf.degenerate || a.noise != rf.noise || a.ones_total != rf.ones_total) {
      throw IntegrityError("report entry for filter " + std::to_string(f) + " does not match the bundle");
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace filterlens
