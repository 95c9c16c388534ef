#include "filterlens/snr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "filterlens/errors.hpp"

namespace filterlens {

SnrValue SnrValue::ratio(double numerator, double denominator) {
  if (denominator == 0.0) return {0.0, true};
  return {numerator / denominator, false};
}

double signal_estimate(double cluster_size, double clusters_per_filter, std::size_t filters, std::size_t labels) {
  if (labels == 0) throw std::invalid_argument("label count must be positive");
  if (cluster_size < 0 || clusters_per_filter < 0) throw std::invalid_argument("C_s and N_c must be non-negative");
  return cluster_size * clusters_per_filter * static_cast<double>(filters) / static_cast<double>(labels);
}

double internal_noise_estimate(double cluster_size, double signal, std::size_t labels) {
  if (labels < 2) throw std::invalid_argument("internal noise needs at least 2 labels");
  return (cluster_size - 1.0) / static_cast<double>(labels - 1) * signal;
}

double external_noise_estimate(double noise_per_filter, std::size_t filters, std::size_t labels) {
  if (labels == 0) throw std::invalid_argument("label count must be positive");
  const auto l = static_cast<double>(labels);
  return noise_per_filter * static_cast<double>(filters) / (l * l);
}

SnrValue snr_external(double cluster_size, double clusters_per_filter, std::size_t labels, double noise_per_filter) {
  if (noise_per_filter < 0) throw std::invalid_argument("noise must be non-negative");
  return SnrValue::ratio(cluster_size * clusters_per_filter * static_cast<double>(labels), noise_per_filter);
}

SnrEstimate estimate_snr(double cluster_size, double clusters_per_filter, std::size_t filters, std::size_t labels,
                         double noise_per_filter) {
  SnrEstimate e;
  e.cluster_size = cluster_size;
  e.clusters_per_filter = clusters_per_filter;
  e.filters = filters;
  e.labels = labels;
  e.noise_per_filter = noise_per_filter;
  e.signal = signal_estimate(cluster_size, clusters_per_filter, filters, labels);
  e.noise_internal = internal_noise_estimate(cluster_size, e.signal, labels);
  e.noise_external = external_noise_estimate(noise_per_filter, filters, labels);
  e.snr_internal = SnrValue::ratio(e.signal, e.noise_internal);
  e.snr_external = snr_external(cluster_size, clusters_per_filter, labels, noise_per_filter);
  return e;
}

SnrEstimate estimate_snr(const LayerStats& stats) {
  return estimate_snr(stats.pooled_mean_cluster_size.value_or(0.0), stats.mean_clusters_per_filter, stats.filters,
                      stats.labels, stats.mean_noise);
}

std::string_view to_string(BreakdownMode mode) {
  switch (mode) {
    case BreakdownMode::Boolean: return "boolean";
    case BreakdownMode::Field: return "field";
    case BreakdownMode::FieldAllElements: return "field-all";
  }
  return "boolean";
}

std::optional<BreakdownMode> parse_breakdown_mode(std::string_view text) {
  if (text == "boolean") return BreakdownMode::Boolean;
  if (text == "field") return BreakdownMode::Field;
  if (text == "field-all") return BreakdownMode::FieldAllElements;
  return std::nullopt;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double LabelBreakdown::mean_signal() const { return mean_of(signal); }
double LabelBreakdown::mean_noise_internal() const { return mean_of(noise_internal); }
double LabelBreakdown::mean_noise_external() const { return mean_of(noise_external); }

LabelBreakdown per_label_breakdown(std::span<const FilterAnalysis> analyses, BreakdownMode mode) {
  LabelBreakdown out;
  out.mode = mode;
  if (analyses.empty()) return out;
  const std::size_t labels = analyses.front().clipped.side();

  // owner[f][label] = cluster id within filter f, or -1
  std::vector<std::vector<int>> owner(analyses.size(), std::vector<int>(labels, -1));
  for (std::size_t f = 0; f < analyses.size(); ++f) {
    const FilterAnalysis& a = analyses[f];
    if (a.clipped.side() != labels || a.normalized.side() != labels) {
      throw DimensionError("filter " + std::to_string(a.filter_index) + " does not have " +
                           std::to_string(labels) + " labels");
    }
    for (std::size_t c = 0; c < a.clusters.size(); ++c) {
      for (std::size_t l : a.clusters[c].labels) {
        if (l >= labels) throw DimensionError("cluster label out of range");
        owner[f][l] = static_cast<int>(c);
      }
    }
  }

  out.signal.assign(labels, 0.0);
  out.noise_internal.assign(labels, 0.0);
  out.noise_external.assign(labels, 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(labels);

  // Rows are independent; each row sums filters in index order so results do not depend on threads.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto i = static_cast<std::size_t>(r);
    double signal = 0, internal = 0, external = 0;
    for (std::size_t f = 0; f < analyses.size(); ++f) {
      const FilterAnalysis& a = analyses[f];
      for (std::size_t j = 0; j < labels; ++j) {
        const bool above = a.clipped(i, j);
        if (mode != BreakdownMode::FieldAllElements && !above) continue;
        const double v = mode == BreakdownMode::Boolean ? 1.0 : a.normalized(i, j);
        if (i == j) {
          signal += v;
        } else if (owner[f][i] >= 0 && owner[f][i] == owner[f][j]) {
          internal += v;
        } else {
          external += v;
        }
      }
    }
    out.signal[i] = signal;
    out.noise_internal[i] = internal;
    out.noise_external[i] = external;
  }
  return out;
}

void write_breakdown_csv(const LabelBreakdown& breakdown, std::ostream& os) {
  os << "label,signal,noise_I,noise_E\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < breakdown.signal.size(); ++i) {
    os << i << ',' << breakdown.signal[i] << ',' << breakdown.noise_internal[i] << ','
       << breakdown.noise_external[i] << '\n';
  }
}

LinearFit fit_error_vs_k(std::span<const ErrorPoint> points) {
  std::set<double> distinct;
  for (const ErrorPoint& p : points) distinct.insert(p.labels);
  if (distinct.size() < 2) throw std::invalid_argument("linear fit needs at least two distinct K values");

  // Sort a copy so the result does not depend on input order.
  std::vector<ErrorPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const ErrorPoint& a, const ErrorPoint& b) {
    return a.labels != b.labels ? a.labels < b.labels : a.error < b.error;
  });

  const auto n = static_cast<double>(sorted.size());
  double mean_k = 0, mean_e = 0;
  for (const ErrorPoint& p : sorted) {
    mean_k += p.labels;
    mean_e += p.error;
  }
  mean_k /= n;
  mean_e /= n;

  double sxx = 0, sxy = 0, syy = 0;
  for (const ErrorPoint& p : sorted) {
    const double dk = p.labels - mean_k;
    const double de = p.error - mean_e;
    sxx += dk * dk;
    sxy += dk * de;
    syy += de * de;
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_e - fit.slope * mean_k;
  double ss_res = 0;
  for (const ErrorPoint& p : sorted) {
    const double r = p.error - (fit.intercept + fit.slope * p.labels);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

std::vector<ErrorPoint> read_error_points_csv(std::istream& is) {
  std::vector<ErrorPoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw CsvError(CsvError::Kind::Unparsable, line_no, "expected K,error");
    auto parse = [](std::string s, double& out) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
    };
    ErrorPoint p;
    const bool ok = parse(line.substr(0, comma), p.labels) && parse(line.substr(comma + 1), p.error);
    if (!ok) {
      if (points.empty() && line_no == 1) continue;  // header
      throw CsvError(CsvError::Kind::Unparsable, line_no, "unparsable K,error row");
    }
    if (p.labels < 1 || p.error < 0 || p.error > 1) {
      throw CsvError(CsvError::Kind::OutOfRange, line_no, "K must be >= 1 and error within [0,1]");
    }
    points.push_back(p);
  }
  return points;
}

}  // namespace filterlens
