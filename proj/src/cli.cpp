#include "filterlens/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "filterlens/afcc.hpp"
#include "filterlens/cluster.hpp"
#include "filterlens/errors.hpp"
#include "filterlens/field_bundle.hpp"
#include "filterlens/report.hpp"
#include "filterlens/snr.hpp"
#include "filterlens/toy/gradcheck.hpp"
#include "filterlens/toy/pipeline.hpp"

namespace filterlens::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kGradTolerance = 1e-5;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
  const char* env = std::getenv("FILTERLENS_OUT_DIR");
  return env && *env ? env : ".";
}

std::string out_path(const std::string& given, const std::string& input, const std::string& suffix) {
  if (!given.empty()) return given;
  return (fs::path(default_out_dir()) / (fs::path(input).stem().string() + suffix)).string();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string fmt(const SnrValue& v) { return v.unbounded ? "unbounded" : fmt(v.value); }

void print_stats(std::ostream& out, const LayerStats& s) {
  out << "filters,labels,threshold,n,N_c,C_s,total_clusters\n"
      << s.filters << ',' << s.labels << ',' << fmt(s.threshold) << ',' << fmt(s.mean_noise) << ','
      << fmt(s.mean_clusters_per_filter) << ','
      << (s.pooled_mean_cluster_size ? fmt(*s.pooled_mean_cluster_size) : std::string()) << ',' << s.total_clusters
      << '\n';
}

ScanOrder order_or_throw(const std::string& text) {
  const auto o = parse_scan_order(text);
  if (!o) throw UsageError("--order must be forward or reverse");
  return *o;
}

toy::PipelineConfig toy_config(const std::string& path, std::optional<std::uint64_t> seed) {
  toy::PipelineConfig c =
      path.empty() ? toy::pipeline_config_from_json(nlohmann::json::object()) : toy::load_pipeline_config(path);
  if (seed) c.reseed(*seed);
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-filter cluster analysis, SNR estimates and AFCC masks"};
  app.name("filterlens");
  app.require_subcommand(1);
  std::function<int()> action;

  // analyze
  std::string bundle_path, report_path, out_file, order_text = "forward";
  double threshold = kDefaultThreshold;
  auto* analyze = app.add_subcommand("analyze", "Cluster every filter of an FFB1 bundle and write the report");
  analyze->add_option("bundle", bundle_path, "FFB1 bundle")->required();
  analyze->add_option("--threshold", threshold, "Clipping threshold")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--order", order_text, "Diagonal scan order (forward|reverse)");
  analyze->add_option("--out", out_file, "Report path");
  analyze->callback([&] {
    action = [&] {
      const ScanOrder order = order_or_throw(order_text);
      const FieldBundle bundle = load_bundle(bundle_path);
      const auto analyses = analyze_layer(bundle, threshold, order);
      const LayerStats stats = aggregate_layer(analyses, bundle.labels);
      const std::string path = out_path(out_file, bundle_path, "_report.json");
      ensure_parent(path);
      save_report(make_report(bundle, analyses, stats), path);
      print_stats(out, stats);
      err << "report written to " << path << '\n';
      return int{kOk};
    };
  });

  // estimate
  double cs = 0, nc = 0, n = 0;
  long long nf = 0, nl = 0;
  auto* estimate = app.add_subcommand("estimate", "Signal, noise and SNR estimates from layer aggregates");
  estimate->add_option("--cs", cs, "Mean cluster size C_s")->required()->check(CLI::NonNegativeNumber);
  estimate->add_option("--nc", nc, "Clusters per filter N_c")->required()->check(CLI::NonNegativeNumber);
  estimate->add_option("--nf", nf, "Filters N_f")->required()->check(CLI::NonNegativeNumber);
  estimate->add_option("--nl", nl, "Labels N_l")->required()->check(CLI::PositiveNumber);
  estimate->add_option("--n", n, "External noise per filter n")->required()->check(CLI::NonNegativeNumber);
  estimate->callback([&] {
    action = [&] {
      if (nl < 2) throw UsageError("--nl must be at least 2 (internal noise divides by N_l - 1)");
      const SnrEstimate e =
          estimate_snr(cs, nc, static_cast<std::size_t>(nf), static_cast<std::size_t>(nl), n);
      out << "signal " << fmt(e.signal) << "\nnoise_I " << fmt(e.noise_internal) << "\nnoise_E "
          << fmt(e.noise_external) << "\nSNR_I " << fmt(e.snr_internal) << "\nSNR_E " << fmt(e.snr_external) << '\n';
      return int{kOk};
    };
  });

  // snr
  std::string mode_text = "boolean";
  auto* snr = app.add_subcommand("snr", "Per-label signal and noise for an analyzed bundle");
  snr->add_option("bundle", bundle_path, "FFB1 bundle")->required();
  snr->add_option("report", report_path, "Analysis report of that bundle")->required();
  snr->add_option("--mode", mode_text, "boolean|field|field-all");
  snr->add_option("--out", out_file, "CSV path");
  snr->callback([&] {
    action = [&] {
      const auto mode = parse_breakdown_mode(mode_text);
      if (!mode) throw UsageError("--mode must be boolean, field or field-all");
      const FieldBundle bundle = load_bundle(bundle_path);
      const AnalysisReport report = load_report(report_path);
      const auto analyses = rehydrate_analyses(bundle, report);
      const LabelBreakdown b = per_label_breakdown(analyses, *mode);
      const std::string path = out_path(out_file, bundle_path, "_snr_" + std::string(to_string(*mode)) + ".csv");
      ensure_parent(path);
      std::ofstream os(path, std::ios::trunc);
      if (!os) throw IoError(0, "cannot open " + path);
      write_breakdown_csv(b, os);
      out << "mean_signal " << fmt(b.mean_signal()) << "\nmean_noise_I " << fmt(b.mean_noise_internal())
          << "\nmean_noise_E " << fmt(b.mean_noise_external()) << '\n';
      err << "breakdown written to " << path << '\n';
      return int{kOk};
    };
  });

  // mask
  long long units = 0;
  auto* mask = app.add_subcommand("mask", "Build the AFCC mask of an analysis report");
  mask->add_option("report", report_path, "Analysis report")->required();
  mask->add_option("--units", units, "Units per filter (must match the report)")->check(CLI::PositiveNumber);
  mask->add_option("--out", out_file, "AFM1 path");
  mask->callback([&] {
    action = [&] {
      const AnalysisReport report = load_report(report_path);
      if (units != 0 && static_cast<std::size_t>(units) != report.units) {
        throw DimensionError("--units " + std::to_string(units) + " does not match the report's " +
                             std::to_string(report.units));
      }
      const auto clusters = report.clusters_per_filter();
      const AfccMask m = build_mask(clusters, report.topology());
      const MaskStats s = mask_stats(m, report.stats);
      const std::string path = out_path(out_file, report_path, ".afm");
      ensure_parent(path);
      save_mask(m, path);
      out << "total " << report.topology().total_weights() << "\nkept " << s.kept << "\nzeroed " << s.zeroed
          << "\nreduction " << fmt(s.reduction_fraction) << "\nestimator " << fmt(s.estimator) << '\n';
      err << "mask written to " << path << '\n';
      return int{kOk};
    };
  });

  // fit
  std::string csv_path;
  auto* fit = app.add_subcommand("fit", "Least-squares fit of error against label count");
  fit->add_option("csv", csv_path, "CSV with columns K,error")->required();
  fit->callback([&] {
    action = [&] {
      std::ifstream is(csv_path);
      if (!is) throw IoError(0, "cannot open " + csv_path);
      const auto points = read_error_points_csv(is);
      const LinearFit f = fit_error_vs_k(points);
      out << "slope " << fmt(f.slope) << "\nintercept " << fmt(f.intercept) << "\nr2 " << fmt(f.r_squared) << '\n';
      return int{kOk};
    };
  });

  // convert
  long long labels = 0, filters = 0;
  std::string layer_name = "layer";
  auto* convert = app.add_subcommand("convert", "Pack filter,row,col,value CSV triplets into an FFB1 bundle");
  convert->add_option("csv", csv_path, "Triplet CSV")->required();
  convert->add_option("--labels", labels, "N_l")->required()->check(CLI::PositiveNumber);
  convert->add_option("--filters", filters, "N_f")->required()->check(CLI::PositiveNumber);
  convert->add_option("--units", units, "U")->required()->check(CLI::PositiveNumber);
  convert->add_option("--name", layer_name, "Layer name stored in the bundle");
  convert->add_option("--out", out_file, "FFB1 path");
  convert->callback([&] {
    action = [&] {
      std::ifstream is(csv_path);
      if (!is) throw IoError(0, "cannot open " + csv_path);
      const FieldBundle b = read_csv_matrices(is, static_cast<std::size_t>(labels), static_cast<std::size_t>(filters),
                                              static_cast<std::size_t>(units), layer_name);
      const std::string path = out_path(out_file, csv_path, ".ffb");
      ensure_parent(path);
      save_bundle(b, path);
      err << "bundle written to " << path << '\n';
      return int{kOk};
    };
  });

  // toy
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* toy = app.add_subcommand("toy", "Built-in synthetic pipeline");
  toy->require_subcommand(1);
  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("config", config_path, "JSON config (built-in defaults when omitted)");
    sub->add_option("--seed", seed, "Master seed");
    if (with_out) sub->add_option("--out", out_dir, "Output directory");
  };
  auto* toy_run = toy->add_subcommand("run", "Train, probe every depth, analyze, AFCC; write all artifacts");
  add_common(toy_run, true);
  toy_run->callback([&] {
    action = [&] {
      const toy::PipelineConfig c = toy_config(config_path, seed);
      const toy::PipelineResult r = toy::run_pipeline(c);
      const std::string dir = out_dir.empty() ? default_out_dir() : out_dir;
      for (const std::string& p : toy::write_artifacts(r, dir)) err << "wrote " << p << '\n';
      out << toy::summary_csv(r);
      if (r.afcc) {
        out << "afcc reduction " << fmt(r.afcc->stats.reduction_fraction) << " accuracy "
            << fmt(r.afcc->baseline_accuracy) << " -> " << fmt(r.afcc->retrained.accuracy) << '\n';
      }
      return int{kOk};
    };
  });
  auto* toy_grad = toy->add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  add_common(toy_grad, false);
  toy_grad->callback([&] {
    action = [&] {
      const toy::PipelineConfig c = toy_config(config_path, seed);
      toy::GradCheckOptions o;
      o.architecture = c.architecture;
      o.batch = 2;
      o.seed = c.init_seed();
      const toy::GradCheckReport rep = toy::gradient_check(o);
      for (const auto& g : rep.groups) out << g.name << ' ' << g.checked << ' ' << fmt(g.max_relative_error) << '\n';
      out << "max_relative_error " << fmt(rep.max_relative_error) << '\n';
      if (!(rep.max_relative_error <= kGradTolerance)) {
        err << "gradient check failed: " << fmt(rep.max_relative_error) << " > " << fmt(kGradTolerance) << '\n';
        return int{kRuntimeFailure};
      }
      return int{kOk};
    };
  });
  auto* toy_afcc = toy->add_subcommand("afcc", "Train, probe the deepest block, build the mask and retrain");
  add_common(toy_afcc, true);
  toy_afcc->callback([&] {
    action = [&] {
      toy::PipelineConfig c = toy_config(config_path, seed);
      c.probe_depths = {c.architecture.filters.size()};
      const toy::PipelineResult r = toy::run_pipeline(c);
      const std::string dir = out_dir.empty() ? default_out_dir() : out_dir;
      for (const std::string& p : toy::write_artifacts(r, dir)) err << "wrote " << p << '\n';
      out << toy::afcc_json(*r.afcc).dump(2) << '\n';
      return int{kOk};
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? int{kOk} : int{kUsage};
  }
  if (!action) {
    err << app.help();
    return kUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const toy::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const TrainingFailure& e) {
    err << "training failed: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kDataError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kDataError;
  } catch (const CsvError& e) {
    err << "csv error: " << e.what() << '\n';
    return kDataError;
  } catch (const ReportError& e) {
    err << "report error: " << e.what() << '\n';
    return kDataError;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "invalid data: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

}  // namespace filterlens::cli
