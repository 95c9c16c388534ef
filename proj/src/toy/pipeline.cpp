#include "filterlens/toy/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "filterlens/errors.hpp"
#include "filterlens/toy/seeds.hpp"

namespace filterlens::toy {

using nlohmann::json;
namespace fs = std::filesystem;

void PipelineConfig::reseed(std::uint64_t master) {
  seed = master;
  data.sample_seed = derive_seed(master, 1);
  trunk.seed = derive_seed(master, 2);
  probe.seed = derive_seed(master, 3);
  afcc.seed = derive_seed(master, 4);
}

std::uint64_t PipelineConfig::init_seed() const { return derive_seed(seed, 5); }

std::vector<std::size_t> PipelineConfig::depths() const {
  if (!probe_depths.empty()) return probe_depths;
  std::vector<std::size_t> all;
  for (std::size_t d = 1; d <= architecture.filters.size(); ++d) all.push_back(d);
  return all;
}

void PipelineConfig::validate() const {
  try {
    data.validate();
    architecture.validate();
    trunk.validate();
    probe.validate();
    afcc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (architecture.input_side != data.image_side || architecture.classes != data.classes ||
      architecture.input_channels != 1) {
    throw ConfigError("architecture does not match the dataset");
  }
  if (!(threshold >= 0 && threshold < 1)) throw ConfigError("threshold must lie in [0, 1)");
  std::set<std::size_t> seen;
  for (std::size_t d : probe_depths) {
    if (d == 0 || d > architecture.filters.size()) throw ConfigError("probe depth " + std::to_string(d) + " is invalid");
    if (!seen.insert(d).second) throw ConfigError("probe depth " + std::to_string(d) + " is repeated");
  }
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

TrainConfig train_from_json(const json& j, TrainConfig c, const std::string& where) {
  reject_unknown(j, {"learning_rate", "momentum", "l2", "decay_factor", "decay_every", "batch_size", "epochs", "seed"},
                 where);
  read(j, "learning_rate", c.learning_rate);
  read(j, "momentum", c.momentum);
  read(j, "l2", c.l2);
  read(j, "decay_factor", c.decay_factor);
  read(j, "decay_every", c.decay_every);
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "seed", c.seed);
  return c;
}

json train_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},     {"l2", c.l2},
          {"decay_factor", c.decay_factor},   {"decay_every", c.decay_every}, {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"seed", c.seed}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& doc) {
  PipelineConfig c;
  try {
    reject_unknown(doc, {"seed", "data", "architecture", "trunk", "probe", "afcc", "threshold", "order", "split",
                         "afcc_train_last_conv", "probe_depths"},
                   "config");
    if (doc.contains("seed")) c.reseed(doc.at("seed").get<std::uint64_t>());
    if (doc.contains("data")) {
      const json& d = doc.at("data");
      reject_unknown(d, {"classes", "image_side", "noise_std", "train_per_class", "test_per_class", "pattern_seed",
                         "sample_seed", "max_shift"},
                     "data");
      read(d, "classes", c.data.classes);
      read(d, "image_side", c.data.image_side);
      read(d, "noise_std", c.data.noise_std);
      read(d, "train_per_class", c.data.train_per_class);
      read(d, "test_per_class", c.data.test_per_class);
      read(d, "pattern_seed", c.data.pattern_seed);
      read(d, "sample_seed", c.data.sample_seed);
      read(d, "max_shift", c.data.max_shift);
    }
    if (doc.contains("architecture")) {
      reject_unknown(doc.at("architecture"), {"filters"}, "architecture");
      read(doc.at("architecture"), "filters", c.architecture.filters);
    }
    if (doc.contains("trunk")) c.trunk = train_from_json(doc.at("trunk"), c.trunk, "trunk");
    if (doc.contains("probe")) c.probe = train_from_json(doc.at("probe"), c.probe, "probe");
    if (doc.contains("afcc")) c.afcc = train_from_json(doc.at("afcc"), c.afcc, "afcc");
    read(doc, "threshold", c.threshold);
    if (doc.contains("order")) {
      const auto o = parse_scan_order(doc.at("order").get<std::string>());
      if (!o) throw ConfigError("order must be \"forward\" or \"reverse\"");
      c.order = *o;
    }
    if (doc.contains("split")) {
      const auto s = parse_eval_split(doc.at("split").get<std::string>());
      if (!s) throw ConfigError("split must be \"test\" or \"train\"");
      c.split = *s;
    }
    read(doc, "afcc_train_last_conv", c.afcc_train_last_conv);
    read(doc, "probe_depths", c.probe_depths);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.architecture.input_side = c.data.image_side;
  c.architecture.input_channels = 1;
  c.architecture.classes = c.data.classes;
  c.validate();
  return c;
}

json to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["data"] = {{"classes", c.data.classes},
               {"image_side", c.data.image_side},
               {"noise_std", c.data.noise_std},
               {"train_per_class", c.data.train_per_class},
               {"test_per_class", c.data.test_per_class},
               {"pattern_seed", c.data.pattern_seed},
               {"sample_seed", c.data.sample_seed},
               {"max_shift", c.data.max_shift}};
  j["architecture"] = {{"filters", c.architecture.filters}};
  j["trunk"] = train_to_json(c.trunk);
  j["probe"] = train_to_json(c.probe);
  j["afcc"] = train_to_json(c.afcc);
  j["threshold"] = c.threshold;
  j["order"] = std::string(to_string(c.order));
  j["split"] = std::string(to_string(c.split));
  j["afcc_train_last_conv"] = c.afcc_train_last_conv;
  j["probe_depths"] = c.probe_depths;
  return j;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return pipeline_config_from_json(doc);
}

PipelineResult run_pipeline(const PipelineConfig& config, PipelineStages stages) {
  config.validate();
  PipelineResult r;
  r.config = config;
  const DataSplit data = generate_dataset(config.data);

  r.network = TinyCnn<float>::initialized(config.architecture, config.init_seed());
  r.trunk_history = train_full(r.network, data, config.trunk);
  r.full_accuracy = evaluate(r.network, data.test);

  for (std::size_t depth : config.depths()) {
    DepthResult d;
    d.probe = train_probe(r.network, depth, data, config.probe, config.split);
    // Analyze exactly what lands in the FFB1 file so stored reports re-derive bit for bit.
    d.probe.bundle = round_to_float32(std::move(d.probe.bundle));
    d.analyses = analyze_layer(d.probe.bundle, config.threshold, config.order);
    d.stats = aggregate_layer(d.analyses, d.probe.bundle.labels);
    d.boolean_breakdown = per_label_breakdown(d.analyses, BreakdownMode::Boolean);
    d.field_breakdown = per_label_breakdown(d.analyses, BreakdownMode::Field);
    r.depths.push_back(std::move(d));
  }

  if (stages.afcc && !r.depths.empty()) {
    const DepthResult* deepest = &r.depths.front();
    for (const DepthResult& d : r.depths)
      if (d.probe.depth > deepest->probe.depth) deepest = &d;
    AfccOutcome a;
    a.depth = deepest->probe.depth;
    const FieldBundle& b = deepest->probe.bundle;
    a.mask = build_mask(deepest->analyses, FcTopology{b.filters, b.units, b.labels});
    a.stats = mask_stats(a.mask, deepest->stats);
    a.baseline_accuracy = deepest->probe.accuracy;
    a.retrained = afcc_retrain(r.network, deepest->probe, a.mask, data, config.afcc,
                               AfccOptions{config.afcc_train_last_conv});
    r.afcc = std::move(a);
  }
  return r;
}

std::string summary_csv(const PipelineResult& result) {
  std::ostringstream os;
  os << "depth,N_f,U,accuracy,n,N_c,C_s\n";
  for (const DepthResult& d : result.depths) {
    os << d.probe.depth << ',' << d.probe.bundle.filters << ',' << d.probe.bundle.units << ','
       << fixed(d.probe.accuracy, 4) << ',' << fixed(d.stats.mean_noise, 3) << ','
       << fixed(d.stats.mean_clusters_per_filter, 3) << ','
       << (d.stats.pooled_mean_cluster_size ? fixed(*d.stats.pooled_mean_cluster_size, 3) : std::string()) << '\n';
  }
  return os.str();
}

json afcc_json(const AfccOutcome& a) {
  json j;
  j["depth"] = a.depth;
  j["mask"] = to_json(a.stats);
  j["total_weights"] = a.mask.topology().total_weights();
  j["baseline_accuracy"] = a.baseline_accuracy;
  j["retrained_accuracy"] = a.retrained.accuracy;
  j["epoch_loss"] = a.retrained.history.epoch_loss;
  j["epoch_test_accuracy"] = a.retrained.history.test_accuracy;
  j["mask_held"] = a.retrained.history.mask_held;
  return j;
}

std::vector<std::string> write_artifacts(const PipelineResult& result, const std::string& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError(0, "cannot create " + directory + ": " + ec.message());
  std::vector<std::string> written;
  auto text = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(directory) / name).string();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << body;
    if (!os) throw IoError(0, "write failed for " + path);
    written.push_back(path);
  };

  for (const DepthResult& d : result.depths) {
    const std::string stem = "depth" + std::to_string(d.probe.depth);
    const std::string bundle_path = (fs::path(directory) / (stem + ".ffb")).string();
    save_bundle(d.probe.bundle, bundle_path);
    written.push_back(bundle_path);
    const std::string report_path = (fs::path(directory) / (stem + "_report.json")).string();
    save_report(make_report(d.probe.bundle, d.analyses, d.stats), report_path);
    written.push_back(report_path);
    std::ostringstream boolean_csv, field_csv;
    write_breakdown_csv(d.boolean_breakdown, boolean_csv);
    write_breakdown_csv(d.field_breakdown, field_csv);
    text(stem + "_snr_boolean.csv", boolean_csv.str());
    text(stem + "_snr_field.csv", field_csv.str());
  }
  text("summary.csv", summary_csv(result));
  if (result.afcc) {
    const std::string mask_path = (fs::path(directory) / "afcc.afm").string();
    save_mask(result.afcc->mask, mask_path);
    written.push_back(mask_path);
    text("afcc.json", afcc_json(*result.afcc).dump(2) + "\n");
  }
  return written;
}

}  // namespace filterlens::toy
