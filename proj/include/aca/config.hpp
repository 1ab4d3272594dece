#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aca/dataset.hpp"
#include "aca/dp_optimizer.hpp"
#include "aca/errors.hpp"
#include "aca/model.hpp"
#include "aca/strategy.hpp"
#include "aca/synthetic.hpp"

namespace aca {

// Plain-text experiment config: named [sections] with key = value entries,
// '#' starts a comment. The full syntax is documented in the README.
class ConfigFile {
 public:
  static ConfigFile parse(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path.string());
    ConfigFile cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw parse_error("config line " + std::to_string(line_no) + ": unterminated section");
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw parse_error("config line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw parse_error("config line " + std::to_string(line_no) + ": empty key");
      cfg.entries[section + "." + key] = value;
    }
    return cfg;
  }

  bool has(const std::string& dotted) const { return entries.count(dotted) > 0; }

  std::string get_string(const std::string& dotted, std::optional<std::string> fallback = std::nullopt) const {
    const auto it = entries.find(dotted);
    if (it != entries.end()) return it->second;
    if (fallback) return *fallback;
    throw schema_error("config is missing required key '" + dotted + "'");
  }

  double get_double(const std::string& dotted, std::optional<double> fallback = std::nullopt) const {
    const auto it = entries.find(dotted);
    if (it == entries.end()) {
      if (fallback) return *fallback;
      throw schema_error("config is missing required key '" + dotted + "'");
    }
    return parse_double_value(dotted, it->second);
  }

  std::int64_t get_int(const std::string& dotted, std::optional<std::int64_t> fallback = std::nullopt) const {
    const auto it = entries.find(dotted);
    if (it == entries.end()) {
      if (fallback) return *fallback;
      throw schema_error("config is missing required key '" + dotted + "'");
    }
    const auto v = detail::parse_int(it->second);
    if (!v) throw parse_error("config key '" + dotted + "': not an integer: " + it->second);
    return *v;
  }

  std::vector<double> get_double_list(const std::string& dotted) const {
    std::vector<double> out;
    for (const std::string& item : split_list(get_string(dotted))) out.push_back(parse_double_value(dotted, item));
    if (out.empty()) throw schema_error("config key '" + dotted + "': empty list");
    return out;
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

 private:
  static double parse_double_value(const std::string& key, const std::string& raw) {
    if (raw == "inf" || raw == "infinity") return std::numeric_limits<double>::infinity();
    const auto v = detail::parse_double(raw);
    if (!v) throw parse_error("config key '" + key + "': not a number: " + raw);
    return *v;
  }

  std::map<std::string, std::string> entries;
};

// Transform syntax: name(key=value, ...), e.g.
//   patch_set(rows=2, cols=2, row0=0, col0=0, value=50)
//   grid_perturb(step=2, magnitude=2, max_value=255)
//   feature_offset(index=0, offset=50)
inline SignalTransform parse_transform(const std::string& text, const ImageGeometry& geometry) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw parse_error("transform must look like name(key=value, ...): " + text);
  const std::string name = detail::trim(text.substr(0, open));
  std::map<std::string, double> args;
  for (const std::string& item : ConfigFile::split_list(text.substr(open + 1, text.size() - open - 2))) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw parse_error("transform argument must be key=value: " + item);
    const auto v = detail::parse_double(detail::trim(item.substr(eq + 1)));
    if (!v) throw parse_error("transform argument is not a number: " + item);
    args[detail::trim(item.substr(0, eq))] = *v;
  }
  const auto arg = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
    const auto it = args.find(key);
    if (it != args.end()) return it->second;
    if (fallback) return *fallback;
    throw schema_error("transform '" + name + "' is missing argument '" + key + "'");
  };

  SignalTransform t;
  t.geometry = geometry;
  if (name == "patch_set") {
    t.kind = PatchSet{static_cast<std::size_t>(arg("rows")), static_cast<std::size_t>(arg("cols")),
                      static_cast<std::size_t>(arg("row0", 0.0)), static_cast<std::size_t>(arg("col0", 0.0)),
                      arg("value")};
  } else if (name == "grid_perturb") {
    t.kind = GridPerturb{static_cast<std::size_t>(arg("step", 2.0)), arg("magnitude"), arg("max_value", 255.0)};
  } else if (name == "feature_offset") {
    t.kind = FeatureOffset{static_cast<std::size_t>(arg("index")), arg("offset")};
  } else {
    throw schema_error("unknown transform '" + name + "'");
  }
  return t;
}

struct PrivacyCell {
  double sigma = 0.0;
  double clip = std::numeric_limits<double>::infinity();
};

struct BoundRunConfig {
  std::vector<double> alphas;
  std::vector<double> sigmas;
  std::vector<double> clips;
  std::int64_t steps = 200;
  double eta = 0.1;
  std::size_t d = 20;
  double delta_conf = 0.05;
  double dist0 = 4.0;
  int trials = 1000;
  double curvature = 1.0;
  std::optional<double> xi;      // redirect strength; default 1/(2*alpha*eta)
  std::optional<double> xi_min;  // set -> analytic mode; unset -> realized
};

struct ExperimentConfig {
  // [dataset]
  std::string dataset_source;  // blobs | csv | idx
  BlobConfig blobs;
  std::filesystem::path csv_path;
  std::string csv_label_column;
  std::vector<std::string> csv_feature_columns;  // empty = all-others
  std::filesystem::path idx_images, idx_labels;
  Normalize normalization = Normalize::none;
  double test_fraction = 0.25;
  ImageGeometry geometry;

  // [model]
  Architecture architecture = Architecture::multinomial_logistic;
  std::size_t hidden_units = 0;
  double init_scale = 0.0;

  // [train]
  TrainConfig train;

  // [privacy]
  double delta = 1e-5;
  std::vector<PrivacyCell> privacy_grid;

  // [strategy]
  std::string transform_text;
  int target_label = 0;
  std::vector<double> alphas;

  // [sweep]
  double target_success = 0.9;
  int replicates = 1;

  // [bound]
  BoundRunConfig bound;

  // [mia]
  std::size_t mia_shadows = 8;
  std::size_t mia_pool = 0;  // 0 = whole training set
  std::int64_t mia_steps = 0;  // 0 = same as [train] steps

  // [run]
  std::uint64_t master_seed = 0;
  std::filesystem::path out_dir = "out";
  int workers = 1;
};

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  const ConfigFile f = ConfigFile::parse(path);
  ExperimentConfig cfg;

  cfg.dataset_source = f.get_string("dataset.source", "blobs");
  if (cfg.dataset_source == "blobs") {
    cfg.blobs.n = static_cast<std::size_t>(f.get_int("dataset.n", 1000));
    cfg.blobs.d_in = static_cast<std::size_t>(f.get_int("dataset.d_in", 10));
    cfg.blobs.num_classes = static_cast<int>(f.get_int("dataset.classes", 2));
    cfg.blobs.separation = f.get_double("dataset.separation", 4.0);
    cfg.blobs.noise_sd = f.get_double("dataset.noise_sd", 1.0);
  } else if (cfg.dataset_source == "csv") {
    cfg.csv_path = f.get_string("dataset.path");
    cfg.csv_label_column = f.get_string("dataset.label_column");
    const std::string cols = f.get_string("dataset.feature_columns", "all-others");
    if (cols != "all-others") cfg.csv_feature_columns = ConfigFile::split_list(cols);
    if (!std::filesystem::exists(cfg.csv_path))
      throw schema_error("dataset.path does not exist: " + cfg.csv_path.string());
  } else if (cfg.dataset_source == "idx") {
    cfg.idx_images = f.get_string("dataset.images");
    cfg.idx_labels = f.get_string("dataset.labels");
    for (const auto& p : {cfg.idx_images, cfg.idx_labels})
      if (!std::filesystem::exists(p)) throw schema_error("dataset file does not exist: " + p.string());
  } else {
    throw schema_error("dataset.source must be blobs | csv | idx");
  }

  const std::string norm = f.get_string("dataset.normalize", "none");
  if (norm == "none")
    cfg.normalization = Normalize::none;
  else if (norm == "minmax_01")
    cfg.normalization = Normalize::minmax_01;
  else if (norm == "divide_by_255")
    cfg.normalization = Normalize::divide_by_255;
  else
    throw schema_error("dataset.normalize must be none | minmax_01 | divide_by_255");

  cfg.test_fraction = f.get_double("dataset.test_fraction", 0.25);
  cfg.geometry.height = static_cast<std::size_t>(f.get_int("dataset.image_height", 0));
  cfg.geometry.width = static_cast<std::size_t>(f.get_int("dataset.image_width", 0));
  cfg.geometry.channels = static_cast<std::size_t>(f.get_int("dataset.image_channels", 1));

  const std::string arch = f.get_string("model.architecture", "logistic");
  if (arch == "logistic")
    cfg.architecture = Architecture::multinomial_logistic;
  else if (arch == "mlp")
    cfg.architecture = Architecture::mlp_one_hidden;
  else
    throw schema_error("model.architecture must be logistic | mlp");
  cfg.hidden_units = static_cast<std::size_t>(f.get_int("model.hidden_units", 128));
  cfg.init_scale = f.get_double("model.init_scale", 0.0);

  cfg.train.learning_rate = f.get_double("train.learning_rate", 0.1);
  cfg.train.steps = f.get_int("train.steps", 100);
  const std::string batch = f.get_string("train.batch", "poisson:0.1");
  const auto colon = batch.find(':');
  if (colon == std::string::npos) throw schema_error("train.batch must be poisson:<q> or shuffle:<B>");
  const std::string scheme = batch.substr(0, colon);
  const std::string param = batch.substr(colon + 1);
  if (scheme == "poisson") {
    cfg.train.scheme = BatchScheme::poisson;
    const auto q = detail::parse_double(param);
    if (!q) throw parse_error("train.batch: bad sampling rate: " + param);
    cfg.train.sampling_rate = *q;
  } else if (scheme == "shuffle") {
    cfg.train.scheme = BatchScheme::fixed_shuffle;
    const auto b = detail::parse_int(param);
    if (!b || *b < 1) throw parse_error("train.batch: bad batch size: " + param);
    cfg.train.batch_size = static_cast<std::size_t>(*b);
  } else {
    throw schema_error("train.batch must be poisson:<q> or shuffle:<B>");
  }

  cfg.delta = f.get_double("privacy.delta", 1e-5);
  for (const std::string& cell : ConfigFile::split_list(f.get_string("privacy.grid", "0:inf"))) {
    const auto sep = cell.find(':');
    if (sep == std::string::npos) throw schema_error("privacy.grid cells must be sigma:clip");
    const auto sigma = detail::parse_double(cell.substr(0, sep));
    const std::string clip_text = cell.substr(sep + 1);
    const double clip = (clip_text == "inf") ? std::numeric_limits<double>::infinity()
                                             : detail::parse_double(clip_text).value_or(-1.0);
    if (!sigma || *sigma < 0.0 || !(clip > 0.0))
      throw schema_error("privacy.grid cell is malformed: " + cell);
    if (*sigma > 0.0 && std::isinf(clip))
      throw schema_error("privacy.grid: sigma > 0 with clip = inf has no defined noise scale");
    cfg.privacy_grid.push_back({*sigma, clip});
  }

  cfg.transform_text = f.get_string("strategy.transform", "feature_offset(index=0, offset=50)");
  cfg.target_label = static_cast<int>(f.get_int("strategy.target_label", 0));
  cfg.alphas = f.has("strategy.alphas") ? f.get_double_list("strategy.alphas") : std::vector<double>{0.0};

  cfg.target_success = f.get_double("sweep.target_success", 0.9);
  cfg.replicates = static_cast<int>(f.get_int("sweep.replicates", 1));

  if (f.has("bound.alphas")) cfg.bound.alphas = f.get_double_list("bound.alphas");
  if (f.has("bound.sigmas")) cfg.bound.sigmas = f.get_double_list("bound.sigmas");
  if (f.has("bound.clips")) cfg.bound.clips = f.get_double_list("bound.clips");
  cfg.bound.steps = f.get_int("bound.steps", 200);
  cfg.bound.eta = f.get_double("bound.eta", 0.1);
  cfg.bound.d = static_cast<std::size_t>(f.get_int("bound.d", 20));
  cfg.bound.delta_conf = f.get_double("bound.delta_conf", 0.05);
  cfg.bound.dist0 = f.get_double("bound.dist0", 4.0);
  cfg.bound.trials = static_cast<int>(f.get_int("bound.trials", 1000));
  cfg.bound.curvature = f.get_double("bound.curvature", 1.0);
  if (f.has("bound.xi")) cfg.bound.xi = f.get_double("bound.xi");
  if (f.has("bound.xi_min")) cfg.bound.xi_min = f.get_double("bound.xi_min");

  cfg.mia_shadows = static_cast<std::size_t>(f.get_int("mia.shadows", 8));
  cfg.mia_pool = static_cast<std::size_t>(f.get_int("mia.pool", 0));
  cfg.mia_steps = f.get_int("mia.steps", 0);

  cfg.master_seed = static_cast<std::uint64_t>(f.get_int("run.seed", 0));
  cfg.out_dir = f.get_string("run.out", "out");
  cfg.workers = static_cast<int>(f.get_int("run.workers", 1));

  if (cfg.privacy_grid.empty()) throw schema_error("privacy.grid must be non-empty");
  if (cfg.alphas.empty()) throw schema_error("strategy.alphas must be non-empty");
  if (!(cfg.target_success > 0.0 && cfg.target_success <= 1.0))
    throw schema_error("sweep.target_success must be in (0,1]");
  if (cfg.replicates < 1) throw schema_error("sweep.replicates must be >= 1");
  return cfg;
}

// Materializes the configured dataset (deterministic for blobs under the
// master seed) and applies the configured normalization.
inline Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset ds;
  if (cfg.dataset_source == "blobs")
    ds = make_blobs(cfg.blobs, derive_seed(cfg.master_seed, std::string_view("dataset")));
  else if (cfg.dataset_source == "csv")
    ds = load_csv_dataset(cfg.csv_path, cfg.csv_label_column, cfg.csv_feature_columns);
  else
    ds = load_idx_images(cfg.idx_images, cfg.idx_labels);
  return normalize_features(ds, cfg.normalization);
}

inline ModelSpec model_spec_for(const ExperimentConfig& cfg, const Dataset& ds) {
  ModelSpec spec;
  spec.arch = cfg.architecture;
  spec.d_in = ds.d_in;
  spec.hidden_units = cfg.hidden_units;
  spec.num_classes = ds.num_classes;
  spec.validate();
  return spec;
}

}  // namespace aca
