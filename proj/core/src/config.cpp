#include "impress/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "impress/error.hpp"

namespace impress {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  fail(ErrorKind::kConfigParseError,
       "key '" + std::string(key) + "' expects " + std::string(expected) + ", got '" + std::string(value) + "'");
}

int parse_int(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, raw, "an integer");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, raw, "a nonnegative integer");
  return out;
}

double parse_real(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, raw, "a real number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, raw, "a boolean");
}

std::vector<std::string> split_list(std::string_view raw) {
  std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') return {v};
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <typename T>
std::string join(const std::vector<T>& values, const std::function<std::string(const T&)>& fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt(values[i]);
  }
  return out + "]";
}

template <typename Enum>
struct EnumNames {
  std::vector<std::pair<Enum, std::string>> names;

  Enum parse(std::string_view key, std::string_view raw) const {
    const std::string v = trim(raw);
    for (const auto& [e, n] : names)
      if (n == v) return e;
    std::string expected = "one of {";
    for (std::size_t i = 0; i < names.size(); ++i) expected += (i ? ", " : "") + names[i].second;
    bad_value(key, raw, expected + "}");
  }
  std::string format(Enum e) const {
    for (const auto& [x, n] : names)
      if (x == e) return n;
    return "?";
  }
};

const EnumNames<BackboneMode> kBackboneNames{{{BackboneMode::kPretrained, "pretrained"},
                                              {BackboneMode::kFallback, "fallback"}}};
const EnumNames<MeasurementMode> kModeNames{{{MeasurementMode::kPerceptual, "perceptual"},
                                             {MeasurementMode::kPixelInputReconstruction, "pixel_x_xhat"},
                                             {MeasurementMode::kPixelInputImpression, "pixel_x_m"},
                                             {MeasurementMode::kPixelImpressionNaive, "pixel_m_mhat"}}};
const EnumNames<MapNormalization> kNormNames{{{MapNormalization::kMinMax, "minmax"},
                                              {MapNormalization::kPercentile, "percentile"}}};
const EnumNames<KlMode> kKlNames{{{KlMode::kPooled, "pooled"}, {KlMode::kPerSample, "per_sample"}}};
const EnumNames<OptimizerKind> kOptNames{{{OptimizerKind::kSgd, "sgd"}, {OptimizerKind::kAdam, "adam"}}};



template <typename Get>
ConfigKey make_int(std::string name, std::string doc, Get get) {
  return {name, "int", std::move(doc),
          [get, name](ExperimentConfig& c, std::string_view v) { *get(c) = parse_int(name, v); },
          [get](const ExperimentConfig& c) { return std::to_string(*get(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
ConfigKey make_real(std::string name, std::string doc, Get get) {
  return {name, "real", std::move(doc),
          [get, name](ExperimentConfig& c, std::string_view v) { *get(c) = parse_real(name, v); },
          [get](const ExperimentConfig& c) { return format_real(*get(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
ConfigKey make_bool(std::string name, std::string doc, Get get) {
  return {name, "bool", std::move(doc),
          [get, name](ExperimentConfig& c, std::string_view v) { *get(c) = parse_bool(name, v); },
          [get](const ExperimentConfig& c) {
            return std::string(*get(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

template <typename Get>
ConfigKey make_string(std::string name, std::string doc, Get get) {
  return {name, "string", std::move(doc),
          [get](ExperimentConfig& c, std::string_view v) {
            std::string s = trim(v);
            if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
            *get(c) = s;
          },
          [get](const ExperimentConfig& c) { return "\"" + *get(const_cast<ExperimentConfig&>(c)) + "\""; }};
}

template <typename Enum, typename Get>
ConfigKey make_enum(std::string name, std::string doc, const EnumNames<Enum>& names, Get get) {
  std::string type = "enum{";
  for (std::size_t i = 0; i < names.names.size(); ++i) type += (i ? "|" : "") + names.names[i].second;
  type += "}";
  return {name, type, std::move(doc),
          [get, name, &names](ExperimentConfig& c, std::string_view v) { *get(c) = names.parse(name, v); },
          [get, &names](const ExperimentConfig& c) { return names.format(*get(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
ConfigKey make_int_list(std::string name, std::string doc, Get get) {
  return {name, "list<int>", std::move(doc),
          [get, name](ExperimentConfig& c, std::string_view v) {
            std::vector<int> out;
            for (const auto& item : split_list(v)) out.push_back(parse_int(name, item));
            *get(c) = out;
          },
          [get](const ExperimentConfig& c) {
            return join<int>(*get(const_cast<ExperimentConfig&>(c)), [](const int& x) { return std::to_string(x); });
          }};
}

template <typename Get>
ConfigKey make_real_list(std::string name, std::string doc, Get get) {
  return {name, "list<real>", std::move(doc),
          [get, name](ExperimentConfig& c, std::string_view v) {
            std::vector<double> out;
            for (const auto& item : split_list(v)) out.push_back(parse_real(name, item));
            *get(c) = out;
          },
          [get](const ExperimentConfig& c) {
            return join<double>(*get(const_cast<ExperimentConfig&>(c)), [](const double& x) { return format_real(x); });
          }};
}

template <typename Get>
ConfigKey make_string_list(std::string name, std::string doc, Get get) {
  return {name, "list<string>", std::move(doc),
          [get](ExperimentConfig& c, std::string_view v) { *get(c) = split_list(v); },
          [get](const ExperimentConfig& c) {
            return join<std::string>(*get(const_cast<ExperimentConfig&>(c)), [](const std::string& x) { return x; });
          }};
}

std::vector<ConfigKey> build_schema() {
  using C = ExperimentConfig;
  std::vector<ConfigKey> keys;
  keys.push_back(make_int("data.image_size", "square side length images are resized to",
                          [](C& c) { return &c.data.image_size; }));
  keys.push_back(make_int("data.channels", "image channel count; grayscale inputs are replicated",
                          [](C& c) { return &c.data.channels; }));

  keys.push_back(make_int("ie.blocks", "inception blocks in the IE-Net encoder and decoder",
                          [](C& c) { return &c.ie.blocks; }));
  keys.push_back(make_int_list("ie.widths", "output channels of each inception block (first ie.blocks used)",
                               [](C& c) { return &c.ie.widths; }));
  keys.push_back(make_int("ie.latent_dim", "latent code dimension d_z", [](C& c) { return &c.ie.latent_dim; }));
  keys.push_back(make_int("ie.moment_hidden", "hidden width of the 3-layer moment MLP",
                          [](C& c) { return &c.ie.moment_hidden; }));
  keys.push_back(make_int("ie.disc_hidden", "hidden width of the 4-layer discriminator MLP",
                          [](C& c) { return &c.ie.disc_hidden; }));
  keys.push_back(make_real("ie.lambda_kl", "weight of the KL term (lambda)", [](C& c) { return &c.ie.lambda_kl; }));
  keys.push_back(make_real("ie.lambda_rec", "weight of the L1 impression reconstruction term (lambda_1)",
                           [](C& c) { return &c.ie.lambda_rec; }));
  keys.push_back(make_enum("ie.kl_mode", "KL on batch-pooled moments or averaged per-sample moments", kKlNames,
                           [](C& c) { return &c.ie.kl_mode; }));
  keys.push_back(make_enum("ie.optimizer", "IE-Net optimizer", kOptNames, [](C& c) { return &c.ie.optimizer; }));
  keys.push_back(make_real("ie.lr", "IE-Net learning rate", [](C& c) { return &c.ie.lr; }));
  keys.push_back(make_real("ie.momentum", "SGD momentum for IE-Net", [](C& c) { return &c.ie.momentum; }));
  keys.push_back(make_int("ie.epochs", "IE-Net training epochs", [](C& c) { return &c.ie.epochs; }));
  keys.push_back(make_int("ie.batch_size", "IE-Net batch size (>= 2)", [](C& c) { return &c.ie.batch_size; }));
  keys.push_back(make_int("ie.max_steps", "cap on IE-Net optimization steps (0 = no cap)",
                          [](C& c) { return &c.ie.max_steps; }));
  keys.push_back(make_real("ie.grad_clip", "global gradient-norm clip per IE-Net step (0 = off)",
                           [](C& c) { return &c.ie.grad_clip; }));

  keys.push_back(make_int("expert.base_width", "channels after the first encoder convolution",
                          [](C& c) { return &c.expert.base_width; }));
  keys.push_back(make_int("expert.res_blocks", "residual blocks in each Expert-Net encoder and decoder",
                          [](C& c) { return &c.expert.res_blocks; }));
  keys.push_back(make_int("expert.detail_dim", "detail vector dimension d_s", [](C& c) { return &c.expert.detail_dim; }));
  keys.push_back(make_int("expert.detail_width", "channels of the detail extractor convolutions",
                          [](C& c) { return &c.expert.detail_width; }));
  keys.push_back(make_int("expert.mlp_hidden", "hidden width of the detail-to-AdaIN MLP",
                          [](C& c) { return &c.expert.mlp_hidden; }));
  keys.push_back(make_real("expert.w_x", "weight of |x_hat - x|", [](C& c) { return &c.expert.w_x; }));
  keys.push_back(make_real("expert.w_m", "weight of |m_hat - m|", [](C& c) { return &c.expert.w_m; }));
  keys.push_back(make_real("expert.w_s", "weight of |s_hat - s|", [](C& c) { return &c.expert.w_s; }));
  keys.push_back(make_bool("expert.stop_grad_detail", "block the detail-consistency gradient into the extractor",
                           [](C& c) { return &c.expert.stop_grad_detail; }));
  keys.push_back(make_enum("expert.optimizer", "Expert-Net optimizer", kOptNames,
                           [](C& c) { return &c.expert.optimizer; }));
  keys.push_back(make_real("expert.lr", "Expert-Net learning rate", [](C& c) { return &c.expert.lr; }));
  keys.push_back(make_real("expert.momentum", "SGD momentum when expert.optimizer=sgd",
                           [](C& c) { return &c.expert.momentum; }));
  keys.push_back(make_int("expert.epochs", "Expert-Net training epochs", [](C& c) { return &c.expert.epochs; }));
  keys.push_back(make_int("expert.batch_size", "Expert-Net batch size", [](C& c) { return &c.expert.batch_size; }));
  keys.push_back(make_int("expert.max_steps", "cap on Expert-Net optimization steps (0 = no cap)",
                          [](C& c) { return &c.expert.max_steps; }));

  keys.push_back(make_enum("pm.backbone", "pretrained weights file or seeded frozen random weights", kBackboneNames,
                           [](C& c) { return &c.pm.backbone; }));
  keys.push_back(make_string("pm.weights_path",
                             "backbone weights file (env IMPRESS_BACKBONE_WEIGHTS overrides)",
                             [](C& c) { return &c.pm.weights_path; }));
  keys.push_back(make_string_list("pm.layers", "backbone layers compared by the measurement",
                                  [](C& c) { return &c.pm.layers; }));
  keys.push_back(make_real_list("pm.layer_weights", "per-layer weights lambda^e_l",
                                [](C& c) { return &c.pm.layer_weights; }));
  keys.push_back(make_real("pm.alpha", "segmentation threshold on the normalized map", [](C& c) { return &c.pm.alpha; }));
  keys.push_back(make_enum("pm.mode", "measurement: perceptual or a pixel-L1 pair", kModeNames,
                           [](C& c) { return &c.pm.mode; }));
  keys.push_back(make_enum("pm.normalization", "per-image map normalization before thresholding", kNormNames,
                           [](C& c) { return &c.pm.normalization; }));
  keys.push_back(make_real("pm.percentile_low", "lower clip percentile for percentile normalization",
                           [](C& c) { return &c.pm.percentile_low; }));
  keys.push_back(make_real("pm.percentile_high", "upper clip percentile for percentile normalization",
                           [](C& c) { return &c.pm.percentile_high; }));
  keys.push_back(make_real("pm.top_k_fraction", "fraction of highest pixels averaged into the image score",
                           [](C& c) { return &c.pm.top_k_fraction; }));
  keys.push_back(make_real_list("pm.mean", "backbone input channel means", [](C& c) { return &c.pm.mean; }));
  keys.push_back(make_real_list("pm.std", "backbone input channel standard deviations",
                                [](C& c) { return &c.pm.std; }));

  keys.push_back(make_bool("ablation.use_mi_loss", "train IE-Net with the mutual-information and KL terms",
                           [](C& c) { return &c.ablation.use_mi_loss; }));
  keys.push_back(make_bool("ablation.use_expert_net", "run the second stage; off scores x against m only",
                           [](C& c) { return &c.ablation.use_expert_net; }));
  keys.push_back(make_bool("ablation.use_detail_guidance", "feed E_S details to AdaIN; off feeds N(0,1) noise",
                           [](C& c) { return &c.ablation.use_detail_guidance; }));
  keys.push_back(make_bool("ablation.use_naive_impression_term", "include the m versus m_hat distance",
                           [](C& c) { return &c.ablation.use_naive_impression_term; }));

  keys.push_back({"seed", "int", "seed for every random stream",
                  [](C& c, std::string_view v) { c.seed = parse_u64("seed", v); },
                  [](const C& c) { return std::to_string(c.seed); }});
  keys.push_back(make_int("threads", "intra-op threads (0 = library default)", [](C& c) { return &c.threads; }));
  return keys;
}

}  // namespace

ExperimentConfig mvtec_defaults() { return ExperimentConfig{}; }

ExperimentConfig small_dataset_defaults() {
  ExperimentConfig c;
  c.data.image_size = 64;
  c.ie.blocks = 3;
  c.ie.latent_dim = 64;
  c.ie.epochs = 20;
  c.expert.res_blocks = 1;
  c.expert.epochs = 20;
  return c;
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = build_schema();
  return schema;
}

void apply_override(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const std::string k = trim(key);
  for (const auto& entry : config_schema()) {
    if (entry.name == k) {
      entry.parse(config, value);
      return;
    }
  }
  fail(ErrorKind::kConfigParseError, "unknown config key '" + k + "'");
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    fail(ErrorKind::kConfigParseError, "override '" + std::string(assignment) + "' is not key=value");
  apply_override(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

namespace {

void flatten(const YAML::Node& node, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (node.IsSequence()) {
    std::string joined = "[";
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (!node[i].IsScalar()) fail(ErrorKind::kConfigParseError, "nested sequence under '" + prefix + "'");
      joined += (i ? "," : "") + node[i].as<std::string>();
    }
    out.emplace_back(prefix, joined + "]");
  } else if (node.IsScalar()) {
    out.emplace_back(prefix, node.as<std::string>());
  } else if (node.IsNull()) {
    out.emplace_back(prefix, "");
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view yaml_text, ExperimentConfig base) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::kConfigParseError, e.what());
  }
  if (!root.IsNull() && !root.IsMap()) fail(ErrorKind::kConfigParseError, "config root must be a mapping");
  std::vector<std::pair<std::string, std::string>> entries;
  if (root.IsMap()) flatten(root, "", entries);
  for (const auto& [k, v] : entries) apply_override(base, k, v);
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfigParseError, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_yaml(const ExperimentConfig& config) {
  // Group dotted keys by their first segment; keys are two levels deep at most.
  std::string out;
  std::string current;
  for (const auto& key : config_schema()) {
    const auto dot = key.name.find('.');
    if (dot == std::string::npos) {
      current.clear();
      out += key.name + ": " + key.format(config) + "\n";
      continue;
    }
    const std::string section = key.name.substr(0, dot);
    if (section != current) {
      out += section + ":\n";
      current = section;
    }
    out += "  " + key.name.substr(dot + 1) + ": " + key.format(config) + "\n";
  }
  return out;
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path.string());
  out << to_yaml(config);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::kConfigParseError, what);
  };
  require(c.data.image_size > 0, "data.image_size must be positive");
  require(c.data.channels == 1 || c.data.channels == 3, "data.channels must be 1 or 3");
  require(c.ie.blocks >= 1, "ie.blocks must be >= 1");
  require(static_cast<int>(c.ie.widths.size()) >= c.ie.blocks, "ie.widths needs at least ie.blocks entries");
  for (int w : c.ie.widths) require(w > 0 && w % 4 == 0, "ie.widths entries must be positive multiples of 4");
  require(c.data.image_size % (1 << c.ie.blocks) == 0, "data.image_size must be divisible by 2^ie.blocks");
  require(c.ie.latent_dim > 0 && c.ie.moment_hidden > 0 && c.ie.disc_hidden > 0, "ie widths must be positive");
  require(c.ie.lambda_kl >= 0 && c.ie.lambda_rec >= 0, "ie loss weights must be nonnegative");
  require(c.ie.lr > 0 && c.expert.lr > 0, "learning rates must be positive");
  require(c.ie.momentum >= 0 && c.ie.momentum < 1 && c.expert.momentum >= 0 && c.expert.momentum < 1,
          "momentum must lie in [0,1)");
  require(c.ie.epochs > 0 && c.expert.epochs > 0, "epochs must be positive");
  require(c.ie.batch_size >= 1 && c.expert.batch_size >= 1, "batch sizes must be positive");
  require(c.ie.max_steps >= 0 && c.expert.max_steps >= 0, "max_steps must be nonnegative");
  require(c.ie.grad_clip >= 0, "ie.grad_clip must be nonnegative");
  require(c.expert.base_width > 0 && c.expert.res_blocks >= 1 && c.expert.detail_dim > 0 &&
              c.expert.detail_width > 0 && c.expert.mlp_hidden > 0,
          "expert widths must be positive");
  require(c.data.image_size % 4 == 0, "data.image_size must be divisible by 4 for Expert-Net");
  require(c.expert.w_x >= 0 && c.expert.w_m >= 0 && c.expert.w_s >= 0, "expert weights must be nonnegative");
  require(!c.pm.layers.empty(), "pm.layers must not be empty");
  require(c.pm.layers.size() == c.pm.layer_weights.size(), "pm.layer_weights must match pm.layers");
  require(c.pm.alpha >= 0 && c.pm.alpha <= 1, "pm.alpha must lie in [0,1]");
  require(c.pm.top_k_fraction > 0 && c.pm.top_k_fraction <= 1, "pm.top_k_fraction must lie in (0,1]");
  require(c.pm.percentile_low >= 0 && c.pm.percentile_low < c.pm.percentile_high && c.pm.percentile_high <= 100,
          "percentiles must satisfy 0 <= low < high <= 100");
  require(c.pm.mean.size() == 3 && c.pm.std.size() == 3, "pm.mean and pm.std need 3 entries");
  for (double s : c.pm.std) require(s > 0, "pm.std entries must be positive");
  require(c.threads >= 0, "threads must be nonnegative");
}

std::string schema_help(const ExperimentConfig& defaults) {
  std::ostringstream out;
  out << "Configuration keys (set in the YAML config or with --set key=value):\n";
  for (const auto& key : config_schema()) {
    out << "  " << key.name << " <" << key.type << "> = " << key.format(defaults) << "\n      " << key.doc << "\n";
  }
  return out.str();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

std::uint64_t hash_keys(const ExperimentConfig& config, const std::vector<std::string>& prefixes,
                        const std::vector<std::string>& exclude) {
  std::string text;
  for (const auto& key : config_schema()) {
    bool include = false;
    for (const auto& p : prefixes)
      if (key.name == p || key.name.rfind(p + ".", 0) == 0) include = true;
    for (const auto& e : exclude)
      if (key.name == e) include = false;
    if (include) text += key.name + "=" + key.format(config) + "\n";
  }
  return fnv1a(text);
}

}  // namespace

std::uint64_t ie_fingerprint(const ExperimentConfig& config) {
  return hash_keys(config, {"data.image_size", "data.channels", "ie.blocks", "ie.widths", "ie.latent_dim",
                            "ie.moment_hidden", "ie.disc_hidden"},
                   {});
}

std::uint64_t expert_fingerprint(const ExperimentConfig& config) {
  return hash_keys(config, {"data.image_size", "data.channels", "expert.base_width", "expert.res_blocks",
                            "expert.detail_dim", "expert.detail_width", "expert.mlp_hidden"},
                   {});
}

std::uint64_t config_fingerprint(const ExperimentConfig& config) { return fnv1a(to_yaml(config)); }

}  // namespace impress
