#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "impress/colormap.hpp"
#include "impress/config.hpp"
#include "impress/dataset.hpp"
#include "impress/image.hpp"
#include "impress/pipeline.hpp"

namespace impress::cli {
namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigParseError:
      return kExitConfig;
    case ErrorKind::kDatasetNotFound:
    case ErrorKind::kLayoutViolation:
    case ErrorKind::kUnknownClass:
    case ErrorKind::kDecodeError:
    case ErrorKind::kInvalidCount:
    case ErrorKind::kEmptyInput:
      return kExitData;
    case ErrorKind::kModelNotReady:
    case ErrorKind::kFingerprintMismatch:
    case ErrorKind::kStaleImpressions:
    case ErrorKind::kBackboneUnavailable:
      return kExitModel;
    case ErrorKind::kTrainingDiverged:
      return kExitDiverged;
    default:
      return kExitOther;
  }
}

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset = "mvtec";
  std::vector<std::string> overrides;
  std::string output = "run";
  bool verbose = false;
};

struct DataOptions {
  std::string format = "folder";
  std::string root;
  std::string normal_class;
  int n_clean = 200;
  int n_defect = 50;
  std::optional<std::uint64_t> data_seed;
};

struct ModelOptions {
  std::string ie_path;
  std::string expert_path;
};

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig config = o.preset == "small" ? small_dataset_defaults() : mvtec_defaults();
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) fail(ErrorKind::kConfigParseError, "config file not found: " + o.config_path);
    config = load_config(o.config_path, config);
  }
  for (const auto& kv : o.overrides) apply_override(config, kv);
  validate(config);
  return config;
}

SplitDataset load_data(const DataOptions& d, const ExperimentConfig& config) {
  const int size = config.data.image_size;
  if (d.format == "synthetic") return synth_defect_dataset(d.n_clean, d.n_defect, size, d.data_seed.value_or(config.seed));
  if (d.root.empty()) fail(ErrorKind::kDatasetNotFound, "--data is required for format " + d.format);
  if (d.format == "folder") return {load_folder_dataset(d.root, Split::kTrain, size), load_folder_dataset(d.root, Split::kTest, size)};
  SplitDataset raw = d.format == "idx" ? load_idx_dataset(d.root, size) : load_class_folder_dataset(d.root, size);
  if (d.normal_class.empty()) fail(ErrorKind::kUnknownClass, "--normal-class is required for format " + d.format);
  return build_one_class_protocol(raw, d.normal_class);
}

fs::path pick(const std::string& explicit_path, const fs::path& fallback) {
  return explicit_path.empty() ? fallback : fs::path(explicit_path);
}

ExpertNet maybe_expert(const ExperimentConfig& config, const ModelOptions& m, const RunDirectory& run) {
  if (!config.ablation.use_expert_net) return ExpertNet(nullptr);
  return load_expert_net(config, pick(m.expert_path, run.expert_checkpoint()));
}

torch::Tensor to_u8(const torch::Tensor& chw) {
  auto rgb = chw.size(0) == 1 ? chw.expand({3, -1, -1}) : chw;
  return (rgb.clamp(0.0, 1.0) * 255.0 + 0.5).floor().to(torch::kUInt8);
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "YAML configuration file");
  cmd->add_option("--preset", o.preset, "Built-in defaults the config file is applied on")
      ->check(CLI::IsMember({"mvtec", "small"}));
  cmd->add_option("--set", o.overrides, "Override a config key (key=value); repeatable");
  cmd->add_option("-o,--output", o.output, "Output directory");
  cmd->add_flag("-v,--verbose", o.verbose, "Echo log lines to stderr");
}

void add_data(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--format", d.format, "Dataset format")->check(CLI::IsMember({"folder", "idx", "classes", "synthetic"}));
  cmd->add_option("--data", d.root, "Dataset root (category folder, IDX directory or class-folder root)");
  cmd->add_option("--normal-class", d.normal_class, "Normal class for one-class datasets");
  cmd->add_option("--n-clean", d.n_clean, "Synthetic: clean training images");
  cmd->add_option("--n-defect", d.n_defect, "Synthetic: defect test images");
  cmd->add_option("--data-seed", d.data_seed, "Synthetic: generator seed (defaults to the config seed)");
}

void add_models(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--ie", m.ie_path, "IE-Net checkpoint (default <output>/checkpoints/ie_final.pt)");
  cmd->add_option("--expert", m.expert_path, "Expert-Net checkpoint (default <output>/checkpoints/expert_final.pt)");
}

int cmd_prepare(const CommonOptions& o, const DataOptions& d) {
  auto config = resolve_config(o);
  auto data = load_data(d, config);
  RunDirectory run(o.output, o.verbose);
  if (d.format == "synthetic" || d.format == "idx" || d.format == "classes") {
    const std::string category = d.format == "synthetic" ? "synthetic" : d.normal_class;
    write_folder_dataset(data, run.root() / "data", category);
    run.log("wrote " + std::to_string(data.train.size()) + " train and " + std::to_string(data.test.size()) +
            " test items to " + (run.root() / "data" / category).string());
  }
  write_manifest(data.train, run.root() / "manifest_train.tsv");
  write_manifest(data.test, run.root() / "manifest_test.tsv");
  save_config(config, run.root() / "config.yaml");
  std::cout << "train " << data.train.size() << " items, test " << data.test.size() << " items\n";
  return kExitOk;
}

int cmd_train_ie(const CommonOptions& o, const DataOptions& d) {
  auto config = resolve_config(o);
  apply_runtime(config);
  auto data = load_data(d, config);
  RunDirectory run(o.output, o.verbose);
  save_config(config, run.root() / "config.yaml");
  auto images = load_images(data.train, config.data.image_size, config.data.channels);
  auto result = train_ie_net(config, images, &run);
  std::cout << "ie-net trained: " << result.curve.steps << " steps, final loss " << result.curve.total.back()
            << ", checkpoint " << run.ie_checkpoint().string() << "\n";
  return kExitOk;
}

int cmd_impress(const CommonOptions& o, const DataOptions& d, const ModelOptions& m, bool force) {
  auto config = resolve_config(o);
  apply_runtime(config);
  auto data = load_data(d, config);
  RunDirectory run(o.output, o.verbose);
  auto ie = load_ie_net(config, pick(m.ie_path, run.ie_checkpoint()));
  auto images = load_images(data.train, config.data.image_size, config.data.channels);
  auto set = generate_impression_set(ie, data.train, images, run.impressions(), force);
  run.log("impressions: " + std::to_string(set.entries.size()) + " items, ie-net " + set.fingerprint);
  std::cout << set.entries.size() << " impressions written to " << run.impressions().string() << "\n";
  return kExitOk;
}

int cmd_train_expert(const CommonOptions& o, const DataOptions& d, const ModelOptions& m) {
  auto config = resolve_config(o);
  apply_runtime(config);
  auto data = load_data(d, config);
  RunDirectory run(o.output, o.verbose);
  auto ie = load_ie_net(config, pick(m.ie_path, run.ie_checkpoint()));
  auto set = load_impression_set(run.impressions(), weights_digest(*ie));
  if (set.entries.size() != data.train.size())
    fail(ErrorKind::kPairingError, "impression set has " + std::to_string(set.entries.size()) + " items, dataset " +
                                       std::to_string(data.train.size()));
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    if (set.entries[i].source != data.train.items[i].path)
      fail(ErrorKind::kPairingError, "impression " + std::to_string(i) + " belongs to " + set.entries[i].source);
  auto images = load_images(data.train, config.data.image_size, config.data.channels);
  auto result = train_expert_net(config, images, set.impressions, &run);
  std::cout << "expert-net trained: " << result.curve.steps << " steps, final loss " << result.curve.total.back()
            << ", checkpoint " << run.expert_checkpoint().string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& o, const DataOptions& d, const ModelOptions& m, const std::string& csv) {
  auto config = resolve_config(o);
  apply_runtime(config);
  RunDirectory run(o.output, o.verbose);
  auto ie = load_ie_net(config, pick(m.ie_path, run.ie_checkpoint()));
  auto expert = maybe_expert(config, m, run);
  auto data = load_data(d, config);
  PerceptualMeasurement pm(config.pm, FeatureBackbone::from_config(config.pm, config.seed));
  auto report = evaluate(config, ie, expert ? &expert : nullptr, pm, data.test, &run);
  if (!csv.empty()) std::ofstream(csv) << to_csv(report);
  std::cout << to_table(report);
  return kExitOk;
}

int cmd_detect(const CommonOptions& o, const ModelOptions& m, const std::string& image_path, const std::string& out_dir) {
  auto config = resolve_config(o);
  apply_runtime(config);
  const fs::path root = o.output;
  auto ie = load_ie_net(config, pick(m.ie_path, root / "checkpoints" / "ie_final.pt"));
  ExpertNet expert(nullptr);
  if (config.ablation.use_expert_net)
    expert = load_expert_net(config, pick(m.expert_path, root / "checkpoints" / "expert_final.pt"));
  auto x = preprocess(read_image(image_path), config.data.image_size, config.data.channels);
  PerceptualMeasurement pm(config.pm, FeatureBackbone::from_config(config.pm, config.seed));
  auto d = detect_batch(config, ie, expert ? &expert : nullptr, pm, x.tensor().unsqueeze(0)).front();
  const fs::path dir = out_dir.empty() ? root / "detect" : fs::path(out_dir);
  fs::create_directories(dir);
  const std::string stem = fs::path(image_path).stem().string();
  // Without Expert-Net the map only compares x with m; m stands in for both expert panels.
  const auto& x_hat = d.x_hat.defined() ? d.x_hat : d.m;
  const auto& m_hat = d.m_hat.defined() ? d.m_hat : d.m;
  save_png(ImageTensor(d.m), dir / (stem + "_m.png"));
  save_png(ImageTensor(x_hat), dir / (stem + "_x_hat.png"));
  save_png(ImageTensor(m_hat), dir / (stem + "_m_hat.png"));
  save_rgb_png(apply_heatmap(d.map.normalized), dir / (stem + "_heatmap.png"));
  save_mask_png(d.mask.y, dir / (stem + "_mask.png"));
  write_npy(dir / (stem + "_map.npy"), d.map.raw);
  std::cout << "score " << d.score << ", anomalous pixels " << d.mask.y.count() << ", artifacts in " << dir.string()
            << "\n";
  return kExitOk;
}

int cmd_visualize(const CommonOptions& o, const DataOptions& d, const ModelOptions& m, int limit) {
  auto config = resolve_config(o);
  apply_runtime(config);
  RunDirectory run(o.output, o.verbose);
  auto ie = load_ie_net(config, pick(m.ie_path, run.ie_checkpoint()));
  auto expert = maybe_expert(config, m, run);
  auto data = load_data(d, config);
  PerceptualMeasurement pm(config.pm, FeatureBackbone::from_config(config.pm, config.seed));
  const fs::path dir = run.root() / "figures";
  fs::create_directories(dir);
  const std::size_t count = limit > 0 ? std::min<std::size_t>(static_cast<std::size_t>(limit), data.test.size())
                                      : data.test.size();
  const int size = config.data.image_size;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& item = data.test.items[i];
    auto x = load_image(item, size, config.data.channels);
    auto det = detect_batch(config, ie, expert ? &expert : nullptr, pm, x.tensor().unsqueeze(0),
                            static_cast<int64_t>(i))
                   .front();
    auto blank = torch::zeros_like(det.m);
    auto gt = load_mask(item, size).tensor().to(torch::kFloat32).unsqueeze(0);
    std::vector<torch::Tensor> panels{to_u8(det.x), to_u8(det.m),
                                      to_u8(det.x_hat.defined() ? det.x_hat : blank),
                                      to_u8(det.m_hat.defined() ? det.m_hat : blank),
                                      overlay_heatmap(det.x, det.map.normalized),
                                      to_u8(det.mask.y.tensor().to(torch::kFloat32).unsqueeze(0)), to_u8(gt)};
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    save_rgb_png(torch::cat(panels, 2), dir / name);
  }
  run.log("figures: " + std::to_string(count) + " strips (x | m | x_hat | m_hat | heatmap | mask | ground truth)");
  std::cout << count << " figures written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_ablate(const CommonOptions& o, const DataOptions& d, const std::string& rows) {
  auto config = resolve_config(o);
  apply_runtime(config);
  auto data = load_data(d, config);
  RunDirectory run(o.output, o.verbose);
  save_config(config, run.root() / "config.yaml");
  auto images = load_images(data.train, config.data.image_size, config.data.channels);
  AblationRunner runner(config, images, data.test, run.root(), o.verbose);
  auto results = runner.run_all(rows == "single" ? single_toggle_rows() : ablation_rows());
  std::ofstream(run.root() / "ablation.json") << ablation_json(results).dump(2) << '\n';
  const auto table = ablation_table(results);
  std::ofstream(run.root() / "ablation.txt") << table;
  run.log(table);
  std::cout << table;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Two-stage unsupervised anomaly detection: impression extraction, expert reconstruction, perceptual scoring"};
  app.name("impress");
  app.require_subcommand(1);
  app.footer("\nExit codes: 0 ok, 2 config, 3 data, 4 model, 5 training diverged, 1 other.\nBackbone weights: " +
             std::string(kBackboneWeightsEnv) + " overrides pm.weights_path.\n\n" + schema_help());

  CommonOptions common;
  DataOptions data;
  ModelOptions models;
  bool force = false;
  std::string csv, image, out_dir, rows = "table";
  int limit = 8;

  auto* prepare = app.add_subcommand("prepare", "Validate or generate a dataset and write manifests");
  add_common(prepare, common);
  add_data(prepare, data);
  auto* train_ie = app.add_subcommand("train-ie", "Train IE-Net on anomaly-free training images");
  add_common(train_ie, common);
  add_data(train_ie, data);
  auto* impress = app.add_subcommand("impress", "Generate the impression set of the training images");
  add_common(impress, common);
  add_data(impress, data);
  add_models(impress, models);
  impress->add_flag("--force", force, "Regenerate even if impressions of another IE-Net exist");
  auto* train_expert = app.add_subcommand("train-expert", "Train Expert-Net on (image, impression) pairs");
  add_common(train_expert, common);
  add_data(train_expert, data);
  add_models(train_expert, models);
  auto* eval = app.add_subcommand("evaluate", "Score the test split and write maps, masks and report.json");
  add_common(eval, common);
  add_data(eval, data);
  add_models(eval, models);
  eval->add_option("--csv", csv, "Also write the report as CSV");
  auto* detect = app.add_subcommand("detect", "Anomaly map, mask and intermediate images for one image");
  add_common(detect, common);
  add_models(detect, models);
  detect->add_option("--image", image, "Input image")->required();
  detect->add_option("--out-dir", out_dir, "Artifact directory (default <output>/detect)");
  auto* visualize = app.add_subcommand("visualize", "Figure strips for test images");
  add_common(visualize, common);
  add_data(visualize, data);
  add_models(visualize, models);
  visualize->add_option("--limit", limit, "Number of test items (0 = all)");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the ablation toggle rows");
  add_common(ablate, common);
  add_data(ablate, data);
  ablate->add_option("--rows", rows, "table: the seven toggle rows; single: full model and one-toggle-off variants")
      ->check(CLI::IsMember({"table", "single"}));

  std::vector<char*> argv;
  std::vector<std::string> storage(args);
  if (storage.empty()) storage.push_back("impress");
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << to_string(ErrorKind::kConfigParseError) << ": " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*prepare) return cmd_prepare(common, data);
    if (*train_ie) return cmd_train_ie(common, data);
    if (*impress) return cmd_impress(common, data, models, force);
    if (*train_expert) return cmd_train_expert(common, data, models);
    if (*eval) return cmd_evaluate(common, data, models, csv);
    if (*detect) return cmd_detect(common, models, image, out_dir);
    if (*visualize) return cmd_visualize(common, data, models, limit);
    if (*ablate) return cmd_ablate(common, data, rows);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const c10::Error& e) {
    std::cerr << "error: internal: " << e.what_without_backtrace() << "\n";
    return kExitOther;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}

}  // namespace impress::cli
