#include "impress/pipeline.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>

#include "impress/error.hpp"
#include "impress/image.hpp"

namespace impress {
namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::unique_ptr<torch::optim::Optimizer> make_optimizer(OptimizerKind kind, std::vector<torch::Tensor> params,
                                                        double lr, double momentum) {
  if (kind == OptimizerKind::kAdam)
    return std::make_unique<torch::optim::Adam>(std::move(params), torch::optim::AdamOptions(lr));
  return std::make_unique<torch::optim::SGD>(std::move(params), torch::optim::SGDOptions(lr).momentum(momentum));
}

std::vector<int64_t> shuffled(int64_t n, std::mt19937_64& rng) {
  std::vector<int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int64_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int64_t> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  return order;
}

CheckpointMeta make_meta(const ExperimentConfig& config, const std::string& kind, int64_t step, int64_t epoch,
                         double loss) {
  CheckpointMeta meta;
  meta.kind = kind;
  meta.arch_fingerprint = hex64(kind == kIeKind ? ie_fingerprint(config) : expert_fingerprint(config));
  meta.config_fingerprint = hex64(config_fingerprint(config));
  meta.image_size = config.data.image_size;
  meta.step = step;
  meta.epoch = epoch;
  meta.loss = loss;
  meta.config_yaml = to_yaml(config);
  return meta;
}

bool finite(const torch::Tensor& t) { return std::isfinite(t.item<double>()); }

// Shared epoch/step loop. `step` computes the loss terms of one batch (total first)
// and performs the update; it returns the term values.
struct LoopSpec {
  std::string kind;
  std::vector<std::string> term_names;
  int epochs = 1;
  int batch_size = 4;
  int max_steps = 0;
  bool drop_singletons = false;
  std::uint64_t shuffle_seed = 0;
};

TrainingCurve run_loop(const ExperimentConfig& config, const LoopSpec& spec, int64_t n, torch::nn::Module& module,
                       const std::function<std::vector<double>(const torch::Tensor& idx, int64_t step)>& step_fn,
                       RunDirectory* run) {
  TrainingCurve curve;
  curve.term_names = spec.term_names;
  std::mt19937_64 rng(spec.shuffle_seed);
  double best = std::numeric_limits<double>::infinity();
  const std::string prefix = spec.kind == kIeKind ? "ie" : "expert";
  if (run) save_checkpoint(run->checkpoints() / (prefix + "_latest.pt"), module, make_meta(config, spec.kind, 0, 0, 0.0));

  bool done = false;
  double last_epoch_loss = 0.0;
  for (int epoch = 1; epoch <= spec.epochs && !done; ++epoch) {
    const auto order = shuffled(n, rng);
    double epoch_sum = 0.0;
    int64_t epoch_steps = 0;
    for (int64_t start = 0; start < n; start += spec.batch_size) {
      const int64_t end = std::min<int64_t>(n, start + spec.batch_size);
      if (spec.drop_singletons && end - start < 2 && n >= 2 && spec.batch_size >= 2) continue;
      auto idx = torch::tensor(std::vector<int64_t>(order.begin() + start, order.begin() + end), torch::kLong);
      std::vector<double> values;
      try {
        values = step_fn(idx, curve.steps);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInvalidMoments) throw;
        values = {std::numeric_limits<double>::quiet_NaN()};
      }
      if (!std::isfinite(values.front())) {
        if (run)
          run->log(prefix + " diverged at step " + std::to_string(curve.steps + 1) + "; keeping " +
                   (run->checkpoints() / (prefix + "_latest.pt")).string());
        fail(ErrorKind::kTrainingDiverged,
             prefix + " loss became non-finite at step " + std::to_string(curve.steps + 1));
      }
      ++curve.steps;
      curve.total.push_back(values.front());
      curve.terms.emplace_back(values.begin() + 1, values.end());
      epoch_sum += values.front();
      ++epoch_steps;
      if (run) {
        std::string line = prefix + " epoch " + std::to_string(epoch) + " step " + std::to_string(curve.steps) +
                           " loss " + fixed(values.front());
        for (std::size_t k = 1; k < values.size(); ++k) line += " " + spec.term_names[k - 1] + " " + fixed(values[k]);
        run->log(line);
      }
      if (spec.max_steps > 0 && curve.steps >= spec.max_steps) {
        done = true;
        break;
      }
    }
    curve.epochs = epoch;
    if (epoch_steps == 0) fail(ErrorKind::kBatchTooSmall, "no trainable batch in the training set");
    last_epoch_loss = epoch_sum / static_cast<double>(epoch_steps);
    if (run) {
      auto meta = make_meta(config, spec.kind, curve.steps, epoch, last_epoch_loss);
      save_checkpoint(run->checkpoints() / (prefix + "_latest.pt"), module, meta);
      if (last_epoch_loss < best) {
        best = last_epoch_loss;
        save_checkpoint(run->checkpoints() / (prefix + "_best.pt"), module, meta);
      }
      run->log(prefix + " epoch " + std::to_string(epoch) + " mean loss " + fixed(last_epoch_loss));
    }
  }
  if (run)
    save_checkpoint(run->checkpoints() / (prefix + "_final.pt"), module,
                    make_meta(config, spec.kind, curve.steps, curve.epochs, last_epoch_loss));
  return curve;
}

std::string item_id(std::size_t index, const DatasetItem& item) {
  std::string stem = fs::path(item.path).stem().string();
  std::string id = item.category + "_" + item.label + "_" + stem;
  for (auto& c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05zu_", index);
  return buf + id;
}

torch::Tensor compute_impressions(IENet& net, const torch::Tensor& images) {
  torch::NoGradGuard guard;
  net->eval();
  std::vector<torch::Tensor> out;
  for (int64_t start = 0; start < images.size(0); start += 16)
    out.push_back(net->impression(images.slice(0, start, std::min<int64_t>(images.size(0), start + 16))));
  return torch::cat(out);
}

}  // namespace

RunDirectory::RunDirectory(fs::path root, bool echo) : root_(std::move(root)), echo_(echo) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create output directory " + root_.string() + ": " + ec.message());
  for (const auto& sub : {checkpoints(), impressions(), maps(), masks()}) fs::create_directories(sub);
  const auto lock_path = root_ / ".lock";
  lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
  if (lock_fd_ < 0) fail(ErrorKind::kIoError, "cannot open " + lock_path.string());
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    fail(ErrorKind::kOutputLocked, root_.string() + " is in use by another run");
  }
  log_.open(log_path(), std::ios::app);
  if (!log_) fail(ErrorKind::kIoError, "cannot open " + log_path().string());
}

RunDirectory::~RunDirectory() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

fs::path RunDirectory::ie_checkpoint(const std::string& tag) const { return checkpoints() / ("ie_" + tag + ".pt"); }

fs::path RunDirectory::expert_checkpoint(const std::string& tag) const {
  return checkpoints() / ("expert_" + tag + ".pt");
}

void RunDirectory::log(const std::string& line) {
  log_ << line << '\n';
  log_.flush();
  if (echo_) std::clog << line << '\n';
}

void apply_runtime(const ExperimentConfig& config) {
  if (config.threads > 0) torch::set_num_threads(config.threads);
  torch::manual_seed(config.seed);
}

torch::Tensor load_images(const DatasetHandle& data, int image_size, int channels) {
  if (data.empty()) fail(ErrorKind::kEmptyInput, "dataset has no items");
  std::vector<torch::Tensor> out;
  out.reserve(data.size());
  for (const auto& item : data.items) out.push_back(load_image(item, image_size, channels).tensor());
  return torch::stack(out);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index) {
  std::uint64_t z = fnv1a(purpose, seed ^ 0x9e3779b97f4a7c15ULL) + index * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

IeTrainResult train_ie_net(const ExperimentConfig& config, const torch::Tensor& images, RunDirectory* run) {
  if (!images.defined() || images.size(0) == 0) fail(ErrorKind::kEmptyInput, "no training images");
  const auto& ie = config.ie;
  torch::manual_seed(derive_seed(config.seed, "ie-init"));
  IeTrainResult result;
  result.net = IENet(IeArchitecture::from_config(config));
  result.net->train();
  auto optimizer = make_optimizer(ie.optimizer, result.net->parameters(), ie.lr, ie.momentum);

  IeLossWeights weights;
  weights.lambda_kl = ie.lambda_kl;
  weights.lambda_rec = ie.lambda_rec;
  weights.use_mi = config.ablation.use_mi_loss;
  weights.kl_mode = ie.kl_mode;

  std::mt19937_64 negatives_rng(derive_seed(config.seed, "ie-negatives"));
  LoopSpec spec{kIeKind, {"mi", "kl", "recon"}, ie.epochs, ie.batch_size, ie.max_steps, weights.use_mi,
                derive_seed(config.seed, "ie-batches")};
  auto& net = result.net;
  result.curve = run_loop(
      config, spec, images.size(0), *net,
      [&](const torch::Tensor& idx, int64_t) {
        auto batch = images.index_select(0, idx);
        NegativeSamples negatives;
        if (weights.use_mi) negatives = sample_negatives(batch.size(0), ie.latent_dim, negatives_rng);
        auto terms = net->loss(batch, negatives, weights);
        std::vector<double> values{terms.total.item<double>(), terms.mi.item<double>(), terms.kl.item<double>(),
                                   terms.recon.item<double>()};
        if (!finite(terms.total)) return values;
        optimizer->zero_grad();
        terms.total.backward();
        if (ie.grad_clip > 0) torch::nn::utils::clip_grad_norm_(net->parameters(), ie.grad_clip);
        optimizer->step();
        return values;
      },
      run);
  net->eval();
  return result;
}

ImpressionDataset generate_impression_set(IENet& net, const DatasetHandle& train, const torch::Tensor& images,
                                          const fs::path& dir, bool force) {
  if (static_cast<int64_t>(train.size()) != images.size(0))
    fail(ErrorKind::kPairingError, "image tensor does not match the dataset");
  ImpressionDataset set;
  set.fingerprint = weights_digest(*net);
  const auto index_path = dir / "index.json";
  if (fs::exists(index_path) && !force) {
    std::ifstream in(index_path);
    const auto index = nlohmann::json::parse(in, nullptr, false);
    const std::string previous = index.is_object() ? index.value("fingerprint", "") : "";
    if (previous != set.fingerprint)
      fail(ErrorKind::kStaleImpressions, "impressions in " + dir.string() + " come from IE-Net " + previous +
                                             ", current IE-Net is " + set.fingerprint + " (force to regenerate)");
  }
  fs::create_directories(dir);
  set.impressions = compute_impressions(net, images);
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < train.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.npy", i);
    write_npy(dir / name, set.impressions[static_cast<int64_t>(i)]);
    set.entries.push_back({train.items[i].path, dir / name});
    entries.push_back({{"source", train.items[i].path}, {"impression", name}});
  }
  nlohmann::json index{{"fingerprint", set.fingerprint}, {"count", train.size()}, {"entries", entries}};
  std::ofstream(index_path) << index.dump(2) << '\n';
  return set;
}

ImpressionDataset load_impression_set(const fs::path& dir, const std::string& expected_fingerprint) {
  const auto index_path = dir / "index.json";
  if (!fs::exists(index_path)) fail(ErrorKind::kModelNotReady, "no impression set in " + dir.string());
  std::ifstream in(index_path);
  const auto index = nlohmann::json::parse(in, nullptr, false);
  if (!index.is_object() || !index.contains("entries"))
    fail(ErrorKind::kModelNotReady, "malformed impression index " + index_path.string());
  ImpressionDataset set;
  set.fingerprint = index.value("fingerprint", "");
  if (!expected_fingerprint.empty() && set.fingerprint != expected_fingerprint)
    fail(ErrorKind::kStaleImpressions, "impressions come from IE-Net " + set.fingerprint + ", expected " +
                                           expected_fingerprint);
  std::vector<torch::Tensor> maps;
  for (const auto& e : index["entries"]) {
    ImpressionEntry entry{e.at("source").get<std::string>(), dir / e.at("impression").get<std::string>()};
    maps.push_back(read_npy(entry.impression));
    set.entries.push_back(std::move(entry));
  }
  if (maps.empty()) fail(ErrorKind::kEmptyInput, "impression set is empty");
  set.impressions = torch::stack(maps);
  return set;
}

ExpertTrainResult train_expert_net(const ExperimentConfig& config, const torch::Tensor& images,
                                   const torch::Tensor& impressions, RunDirectory* run) {
  if (!images.defined() || images.size(0) == 0) fail(ErrorKind::kEmptyInput, "no training pairs");
  if (images.sizes() != impressions.sizes())
    fail(ErrorKind::kPairingError, "images and impressions differ in shape");
  const auto& ex = config.expert;
  torch::manual_seed(derive_seed(config.seed, "expert-init"));
  ExpertTrainResult result;
  result.net = ExpertNet(ExpertArchitecture::from_config(config));
  result.net->train();
  auto optimizer = make_optimizer(ex.optimizer, result.net->parameters(), ex.lr, ex.momentum);
  ExpertLossWeights weights{ex.w_x, ex.w_m, ex.w_s, ex.stop_grad_detail};
  const bool guided = config.ablation.use_detail_guidance;

  LoopSpec spec{kExpertKind, {"rec", "naive", "detail"}, ex.epochs, ex.batch_size, ex.max_steps, false,
                derive_seed(config.seed, "expert-batches")};
  auto& net = result.net;
  result.curve = run_loop(
      config, spec, images.size(0), *net,
      [&](const torch::Tensor& idx, int64_t step) {
        auto x = images.index_select(0, idx);
        auto m = impressions.index_select(0, idx);
        torch::Tensor random;
        if (!guided)
          random = gaussian_details(x.size(0), ex.detail_dim,
                                    derive_seed(config.seed, "expert-details", static_cast<std::uint64_t>(step)));
        auto terms = net->loss(x, m, weights, random);
        std::vector<double> values{terms.total.item<double>(), terms.reconstruction.item<double>(),
                                   terms.naive.item<double>(), terms.detail.item<double>()};
        if (!finite(terms.total)) return values;
        optimizer->zero_grad();
        terms.total.backward();
        optimizer->step();
        return values;
      },
      run);
  net->eval();
  return result;
}

std::vector<Detection> detect_batch(const ExperimentConfig& config, IENet& ie, ExpertNet* expert,
                                    const PerceptualMeasurement& pm, const torch::Tensor& batch, int64_t item_offset) {
  torch::NoGradGuard guard;
  const auto& ab = config.ablation;
  auto m = ie->impression(batch);
  torch::Tensor x_hat, m_hat;
  if (ab.use_expert_net) {
    if (!expert || !*expert) fail(ErrorKind::kModelNotReady, "Expert-Net checkpoint required");
    auto& net = *expert;
    torch::Tensor details;
    if (ab.use_detail_guidance) {
      details = net->extract_details(batch);
    } else {
      std::vector<torch::Tensor> rows;
      for (int64_t i = 0; i < batch.size(0); ++i)
        rows.push_back(gaussian_details(1, net->architecture().detail_dim,
                                        derive_seed(config.seed, "eval-details",
                                                    static_cast<std::uint64_t>(item_offset + i))));
      details = torch::cat(rows);
    }
    x_hat = net->reconstruct(m, details);
    m_hat = net->naive_impression(batch);
  }
  auto raw = pm.raw_maps(batch, x_hat, m, m_hat, MeasurementTerms::from_ablation(ab));
  std::vector<Detection> out;
  for (int64_t i = 0; i < batch.size(0); ++i) {
    Detection d;
    d.x = batch[i];
    d.m = m[i];
    if (x_hat.defined()) {
      d.x_hat = x_hat[i];
      d.m_hat = m_hat[i];
    }
    d.map = pm.normalize(raw[i]);
    d.mask = segment(d.map, config.pm.alpha);
    d.score = image_score(raw[i], config.pm.top_k_fraction);
    out.push_back(std::move(d));
  }
  return out;
}

EvaluationReport evaluate(const ExperimentConfig& config, IENet& ie, ExpertNet* expert,
                          const PerceptualMeasurement& pm, const DatasetHandle& test, RunDirectory* run) {
  if (test.empty()) fail(ErrorKind::kEmptyInput, "test set is empty");
  ie->eval();
  if (expert && *expert) (*expert)->eval();
  const int size = config.data.image_size;
  std::map<std::string, CategoryAccumulator> per_category;
  constexpr int64_t kChunk = 8;
  for (std::size_t start = 0; start < test.size(); start += kChunk) {
    const std::size_t end = std::min(test.size(), start + kChunk);
    std::vector<torch::Tensor> images;
    for (std::size_t i = start; i < end; ++i)
      images.push_back(load_image(test.items[i], size, config.data.channels).tensor());
    auto detections = detect_batch(config, ie, expert, pm, torch::stack(images), static_cast<int64_t>(start));
    for (std::size_t i = start; i < end; ++i) {
      const auto& item = test.items[i];
      auto& d = detections[i - start];
      ItemResult r;
      r.category = item.category;
      r.anomalous = item.anomalous;
      r.score = d.score;
      r.normalized = d.map.normalized;
      r.prediction = d.mask.y;
      if (item.has_mask()) r.ground_truth = load_mask(item, size);
      per_category.try_emplace(item.category, item.category).first->second.add(r);
      if (run) {
        const auto id = item_id(i, item);
        write_npy(run->maps() / (id + ".npy"), d.map.raw);
        save_mask_png(d.mask.y, run->masks() / (id + ".png"));
      }
    }
  }
  std::vector<CategoryRecord> records;
  for (const auto& [name, acc] : per_category) records.push_back(acc.finish());
  auto report = aggregate_report(std::move(records), hex64(config_fingerprint(config)));
  if (run) {
    write_report(report, run->report_path());
    run->log(to_table(report));
  }
  return report;
}

void write_report(const EvaluationReport& report, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

IENet load_ie_net(const ExperimentConfig& config, const fs::path& path) {
  IENet net(IeArchitecture::from_config(config));
  load_checkpoint(path, *net, kIeKind, hex64(ie_fingerprint(config)), config.data.image_size);
  net->eval();
  return net;
}

ExpertNet load_expert_net(const ExperimentConfig& config, const fs::path& path) {
  ExpertNet net(ExpertArchitecture::from_config(config));
  load_checkpoint(path, *net, kExpertKind, hex64(expert_fingerprint(config)), config.data.image_size);
  net->eval();
  return net;
}

std::vector<std::pair<std::string, AblationConfig>> ablation_rows() {
  auto row = [](bool mi, bool en, bool guide, bool naive) { return AblationConfig{mi, en, guide, naive}; };
  return {
      {"baseline", row(false, false, false, false)},   {"mi", row(true, false, false, false)},
      {"en", row(false, true, false, false)},          {"mi_en", row(true, true, false, false)},
      {"en_guide", row(false, true, true, false)},     {"mi_en_guide", row(true, true, true, false)},
      {"full", row(true, true, true, true)},
  };
}

std::vector<std::pair<std::string, AblationConfig>> single_toggle_rows() {
  return {
      {"full", {true, true, true, true}},      {"no_mi", {false, true, true, true}},
      {"no_en", {true, false, true, true}},    {"no_guide", {true, true, false, true}},
      {"no_naive", {true, true, true, false}},
  };
}

AblationRunner::AblationRunner(ExperimentConfig config, torch::Tensor train_images, DatasetHandle test,
                               fs::path root, bool echo)
    : config_(std::move(config)),
      train_images_(std::move(train_images)),
      test_(std::move(test)),
      root_(std::move(root)),
      echo_(echo) {}

IENet& AblationRunner::ie(bool use_mi) {
  auto it = ie_.find(use_mi);
  if (it != ie_.end()) return it->second;
  auto cfg = config_;
  cfg.ablation.use_mi_loss = use_mi;
  RunDirectory run(root_ / "models" / (use_mi ? "ie_mi" : "ie_plain"), echo_);
  auto trained = train_ie_net(cfg, train_images_, &run);
  return ie_.emplace(use_mi, trained.net).first->second;
}

ExpertNet& AblationRunner::expert(bool use_mi, bool guidance) {
  const auto key = std::make_pair(use_mi, guidance);
  auto it = expert_.find(key);
  if (it != expert_.end()) return it->second;
  auto impressions = compute_impressions(ie(use_mi), train_images_);
  auto cfg = config_;
  cfg.ablation.use_mi_loss = use_mi;
  cfg.ablation.use_detail_guidance = guidance;
  const std::string name = std::string("expert_") + (use_mi ? "mi" : "plain") + (guidance ? "_guided" : "_random");
  RunDirectory run(root_ / "models" / name, echo_);
  auto trained = train_expert_net(cfg, train_images_, impressions, &run);
  return expert_.emplace(key, trained.net).first->second;
}

AblationRow AblationRunner::run(const std::string& name, const AblationConfig& toggles) {
  if (!pm_) pm_.emplace(config_.pm, FeatureBackbone::from_config(config_.pm, config_.seed));
  auto cfg = config_;
  cfg.ablation = toggles;
  auto& ie_net = ie(toggles.use_mi_loss);
  ExpertNet* expert_net = toggles.use_expert_net ? &expert(toggles.use_mi_loss, toggles.use_detail_guidance) : nullptr;
  RunDirectory run(root_ / "rows" / name, echo_);
  return {name, toggles, evaluate(cfg, ie_net, expert_net, *pm_, test_, &run)};
}

std::vector<AblationRow> AblationRunner::run_all(const std::vector<std::pair<std::string, AblationConfig>>& rows) {
  std::vector<AblationRow> out;
  for (const auto& [name, toggles] : rows) out.push_back(run(name, toggles));
  return out;
}

nlohmann::json ablation_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"name", r.name},
                   {"use_mi_loss", r.toggles.use_mi_loss},
                   {"use_expert_net", r.toggles.use_expert_net},
                   {"use_detail_guidance", r.toggles.use_detail_guidance},
                   {"use_naive_impression_term", r.toggles.use_naive_impression_term},
                   {"report", to_json(r.report)}});
  }
  return {{"rows", out}};
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  auto cell = [](const std::optional<double>& v) { return v ? fixed(*v, 4) : std::string("   -  "); };
  std::string out = "row            MI EN Guide m_hat  IoU     pixelAUC imageAUC\n";
  for (const auto& r : rows) {
    char head[64];
    std::snprintf(head, sizeof(head), "%-14s %-2s %-2s %-5s %-5s  ", r.name.c_str(), r.toggles.use_mi_loss ? "x" : "",
                  r.toggles.use_expert_net ? "x" : "", r.toggles.use_detail_guidance ? "x" : "",
                  r.toggles.use_naive_impression_term ? "x" : "");
    out += head + cell(r.report.mean_iou) + "  " + cell(r.report.mean_pixel_auroc) + "  " +
           cell(r.report.mean_image_auroc) + "\n";
  }
  return out;
}

}  // namespace impress
