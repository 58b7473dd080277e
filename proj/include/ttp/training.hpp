#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttp/checkpoint.hpp"
#include "ttp/dataset.hpp"
#include "ttp/features.hpp"
#include "ttp/fusion.hpp"
#include "ttp/linalg.hpp"
#include "ttp/modalities.hpp"
#include "ttp/rng.hpp"

namespace ttp::training {

enum class Modality { kI = 0, kMV = 1, kR = 2 };

/// Model variants of the ablation table.
enum class Variant { kI, kMV, kR, kLateFusion, kBP, kTP, kTTP };

inline constexpr std::array<Variant, 7> kAllVariants = {Variant::kI,  Variant::kMV, Variant::kR, Variant::kLateFusion,
                                                        Variant::kBP, Variant::kTP, Variant::kTTP};

const char* to_string(Variant v);
/// Accepts the table names ("TTP", "I+MV+R", ...) case-insensitively.
Variant parse_variant(const std::string& name);
bool is_single_modality(Variant v);
bool is_fused(Variant v);  // BP, TP, TTP

struct TrainConfig {
  double stage1_lr = 0.003;
  double stage2_lr = 0.0015;
  double plateau_factor = 0.1;
  int plateau_patience = 3;
  int max_decays = 2;
  int batch_size = 16;
  int stage1_epochs = 15;
  int stage2_epochs = 30;
  int instances_per_video = 3;
  std::uint64_t seed = 42;
  int D = 512;
  int d = 4;
  int c = 64;
  int p = 8;
  int eval_segments = 25;
  bool flip_augment = false;  // mirrors direction-defined classes into each other
  bool skip_stage1 = false;
  bool freeze_extractors = false;
  fusion::Normalization normalization = fusion::Normalization::kPerBranch;
  int threads = 0;  // 0 = one per hardware thread

  /// Throws InvalidArgument on non-positive learning rates, a plateau factor
  /// outside (0, 1), or non-positive sizes.
  void validate() const;
};

/// Global-average-pooled linear classifier used for the single-modality
/// networks: scores = weight * mean_k(F[:, k]) + bias.
struct LinearHead {
  Matrix weight;  // C x c
  Vector bias;    // C

  static LinearHead random(int c, int C, Rng& rng);
  std::vector<ParamRef> params(const std::string& prefix);
};

struct Model {
  int num_classes = 0;
  int c = 0;
  int p = 0;
  int d = 0;
  int D = 0;
  fusion::Normalization normalization = fusion::Normalization::kPerBranch;
  Variant variant = Variant::kLateFusion;  // default variant for scoring
  std::array<features::ExtractorParams, 3> extractors;
  std::array<LinearHead, 3> heads;
  std::optional<fusion::FusionParams> fusion;  // TP and TTP
  std::vector<fusion::PairParams> pairs;       // BP: (I,MV), (I,R), (MV,R)

  /// Random extractors and heads; no fusion parameters yet.
  static Model create(const TrainConfig& config, int num_classes, Rng& rng);
  /// Allocates fresh random fusion parameters for BP, TP or TTP and makes it
  /// the default variant.
  void init_fusion(Variant v, Rng& rng);

  /// Tensors trained for `v` (in a fixed order shared with gradient lists).
  std::vector<ParamRef> params(Variant v, bool include_extractors = true);
  /// Every tensor, for checkpointing.
  std::vector<ParamRef> all_params();
};

/// Per-tensor gradients aligned with Model::params(v, ...).
using Gradients = std::vector<Matrix>;

/// Numerically stable softmax cross-entropy; optionally returns
/// d loss / d scores. Throws NumericError on non-finite scores.
double cross_entropy(const Vector& scores, int label, Vector* grad = nullptr);

Vector predict_scores(const Model& model, const modalities::TrainingInstance& inst, Variant v);

/// Loss for one instance and its gradients w.r.t. params(v, include_extractors).
double loss_and_gradients(const Model& model, const modalities::TrainingInstance& inst, Variant v,
                          bool include_extractors, Gradients& grads);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are created lazily to match the
/// parameter list of the first step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Throws DivergenceError (leaving parameters untouched) when any gradient
  /// is non-finite.
  void step(const std::vector<ParamRef>& params, const Gradients& grads, double lr);

  long steps() const { return steps_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  long steps_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

/// Multiplies the learning rate by `factor` once the monitored metric has
/// failed to improve for `patience` consecutive epochs, at most `max_decays`
/// times.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, double factor, int patience, int max_decays)
      : lr_(lr), factor_(factor), patience_(patience), max_decays_(max_decays) {}

  /// Records one epoch's metric and returns the learning rate for the next.
  double update(double metric);
  double lr() const { return lr_; }
  int decays() const { return decays_; }
  double best() const { return best_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  int max_decays_;
  double best_ = -1.0;
  int stale_epochs_ = 0;
  int decays_ = 0;
};

/// Parameters, optimizer moments and schedule of one training run.
struct TrainState {
  Model model;
  Adam optimizer;
  PlateauSchedule schedule{0.01, 0.1, 3, 2};
};

struct EpochRecord {
  std::string stage;
  std::string variant;
  int epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;
};

std::string format_log(const std::vector<EpochRecord>& log);

/// Averaged scores of one video over its test-time instances (and their
/// mirrored copies when flip is on).
Vector score_video(const Model& model, const codec::Bitstream& bs, Variant v, const TrainConfig& config, Rng& rng);

/// argmax with ties going to the lowest class id.
int argmax(const Vector& scores);

/// Video-level top-1 accuracy. Throws InvalidArgument on an empty set.
double evaluate(const Model& model, std::span<const VideoExample> videos, Variant v, const TrainConfig& config);

struct Stage1Result {
  Model model;
  std::array<double, 3> val_accuracy{};
  std::array<double, 3> test_accuracy{};
  std::array<double, 3> initial_loss{};
  std::array<double, 3> final_loss{};
  std::vector<EpochRecord> log;
};

/// Trains each modality's extractor with its own linear head. Throws
/// InvalidArgument on an empty training split or a class without videos.
Stage1Result train_stage1(const Dataset& dataset, const TrainConfig& config);

struct Stage2Result {
  Model model;
  double val_accuracy = 0.0;
  std::vector<EpochRecord> log;
};

/// Joint training of the extractors (from `stage1`, or random when
/// config.skip_stage1) and fresh fusion parameters for BP, TP or TTP.
Stage2Result train_stage2(const Dataset& dataset, const Model& stage1, Variant variant, const TrainConfig& config);

/// Lower-level entry point shared by both stages: trains params(variant) of
/// `state.model` for `epochs` epochs. Propagates DivergenceError.
void run_epochs(TrainState& state, const Dataset& dataset, Variant variant, int epochs, const TrainConfig& config,
                Rng& rng, const std::string& stage, std::vector<EpochRecord>& log);

struct AblationReport {
  std::map<std::string, double> accuracy;  // variant name -> top-1
  std::vector<EpochRecord> log;
};

AblationReport run_ablation(const Dataset& dataset, const TrainConfig& config);
std::string format_report_table(const AblationReport& report);
std::string format_report_kv(const AblationReport& report);

struct BenchReport {
  double preprocess_ms_per_frame = 0.0;
  double cnn_ms_per_frame = 0.0;
  std::size_t frames = 0;
  int iters = 0;
};

/// Median wall-clock per frame for modality extraction (parse + extract)
/// and for the network forward pass. Throws InvalidArgument when iters < 1.
BenchReport bench(const Model& model, std::span<const std::uint8_t> bitstream, int warmup, int iters,
                  Variant v, const TrainConfig& config);
std::string format_bench_table(const BenchReport& report);
std::string format_bench_kv(const BenchReport& report);

std::vector<std::uint8_t> save_model(Model& model);
/// Throws ParseError on malformed data and ShapeError on inconsistent tensors.
Model load_model(std::span<const std::uint8_t> bytes);

}  // namespace ttp::training
