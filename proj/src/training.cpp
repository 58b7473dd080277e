#include "ttp/training.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ttp/error.hpp"
#include "ttp/parallel.hpp"

namespace ttp::training {

using modalities::TrainingInstance;

namespace {

constexpr std::array<const char*, 3> kModalityNames = {"I", "MV", "R"};
constexpr std::array<int, 3> kModalityChannels = {3, 2, 3};
// Modality pairs of the bilinear ablation.
constexpr std::array<std::pair<int, int>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};

int modality_of(Variant v) {
  switch (v) {
    case Variant::kI:
      return 0;
    case Variant::kMV:
      return 1;
    case Variant::kR:
      return 2;
    default:
      throw InvalidArgument(std::string("variant ") + to_string(v) + " is not a single modality");
  }
}

const Tensor3& modality_input(const TrainingInstance& inst, int m) {
  switch (m) {
    case 0:
      return inst.i_t;
    case 1:
      return inst.mv_t;
    default:
      return inst.r_t;
  }
}

void append(std::vector<ParamRef>& out, std::vector<ParamRef> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

void append_extractor_grads(Gradients& out, const features::ExtractorGrads& g) {
  out.push_back(g.proj);
  out.push_back(g.bias1);
  out.push_back(g.mix);
  out.push_back(g.bias2);
}

void add_extractor_grads(features::ExtractorGrads& into, const features::ExtractorGrads& g) {
  into.proj += g.proj;
  into.bias1 += g.bias1;
  into.mix += g.mix;
  into.bias2 += g.bias2;
}

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kI:
      return "I";
    case Variant::kMV:
      return "MV";
    case Variant::kR:
      return "R";
    case Variant::kLateFusion:
      return "I+MV+R";
    case Variant::kBP:
      return "BP";
    case Variant::kTP:
      return "TP";
    case Variant::kTTP:
      return "TTP";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  std::string upper;
  for (char ch : name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  for (Variant v : kAllVariants)
    if (upper == to_string(v)) return v;
  if (upper == "LATE") return Variant::kLateFusion;
  throw InvalidArgument("unknown variant '" + name + "'");
}

bool is_single_modality(Variant v) { return v == Variant::kI || v == Variant::kMV || v == Variant::kR; }
bool is_fused(Variant v) { return v == Variant::kBP || v == Variant::kTP || v == Variant::kTTP; }

void TrainConfig::validate() const {
  if (!(stage1_lr > 0.0) || !(stage2_lr > 0.0)) throw InvalidArgument("learning rates must be > 0");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw InvalidArgument("plateau_factor must be in (0, 1)");
  if (plateau_patience < 1) throw InvalidArgument("plateau_patience must be >= 1");
  if (max_decays < 0) throw InvalidArgument("max_decays must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (stage1_epochs < 0 || stage2_epochs < 0) throw InvalidArgument("epoch counts must be >= 0");
  if (instances_per_video < 1) throw InvalidArgument("instances_per_video must be >= 1");
  if (D < 1 || d < 1 || c < 1 || p < 1) throw InvalidArgument("D, d, c and p must be >= 1");
  if (eval_segments < 1) throw InvalidArgument("eval_segments must be >= 1");
}

LinearHead LinearHead::random(int c, int C, Rng& rng) {
  LinearHead h;
  h.weight = Matrix::Zero(C, c);
  h.bias = Vector::Zero(C);
  fill_uniform(h.weight, 1.0 / std::sqrt(static_cast<double>(c)), rng);
  return h;
}

std::vector<ParamRef> LinearHead::params(const std::string& prefix) {
  return {param_ref(prefix + ".weight", weight), param_ref(prefix + ".bias", bias)};
}

Model Model::create(const TrainConfig& config, int num_classes, Rng& rng) {
  config.validate();
  if (num_classes < 2) throw InvalidArgument("need at least 2 classes");
  Model m;
  m.num_classes = num_classes;
  m.c = config.c;
  m.p = config.p;
  m.d = config.d;
  m.D = config.D;
  m.normalization = config.normalization;
  for (int k = 0; k < 3; ++k) m.extractors[k] = features::ExtractorParams::random(kModalityChannels[k], m.p, m.c, rng);
  for (int k = 0; k < 3; ++k) m.heads[k] = LinearHead::random(m.c, num_classes, rng);
  return m;
}

void Model::init_fusion(Variant v, Rng& rng) {
  if (v == Variant::kBP) {
    pairs.clear();
    for (int k = 0; k < 3; ++k) pairs.push_back(fusion::PairParams::random(c, d, D, num_classes, rng));
  } else if (v == Variant::kTP || v == Variant::kTTP) {
    fusion = fusion::FusionParams::random(c, d, D, num_classes, rng);
  } else {
    throw InvalidArgument(std::string("variant ") + to_string(v) + " has no fusion parameters");
  }
  variant = v;
}

std::vector<ParamRef> Model::params(Variant v, bool include_extractors) {
  std::vector<ParamRef> out;
  if (is_single_modality(v)) {
    const int m = modality_of(v);
    if (include_extractors) append(out, extractors[m].params(std::string("ext.") + kModalityNames[m]));
    append(out, heads[m].params(std::string("head.") + kModalityNames[m]));
    return out;
  }
  if (include_extractors)
    for (int m = 0; m < 3; ++m) append(out, extractors[m].params(std::string("ext.") + kModalityNames[m]));
  switch (v) {
    case Variant::kLateFusion:
      for (int m = 0; m < 3; ++m) append(out, heads[m].params(std::string("head.") + kModalityNames[m]));
      break;
    case Variant::kBP:
      if (pairs.size() != 3) throw InvalidArgument("model has no BP parameters");
      for (int k = 0; k < 3; ++k) append(out, pairs[k].params("bp." + std::to_string(k)));
      break;
    default:
      if (!fusion) throw InvalidArgument("model has no trilinear fusion parameters");
      append(out, fusion->params("fusion"));
      break;
  }
  return out;
}

std::vector<ParamRef> Model::all_params() {
  std::vector<ParamRef> out = params(Variant::kLateFusion, true);
  for (int k = 0; k < static_cast<int>(pairs.size()); ++k) append(out, pairs[k].params("bp." + std::to_string(k)));
  if (fusion) append(out, fusion->params("fusion"));
  return out;
}

double cross_entropy(const Vector& scores, int label, Vector* grad) {
  if (label < 0 || label >= scores.size()) throw InvalidArgument("label out of range");
  if (!scores.allFinite()) throw NumericError("cross_entropy: non-finite scores");
  const double shift = scores.maxCoeff();
  const Vector e = (scores.array() - shift).exp().matrix();
  const double z = e.sum();
  if (grad != nullptr) {
    *grad = e / z;
    (*grad)(label) -= 1.0;
  }
  return std::log(z) - (scores(label) - shift);
}

Vector predict_scores(const Model& model, const TrainingInstance& inst, Variant v) {
  if (is_single_modality(v)) {
    const int m = modality_of(v);
    const Vector pooled = features::extract_features(modality_input(inst, m), model.extractors[m]).rowwise().mean();
    return model.heads[m].weight * pooled + model.heads[m].bias;
  }
  if (v == Variant::kLateFusion) {
    Vector s = Vector::Zero(model.num_classes);
    for (Variant m : {Variant::kI, Variant::kMV, Variant::kR}) s += predict_scores(model, inst, m);
    return s;
  }
  std::array<features::FeatureMap, 3> f;
  for (int m = 0; m < 3; ++m) f[m] = features::extract_features(modality_input(inst, m), model.extractors[m]);
  if (v == Variant::kBP) {
    if (model.pairs.size() != 3) throw InvalidArgument("model has no BP parameters");
    Vector s = Vector::Zero(model.num_classes);
    for (int k = 0; k < 3; ++k) s += fusion::pair_forward(f[kPairs[k].first], f[kPairs[k].second], model.pairs[k]);
    return s;
  }
  if (!model.fusion) throw InvalidArgument("model has no trilinear fusion parameters");
  fusion::TtpOptions opts{v == Variant::kTTP, model.normalization};
  features::FeatureMap neighbor;
  if (opts.temporal) neighbor = features::extract_features(inst.i_neighbor, model.extractors[0]);
  return fusion::ttp_forward(f[0], f[1], f[2], neighbor, *model.fusion, opts).scores;
}

double loss_and_gradients(const Model& model, const TrainingInstance& inst, Variant v, bool include_extractors,
                          Gradients& grads) {
  grads.clear();
  Vector grad_scores;
  if (is_single_modality(v)) {
    const int m = modality_of(v);
    features::ExtractorCache cache;
    const features::FeatureMap f = features::extract_features(modality_input(inst, m), model.extractors[m], &cache);
    const Vector pooled = f.rowwise().mean();
    const Vector scores = model.heads[m].weight * pooled + model.heads[m].bias;
    const double loss = cross_entropy(scores, inst.label, &grad_scores);
    if (include_extractors) {
      const Vector grad_pooled = model.heads[m].weight.transpose() * grad_scores;
      const Matrix grad_f = (grad_pooled / static_cast<double>(f.cols())).replicate(1, f.cols());
      append_extractor_grads(grads, features::extract_features_backward(grad_f, cache, model.extractors[m]));
    }
    grads.push_back(grad_scores * pooled.transpose());
    grads.push_back(grad_scores);
    return loss;
  }
  if (v == Variant::kLateFusion) throw InvalidArgument("late fusion is not trained directly");

  std::array<features::ExtractorCache, 3> caches;
  std::array<features::FeatureMap, 3> f;
  for (int m = 0; m < 3; ++m)
    f[m] = features::extract_features(modality_input(inst, m), model.extractors[m], &caches[m]);
  std::array<Matrix, 3> grad_f;
  for (int m = 0; m < 3; ++m) grad_f[m] = Matrix::Zero(f[m].rows(), f[m].cols());

  double loss = 0.0;
  Gradients head_grads;
  features::ExtractorGrads neighbor_grads;
  bool have_neighbor = false;

  if (v == Variant::kBP) {
    if (model.pairs.size() != 3) throw InvalidArgument("model has no BP parameters");
    std::array<fusion::PairCache, 3> pc;
    Vector scores = Vector::Zero(model.num_classes);
    for (int k = 0; k < 3; ++k)
      scores += fusion::pair_forward(f[kPairs[k].first], f[kPairs[k].second], model.pairs[k], &pc[k]);
    loss = cross_entropy(scores, inst.label, &grad_scores);
    for (int k = 0; k < 3; ++k) {
      fusion::PairGrads g = fusion::pair_backward(grad_scores, pc[k], model.pairs[k]);
      grad_f[kPairs[k].first] += g.x;
      grad_f[kPairs[k].second] += g.y;
      head_grads.push_back(std::move(g.U));
      head_grads.push_back(std::move(g.V));
      head_grads.push_back(std::move(g.P));
    }
  } else {
    if (!model.fusion) throw InvalidArgument("model has no trilinear fusion parameters");
    const fusion::TtpOptions opts{v == Variant::kTTP, model.normalization};
    features::ExtractorCache neighbor_cache;
    features::FeatureMap neighbor;
    if (opts.temporal) neighbor = features::extract_features(inst.i_neighbor, model.extractors[0], &neighbor_cache);
    fusion::TtpCache cache;
    const auto out = fusion::ttp_forward(f[0], f[1], f[2], neighbor, *model.fusion, opts, &cache);
    loss = cross_entropy(out.scores, inst.label, &grad_scores);
    fusion::TtpGrads g = fusion::ttp_backward(grad_scores, cache, *model.fusion);
    grad_f[0] = std::move(g.i_t);
    grad_f[1] = std::move(g.mv);
    grad_f[2] = std::move(g.r);
    if (opts.temporal && include_extractors) {
      neighbor_grads = features::extract_features_backward(g.i_neighbor, neighbor_cache, model.extractors[0]);
      have_neighbor = true;
    }
    head_grads.push_back(std::move(g.U));
    head_grads.push_back(std::move(g.V));
    head_grads.push_back(std::move(g.W));
    head_grads.push_back(std::move(g.P));
  }

  if (include_extractors) {
    for (int m = 0; m < 3; ++m) {
      features::ExtractorGrads eg = features::extract_features_backward(grad_f[m], caches[m], model.extractors[m]);
      if (m == 0 && have_neighbor) add_extractor_grads(eg, neighbor_grads);
      append_extractor_grads(grads, eg);
    }
  }
  for (auto& g : head_grads) grads.push_back(std::move(g));
  return loss;
}

void Adam::step(const std::vector<ParamRef>& params, const Gradients& grads, double lr) {
  if (params.size() != grads.size()) throw ShapeError("Adam: parameter and gradient lists differ in length");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k].rows || grads[k].cols() != params[k].cols)
      throw ShapeError("Adam: gradient shape mismatch for " + params[k].name);
    if (!grads[k].allFinite()) throw DivergenceError("non-finite gradient for " + params[k].name);
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.rows, p.cols));
      v_.push_back(Matrix::Zero(p.rows, p.cols));
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("Adam: parameter list changed between steps");
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::Map<Matrix> value(params[k].data, params[k].rows, params[k].cols);
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * grads[k];
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * grads[k].cwiseProduct(grads[k]);
    value.array() -= lr * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + config_.eps);
  }
}

double PlateauSchedule::update(double metric) {
  if (metric > best_) {
    best_ = metric;
    stale_epochs_ = 0;
    return lr_;
  }
  if (++stale_epochs_ >= patience_ && decays_ < max_decays_) {
    lr_ *= factor_;
    ++decays_;
    stale_epochs_ = 0;
  }
  return lr_;
}

std::string format_log(const std::vector<EpochRecord>& log) {
  std::ostringstream out;
  out << "# stage variant epoch loss val_accuracy lr\n";
  for (const auto& r : log)
    out << r.stage << ' ' << r.variant << ' ' << r.epoch << ' ' << fixed(r.loss, 6) << ' '
        << fixed(r.val_accuracy, 4) << ' ' << r.lr << '\n';
  return out.str();
}

int argmax(const Vector& scores) {
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(best)) best = i;
  return best;
}

Vector score_video(const Model& model, const codec::Bitstream& bs, Variant v, const TrainConfig& config, Rng& rng) {
  const auto segments = modalities::extract_modalities(bs);
  const auto instances = modalities::sample_test_instances(segments, static_cast<std::size_t>(config.eval_segments), rng);
  Vector sum = Vector::Zero(model.num_classes);
  double count = 0.0;
  for (const auto& inst : instances) {
    sum += predict_scores(model, inst, v);
    count += 1.0;
    if (config.flip_augment) {
      sum += predict_scores(model, modalities::flip_instance(inst), v);
      count += 1.0;
    }
  }
  return sum / count;
}

double evaluate(const Model& model, std::span<const VideoExample> videos, Variant v, const TrainConfig& config) {
  if (videos.empty()) throw InvalidArgument("evaluate: empty test set");
  std::vector<int> correct(videos.size(), 0);
  parallel_for(videos.size(), config.threads, [&](std::size_t i) {
    Rng rng(config.seed * 0x9E3779B97F4A7C15ULL + i);
    correct[i] = argmax(score_video(model, videos[i].bitstream, v, config, rng)) == videos[i].label ? 1 : 0;
  });
  double hits = 0.0;
  for (int c : correct) hits += c;
  return hits / static_cast<double>(videos.size());
}

namespace {

std::vector<TrainingInstance> sample_epoch(std::span<const VideoExample> videos, const TrainConfig& config, Rng& rng) {
  std::vector<TrainingInstance> out;
  const std::size_t k = static_cast<std::size_t>(config.instances_per_video);
  for (const VideoExample& ex : videos) {
    const auto segments = modalities::extract_modalities(ex.bitstream);
    std::vector<std::size_t> eligible = modalities::eligible_segments(segments);
    if (eligible.empty()) continue;
    std::vector<std::size_t> picks;
    if (eligible.size() >= k) {
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(eligible[i], eligible[i + rng.uniform_index(eligible.size() - i)]);
        picks.push_back(eligible[i]);
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) picks.push_back(eligible[rng.uniform_index(eligible.size())]);
    }
    for (std::size_t t : picks) {
      auto inst = modalities::sample_training_instance(segments, t, rng, ex.label);
      if (config.flip_augment && rng.coin()) inst = modalities::flip_instance(inst);
      out.push_back(std::move(inst));
    }
  }
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.uniform_index(i)]);
  return out;
}

// Mean loss over the deterministic test-time instances of `videos`.
double mean_loss(const Model& model, std::span<const VideoExample> videos, Variant v, const TrainConfig& config) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    Rng rng(config.seed + i);
    const auto segments = modalities::extract_modalities(videos[i].bitstream);
    for (const auto& inst : modalities::sample_test_instances(segments, 1u << 20, rng, videos[i].label)) {
      total += cross_entropy(predict_scores(model, inst, v), inst.label);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

void check_trainable(const Dataset& dataset) {
  if (dataset.train.empty()) throw InvalidArgument("training split is empty");
  if (dataset.num_classes < 2) throw InvalidArgument("dataset needs at least 2 classes");
  std::vector<int> per_class(static_cast<std::size_t>(dataset.num_classes), 0);
  for (const auto& ex : dataset.train) {
    if (ex.label < 0 || ex.label >= dataset.num_classes) throw InvalidArgument("label out of range");
    ++per_class[static_cast<std::size_t>(ex.label)];
  }
  for (int c = 0; c < dataset.num_classes; ++c)
    if (per_class[static_cast<std::size_t>(c)] == 0)
      throw InvalidArgument("class " + std::to_string(c) + " has no training videos");
}

}  // namespace

void run_epochs(TrainState& state, const Dataset& dataset, Variant variant, int epochs, const TrainConfig& config,
                Rng& rng, const std::string& stage, std::vector<EpochRecord>& log) {
  const bool include_extractors = !config.freeze_extractors;
  const std::vector<ParamRef> params = state.model.params(variant, include_extractors);
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const std::vector<TrainingInstance> instances = sample_epoch(dataset.train, config, rng);
    if (instances.empty()) throw InvalidArgument("no training instances (every segment lacks P-frames)");
    const double lr = state.schedule.lr();
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < instances.size(); start += batch) {
      const std::size_t n = std::min(batch, instances.size() - start);
      std::vector<Gradients> per_instance(n);
      std::vector<double> losses(n, 0.0);
      parallel_for(n, config.threads, [&](std::size_t i) {
        losses[i] = loss_and_gradients(state.model, instances[start + i], variant, include_extractors, per_instance[i]);
      });
      // Fixed reduction order keeps results independent of thread count.
      Gradients total = std::move(per_instance[0]);
      for (std::size_t i = 1; i < n; ++i)
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += per_instance[i][k];
      for (auto& g : total) g /= static_cast<double>(n);
      for (double l : losses) loss_sum += l;
      state.optimizer.step(params, total, lr);
    }
    EpochRecord rec;
    rec.stage = stage;
    rec.variant = to_string(variant);
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(instances.size());
    rec.lr = lr;
    if (!dataset.val.empty()) {
      rec.val_accuracy = evaluate(state.model, dataset.val, variant, config);
      state.schedule.update(rec.val_accuracy);
    }
    log.push_back(rec);
  }
}

Stage1Result train_stage1(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  check_trainable(dataset);
  Rng root(config.seed);
  Stage1Result result;
  TrainState state{Model::create(config, dataset.num_classes, root), Adam(), PlateauSchedule(config.stage1_lr, 0.5, 1, 0)};
  for (int m = 0; m < 3; ++m) {
    const Variant v = std::array{Variant::kI, Variant::kMV, Variant::kR}[m];
    result.initial_loss[m] = mean_loss(state.model, dataset.train, v, config);
    if (!config.skip_stage1) {
      state.optimizer = Adam();
      state.schedule =
          PlateauSchedule(config.stage1_lr, config.plateau_factor, config.plateau_patience, config.max_decays);
      Rng rng = root.fork(100 + static_cast<std::uint64_t>(m));
      run_epochs(state, dataset, v, config.stage1_epochs, config, rng, "stage1", result.log);
    }
    result.final_loss[m] = mean_loss(state.model, dataset.train, v, config);
    if (!dataset.val.empty()) result.val_accuracy[m] = evaluate(state.model, dataset.val, v, config);
    if (!dataset.test.empty()) result.test_accuracy[m] = evaluate(state.model, dataset.test, v, config);
  }
  result.model = std::move(state.model);
  return result;
}

Stage2Result train_stage2(const Dataset& dataset, const Model& stage1, Variant variant, const TrainConfig& config) {
  config.validate();
  check_trainable(dataset);
  if (!is_fused(variant)) throw InvalidArgument(std::string("stage 2 trains BP, TP or TTP, not ") + to_string(variant));
  Rng root(config.seed);
  Model model = stage1;
  if (config.skip_stage1) {
    Rng fresh = root.fork(1);
    model = Model::create(config, dataset.num_classes, fresh);
  }
  model.normalization = config.normalization;
  // Every fused variant draws its initial fusion weights and its sampling
  // stream from the same seed.
  Rng init = root.fork(2);
  model.init_fusion(variant, init);
  TrainState state{std::move(model), Adam(),
                   PlateauSchedule(config.stage2_lr, config.plateau_factor, config.plateau_patience, config.max_decays)};
  Rng rng = root.fork(3);
  Stage2Result result;
  run_epochs(state, dataset, variant, config.stage2_epochs, config, rng, "stage2", result.log);
  if (!dataset.val.empty()) result.val_accuracy = evaluate(state.model, dataset.val, variant, config);
  result.model = std::move(state.model);
  return result;
}

AblationReport run_ablation(const Dataset& dataset, const TrainConfig& config) {
  if (dataset.test.empty()) throw InvalidArgument("ablation needs a non-empty test split");
  AblationReport report;
  Stage1Result s1 = train_stage1(dataset, config);
  report.log = s1.log;
  report.accuracy["I"] = s1.test_accuracy[0];
  report.accuracy["MV"] = s1.test_accuracy[1];
  report.accuracy["R"] = s1.test_accuracy[2];
  report.accuracy["I+MV+R"] = evaluate(s1.model, dataset.test, Variant::kLateFusion, config);
  for (Variant v : {Variant::kBP, Variant::kTP, Variant::kTTP}) {
    Stage2Result s2 = train_stage2(dataset, s1.model, v, config);
    report.log.insert(report.log.end(), s2.log.begin(), s2.log.end());
    report.accuracy[to_string(v)] = evaluate(s2.model, dataset.test, v, config);
  }
  return report;
}

std::string format_report_table(const AblationReport& report) {
  std::ostringstream out;
  out << "# Ablation: video-level top-1 accuracy on the test split\n";
  out << "# BP is pairwise factorized bilinear pooling over (I,MV), (I,R), (MV,R), scores summed\n";
  out << "variant  top1\n";
  for (Variant v : kAllVariants) {
    const std::string name = to_string(v);
    const auto it = report.accuracy.find(name);
    std::string padded = name;
    padded.resize(9, ' ');
    out << padded << (it == report.accuracy.end() ? std::string("n/a") : fixed(it->second, 4)) << '\n';
  }
  return out.str();
}

std::string format_report_kv(const AblationReport& report) {
  std::ostringstream out;
  for (Variant v : kAllVariants) {
    const auto it = report.accuracy.find(to_string(v));
    if (it != report.accuracy.end()) out << it->first << '=' << fixed(it->second, 6) << '\n';
  }
  return out.str();
}

BenchReport bench(const Model& model, std::span<const std::uint8_t> bitstream, int warmup, int iters, Variant v,
                  const TrainConfig& config) {
  if (iters < 1) throw InvalidArgument("bench needs iters >= 1");
  if (warmup < 0) throw InvalidArgument("bench needs warmup >= 0");
  BenchReport report;
  report.iters = iters;
  report.frames = codec::parse(bitstream).frame_count();

  std::vector<double> preprocess, cnn;
  std::vector<TrainingInstance> instances;
  for (int it = 0; it < warmup + iters; ++it) {
    Rng rng(config.seed);
    const auto t0 = Clock::now();
    const codec::Bitstream bs = codec::parse(bitstream);
    const auto segments = modalities::extract_modalities(bs);
    instances = modalities::sample_test_instances(segments, static_cast<std::size_t>(config.eval_segments), rng);
    const auto t1 = Clock::now();
    if (it >= warmup)
      preprocess.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count() /
                           static_cast<double>(report.frames));
  }
  for (int it = 0; it < warmup + iters; ++it) {
    const auto t0 = Clock::now();
    double sink = 0.0;
    for (const auto& inst : instances) sink += predict_scores(model, inst, v).sum();
    const auto t1 = Clock::now();
    if (!std::isfinite(sink)) throw NumericError("bench: non-finite scores");
    if (it >= warmup)
      cnn.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count() / static_cast<double>(instances.size()));
  }
  report.preprocess_ms_per_frame = median(preprocess);
  report.cnn_ms_per_frame = median(cnn);
  return report;
}

std::string format_bench_table(const BenchReport& report) {
  std::ostringstream out;
  out << "# per-frame wall clock, median of " << report.iters << " runs over " << report.frames << " frames\n";
  out << "phase       ms/frame\n";
  out << "Preprocess  " << fixed(report.preprocess_ms_per_frame, 4) << '\n';
  out << "CNN         " << fixed(report.cnn_ms_per_frame, 4) << '\n';
  return out.str();
}

std::string format_bench_kv(const BenchReport& report) {
  std::ostringstream out;
  out << "preprocess_ms_per_frame=" << fixed(report.preprocess_ms_per_frame, 6) << '\n';
  out << "cnn_ms_per_frame=" << fixed(report.cnn_ms_per_frame, 6) << '\n';
  return out.str();
}

namespace {

enum MetaField { kNumClasses, kC, kP, kSmallD, kBigD, kVariant, kNormalization, kHasFusion, kNumPairs, kMetaSize };

}  // namespace

std::vector<std::uint8_t> save_model(Model& model) {
  std::vector<NamedTensor> tensors;
  NamedTensor meta;
  meta.name = "meta";
  meta.dims = {kMetaSize};
  meta.values.resize(kMetaSize);
  meta.values[kNumClasses] = static_cast<float>(model.num_classes);
  meta.values[kC] = static_cast<float>(model.c);
  meta.values[kP] = static_cast<float>(model.p);
  meta.values[kSmallD] = static_cast<float>(model.d);
  meta.values[kBigD] = static_cast<float>(model.D);
  meta.values[kVariant] = static_cast<float>(static_cast<int>(model.variant));
  meta.values[kNormalization] = static_cast<float>(static_cast<int>(model.normalization));
  meta.values[kHasFusion] = model.fusion ? 1.0f : 0.0f;
  meta.values[kNumPairs] = static_cast<float>(model.pairs.size());
  tensors.push_back(std::move(meta));
  for (const ParamRef& ref : model.all_params()) tensors.push_back(to_named_tensor(ref));
  return serialize_checkpoint(tensors);
}

Model load_model(std::span<const std::uint8_t> bytes) {
  const std::vector<NamedTensor> tensors = parse_checkpoint(bytes);
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  const auto meta_it = by_name.find("meta");
  if (meta_it == by_name.end() || meta_it->second->values.size() != kMetaSize)
    throw ParseError(ParseErrorKind::kInvalidHeader, "checkpoint has no model metadata");
  const auto& meta = meta_it->second->values;
  auto as_int = [&](MetaField f) { return static_cast<int>(std::lround(meta[f])); };

  const int variant = as_int(kVariant);
  const int normalization = as_int(kNormalization);
  const int num_pairs = as_int(kNumPairs);
  if (variant < 0 || variant > static_cast<int>(Variant::kTTP) || normalization < 0 || normalization > 1 ||
      (num_pairs != 0 && num_pairs != 3))
    throw ParseError(ParseErrorKind::kInvalidHeader, "checkpoint metadata out of range");

  Model model;
  model.num_classes = as_int(kNumClasses);
  model.c = as_int(kC);
  model.p = as_int(kP);
  model.d = as_int(kSmallD);
  model.D = as_int(kBigD);
  model.variant = static_cast<Variant>(variant);
  model.normalization = static_cast<fusion::Normalization>(normalization);
  if (model.num_classes < 2 || model.c < 1 || model.p < 1 || model.d < 1 || model.D < 1)
    throw ParseError(ParseErrorKind::kInvalidHeader, "checkpoint dimensions out of range");
  for (int m = 0; m < 3; ++m) {
    model.extractors[m] = features::ExtractorParams::zeros(kModalityChannels[m], model.p, model.c);
    model.heads[m].weight = Matrix::Zero(model.num_classes, model.c);
    model.heads[m].bias = Vector::Zero(model.num_classes);
  }
  if (as_int(kHasFusion) != 0) model.fusion = fusion::FusionParams::zeros(model.c, model.d, model.D, model.num_classes);
  for (int k = 0; k < num_pairs; ++k)
    model.pairs.push_back(fusion::PairParams::zeros(model.c, model.d, model.D, model.num_classes));

  for (const ParamRef& ref : model.all_params()) {
    const auto it = by_name.find(ref.name);
    if (it == by_name.end()) throw ParseError(ParseErrorKind::kInvalidHeader, "checkpoint lacks tensor " + ref.name);
    assign_from(*it->second, ref);
  }
  return model;
}

}  // namespace ttp::training
