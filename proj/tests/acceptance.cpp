// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ttp/binary_io.hpp"
#include "ttp/cli.hpp"
#include "ttp/codec.hpp"
#include "ttp/fusion.hpp"
#include "ttp/synthdata.hpp"
#include "ttp/training.hpp"

using namespace ttp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s  criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Even videos: uniform noise. Odd videos: a random texture drifting with a
// per-video velocity plus noise, so motion vectors are non-trivial.
codec::RawVideo random_video(int index, Rng& rng) {
  const int H = 64, W = 64, F = 36;
  codec::RawVideo v;
  v.height = H;
  v.width = W;
  if (index % 2 == 0) {
    for (int f = 0; f < F; ++f) v.frames.push_back(oracle::random_frame(H, W, rng));
    return v;
  }
  const codec::Frame base = oracle::random_frame(H, W, rng);
  const int vx = static_cast<int>(rng.uniform_index(7)) - 3, vy = static_cast<int>(rng.uniform_index(7)) - 3;
  const int noise = static_cast<int>(rng.uniform_index(5));
  for (int f = 0; f < F; ++f) {
    codec::Frame fr(H, W);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < 3; ++c) {
          const int sy = (((y - vy * f) % H) + H) % H, sx = (((x - vx * f) % W) + W) % W;
          const int n = noise == 0 ? 0 : static_cast<int>(rng.uniform_index(2 * noise + 1)) - noise;
          fr.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(base.at(sy, sx, c) + n, 0, 255));
        }
    v.frames.push_back(std::move(fr));
  }
  return v;
}

void criterion_codec() {
  const auto t0 = Clock::now();
  const codec::CodecConfig config;
  Rng rng(2024);
  int mismatched_videos = 0, mismatched_p = 0, p_frames = 0, nonzero_mv = 0;
  for (int i = 0; i < 100; ++i) {
    const codec::RawVideo v = random_video(i, rng);
    const codec::Bitstream bs = codec::encode_video(v, config);
    const codec::RawVideo back = codec::decode_video(codec::parse(codec::serialize(bs)));
    if (!(back == v)) ++mismatched_videos;
    std::size_t frame = 0;
    for (const auto& gop : bs.gops) {
      ++frame;
      for (const auto& p : gop.p_frames) {
        ++p_frames;
        const codec::Frame rec = codec::reconstruct_frame(gop.i_frame, p.motion, p.residual, config.block_size);
        if (!(rec == v.frames[frame])) ++mismatched_p;
        for (const auto& mv : p.motion.vectors) nonzero_mv += (mv.dx != 0 || mv.dy != 0);
        ++frame;
      }
    }
  }
  const double secs = seconds_since(t0);
  report(1, "codec losslessness", mismatched_videos == 0 && mismatched_p == 0 && nonzero_mv > 0 && secs < 60.0,
         format("100 videos 64x64x36, %d video mismatches, %d/%d P-frame reconstruction mismatches, "
                "%d non-zero vectors, %.1f s (limit 60 s)",
                mismatched_videos, mismatched_p, p_frames, nonzero_mv, secs));
}

void criterion_degradation() {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = 1 + static_cast<int>(rng.uniform_index(12));
    const int d = 1 + static_cast<int>(rng.uniform_index(4));
    const int D = 1 + static_cast<int>(rng.uniform_index(10));
    const Vector x = random_matrix(c, 1, rng), y = random_matrix(c, 1, rng);
    const Matrix U = random_matrix(D * d, c, rng), V = random_matrix(D * d, c, rng);
    const Vector z = Vector::Ones(c);
    const Matrix W = Matrix::Ones(D * d, c);
    const Vector tri = fusion::trilinear_pool(x, y, z, U, V, W, d);
    const Vector ref = static_cast<double>(c) * fusion::mfb(x, y, U, V, d);
    worst = std::max(worst, rel_err(tri, ref));
  }
  report(2, "degradation to MFB", worst <= 1e-12,
         format("1000 random instances, max relative error %.3e (limit 1e-12)", worst));
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  training::TrainConfig cfg;
  cfg.c = 6;
  cfg.d = 2;
  cfg.D = 5;
  cfg.p = 4;
  const int C = 4;
  Rng rng(31);
  double worst = 0.0;
  int tensors = 0, instances = 0;
  for (auto norm : {fusion::Normalization::kPerBranch, fusion::Normalization::kAfterSum}) {
    cfg.normalization = norm;
    for (int trial = 0; trial < 8; ++trial) {
      training::Model model = training::Model::create(cfg, C, rng);
      model.init_fusion(training::Variant::kTTP, rng);
      modalities::TrainingInstance inst;
      auto random_tensor = [&](int ch) {
        Tensor3 t(4, 12, ch);  // K = 3 patches of 4x4
        for (auto& v : t.data) v = rng.uniform(0.0, 1.0);
        return t;
      };
      inst.i_t = random_tensor(3);
      inst.mv_t = random_tensor(2);
      inst.r_t = random_tensor(3);
      inst.i_neighbor = random_tensor(3);
      inst.label = static_cast<int>(rng.uniform_index(C));
      // Keep the pooled vectors away from the signed-sqrt kink.
      const auto F = [&](const Tensor3& t, int m) { return features::extract_features(t, model.extractors[m]); };
      const auto& P = *model.fusion;
      const Vector f0 = fusion::trilinear_pool_maps(F(inst.i_t, 0), F(inst.mv_t, 1), F(inst.r_t, 2), P.U, P.V, P.W, P.d);
      const Vector f1 =
          fusion::trilinear_pool_maps(F(inst.i_neighbor, 0), F(inst.mv_t, 1), F(inst.r_t, 2), P.U, P.V, P.W, P.d);
      if (f0.cwiseAbs().minCoeff() < 1e-6 || f1.cwiseAbs().minCoeff() < 1e-6 ||
          (f0 + f1).cwiseAbs().minCoeff() < 1e-6) {
        --trial;
        continue;
      }
      training::Gradients grads;
      training::loss_and_gradients(model, inst, training::Variant::kTTP, true, grads);
      const auto params = model.params(training::Variant::kTTP, true);
      for (std::size_t k = 0; k < params.size(); ++k) {
        const auto numeric = oracle::central_diff(
            params[k].data, static_cast<std::size_t>(params[k].rows * params[k].cols), [&] {
              return training::cross_entropy(training::predict_scores(model, inst, training::Variant::kTTP),
                                             inst.label);
            });
        worst = std::max(worst, oracle::relative_error(grads[k].data(), numeric));
        ++tensors;
      }
      ++instances;
    }
  }
  const double secs = seconds_since(t0);
  report(3, "gradient suite", worst <= 1e-4 && secs < 30.0,
         format("%d instances (c=6 d=2 D=5 K=3 C=4, both normalization placements), %d tensors incl. all three "
                "extractors, max relative error %.3e (limit 1e-4), %.1f s (limit 30 s)",
                instances, tensors, worst, secs));
}

void criterion_invariants() {
  Rng rng(11);
  double norm_err = 0.0, scale_err = 0.0, sum_err = 0.0, shift_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(rng.uniform_index(8)), d = 1 + static_cast<int>(rng.uniform_index(3));
    const int D = 2 + static_cast<int>(rng.uniform_index(8)), K = 1 + static_cast<int>(rng.uniform_index(6));
    const Matrix U = random_matrix(D * d, c, rng), V = random_matrix(D * d, c, rng), W = random_matrix(D * d, c, rng);

    const Vector f = random_matrix(D, 1, rng) * 10.0;
    norm_err = std::max(norm_err, std::fabs(fusion::signed_sqrt_l2(f).values.norm() - 1.0));

    const Vector x = random_matrix(c, 1, rng), y = random_matrix(c, 1, rng), z = random_matrix(c, 1, rng);
    const double a = rng.uniform(-3.0, 3.0);
    const Vector base = fusion::trilinear_pool(x, y, z, U, V, W, d);
    scale_err = std::max({scale_err, rel_err(fusion::trilinear_pool(a * x, y, z, U, V, W, d), a * base),
                          rel_err(fusion::trilinear_pool(x, a * y, z, U, V, W, d), a * base),
                          rel_err(fusion::trilinear_pool(x, y, a * z, U, V, W, d), a * base)});

    const Matrix X = random_matrix(c, K, rng), Y = random_matrix(c, K, rng), Z = random_matrix(c, K, rng);
    Vector sum = Vector::Zero(D);
    for (int k = 0; k < K; ++k) sum += fusion::trilinear_pool(X.col(k), Y.col(k), Z.col(k), U, V, W, d);
    sum_err = std::max(sum_err, rel_err(fusion::trilinear_pool_maps(X, Y, Z, U, V, W, d), sum));

    const Vector s = random_matrix(5, 1, rng) * 4.0;
    const int label = static_cast<int>(rng.uniform_index(5));
    const Vector shifted = (s.array() + rng.uniform(-100.0, 100.0)).matrix();
    shift_err = std::max(shift_err, std::fabs(training::cross_entropy(s, label) - training::cross_entropy(shifted, label)));
  }
  const bool pass = norm_err <= 1e-9 && scale_err <= 1e-10 && sum_err <= 1e-12 && shift_err <= 1e-12;
  report(4, "normalization and multilinearity invariants", pass,
         format("200 trials: unit-norm error %.2e (limit 1e-9), scaling error %.2e (limit 1e-10), "
                "sum-pooling decomposition error %.2e, softmax-shift error %.2e (limit 1e-12)",
                norm_err, scale_err, sum_err, shift_err));
}

std::string read_text(const std::string& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

struct BenchmarkRun {
  std::string table;
  std::string kv;
};

BenchmarkRun criterion_benchmark() {
  const auto t0 = Clock::now();
  const synth::SynthConfig synth_cfg;  // seed 42
  const codec::CodecConfig codec_cfg;
  const training::TrainConfig train_cfg;  // D=512, d=4, c=64
  const Dataset ds = synth::encode_dataset(synth::generate_dataset(synth_cfg, codec_cfg),
                                           static_cast<int>(synth_cfg.classes.size()), codec_cfg);
  const training::AblationReport r = training::run_ablation(ds, train_cfg);
  const double secs = seconds_since(t0);
  const auto acc = [&](const char* v) { return r.accuracy.at(v); };
  const double single = std::max({acc("I"), acc("MV"), acc("R")});
  const bool pass = acc("TTP") >= 0.90 && acc("TTP") >= acc("TP") && acc("TP") >= single &&
                    acc("TTP") >= acc("I+MV+R") && secs < 900.0;
  report(5, "synthetic benchmark", pass,
         format("I=%.3f MV=%.3f R=%.3f I+MV+R=%.3f BP=%.3f TP=%.3f TTP=%.3f; need TTP>=0.90, TTP>=TP>=max(I,MV,R), "
                "TTP>=I+MV+R; %.0f s (limit 900 s)",
                acc("I"), acc("MV"), acc("R"), acc("I+MV+R"), acc("BP"), acc("TP"), acc("TTP"), secs));
  return {training::format_report_table(r), training::format_report_kv(r)};
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (out_text != nullptr) *out_text = out.str();
  if (code != 0) std::printf("      cli %s exited %d: %s", args.front().c_str(), code, err.str().c_str());
  return code;
}

void criterion_determinism(const fs::path& dir, const BenchmarkRun& first) {
  const auto t0 = Clock::now();
  const std::string data = (dir / "data").string();
  const std::string table = (dir / "ablation.txt").string(), kv = (dir / "ablation.kv").string();
  const bool ok = run_cli({"gen-data", "--dataset_dir", data}) == 0 &&
                  run_cli({"ablate", "--dataset_dir", data, "--ablation_report", table, "--ablation_kv", kv,
                           "--ablation_log", (dir / "ablation.log").string()}) == 0;
  const bool same = ok && read_text(table) == first.table && read_text(kv) == first.kv;
  report(6, "determinism", same,
         format("`ttp ablate` with the default config reproduced the benchmark run's report table and key/value file "
                "byte-for-byte: %s (%.0f s)",
                same ? "yes" : "no", seconds_since(t0)));
}

void criterion_bench(const fs::path& dir) {
  const std::string table_path = (dir / "bench.txt").string(), kv_path = (dir / "bench.kv").string();
  std::string out;
  const bool ok = run_cli({"bench", "--checkpoint", (dir / "none.ttpw").string(), "--bench_report", table_path,
                           "--bench_kv", kv_path},
                          &out) == 0;
  bool pass = ok;
  std::string detail = "bench failed";
  if (ok) {
    const std::string table = read_text(table_path);
    const std::string kv = read_text(kv_path);
    std::istringstream lines(kv);
    std::string line;
    std::vector<std::string> keys;
    double pre = -1.0, cnn = -1.0;
    while (std::getline(lines, line)) {
      const auto eq = line.find('=');
      keys.push_back(line.substr(0, eq));
      if (keys.back() == "preprocess_ms_per_frame") pre = std::stod(line.substr(eq + 1));
      if (keys.back() == "cnn_ms_per_frame") cnn = std::stod(line.substr(eq + 1));
    }
    pass = keys.size() == 2 && pre > 0.0 && cnn > 0.0 && table.find("Preprocess") != std::string::npos &&
           table.find("CNN") != std::string::npos && table.find("ms/frame") != std::string::npos;
    detail = format("phases Preprocess=%.4f ms/frame, CNN=%.4f ms/frame (informational)", pre, cnn);
  }
  report(7, "bench schema", pass, detail);
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "ttp_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  try {
    criterion_codec();
    criterion_degradation();
    criterion_gradients();
    criterion_invariants();
    const BenchmarkRun run = criterion_benchmark();
    criterion_determinism(dir, run);
    criterion_bench(dir);
  } catch (const std::exception& e) {
    std::printf("FAIL  aborted: %s\n", e.what());
    ++failures;
  }
  fs::remove_all(dir);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
