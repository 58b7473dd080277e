#include "ttp/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "ttp/binary_io.hpp"
#include "ttp/error.hpp"
#include "ttp/parallel.hpp"
#include "ttp/rng.hpp"

namespace ttp::synth {

namespace {

constexpr std::array<std::array<int, 3>, 4> kPalette = {{{200, 70, 60}, {70, 190, 70}, {60, 90, 210}, {210, 200, 60}}};

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

int wrap(int v, int n) { return ((v % n) + n) % n; }

ShapeTrack make_track(const SynthConfig& cfg, MotionPattern pattern, Rng& rng) {
  const int H = cfg.height, W = cfg.width, S = cfg.shape_size, v = cfg.velocity;
  ShapeTrack t;
  t.x.resize(cfg.frames);
  t.y.resize(cfg.frames);
  auto rand_int = [&](int lo, int hi) { return lo + static_cast<int>(rng.uniform_index(hi - lo + 1)); };
  switch (pattern) {
    case MotionPattern::kTranslateRight: {
      const int x0 = rand_int(0, W - 1), y0 = rand_int(0, H - S);
      for (int f = 0; f < cfg.frames; ++f) {
        t.x[f] = x0 + v * f;
        t.y[f] = y0;
      }
      break;
    }
    case MotionPattern::kTranslateDown: {
      const int x0 = rand_int(0, W - S), y0 = rand_int(0, H - 1);
      for (int f = 0; f < cfg.frames; ++f) {
        t.x[f] = x0;
        t.y[f] = y0 + v * f;
      }
      break;
    }
    case MotionPattern::kRotateClockwise: {
      const double cx = (W - S) / 2.0, cy = (H - S) / 2.0;
      // Tight orbits keep the displacement from the GOP's I-frame within a
      // few blocks, unlike the unbounded drift of the translation classes.
      const double max_r = std::max(1.0, std::min({cx, cy, 6.0}));
      const double radius = rng.uniform(0.5 * max_r, max_r);
      const double theta0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double omega = v / radius;
      for (int f = 0; f < cfg.frames; ++f) {
        // Image y points down, so increasing angle turns clockwise on screen.
        t.x[f] = static_cast<int>(std::lround(cx + radius * std::cos(theta0 + omega * f)));
        t.y[f] = static_cast<int>(std::lround(cy + radius * std::sin(theta0 + omega * f)));
      }
      break;
    }
    case MotionPattern::kOscillateHorizontal: {
      const double period = rng.uniform(16.0, 32.0);
      const double amplitude = std::min(v * period / (2.0 * std::numbers::pi), (W - S) / 2.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const int x0 = static_cast<int>(std::lround(rng.uniform(amplitude, W - S - amplitude)));
      const int y0 = rand_int(0, H - S);
      for (int f = 0; f < cfg.frames; ++f) {
        t.x[f] = x0 + static_cast<int>(std::lround(amplitude * std::sin(2.0 * std::numbers::pi * f / period + phase)));
        t.y[f] = y0;
      }
      break;
    }
  }
  return t;
}

}  // namespace

const char* to_string(MotionPattern pattern) {
  switch (pattern) {
    case MotionPattern::kTranslateRight:
      return "translate_right";
    case MotionPattern::kTranslateDown:
      return "translate_down";
    case MotionPattern::kRotateClockwise:
      return "rotate_clockwise";
    case MotionPattern::kOscillateHorizontal:
      return "oscillate_horizontal";
  }
  return "translate_right";
}

MotionPattern parse_motion_pattern(const std::string& name) {
  for (auto p : {MotionPattern::kTranslateRight, MotionPattern::kTranslateDown, MotionPattern::kRotateClockwise,
                 MotionPattern::kOscillateHorizontal})
    if (name == to_string(p)) return p;
  throw InvalidArgument("unknown motion pattern '" + name + "'");
}

void SynthConfig::validate(const codec::CodecConfig& codec) const {
  codec.validate();
  if (classes.size() < 2) throw InvalidArgument("need at least 2 classes");
  if (videos_per_class < 1) throw InvalidArgument("videos_per_class must be >= 1");
  if (frames < 1) throw InvalidArgument("frames must be >= 1");
  if (height < 1 || width < 1) throw InvalidArgument("frame size must be positive");
  if (height % codec.block_size != 0 || width % codec.block_size != 0)
    throw InvalidArgument("frame size must be a multiple of the codec block size");
  if (shape_size < 1 || shape_size > height || shape_size > width)
    throw InvalidArgument("shape of size " + std::to_string(shape_size) + " does not fit a " +
                          std::to_string(height) + "x" + std::to_string(width) + " frame");
  if (noise < 0 || noise > 255) throw InvalidArgument("noise must be in [0, 255]");
  if (velocity < 0) throw InvalidArgument("velocity must be >= 0");
  if (color_bias < 0.0 || color_bias > 1.0) throw InvalidArgument("color_bias must be in [0, 1]");
}

Split split_for_index(int i, int n) {
  const int n_train = static_cast<int>(std::lround(0.6 * n));
  const int n_val = static_cast<int>(std::lround(0.8 * n)) - n_train;
  if (i < n_train) return Split::kTrain;
  if (i < n_train + n_val) return Split::kVal;
  return Split::kTest;
}

LabeledVideo render_video(const SynthConfig& cfg, int label, int index, Split split) {
  Rng rng(cfg.seed + static_cast<std::uint64_t>(index));
  const int H = cfg.height, W = cfg.width, S = cfg.shape_size;
  const MotionPattern pattern = cfg.classes.at(static_cast<std::size_t>(label));

  // Static background: two low-frequency gratings per channel.
  std::vector<double> background(static_cast<std::size_t>(H) * W * 3);
  for (int c = 0; c < 3; ++c) {
    const double base = rng.uniform(70.0, 150.0);
    const double fx1 = rng.uniform(0.02, 0.12), fy1 = rng.uniform(0.02, 0.12), p1 = rng.uniform(0.0, 6.3);
    const double fx2 = rng.uniform(0.05, 0.2), fy2 = rng.uniform(-0.2, 0.2), p2 = rng.uniform(0.0, 6.3);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        background[(static_cast<std::size_t>(y) * W + x) * 3 + c] =
            base + 40.0 * std::sin(2 * std::numbers::pi * (fx1 * x + fy1 * y) + p1) +
            20.0 * std::sin(2 * std::numbers::pi * (fx2 * x + fy2 * y) + p2);
  }

  // Shape colour leans towards the class's palette entry.
  std::size_t color = static_cast<std::size_t>(label) % kPalette.size();
  if (rng.uniform01() >= cfg.color_bias) {
    color = (color + 1 + rng.uniform_index(kPalette.size() - 1)) % kPalette.size();
  }
  // 2x2-cell two-tone texture so the shape is trackable by block matching.
  std::vector<std::array<std::uint8_t, 3>> texture(static_cast<std::size_t>(S) * S);
  const int cells = (S + 1) / 2;
  std::vector<double> cell_tone(static_cast<std::size_t>(cells) * cells);
  for (double& t : cell_tone) t = rng.coin() ? 45.0 : -45.0;
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j)
      for (int c = 0; c < 3; ++c)
        texture[static_cast<std::size_t>(i) * S + j][c] =
            clamp_byte(kPalette[color][c] + cell_tone[static_cast<std::size_t>(i / 2) * cells + j / 2]);

  LabeledVideo out;
  out.label = label;
  out.split = split;
  out.track = make_track(cfg, pattern, rng);
  out.video.height = H;
  out.video.width = W;
  out.video.frames.reserve(cfg.frames);
  for (int f = 0; f < cfg.frames; ++f) {
    codec::Frame frame(H, W);
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
      double v = background[i];
      if (cfg.noise > 0) v += static_cast<double>(rng.uniform_index(2 * cfg.noise + 1)) - cfg.noise;
      frame.pixels[i] = clamp_byte(v);
    }
    for (int i = 0; i < S; ++i) {
      const int y = wrap(out.track.y[f] + i, H);
      for (int j = 0; j < S; ++j) {
        const int x = wrap(out.track.x[f] + j, W);
        for (int c = 0; c < 3; ++c) {
          double v = texture[static_cast<std::size_t>(i) * S + j][c];
          if (cfg.noise > 0) v += static_cast<double>(rng.uniform_index(2 * cfg.noise + 1)) - cfg.noise;
          frame.at(y, x, c) = clamp_byte(v);
        }
      }
    }
    out.video.frames.push_back(std::move(frame));
  }
  return out;
}

std::vector<LabeledVideo> generate_dataset(const SynthConfig& config, const codec::CodecConfig& codec) {
  config.validate(codec);
  const int n_classes = static_cast<int>(config.classes.size());
  std::vector<LabeledVideo> videos(static_cast<std::size_t>(n_classes) * config.videos_per_class);
  parallel_for(videos.size(), 0, [&](std::size_t index) {
    const int label = static_cast<int>(index) / config.videos_per_class;
    const int i = static_cast<int>(index) % config.videos_per_class;
    videos[index] = render_video(config, label, static_cast<int>(index), split_for_index(i, config.videos_per_class));
  });
  return videos;
}

Dataset encode_dataset(const std::vector<LabeledVideo>& videos, int num_classes, const codec::CodecConfig& codec,
                       int threads) {
  std::vector<VideoExample> encoded(videos.size());
  parallel_for(videos.size(), threads, [&](std::size_t i) {
    encoded[i].bitstream = codec::encode_video(videos[i].video, codec);
    encoded[i].label = videos[i].label;
    encoded[i].split = videos[i].split;
  });
  Dataset ds;
  for (auto& e : encoded) ds.add(std::move(e));
  ds.num_classes = std::max(ds.num_classes, num_classes);
  return ds;
}

void write_dataset_dir(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "videos");
  std::vector<ManifestEntry> entries;
  int index = 0;
  for (const auto* split : {&dataset.train, &dataset.val, &dataset.test}) {
    for (const VideoExample& ex : *split) {
      char name[32];
      std::snprintf(name, sizeof(name), "videos/vid_%04d.ttpv", index++);
      write_file((fs::path(dir) / name).string(), codec::serialize(ex.bitstream));
      entries.push_back({name, ex.label, ex.split});
    }
  }
  const std::string manifest = format_manifest(entries);
  write_file((fs::path(dir) / "manifest.txt").string(),
             std::span(reinterpret_cast<const std::uint8_t*>(manifest.data()), manifest.size()));
}

}  // namespace ttp::synth
