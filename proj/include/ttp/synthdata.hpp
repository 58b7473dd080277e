#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttp/codec.hpp"
#include "ttp/dataset.hpp"

namespace ttp::synth {

enum class MotionPattern { kTranslateRight, kTranslateDown, kRotateClockwise, kOscillateHorizontal };

const char* to_string(MotionPattern pattern);
MotionPattern parse_motion_pattern(const std::string& name);

struct SynthConfig {
  std::vector<MotionPattern> classes = {MotionPattern::kTranslateRight, MotionPattern::kTranslateDown,
                                        MotionPattern::kRotateClockwise, MotionPattern::kOscillateHorizontal};
  int videos_per_class = 50;
  int frames = 36;
  int height = 64;
  int width = 64;
  int shape_size = 32;
  int noise = 6;     // per-pixel uniform noise in [-noise, noise]
  int velocity = 2;  // pixels per frame
  // Probability that a video's shape takes its class's own colour; the
  // remainder is spread over the other classes' colours.
  double color_bias = 0.75;
  std::uint64_t seed = 42;

  /// Throws InvalidArgument on bad geometry (e.g. shape larger than frame) or
  /// a size that is not a multiple of the codec block size.
  void validate(const codec::CodecConfig& codec) const;
};

/// Top-left corner of the shape at frame f (may be outside the frame; the
/// renderer wraps toroidally).
struct ShapeTrack {
  std::vector<int> x;
  std::vector<int> y;
};

struct LabeledVideo {
  codec::RawVideo video;
  int label = 0;
  Split split = Split::kTrain;
  ShapeTrack track;
};

/// Split for the i-th video (0-based) of a class with n videos: the first
/// 60% train, next 20% val, rest test.
Split split_for_index(int i, int n);

/// Renders one video. `index` is the global video index; the video's random
/// stream is seeded with seed + index.
LabeledVideo render_video(const SynthConfig& config, int label, int index, Split split);

std::vector<LabeledVideo> generate_dataset(const SynthConfig& config, const codec::CodecConfig& codec);

/// Encodes every video, in parallel over videos.
Dataset encode_dataset(const std::vector<LabeledVideo>& videos, int num_classes, const codec::CodecConfig& codec,
                       int threads = 0);

/// Writes <dir>/videos/vid_NNNN.ttpv and <dir>/manifest.txt.
void write_dataset_dir(const Dataset& dataset, const std::string& dir);

}  // namespace ttp::synth
