#pragma once

// Small datasets and configs shared by the training and CLI tests.

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "ttp/synthdata.hpp"
#include "ttp/training.hpp"

namespace toy {

inline ttp::synth::SynthConfig synth_config(int videos_per_class = 5) {
  ttp::synth::SynthConfig s;
  s.classes = {ttp::synth::MotionPattern::kTranslateRight, ttp::synth::MotionPattern::kTranslateDown};
  s.videos_per_class = videos_per_class;
  s.frames = 13;
  s.height = 32;
  s.width = 32;
  s.shape_size = 12;
  s.noise = 4;
  s.color_bias = 1.0;
  s.seed = 7;
  return s;
}

inline ttp::training::TrainConfig train_config() {
  ttp::training::TrainConfig t;
  t.c = 8;
  t.p = 8;
  t.D = 16;
  t.d = 2;
  t.batch_size = 4;
  t.stage1_epochs = 2;
  t.stage2_epochs = 2;
  t.eval_segments = 3;
  t.seed = 11;
  return t;
}

inline ttp::Dataset dataset(int videos_per_class = 5) {
  const auto s = synth_config(videos_per_class);
  const ttp::codec::CodecConfig codec;
  return ttp::synth::encode_dataset(ttp::synth::generate_dataset(s, codec), 2, codec);
}

// Fresh empty directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("ttp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace toy
