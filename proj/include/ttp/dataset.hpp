#pragma once

#include <string>
#include <vector>

#include "ttp/codec.hpp"

namespace ttp {

enum class Split { kTrain, kVal, kTest };

const char* to_string(Split split);
/// Throws InvalidArgument for anything but "train", "val" or "test".
Split parse_split(const std::string& text);

/// An encoded video with its class and split.
struct VideoExample {
  codec::Bitstream bitstream;
  int label = 0;
  Split split = Split::kTrain;
};

struct Dataset {
  int num_classes = 0;
  std::vector<VideoExample> train;
  std::vector<VideoExample> val;
  std::vector<VideoExample> test;

  std::size_t size() const { return train.size() + val.size() + test.size(); }
  void add(VideoExample example);
};

/// Manifest line: "<relative path> <label> <split>".
struct ManifestEntry {
  std::string path;
  int label = 0;
  Split split = Split::kTrain;
};

std::string format_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> parse_manifest(const std::string& text);

/// Reads <dir>/manifest.txt and every bitstream it lists.
Dataset load_dataset_dir(const std::string& dir);

}  // namespace ttp
