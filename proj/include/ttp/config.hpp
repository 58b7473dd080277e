#pragma once

#include <string>
#include <vector>

#include "ttp/codec.hpp"
#include "ttp/synthdata.hpp"
#include "ttp/training.hpp"

namespace ttp {

/// Every setting used by the command-line tool. Config files hold
/// `key = value` lines; `#` starts a comment.
struct RunConfig {
  codec::CodecConfig codec;
  synth::SynthConfig synth;
  training::TrainConfig train;

  std::string dataset_dir = "data";
  std::string checkpoint = "model.ttpw";
  std::string train_log = "train.log";
  std::string ablation_report = "ablation.txt";
  std::string ablation_kv = "ablation.kv";
  std::string ablation_log = "ablation.log";
  std::string bench_report = "bench.txt";
  std::string bench_kv = "bench.kv";
  std::string input;
  std::string output;
  std::string variant = "TTP";
  int warmup = 2;
  int iters = 5;

  /// Sets one field from its textual value. Throws InvalidArgument on an
  /// unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  /// Checks cross-field constraints.
  void validate() const;
};

/// All recognised keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Applies the lines of a config file on top of `config`. Errors carry the
/// line number.
void apply_config_text(RunConfig& config, const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Renders `config` as a config file that reproduces it.
std::string format_config(const RunConfig& config);

}  // namespace ttp
