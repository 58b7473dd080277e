#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ttp/codec.hpp"

namespace ttp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,            // bad arguments or config values
  kIo = 2,               // input file missing or output unwritable
  kParse = 3,            // malformed bitstream, raw video or checkpoint
  kMissingDataset = 4,
  kMissingCheckpoint = 5,
  kDiverged = 6,
};

/// Raw video interchange: "TTPR", u32 height, u32 width, u32 frame_count,
/// then each frame as row-major interleaved RGB bytes.
std::vector<std::uint8_t> serialize_raw_video(const codec::RawVideo& video);
codec::RawVideo parse_raw_video(std::span<const std::uint8_t> bytes);

/// Runs `ttp <command> [--config FILE] [--key value ...]`. `args` excludes
/// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ttp::cli
