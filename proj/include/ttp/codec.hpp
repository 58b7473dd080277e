#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ttp::codec {

/// One RGB frame, row-major, channel-last (h * w * 3 bytes).
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct RawVideo {
  int height = 0;
  int width = 0;
  std::vector<Frame> frames;

  friend bool operator==(const RawVideo&, const RawVideo&) = default;
};

struct CodecConfig {
  int gop_len = 12;
  int block_size = 8;
  int search_range = 8;

  /// Throws InvalidArgument when n < 2, b < 1, s outside [0, b], or s > 127.
  void validate() const;
};

/// Integer displacement of a block: the block's content is found at
/// (x + dx, y + dy) in the reference frame.
struct MotionVector {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

struct MvGrid {
  int rows = 0;  // h / b
  int cols = 0;  // w / b
  std::vector<MotionVector> vectors;

  MvGrid() = default;
  MvGrid(int r, int c) : rows(r), cols(c), vectors(static_cast<std::size_t>(r) * c) {}

  MotionVector& at(int row, int col) { return vectors[static_cast<std::size_t>(row) * cols + col]; }
  const MotionVector& at(int row, int col) const { return vectors[static_cast<std::size_t>(row) * cols + col]; }

  friend bool operator==(const MvGrid&, const MvGrid&) = default;
};

/// Signed per-pixel correction, same layout as Frame.
struct ResidualFrame {
  int height = 0;
  int width = 0;
  std::vector<std::int16_t> values;

  ResidualFrame() = default;
  ResidualFrame(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::int16_t& at(int y, int x, int c) { return values[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::int16_t at(int y, int x, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const ResidualFrame&, const ResidualFrame&) = default;
};

struct PFrame {
  MvGrid motion;
  ResidualFrame residual;
  friend bool operator==(const PFrame&, const PFrame&) = default;
};

/// One segment: an intra-coded frame followed by P-frames that all
/// reference it.
struct Gop {
  Frame i_frame;
  std::vector<PFrame> p_frames;

  std::size_t length() const { return 1 + p_frames.size(); }
  friend bool operator==(const Gop&, const Gop&) = default;
};

struct Bitstream {
  int height = 0;
  int width = 0;
  CodecConfig config;
  std::vector<Gop> gops;

  std::size_t frame_count() const;
  friend bool operator==(const Bitstream& a, const Bitstream& b) {
    return a.height == b.height && a.width == b.width && a.config.gop_len == b.config.gop_len &&
           a.config.block_size == b.config.block_size && a.config.search_range == b.config.search_range &&
           a.gops == b.gops;
  }
};

inline constexpr char kBitstreamMagic[4] = {'T', 'T', 'P', 'V'};
inline constexpr std::uint16_t kBitstreamVersion = 1;

/// Full-search SAD block matching for the b x b block whose top-left corner
/// is (block_x, block_y) in `target`. Candidates that would read outside
/// `ref` are skipped. Ties go to the smallest |dx| + |dy|, then to the
/// earliest candidate in row-major (dy outer, dx inner) order.
MotionVector block_match(const Frame& ref, const Frame& target, int block_x, int block_y,
                         const CodecConfig& config);

/// residual(x, y, z) = target(x, y, z) - ref(x + dx, y + dy, z) using the
/// vector of the block containing (x, y).
ResidualFrame compute_residual(const Frame& ref, const Frame& target, const MvGrid& motion, int block_size);

/// Inverse of compute_residual. Throws ParseError(kCorruptReference) when a
/// vector points outside the frame or a reconstructed value leaves [0, 255].
Frame reconstruct_frame(const Frame& i_frame, const MvGrid& motion, const ResidualFrame& residual,
                        int block_size);

/// Motion-estimates every block of `target` against `ref`.
MvGrid estimate_motion(const Frame& ref, const Frame& target, const CodecConfig& config);

/// Throws InvalidArgument on inconsistent frame sizes, non-conforming
/// dimensions or an empty video.
void validate_video(const RawVideo& video, const CodecConfig& config);

Bitstream encode_video(const RawVideo& video, const CodecConfig& config);
RawVideo decode_video(const Bitstream& bs);

/// Little-endian TTPV container.
std::vector<std::uint8_t> serialize(const Bitstream& bs);
/// Throws ParseError with a distinct kind for bad magic, truncation and
/// out-of-range vectors.
Bitstream parse(std::span<const std::uint8_t> bytes);

}  // namespace ttp::codec
