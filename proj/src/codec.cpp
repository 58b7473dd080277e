#include "ttp/codec.hpp"

#include <cstdlib>
#include <limits>
#include <string>

#include "ttp/binary_io.hpp"
#include "ttp/error.hpp"

namespace ttp::codec {

namespace {

std::string dims(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

// SAD between the target block at (bx, by) and the reference block displaced
// by (dx, dy). Stops early once the running sum exceeds `bound`.
long block_sad(const Frame& ref, const Frame& target, int bx, int by, int dx, int dy, int b, long bound) {
  long sad = 0;
  const std::size_t row_bytes = static_cast<std::size_t>(b) * 3;
  for (int row = 0; row < b; ++row) {
    const std::uint8_t* t = &target.pixels[(static_cast<std::size_t>(by + row) * target.width + bx) * 3];
    const std::uint8_t* r = &ref.pixels[(static_cast<std::size_t>(by + dy + row) * ref.width + bx + dx) * 3];
    for (std::size_t i = 0; i < row_bytes; ++i) sad += std::abs(static_cast<int>(t[i]) - static_cast<int>(r[i]));
    if (sad > bound) return sad;
  }
  return sad;
}

}  // namespace

void CodecConfig::validate() const {
  if (gop_len < 2) throw InvalidArgument("gop_len must be >= 2, got " + std::to_string(gop_len));
  if (block_size < 1 || block_size > 65535)
    throw InvalidArgument("block_size must be in [1, 65535], got " + std::to_string(block_size));
  if (gop_len > 65535) throw InvalidArgument("gop_len must fit in 16 bits");
  if (search_range < 0 || search_range > block_size)
    throw InvalidArgument("search_range must be in [0, block_size], got " + std::to_string(search_range));
  if (search_range > std::numeric_limits<std::int8_t>::max())
    throw InvalidArgument("search_range must be <= 127 to fit the i8 vector encoding");
}

std::size_t Bitstream::frame_count() const {
  std::size_t n = 0;
  for (const auto& g : gops) n += g.length();
  return n;
}

MotionVector block_match(const Frame& ref, const Frame& target, int block_x, int block_y,
                         const CodecConfig& config) {
  const int b = config.block_size;
  const int s = config.search_range;

  // Candidates are ordered by (sad, |dx|+|dy|, row-major index); the zero
  // vector is scored first so early termination has a tight bound.
  long best_sad = block_sad(ref, target, block_x, block_y, 0, 0, b, std::numeric_limits<long>::max());
  int best_l1 = 0;
  int best_index = s * (2 * s + 1) + s;
  MotionVector best{0, 0};
  if (best_sad == 0) return best;

  for (int dy = -s; dy <= s; ++dy) {
    if (block_y + dy < 0 || block_y + dy + b > ref.height) continue;
    for (int dx = -s; dx <= s; ++dx) {
      if (block_x + dx < 0 || block_x + dx + b > ref.width) continue;
      if (dx == 0 && dy == 0) continue;
      const int l1 = std::abs(dx) + std::abs(dy);
      const int index = (dy + s) * (2 * s + 1) + (dx + s);
      const long sad = block_sad(ref, target, block_x, block_y, dx, dy, b, best_sad);
      if (sad > best_sad) continue;
      if (sad < best_sad || l1 < best_l1 || (l1 == best_l1 && index < best_index)) {
        best_sad = sad;
        best_l1 = l1;
        best_index = index;
        best = {dx, dy};
      }
    }
  }
  return best;
}

MvGrid estimate_motion(const Frame& ref, const Frame& target, const CodecConfig& config) {
  const int b = config.block_size;
  MvGrid grid(target.height / b, target.width / b);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) grid.at(r, c) = block_match(ref, target, c * b, r * b, config);
  return grid;
}

ResidualFrame compute_residual(const Frame& ref, const Frame& target, const MvGrid& motion, int block_size) {
  ResidualFrame res(target.height, target.width);
  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) {
      const MotionVector mv = motion.at(y / block_size, x / block_size);
      for (int z = 0; z < 3; ++z)
        res.at(y, x, z) = static_cast<std::int16_t>(static_cast<int>(target.at(y, x, z)) -
                                                    static_cast<int>(ref.at(y + mv.dy, x + mv.dx, z)));
    }
  }
  return res;
}

Frame reconstruct_frame(const Frame& i_frame, const MvGrid& motion, const ResidualFrame& residual,
                        int block_size) {
  if (residual.height != i_frame.height || residual.width != i_frame.width ||
      motion.rows * block_size != i_frame.height || motion.cols * block_size != i_frame.width) {
    throw ShapeError("P-frame shape does not match I-frame " + dims(i_frame.height, i_frame.width));
  }
  Frame out(i_frame.height, i_frame.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const MotionVector mv = motion.at(y / block_size, x / block_size);
      const int sy = y + mv.dy;
      const int sx = x + mv.dx;
      if (sy < 0 || sy >= out.height || sx < 0 || sx >= out.width) {
        throw ParseError(ParseErrorKind::kCorruptReference,
                         "vector (" + std::to_string(mv.dx) + "," + std::to_string(mv.dy) +
                             ") leaves the frame at pixel (" + std::to_string(x) + "," + std::to_string(y) + ")");
      }
      for (int z = 0; z < 3; ++z) {
        const int v = static_cast<int>(i_frame.at(sy, sx, z)) + residual.at(y, x, z);
        if (v < 0 || v > 255)
          throw ParseError(ParseErrorKind::kCorruptReference, "reconstructed value " + std::to_string(v));
        out.at(y, x, z) = static_cast<std::uint8_t>(v);
      }
    }
  }
  return out;
}

void validate_video(const RawVideo& video, const CodecConfig& config) {
  config.validate();
  if (video.frames.empty()) throw InvalidArgument("video has no frames");
  if (video.height <= 0 || video.width <= 0) throw InvalidArgument("video has empty dimensions");
  const int b = config.block_size;
  if (video.height % b != 0 || video.width % b != 0) {
    throw InvalidArgument("frame size " + dims(video.height, video.width) + " is not a multiple of block size " +
                          std::to_string(b));
  }
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    const Frame& f = video.frames[i];
    if (f.height != video.height || f.width != video.width ||
        f.pixels.size() != static_cast<std::size_t>(f.height) * f.width * 3) {
      throw InvalidArgument("frame " + std::to_string(i) + " does not match video size " +
                            dims(video.height, video.width));
    }
  }
}

Bitstream encode_video(const RawVideo& video, const CodecConfig& config) {
  validate_video(video, config);
  Bitstream bs;
  bs.height = video.height;
  bs.width = video.width;
  bs.config = config;
  const std::size_t n = static_cast<std::size_t>(config.gop_len);
  for (std::size_t start = 0; start < video.frames.size(); start += n) {
    Gop gop;
    gop.i_frame = video.frames[start];
    const std::size_t end = std::min(video.frames.size(), start + n);
    for (std::size_t i = start + 1; i < end; ++i) {
      PFrame p;
      p.motion = estimate_motion(gop.i_frame, video.frames[i], config);
      p.residual = compute_residual(gop.i_frame, video.frames[i], p.motion, config.block_size);
      gop.p_frames.push_back(std::move(p));
    }
    bs.gops.push_back(std::move(gop));
  }
  return bs;
}

RawVideo decode_video(const Bitstream& bs) {
  RawVideo video;
  video.height = bs.height;
  video.width = bs.width;
  video.frames.reserve(bs.frame_count());
  for (const Gop& gop : bs.gops) {
    video.frames.push_back(gop.i_frame);
    for (const PFrame& p : gop.p_frames)
      video.frames.push_back(reconstruct_frame(gop.i_frame, p.motion, p.residual, bs.config.block_size));
  }
  return video;
}

std::vector<std::uint8_t> serialize(const Bitstream& bs) {
  ByteWriter w;
  w.put_bytes(std::string_view(kBitstreamMagic, 4));
  w.put<std::uint16_t>(kBitstreamVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(bs.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(bs.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(bs.frame_count()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(bs.config.gop_len));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(bs.config.block_size));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(bs.config.search_range));
  for (const Gop& gop : bs.gops) {
    w.put_bytes(gop.i_frame.pixels);
    for (const PFrame& p : gop.p_frames) {
      for (const MotionVector& mv : p.motion.vectors) {
        w.put<std::int8_t>(static_cast<std::int8_t>(mv.dx));
        w.put<std::int8_t>(static_cast<std::int8_t>(mv.dy));
      }
      for (std::int16_t v : p.residual.values) w.put<std::int16_t>(v);
    }
  }
  return w.take();
}

Bitstream parse(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) !=
                              std::string_view(kBitstreamMagic, 4)) {
    throw ParseError(ParseErrorKind::kBadMagic, "expected 'TTPV'");
  }
  r.get_bytes(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kBitstreamVersion)
    throw ParseError(ParseErrorKind::kUnsupportedVersion, "version " + std::to_string(version));

  Bitstream bs;
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  const auto frame_count = r.get<std::uint32_t>();
  bs.config.gop_len = r.get<std::uint16_t>();
  bs.config.block_size = r.get<std::uint16_t>();
  bs.config.search_range = r.get<std::uint16_t>();
  try {
    bs.config.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(ParseErrorKind::kInvalidHeader, e.what());
  }
  constexpr std::uint32_t kMaxDim = 1u << 15;
  const int b = bs.config.block_size;
  if (h == 0 || w == 0 || h > kMaxDim || w > kMaxDim || h % b != 0 || w % b != 0 || frame_count == 0) {
    throw ParseError(ParseErrorKind::kInvalidHeader,
                     "dimensions " + std::to_string(h) + "x" + std::to_string(w) + ", " +
                         std::to_string(frame_count) + " frames, block " + std::to_string(b));
  }
  bs.height = static_cast<int>(h);
  bs.width = static_cast<int>(w);

  const std::size_t frame_bytes = static_cast<std::size_t>(h) * w * 3;
  const int s = bs.config.search_range;
  std::size_t remaining = frame_count;
  while (remaining > 0) {
    Gop gop;
    gop.i_frame = Frame(bs.height, bs.width);
    auto raw = r.get_bytes(frame_bytes);
    std::copy(raw.begin(), raw.end(), gop.i_frame.pixels.begin());
    const std::size_t gop_frames = std::min<std::size_t>(remaining, bs.config.gop_len);
    for (std::size_t i = 1; i < gop_frames; ++i) {
      PFrame p;
      p.motion = MvGrid(bs.height / b, bs.width / b);
      for (MotionVector& mv : p.motion.vectors) {
        mv.dx = r.get<std::int8_t>();
        mv.dy = r.get<std::int8_t>();
        if (std::abs(mv.dx) > s || std::abs(mv.dy) > s) {
          throw ParseError(ParseErrorKind::kMvOutOfRange, "(" + std::to_string(mv.dx) + "," +
                                                              std::to_string(mv.dy) + ") exceeds search range " +
                                                              std::to_string(s));
        }
      }
      p.residual = ResidualFrame(bs.height, bs.width);
      for (std::int16_t& v : p.residual.values) v = r.get<std::int16_t>();
      gop.p_frames.push_back(std::move(p));
    }
    remaining -= gop_frames;
    bs.gops.push_back(std::move(gop));
  }
  if (!r.at_end())
    throw ParseError(ParseErrorKind::kTrailingData, std::to_string(r.remaining()) + " bytes after last GOP");
  return bs;
}

}  // namespace ttp::codec
