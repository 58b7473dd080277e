#include "ttp/modalities.hpp"

#include <string>

#include "ttp/error.hpp"

namespace ttp::modalities {

Tensor3 normalize_i_frame(const codec::Frame& f) {
  Tensor3 t(f.height, f.width, 3);
  for (std::size_t i = 0; i < f.pixels.size(); ++i) t.data[i] = f.pixels[i] / 255.0;
  return t;
}

Tensor3 normalize_residual(const codec::ResidualFrame& r) {
  Tensor3 t(r.height, r.width, 3);
  for (std::size_t i = 0; i < r.values.size(); ++i) t.data[i] = (r.values[i] + 255.0) / 510.0;
  return t;
}

Tensor3 expand_motion(const codec::MvGrid& grid, int block_size, int search_range) {
  Tensor3 t(grid.rows * block_size, grid.cols * block_size, 2);
  if (search_range == 0) return t;
  const double scale = 1.0 / search_range;
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      const codec::MotionVector& mv = grid.at(y / block_size, x / block_size);
      t.at(y, x, 0) = mv.dx * scale;
      t.at(y, x, 1) = mv.dy * scale;
    }
  }
  return t;
}

SegmentModalities extract_segment(const codec::Bitstream& bs, std::size_t gop_index) {
  if (gop_index >= bs.gops.size()) throw InvalidArgument("GOP index " + std::to_string(gop_index) + " out of range");
  const codec::Gop& gop = bs.gops[gop_index];
  SegmentModalities seg;
  seg.index = gop_index;
  seg.i_frame = normalize_i_frame(gop.i_frame);
  seg.mv_frames.reserve(gop.p_frames.size());
  seg.residual_frames.reserve(gop.p_frames.size());
  for (const codec::PFrame& p : gop.p_frames) {
    seg.mv_frames.push_back(expand_motion(p.motion, bs.config.block_size, bs.config.search_range));
    seg.residual_frames.push_back(normalize_residual(p.residual));
  }
  return seg;
}

std::vector<SegmentModalities> extract_modalities(const codec::Bitstream& bs) {
  std::vector<SegmentModalities> out;
  out.reserve(bs.gops.size());
  for (std::size_t g = 0; g < bs.gops.size(); ++g) out.push_back(extract_segment(bs, g));
  return out;
}

int clamp_delta(std::size_t t, int proposed, std::size_t num_segments) {
  if (num_segments <= 1) return 0;
  if (t == 0) return 1;
  if (t + 1 == num_segments) return -1;
  return proposed;
}

namespace {

TrainingInstance make_instance(const std::vector<SegmentModalities>& segments, std::size_t t, std::size_t p,
                               int delta, int label) {
  const SegmentModalities& seg = segments[t];
  TrainingInstance inst;
  inst.i_t = seg.i_frame;
  inst.mv_t = seg.mv_frames[p];
  inst.r_t = seg.residual_frames[p];
  inst.delta_t = delta;
  inst.i_neighbor = segments[static_cast<std::size_t>(static_cast<long>(t) + delta)].i_frame;
  inst.label = label;
  inst.segment = t;
  inst.p_frame = p;
  return inst;
}

}  // namespace

std::vector<std::size_t> eligible_segments(const std::vector<SegmentModalities>& segments) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < segments.size(); ++t)
    if (segments[t].num_p_frames() > 0) out.push_back(t);
  return out;
}

TrainingInstance sample_training_instance(const std::vector<SegmentModalities>& segments, std::size_t t,
                                          Rng& rng, int label) {
  if (segments.empty()) throw InvalidArgument("no segments to sample from");
  if (t >= segments.size()) throw InvalidArgument("segment index " + std::to_string(t) + " out of range");
  const SegmentModalities& seg = segments[t];
  if (seg.num_p_frames() == 0) throw NoPFramesError("segment " + std::to_string(t) + " has no P-frames");
  const std::size_t p = rng.uniform_index(seg.num_p_frames());
  const int proposed = rng.coin() ? 1 : -1;
  return make_instance(segments, t, p, clamp_delta(t, proposed, segments.size()), label);
}

std::vector<TrainingInstance> sample_test_instances(const std::vector<SegmentModalities>& segments,
                                                    std::size_t count, Rng& rng, int label) {
  if (count == 0) throw InvalidArgument("test instance count must be >= 1");
  const std::vector<std::size_t> eligible = eligible_segments(segments);
  if (eligible.empty()) throw NoPFramesError("video has no segment with P-frames");

  std::vector<std::size_t> chosen;
  if (count >= eligible.size()) {
    chosen = eligible;
  } else {
    chosen.reserve(count);
    for (std::size_t i = 0; i < count; ++i) chosen.push_back(eligible[rng.uniform_index(eligible.size())]);
  }

  std::vector<TrainingInstance> out;
  out.reserve(chosen.size());
  for (std::size_t t : chosen) {
    const int delta = clamp_delta(t, t == 0 ? 1 : -1, segments.size());
    out.push_back(make_instance(segments, t, segments[t].num_p_frames() / 2, delta, label));
  }
  return out;
}

TrainingInstance flip_instance(const TrainingInstance& inst) {
  TrainingInstance out = inst;
  out.i_t = flip_horizontal(inst.i_t);
  out.i_neighbor = flip_horizontal(inst.i_neighbor);
  out.r_t = flip_horizontal(inst.r_t);
  out.mv_t = flip_horizontal(inst.mv_t);
  for (int y = 0; y < out.mv_t.height; ++y)
    for (int x = 0; x < out.mv_t.width; ++x) out.mv_t.at(y, x, 0) = -out.mv_t.at(y, x, 0);
  return out;
}

}  // namespace ttp::modalities
