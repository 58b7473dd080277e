#pragma once

#include <cstddef>
#include <vector>

#include "ttp/codec.hpp"
#include "ttp/rng.hpp"
#include "ttp/tensor.hpp"

namespace ttp::modalities {

/// Normalized compressed-domain tensors of one GOP. I and R lie in [0, 1],
/// MV in [-1, 1].
struct SegmentModalities {
  Tensor3 i_frame;                     // h x w x 3
  std::vector<Tensor3> mv_frames;       // h x w x 2 each
  std::vector<Tensor3> residual_frames;  // h x w x 3 each
  std::size_t index = 0;

  std::size_t num_p_frames() const { return mv_frames.size(); }
};

/// One network input: the current segment's I-frame, one (MV, R) pair from
/// the same P-frame, and the I-frame of the neighbor segment t + delta_t.
struct TrainingInstance {
  Tensor3 i_t;
  Tensor3 mv_t;
  Tensor3 r_t;
  Tensor3 i_neighbor;
  int delta_t = 0;  // effective offset; 0 only for single-segment videos
  int label = 0;
  std::size_t segment = 0;
  std::size_t p_frame = 0;
};

Tensor3 normalize_i_frame(const codec::Frame& f);
Tensor3 normalize_residual(const codec::ResidualFrame& r);
/// Expands the block grid to a dense per-pixel map divided by s (zero when s == 0).
Tensor3 expand_motion(const codec::MvGrid& grid, int block_size, int search_range);

SegmentModalities extract_segment(const codec::Bitstream& bs, std::size_t gop_index);
std::vector<SegmentModalities> extract_modalities(const codec::Bitstream& bs);

/// Neighbor offset after clamping into [0, num_segments - 1].
int clamp_delta(std::size_t t, int proposed, std::size_t num_segments);

/// Training-time sampling: uniform P-frame, delta_t uniform in {-1, +1} then
/// clamped. Throws NoPFramesError if segment t has no P-frames.
TrainingInstance sample_training_instance(const std::vector<SegmentModalities>& segments, std::size_t t,
                                          Rng& rng, int label = 0);

/// Test-time sampling: `count` segments uniformly with replacement, or every
/// segment exactly once when count >= the number of eligible segments.
/// delta_t is +1 for segment 0 and -1 otherwise; the P-frame is the middle one.
std::vector<TrainingInstance> sample_test_instances(const std::vector<SegmentModalities>& segments,
                                                    std::size_t count, Rng& rng, int label = 0);

/// Segments usable as instances (at least one P-frame).
std::vector<std::size_t> eligible_segments(const std::vector<SegmentModalities>& segments);

/// Flips every tensor of the instance and negates the MV x channel.
TrainingInstance flip_instance(const TrainingInstance& inst);

}  // namespace ttp::modalities
