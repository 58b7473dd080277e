#pragma once

#include <optional>
#include <vector>

#include "ttp/linalg.hpp"
#include "ttp/rng.hpp"
#include "ttp/tensor.hpp"

namespace ttp::features {

/// c x K matrix; column k is the feature vector of patch k (row-major patch
/// order).
using FeatureMap = Matrix;

/// Two-layer patch embedding: relu(proj * patch + bias1), then mix * h + bias2.
struct ExtractorParams {
  int in_channels = 0;
  int patch = 0;
  int width = 0;  // c
  Matrix proj;    // c x (p * p * ch)
  Vector bias1;   // c
  Matrix mix;     // c x c
  Vector bias2;   // c

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
  static ExtractorParams random(int in_channels, int patch, int width, Rng& rng);
  static ExtractorParams zeros(int in_channels, int patch, int width);

  ExtractorParams zeros_like() const { return zeros(in_channels, patch, width); }
  std::vector<ParamRef> params(const std::string& prefix);
  int patch_dim() const { return patch * patch * in_channels; }
};

struct ExtractorCache {
  bool filled = false;
  int height = 0;
  int width = 0;
  Matrix patches;  // (p*p*ch) x K
  Matrix hidden;   // c x K, post-ReLU
};

struct ExtractorGrads {
  Matrix proj;
  Vector bias1;
  Matrix mix;
  Vector bias2;
  std::optional<Tensor3> input;
};

/// Number of patch positions for an h x w input.
int num_positions(int height, int width, int patch);

/// Rearranges an image into a (p*p*ch) x K matrix of flattened patches
/// (row-major inside the patch, channel-last).
Matrix im2patches(const Tensor3& image, int patch);
Tensor3 patches2im(const Matrix& patches, int height, int width, int channels, int patch);

/// Throws ShapeError when h or w is not a multiple of p or the channel count
/// differs from the extractor's.
FeatureMap extract_features(const Tensor3& image, const ExtractorParams& params, ExtractorCache* cache = nullptr);

/// Exact gradients of extract_features for upstream gradient grad_out (c x K).
/// Throws StaleCacheError when the cache is empty or sized for another input.
ExtractorGrads extract_features_backward(const Matrix& grad_out, const ExtractorCache& cache,
                                         const ExtractorParams& params, bool want_input_grad = false);

}  // namespace ttp::features
