#include "ttp/features.hpp"

#include <cmath>
#include <string>

#include "ttp/error.hpp"

namespace ttp::features {

ExtractorParams ExtractorParams::zeros(int in_channels, int patch, int width) {
  if (in_channels < 1 || patch < 1 || width < 1) throw InvalidArgument("extractor dimensions must be positive");
  ExtractorParams p;
  p.in_channels = in_channels;
  p.patch = patch;
  p.width = width;
  p.proj = Matrix::Zero(width, patch * patch * in_channels);
  p.bias1 = Vector::Zero(width);
  p.mix = Matrix::Zero(width, width);
  p.bias2 = Vector::Zero(width);
  return p;
}

ExtractorParams ExtractorParams::random(int in_channels, int patch, int width, Rng& rng) {
  ExtractorParams p = zeros(in_channels, patch, width);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(p.patch_dim()));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(width));
  fill_uniform(p.proj, a1, rng);
  fill_uniform(p.bias1, a1, rng);
  fill_uniform(p.mix, a2, rng);
  fill_uniform(p.bias2, a2, rng);
  return p;
}

std::vector<ParamRef> ExtractorParams::params(const std::string& prefix) {
  return {param_ref(prefix + ".proj", proj), param_ref(prefix + ".bias1", bias1), param_ref(prefix + ".mix", mix),
          param_ref(prefix + ".bias2", bias2)};
}

int num_positions(int height, int width, int patch) { return (height / patch) * (width / patch); }

Matrix im2patches(const Tensor3& image, int patch) {
  const int cols = image.width / patch;
  const int k_total = num_positions(image.height, image.width, patch);
  const int ch = image.channels;
  Matrix out(patch * patch * ch, k_total);
  for (int k = 0; k < k_total; ++k) {
    const int y0 = (k / cols) * patch;
    const int x0 = (k % cols) * patch;
    double* dst = out.col(k).data();
    for (int dy = 0; dy < patch; ++dy) {
      const double* src = &image.data[(static_cast<std::size_t>(y0 + dy) * image.width + x0) * ch];
      std::copy(src, src + static_cast<std::size_t>(patch) * ch, dst + static_cast<std::size_t>(dy) * patch * ch);
    }
  }
  return out;
}

Tensor3 patches2im(const Matrix& patches, int height, int width, int channels, int patch) {
  Tensor3 out(height, width, channels);
  const int cols = width / patch;
  for (Eigen::Index k = 0; k < patches.cols(); ++k) {
    const int y0 = static_cast<int>(k / cols) * patch;
    const int x0 = static_cast<int>(k % cols) * patch;
    const double* src = patches.col(k).data();
    for (int dy = 0; dy < patch; ++dy) {
      double* dst = &out.data[(static_cast<std::size_t>(y0 + dy) * width + x0) * channels];
      std::copy(src + static_cast<std::size_t>(dy) * patch * channels,
                src + static_cast<std::size_t>(dy + 1) * patch * channels, dst);
    }
  }
  return out;
}

FeatureMap extract_features(const Tensor3& image, const ExtractorParams& params, ExtractorCache* cache) {
  const int p = params.patch;
  if (image.channels != params.in_channels) {
    throw ShapeError("extractor expects " + std::to_string(params.in_channels) + " channels, got " +
                     std::to_string(image.channels));
  }
  if (image.height <= 0 || image.width <= 0 || image.height % p != 0 || image.width % p != 0) {
    throw ShapeError("image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                     " is not a multiple of patch size " + std::to_string(p));
  }
  Matrix patches = im2patches(image, p);
  Matrix hidden = params.proj * patches;
  hidden.colwise() += params.bias1;
  hidden = hidden.cwiseMax(0.0);
  FeatureMap out = params.mix * hidden;
  out.colwise() += params.bias2;
  if (cache != nullptr) {
    cache->filled = true;
    cache->height = image.height;
    cache->width = image.width;
    cache->patches = std::move(patches);
    cache->hidden = std::move(hidden);
  }
  return out;
}

ExtractorGrads extract_features_backward(const Matrix& grad_out, const ExtractorCache& cache,
                                         const ExtractorParams& params, bool want_input_grad) {
  if (!cache.filled) throw StaleCacheError("extractor backward called without a forward cache");
  if (cache.hidden.rows() != params.width || cache.patches.rows() != params.patch_dim() ||
      grad_out.rows() != cache.hidden.rows() || grad_out.cols() != cache.hidden.cols()) {
    throw StaleCacheError("extractor cache does not match parameters or upstream gradient");
  }
  ExtractorGrads g;
  g.mix.noalias() = grad_out * cache.hidden.transpose();
  g.bias2 = grad_out.rowwise().sum();
  Matrix grad_pre = params.mix.transpose() * grad_out;
  grad_pre = grad_pre.cwiseProduct((cache.hidden.array() > 0.0).cast<double>().matrix());
  g.proj.noalias() = grad_pre * cache.patches.transpose();
  g.bias1 = grad_pre.rowwise().sum();
  if (want_input_grad) {
    const Matrix grad_patches = params.proj.transpose() * grad_pre;
    g.input = patches2im(grad_patches, cache.height, cache.width, params.in_channels, params.patch);
  }
  return g;
}

}  // namespace ttp::features
