#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ttp {

/// Dense h x w x ch real image, row-major, channel-last.
struct Tensor3 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int h, int w, int ch, double fill = 0.0)
      : height(h), width(w), channels(ch), data(static_cast<std::size_t>(h) * w * ch, fill) {}

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

/// Mirror around the vertical axis.
Tensor3 flip_horizontal(const Tensor3& t);

/// Debug dump: rank u8, dims u32 each, then f32 little-endian values.
std::vector<std::uint8_t> dump_tensor(const Tensor3& t);
Tensor3 load_tensor_dump(std::span<const std::uint8_t> bytes);

}  // namespace ttp
