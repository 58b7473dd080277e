#include "ttp/tensor.hpp"

#include "ttp/binary_io.hpp"
#include "ttp/error.hpp"

namespace ttp {

Tensor3 flip_horizontal(const Tensor3& t) {
  Tensor3 out(t.height, t.width, t.channels);
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x)
      for (int c = 0; c < t.channels; ++c) out.at(y, t.width - 1 - x, c) = t.at(y, x, c);
  return out;
}

std::vector<std::uint8_t> dump_tensor(const Tensor3& t) {
  ByteWriter w;
  w.put<std::uint8_t>(3);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.channels));
  for (double v : t.data) w.put<float>(static_cast<float>(v));
  return w.take();
}

Tensor3 load_tensor_dump(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto rank = r.get<std::uint8_t>();
  if (rank != 3) throw ParseError(ParseErrorKind::kInvalidHeader, "tensor dump rank " + std::to_string(rank));
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  const auto c = r.get<std::uint32_t>();
  if (static_cast<std::size_t>(h) * w * c * 4 != r.remaining())
    throw ParseError(ParseErrorKind::kTruncated, "tensor dump payload size mismatch");
  Tensor3 t(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (double& v : t.data) v = r.get<float>();
  return t;
}

}  // namespace ttp
