#include "ttp/checkpoint.hpp"

#include <string_view>

#include "ttp/binary_io.hpp"
#include "ttp/error.hpp"

namespace ttp {

std::vector<std::uint8_t> serialize_checkpoint(const std::vector<NamedTensor>& tensors) {
  ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);
  for (const auto& t : tensors) {
    if (t.name.size() > 0xFFFF) throw InvalidArgument("tensor name too long");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes(t.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    std::size_t count = 1;
    for (auto d : t.dims) {
      w.put<std::uint32_t>(d);
      count *= d;
    }
    if (count != t.values.size()) throw ShapeError("tensor '" + t.name + "' dims do not match its data");
    for (float v : t.values) w.put<float>(v);
  }
  return w.take();
}

std::vector<NamedTensor> parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) !=
                              std::string_view(kCheckpointMagic, 4)) {
    throw ParseError(ParseErrorKind::kBadMagic, "expected 'TTPW'");
  }
  ByteReader r(bytes);
  r.get_bytes(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion)
    throw ParseError(ParseErrorKind::kUnsupportedVersion, "checkpoint version " + std::to_string(version));
  std::vector<NamedTensor> out;
  while (!r.at_end()) {
    NamedTensor t;
    const auto name_len = r.get<std::uint16_t>();
    const auto name = r.get_bytes(name_len);
    t.name.assign(name.begin(), name.end());
    const auto rank = r.get<std::uint8_t>();
    std::size_t count = 1;
    for (int i = 0; i < rank; ++i) {
      t.dims.push_back(r.get<std::uint32_t>());
      count *= t.dims.back();
    }
    if (count * sizeof(float) > r.remaining())
      throw ParseError(ParseErrorKind::kTruncated, "tensor '" + t.name + "' payload");
    t.values.resize(count);
    for (float& v : t.values) v = r.get<float>();
    out.push_back(std::move(t));
  }
  return out;
}

NamedTensor to_named_tensor(const ParamRef& ref) {
  NamedTensor t;
  t.name = ref.name;
  if (ref.is_vector) {
    t.dims = {static_cast<std::uint32_t>(ref.rows)};
  } else {
    t.dims = {static_cast<std::uint32_t>(ref.rows), static_cast<std::uint32_t>(ref.cols)};
  }
  t.values.reserve(static_cast<std::size_t>(ref.size()));
  // Column-major storage written out row-major.
  for (Eigen::Index i = 0; i < ref.rows; ++i)
    for (Eigen::Index j = 0; j < ref.cols; ++j) t.values.push_back(static_cast<float>(ref.data[j * ref.rows + i]));
  return t;
}

void assign_from(const NamedTensor& tensor, const ParamRef& ref) {
  const bool shape_ok = ref.is_vector ? (tensor.dims.size() == 1 && tensor.dims[0] == ref.rows)
                                      : (tensor.dims.size() == 2 && tensor.dims[0] == ref.rows &&
                                         tensor.dims[1] == ref.cols);
  if (!shape_ok) throw ShapeError("checkpoint tensor '" + tensor.name + "' has the wrong shape for " + ref.name);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < ref.rows; ++i)
    for (Eigen::Index j = 0; j < ref.cols; ++j) ref.data[j * ref.rows + i] = tensor.values[k++];
}

}  // namespace ttp
