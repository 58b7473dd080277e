#include <fstream>
#include <iterator>

#include "ttp/binary_io.hpp"
#include "ttp/error.hpp"

namespace ttp {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kBadMagic:
      return "bad magic";
    case ParseErrorKind::kUnsupportedVersion:
      return "unsupported version";
    case ParseErrorKind::kTruncated:
      return "truncated stream";
    case ParseErrorKind::kInvalidHeader:
      return "invalid header";
    case ParseErrorKind::kMvOutOfRange:
      return "motion vector out of range";
    case ParseErrorKind::kCorruptReference:
      return "corrupt reference";
    case ParseErrorKind::kTrailingData:
      return "trailing data";
  }
  return "parse error";
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace ttp
