#include "ttp/dataset.hpp"

#include <filesystem>
#include <sstream>

#include "ttp/binary_io.hpp"
#include "ttp/error.hpp"

namespace ttp {

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + text + "'");
}

void Dataset::add(VideoExample example) {
  num_classes = std::max(num_classes, example.label + 1);
  switch (example.split) {
    case Split::kTrain:
      train.push_back(std::move(example));
      break;
    case Split::kVal:
      val.push_back(std::move(example));
      break;
    case Split::kTest:
      test.push_back(std::move(example));
      break;
  }
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  for (const auto& e : entries) out << e.path << ' ' << e.label << ' ' << to_string(e.split) << '\n';
  return out.str();
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    ManifestEntry e;
    std::string split;
    if (!(fields >> e.path >> e.label >> split) || e.label < 0)
      throw InvalidArgument("manifest line " + std::to_string(line_no) + " is malformed: '" + line + "'");
    e.split = parse_split(split);
    entries.push_back(std::move(e));
  }
  return entries;
}

Dataset load_dataset_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest = fs::path(dir) / "manifest.txt";
  const auto raw = read_file(manifest.string());
  const auto entries = parse_manifest(std::string(raw.begin(), raw.end()));
  Dataset ds;
  for (const auto& e : entries) {
    VideoExample ex;
    ex.bitstream = codec::parse(read_file((fs::path(dir) / e.path).string()));
    ex.label = e.label;
    ex.split = e.split;
    ds.add(std::move(ex));
  }
  return ds;
}

}  // namespace ttp
