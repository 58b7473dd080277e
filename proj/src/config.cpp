#include "ttp/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "ttp/binary_io.hpp"
#include "ttp/error.hpp"

namespace ttp {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw InvalidArgument(key + ": expected an integer, got '" + value + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw InvalidArgument(key + ": expected a number, got '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw InvalidArgument(key + ": expected true or false, got '" + value + "'");
}

std::vector<synth::MotionPattern> parse_classes(const std::string& value) {
  std::vector<synth::MotionPattern> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(synth::parse_motion_pattern(trim(item)));
  if (out.empty()) throw InvalidArgument("classes: empty list");
  return out;
}

std::string join_classes(const std::vector<synth::MotionPattern>& classes) {
  std::string out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i > 0) out += ',';
    out += synth::to_string(classes[i]);
  }
  return out;
}

std::string real_text(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define TTP_INT_FIELD(name, member)                                                                              \
  {                                                                                                              \
    name, Field {                                                                                                \
      [](RunConfig& c, const std::string& k, const std::string& v) {                                             \
        c.member = parse_integer<std::decay_t<decltype(c.member)>>(k, v);                                        \
      },                                                                                                         \
          [](const RunConfig& c) { return std::to_string(c.member); }                                            \
    }                                                                                                            \
  }
#define TTP_REAL_FIELD(name, member)                                                                             \
  {                                                                                                              \
    name, Field {                                                                                                \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_real(k, v); },             \
          [](const RunConfig& c) { return real_text(c.member); }                                                 \
    }                                                                                                            \
  }
#define TTP_BOOL_FIELD(name, member)                                                                             \
  {                                                                                                              \
    name, Field {                                                                                                \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_bool(k, v); },             \
          [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }                            \
    }                                                                                                            \
  }
#define TTP_STRING_FIELD(name, member)                                                                           \
  {                                                                                                              \
    name, Field {                                                                                                \
      [](RunConfig& c, const std::string&, const std::string& v) { c.member = v; },                              \
          [](const RunConfig& c) { return c.member; }                                                            \
    }                                                                                                            \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      TTP_INT_FIELD("gop_len", codec.gop_len),
      TTP_INT_FIELD("block_size", codec.block_size),
      TTP_INT_FIELD("search_range", codec.search_range),
      {"classes", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.synth.classes = parse_classes(v); },
                        [](const RunConfig& c) { return join_classes(c.synth.classes); }}},
      TTP_INT_FIELD("videos_per_class", synth.videos_per_class),
      TTP_INT_FIELD("frames", synth.frames),
      TTP_INT_FIELD("height", synth.height),
      TTP_INT_FIELD("width", synth.width),
      TTP_INT_FIELD("shape_size", synth.shape_size),
      TTP_INT_FIELD("noise", synth.noise),
      TTP_INT_FIELD("velocity", synth.velocity),
      TTP_REAL_FIELD("color_bias", synth.color_bias),
      {"seed", Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                       c.synth.seed = parse_integer<std::uint64_t>(k, v);
                       c.train.seed = c.synth.seed;
                     },
                     [](const RunConfig& c) { return std::to_string(c.train.seed); }}},
      TTP_REAL_FIELD("stage1_lr", train.stage1_lr),
      TTP_REAL_FIELD("stage2_lr", train.stage2_lr),
      TTP_REAL_FIELD("plateau_factor", train.plateau_factor),
      TTP_INT_FIELD("plateau_patience", train.plateau_patience),
      TTP_INT_FIELD("max_decays", train.max_decays),
      TTP_INT_FIELD("batch_size", train.batch_size),
      TTP_INT_FIELD("stage1_epochs", train.stage1_epochs),
      TTP_INT_FIELD("stage2_epochs", train.stage2_epochs),
      TTP_INT_FIELD("instances_per_video", train.instances_per_video),
      TTP_INT_FIELD("D", train.D),
      TTP_INT_FIELD("d", train.d),
      TTP_INT_FIELD("c", train.c),
      TTP_INT_FIELD("p", train.p),
      TTP_INT_FIELD("eval_segments", train.eval_segments),
      TTP_BOOL_FIELD("flip_augment", train.flip_augment),
      TTP_BOOL_FIELD("skip_stage1", train.skip_stage1),
      TTP_BOOL_FIELD("freeze_extractors", train.freeze_extractors),
      {"normalization",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) {
               if (v == "per_branch")
                 c.train.normalization = fusion::Normalization::kPerBranch;
               else if (v == "after_sum")
                 c.train.normalization = fusion::Normalization::kAfterSum;
               else
                 throw InvalidArgument(k + ": expected per_branch or after_sum, got '" + v + "'");
             },
             [](const RunConfig& c) {
               return std::string(c.train.normalization == fusion::Normalization::kPerBranch ? "per_branch"
                                                                                              : "after_sum");
             }}},
      TTP_INT_FIELD("threads", train.threads),
      TTP_STRING_FIELD("dataset_dir", dataset_dir),
      TTP_STRING_FIELD("checkpoint", checkpoint),
      TTP_STRING_FIELD("train_log", train_log),
      TTP_STRING_FIELD("ablation_report", ablation_report),
      TTP_STRING_FIELD("ablation_kv", ablation_kv),
      TTP_STRING_FIELD("ablation_log", ablation_log),
      TTP_STRING_FIELD("bench_report", bench_report),
      TTP_STRING_FIELD("bench_kv", bench_kv),
      TTP_STRING_FIELD("input", input),
      TTP_STRING_FIELD("output", output),
      TTP_STRING_FIELD("variant", variant),
      TTP_INT_FIELD("warmup", warmup),
      TTP_INT_FIELD("iters", iters),
  };
  return table;
}

#undef TTP_INT_FIELD
#undef TTP_REAL_FIELD
#undef TTP_BOOL_FIELD
#undef TTP_STRING_FIELD

const Field& find_field(const std::string& key) {
  for (const auto& [name, field] : fields())
    if (name == key) return field;
  throw InvalidArgument("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { find_field(key).set(*this, key, value); }

void RunConfig::validate() const {
  codec.validate();
  synth.validate(codec);
  train.validate();
  training::parse_variant(variant);
  if (warmup < 0) throw InvalidArgument("warmup must be >= 0");
  if (iters < 1) throw InvalidArgument("iters must be >= 1");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : fields()) out.push_back(name);
    return out;
  }();
  return keys;
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(number) + ": expected key = value");
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

RunConfig load_config_file(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  RunConfig config;
  apply_config_text(config, std::string(bytes.begin(), bytes.end()));
  return config;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace ttp
