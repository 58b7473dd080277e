#include "ttp/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <ostream>

#include "ttp/binary_io.hpp"
#include "ttp/config.hpp"
#include "ttp/error.hpp"
#include "ttp/synthdata.hpp"
#include "ttp/training.hpp"

namespace ttp::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kRawMagic = 0x52505454;  // "TTPR"

// Carries an exit code through the command functions.
struct CommandError : Error {
  CommandError(int code, const std::string& message) : Error(message), code(code) {}
  int code;
};

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string require(const std::string& value, const char* key) {
  if (value.empty()) throw InvalidArgument(std::string("missing --") + key);
  return value;
}

Dataset require_dataset(const RunConfig& config) {
  if (!fs::exists(fs::path(config.dataset_dir) / "manifest.txt"))
    throw CommandError(kMissingDataset, "no dataset at '" + config.dataset_dir + "' (run gen-data first)");
  return load_dataset_dir(config.dataset_dir);
}

training::Model require_checkpoint(const RunConfig& config) {
  if (!fs::exists(config.checkpoint))
    throw CommandError(kMissingCheckpoint, "no checkpoint at '" + config.checkpoint + "' (run train first)");
  return training::load_model(read_file(config.checkpoint));
}

std::string accuracy_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void cmd_encode(const RunConfig& config, std::ostream& out) {
  const auto raw = parse_raw_video(read_file(require(config.input, "input")));
  const auto bs = codec::encode_video(raw, config.codec);
  const auto bytes = codec::serialize(bs);
  write_file(require(config.output, "output"), bytes);
  out << "encoded " << raw.frames.size() << " frames (" << raw.width << "x" << raw.height << ") into "
      << bytes.size() << " bytes\n";
}

void cmd_decode(const RunConfig& config, std::ostream& out) {
  const auto bs = codec::parse(read_file(require(config.input, "input")));
  const auto raw = codec::decode_video(bs);
  write_file(require(config.output, "output"), serialize_raw_video(raw));
  out << "decoded " << raw.frames.size() << " frames\n";
}

void cmd_gen_data(const RunConfig& config, std::ostream& out) {
  const auto videos = synth::generate_dataset(config.synth, config.codec);
  const Dataset ds =
      synth::encode_dataset(videos, static_cast<int>(config.synth.classes.size()), config.codec, config.train.threads);
  synth::write_dataset_dir(ds, config.dataset_dir);
  out << "wrote " << ds.size() << " videos (" << ds.train.size() << " train, " << ds.val.size() << " val, "
      << ds.test.size() << " test) to " << config.dataset_dir << "\n";
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  const Dataset ds = require_dataset(config);
  const training::Variant v = training::parse_variant(config.variant);
  training::Stage1Result s1 = training::train_stage1(ds, config.train);
  std::vector<training::EpochRecord> log = s1.log;
  training::Model model = std::move(s1.model);
  double val = 0.0;
  if (training::is_fused(v)) {
    training::Stage2Result s2 = training::train_stage2(ds, model, v, config.train);
    log.insert(log.end(), s2.log.begin(), s2.log.end());
    model = std::move(s2.model);
    val = s2.val_accuracy;
  } else {
    model.variant = v;
    val = ds.val.empty() ? 0.0 : training::evaluate(model, ds.val, v, config.train);
  }
  write_file(config.checkpoint, training::save_model(model));
  write_text(config.train_log, training::format_log(log));
  out << "variant=" << training::to_string(v) << " val_top1=" << accuracy_text(val) << "\n";
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
  const training::Model model = require_checkpoint(config);
  const Dataset ds = require_dataset(config);
  const double acc = training::evaluate(model, ds.test, model.variant, config.train);
  out << "variant=" << training::to_string(model.variant) << " top1=" << accuracy_text(acc) << "\n";
}

void cmd_ablate(const RunConfig& config, std::ostream& out) {
  const Dataset ds = require_dataset(config);
  const training::AblationReport report = training::run_ablation(ds, config.train);
  const std::string table = training::format_report_table(report);
  write_text(config.ablation_report, table);
  write_text(config.ablation_kv, training::format_report_kv(report));
  write_text(config.ablation_log, training::format_log(report.log));
  out << table;
}

void cmd_bench(const RunConfig& config, std::ostream& out) {
  training::Model model;
  if (fs::exists(config.checkpoint)) {
    model = training::load_model(read_file(config.checkpoint));
  } else {
    Rng rng(config.train.seed);
    model = training::Model::create(config.train, static_cast<int>(config.synth.classes.size()), rng);
    const training::Variant v = training::parse_variant(config.variant);
    if (training::is_fused(v))
      model.init_fusion(v, rng);
    else
      model.variant = v;
  }
  std::vector<std::uint8_t> bytes;
  if (!config.input.empty()) {
    bytes = read_file(config.input);
  } else {
    const auto video = synth::render_video(config.synth, 0, 0, Split::kTest);
    bytes = codec::serialize(codec::encode_video(video.video, config.codec));
  }
  const auto report = training::bench(model, bytes, config.warmup, config.iters, model.variant, config.train);
  const std::string table = training::format_bench_table(report);
  write_text(config.bench_report, table);
  write_text(config.bench_kv, training::format_bench_kv(report));
  out << table;
}

RunConfig build_config(const std::string& config_path, const std::vector<std::string>& extras) {
  RunConfig config = config_path.empty() ? RunConfig{} : load_config_file(config_path);
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw InvalidArgument("unexpected argument '" + arg + "'");
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      config.set(arg.substr(2, eq - 2), arg.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw InvalidArgument("missing value for " + arg);
      config.set(arg.substr(2), extras[++i]);
    }
  }
  config.validate();
  return config;
}

}  // namespace

std::vector<std::uint8_t> serialize_raw_video(const codec::RawVideo& video) {
  if (video.frames.empty()) throw InvalidArgument("raw video has no frames");
  for (const auto& f : video.frames)
    if (f.height != video.height || f.width != video.width ||
        f.pixels.size() != static_cast<std::size_t>(video.height) * video.width * 3)
      throw ShapeError("raw video frames differ in size");
  ByteWriter w;
  w.put<std::uint32_t>(kRawMagic);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(video.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(video.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(video.frames.size()));
  for (const auto& f : video.frames) w.put_bytes(f.pixels);
  return w.take();
}

codec::RawVideo parse_raw_video(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get<std::uint32_t>() != kRawMagic) throw ParseError(ParseErrorKind::kBadMagic, "not a raw TTPR video");
  const std::uint32_t h = r.get<std::uint32_t>();
  const std::uint32_t w = r.get<std::uint32_t>();
  const std::uint32_t n = r.get<std::uint32_t>();
  if (h == 0 || w == 0 || n == 0 || h > 65535 || w > 65535)
    throw ParseError(ParseErrorKind::kInvalidHeader, "raw video dimensions out of range");
  const std::size_t frame_bytes = static_cast<std::size_t>(h) * w * 3;
  if (r.remaining() / frame_bytes < n) throw ParseError(ParseErrorKind::kTruncated, "raw video frames");
  codec::RawVideo video;
  video.height = static_cast<int>(h);
  video.width = static_cast<int>(w);
  for (std::uint32_t i = 0; i < n; ++i) {
    codec::Frame f(video.height, video.width);
    const auto src = r.get_bytes(frame_bytes);
    std::copy(src.begin(), src.end(), f.pixels.begin());
    video.frames.push_back(std::move(f));
  }
  if (!r.at_end()) throw ParseError(ParseErrorKind::kTrailingData, "bytes after the last raw frame");
  return video;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed-domain video codec and action-recognition trainer", "ttp"};
  app.require_subcommand(1);
  std::string config_path;
  using Command = void (*)(const RunConfig&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"encode", "Encode a raw TTPR video (--input, --output) into a bitstream", cmd_encode},
      {"decode", "Decode a bitstream (--input) into a raw TTPR video (--output)", cmd_decode},
      {"gen-data", "Generate the synthetic dataset into dataset_dir", cmd_gen_data},
      {"train", "Train `variant` on dataset_dir and write checkpoint and train_log", cmd_train},
      {"eval", "Print test top-1 accuracy of checkpoint on dataset_dir", cmd_eval},
      {"ablate", "Train and evaluate all seven variants; write the ablation report", cmd_ablate},
      {"bench", "Time preprocessing and the network forward pass per frame", cmd_bench},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value config file");
    sub->allow_extras();
    sub->footer("Any config key may be overridden with --key value.");
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    try {
      const RunConfig config = build_config(config_path, subs[k]->remaining());
      std::get<2>(commands[k])(config, out);
      return kOk;
    } catch (const CommandError& e) {
      err << "error: " << e.what() << "\n";
      return e.code;
    } catch (const NumericError& e) {
      err << "diverged: " << e.what() << "\n";
      return kDiverged;
    } catch (const ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kParse;
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
  }
  return kUsage;
}

}  // namespace ttp::cli
