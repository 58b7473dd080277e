#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "toy.hpp"
#include "ttp/binary_io.hpp"
#include "ttp/cli.hpp"
#include "ttp/config.hpp"
#include "ttp/error.hpp"

using namespace ttp;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

// Config for a fast end-to-end run inside `dir`.
std::string write_toy_config(const toy::TempDir& dir) {
  const std::string text =
      "# toy run\n"
      "classes = translate_right, translate_down\n"
      "videos_per_class = 5\nframes = 13\nheight = 32\nwidth = 32\nshape_size = 12\nnoise = 4\n"
      "color_bias = 1\nseed = 7\n"
      "c = 8\np = 8\nD = 16\nd = 2\nbatch_size = 4\nstage1_epochs = 1\nstage2_epochs = 1\neval_segments = 3\n"
      "dataset_dir = " + dir / "data" + "\n"
      "checkpoint = " + dir / "model.ttpw" + "\n"
      "train_log = " + dir / "train.log" + "\n"
      "ablation_report = " + dir / "ablation.txt" + "\n"
      "ablation_kv = " + dir / "ablation.kv" + "\n"
      "ablation_log = " + dir / "ablation.log" + "\n"
      "bench_report = " + dir / "bench.txt" + "\n"
      "bench_kv = " + dir / "bench.kv" + "\n";
  const std::string path = dir / "run.cfg";
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return path;
}

}  // namespace

TEST_CASE("config parsing") {
  RunConfig c;
  apply_config_text(c, "  D = 128  # comment\n\nstage2_lr=0.001\nflip_augment = false\nnormalization = after_sum\n");
  CHECK(c.train.D == 128);
  CHECK(c.train.stage2_lr == 0.001);
  CHECK_FALSE(c.train.flip_augment);
  CHECK(c.train.normalization == fusion::Normalization::kAfterSum);

  SUBCASE("seed drives both generation and training") {
    c.set("seed", "9");
    CHECK(c.synth.seed == 9);
    CHECK(c.train.seed == 9);
  }
  SUBCASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(c.set("learning_rate", "0.1"), InvalidArgument);
    CHECK_THROWS_AS(c.set("D", "12x"), InvalidArgument);
    CHECK_THROWS_AS(c.set("stage1_lr", "fast"), InvalidArgument);
    CHECK_THROWS_AS(c.set("flip_augment", "maybe"), InvalidArgument);
    CHECK_THROWS_WITH_AS(apply_config_text(c, "D = 4\nbogus = 1\n"), doctest::Contains("line 2"), InvalidArgument);
    CHECK_THROWS_AS(apply_config_text(c, "no equals sign\n"), InvalidArgument);
  }
  SUBCASE("format_config reproduces the config") {
    c.set("classes", "rotate_clockwise,translate_down");
    RunConfig again;
    apply_config_text(again, format_config(c));
    CHECK(format_config(again) == format_config(c));
    CHECK(again.synth.classes == c.synth.classes);
  }
  SUBCASE("every key has a default") {
    const std::string text = format_config(RunConfig{});
    for (const auto& key : config_keys()) CHECK(text.find(key + " = ") != std::string::npos);
  }
}

TEST_CASE("raw video format") {
  Rng rng(1);
  codec::RawVideo v;
  v.height = 16;
  v.width = 24;
  for (int i = 0; i < 3; ++i) v.frames.push_back(oracle::random_frame(16, 24, rng));
  const auto bytes = cli::serialize_raw_video(v);
  CHECK(bytes.size() == 16 + 3 * 16 * 24 * 3);
  CHECK(cli::parse_raw_video(bytes) == v);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(cli::parse_raw_video(bad), doctest::Contains("bad magic"), ParseError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(cli::parse_raw_video(bad), ParseError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(cli::parse_raw_video(bad), ParseError);
}

TEST_CASE("encode and decode") {
  toy::TempDir dir;
  Rng rng(2);
  codec::RawVideo v;
  v.height = 32;
  v.width = 32;
  for (int i = 0; i < 14; ++i) v.frames.push_back(oracle::random_frame(32, 32, rng));
  const auto raw = cli::serialize_raw_video(v);
  write_file(dir / "in.ttpr", raw);

  const Result enc = run({"encode", "--input", dir / "in.ttpr", "--output", dir / "v.ttpv"});
  REQUIRE(enc.code == cli::kOk);
  const Result dec = run({"decode", "--input", dir / "v.ttpv", "--output=" + dir / "out.ttpr"});
  REQUIRE(dec.code == cli::kOk);
  CHECK(read_file(dir / "out.ttpr") == raw);

  SUBCASE("missing input") {
    const Result r = run({"encode", "--input", dir / "absent.ttpr", "--output", dir / "x.ttpv"});
    CHECK(r.code == cli::kIo);
    CHECK(r.err.find("absent.ttpr") != std::string::npos);
  }
  SUBCASE("corrupt magic") {
    auto bytes = read_file(dir / "v.ttpv");
    bytes[0] ^= 0xFF;
    write_file(dir / "bad.ttpv", bytes);
    const Result r = run({"decode", "--input", dir / "bad.ttpv", "--output", dir / "x.ttpr"});
    CHECK(r.code == cli::kParse);
    CHECK(r.err.find("bad magic") != std::string::npos);
  }
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"gen-data", "--no_such_key", "1"}).code == cli::kUsage);
  CHECK(run({"gen-data", "--D"}).code == cli::kUsage);
  CHECK(run({"bench", "--iters", "0"}).code == cli::kUsage);
  CHECK(run({"encode", "--config", "/nonexistent/run.cfg"}).code == cli::kIo);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("missing prerequisites have distinct exit codes") {
  toy::TempDir dir;
  const std::string cfg = write_toy_config(dir);
  const Result train = run({"train", "--config", cfg});
  CHECK(train.code == cli::kMissingDataset);
  CHECK(train.err.find("dataset") != std::string::npos);
  const Result eval = run({"eval", "--config", cfg});
  CHECK(eval.code == cli::kMissingCheckpoint);
  CHECK(eval.err.find("checkpoint") != std::string::npos);
}

TEST_CASE("gen-data, train, eval, ablate and bench") {
  toy::TempDir dir;
  const std::string cfg = write_toy_config(dir);
  REQUIRE(run({"gen-data", "--config", cfg}).code == cli::kOk);
  CHECK(std::filesystem::exists(dir / "data/manifest.txt"));

  const Result train = run({"train", "--config", cfg, "--variant", "TTP"});
  REQUIRE(train.code == cli::kOk);
  CHECK(std::filesystem::exists(dir / "model.ttpw"));
  const std::string log = slurp(dir / "train.log");
  CHECK(log.find("stage2 TTP 1 ") != std::string::npos);

  const Result eval = run({"eval", "--config", cfg});
  REQUIRE(eval.code == cli::kOk);
  CHECK(eval.out.rfind("variant=TTP top1=", 0) == 0);

  const Result ablate = run({"ablate", "--config", cfg});
  REQUIRE(ablate.code == cli::kOk);
  const std::string kv = slurp(dir / "ablation.kv");
  for (const char* v : {"I=", "MV=", "R=", "I+MV+R=", "BP=", "TP=", "TTP="}) CHECK(kv.find(v) != std::string::npos);
  const std::string table = slurp(dir / "ablation.txt");
  REQUIRE(run({"ablate", "--config", cfg}).code == cli::kOk);
  CHECK(slurp(dir / "ablation.kv") == kv);
  CHECK(slurp(dir / "ablation.txt") == table);

  const Result bench = run({"bench", "--config", cfg, "--iters", "2"});
  REQUIRE(bench.code == cli::kOk);
  const std::string bench_kv = slurp(dir / "bench.kv");
  CHECK(bench_kv.find("preprocess_ms_per_frame=") != std::string::npos);
  CHECK(bench_kv.find("cnn_ms_per_frame=") != std::string::npos);

  SUBCASE("divergence") {
    const Result r = run({"train", "--config", cfg, "--stage1_epochs", "0", "--stage2_lr", "1e300"});
    CHECK(r.code == cli::kDiverged);
    CHECK(r.err.find("diverged") != std::string::npos);
  }
  SUBCASE("corrupt checkpoint") {
    write_file(dir / "model.ttpw", std::vector<std::uint8_t>{1, 2, 3});
    CHECK(run({"eval", "--config", cfg}).code == cli::kParse);
  }
}
