#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ttp/cli.hpp"
#include "ttp/codec.hpp"
#include "ttp/error.hpp"
#include "ttp/fusion.hpp"
#include "ttp/modalities.hpp"
#include "ttp/synthdata.hpp"
#include "ttp/training.hpp"

namespace py = pybind11;
using namespace ttp;

namespace {

using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

codec::RawVideo video_from_array(const ByteArray& frames) {
  if (frames.ndim() != 4 || frames.shape(3) != 3) throw InvalidArgument("expected a (frames, height, width, 3) array");
  codec::RawVideo v;
  v.height = static_cast<int>(frames.shape(1));
  v.width = static_cast<int>(frames.shape(2));
  const std::size_t frame_bytes = static_cast<std::size_t>(v.height) * v.width * 3;
  const std::uint8_t* src = frames.data();
  for (py::ssize_t f = 0; f < frames.shape(0); ++f) {
    codec::Frame fr(v.height, v.width);
    std::copy(src + f * frame_bytes, src + (f + 1) * frame_bytes, fr.pixels.begin());
    v.frames.push_back(std::move(fr));
  }
  return v;
}

py::array_t<std::uint8_t> video_to_array(const codec::RawVideo& v) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(v.frames.size()), static_cast<py::ssize_t>(v.height),
                                 static_cast<py::ssize_t>(v.width), py::ssize_t{3}});
  std::uint8_t* dst = out.mutable_data();
  for (const auto& f : v.frames) dst = std::copy(f.pixels.begin(), f.pixels.end(), dst);
  return out;
}

py::array_t<double> tensor_to_array(const Tensor3& t) {
  py::array_t<double> out({t.height, t.width, t.channels});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

std::span<const std::uint8_t> as_span(const py::bytes& data) {
  const std::string_view view(data);
  return {reinterpret_cast<const std::uint8_t*>(view.data()), view.size()};
}

codec::CodecConfig make_codec(int gop_len, int block_size, int search_range) {
  codec::CodecConfig c{gop_len, block_size, search_range};
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_ttp, m) {
  m.doc() = "Compressed-domain video codec and trilinear fusion primitives";

  static py::exception<Error> error(m, "Error");
  static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      py::set_error(parse_error, e.what());
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def(
      "encode",
      [](const ByteArray& frames, int gop_len, int block_size, int search_range) {
        const auto bytes = codec::serialize(codec::encode_video(video_from_array(frames),
                                                                make_codec(gop_len, block_size, search_range)));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("frames"), py::arg("gop_len") = 12, py::arg("block_size") = 8, py::arg("search_range") = 8,
      "Encode a uint8 (frames, height, width, 3) array into a TTPV bitstream.");

  m.def(
      "decode", [](const py::bytes& data) { return video_to_array(codec::decode_video(codec::parse(as_span(data)))); },
      py::arg("data"), "Decode a TTPV bitstream into a uint8 (frames, height, width, 3) array.");

  m.def(
      "modalities",
      [](const py::bytes& data) {
        py::list out;
        for (const auto& seg : modalities::extract_modalities(codec::parse(as_span(data)))) {
          py::dict d;
          d["i_frame"] = tensor_to_array(seg.i_frame);
          py::list mv, r;
          for (const auto& t : seg.mv_frames) mv.append(tensor_to_array(t));
          for (const auto& t : seg.residual_frames) r.append(tensor_to_array(t));
          d["mv"] = mv;
          d["residual"] = r;
          out.append(d);
        }
        return out;
      },
      py::arg("data"), "Normalized I, MV and residual tensors of every segment.");

  m.def(
      "synthetic_video",
      [](int label, int index, std::uint64_t seed, int noise) {
        synth::SynthConfig cfg;
        cfg.seed = seed;
        cfg.noise = noise;
        cfg.validate(codec::CodecConfig{});
        return video_to_array(synth::render_video(cfg, label, index, Split::kTrain).video);
      },
      py::arg("label"), py::arg("index") = 0, py::arg("seed") = 42, py::arg("noise") = synth::SynthConfig{}.noise,
      "Render one video of the default synthetic benchmark.");

  m.def("mfb", &fusion::mfb, py::arg("x"), py::arg("y"), py::arg("U"), py::arg("V"), py::arg("d"));
  m.def("trilinear_pool", &fusion::trilinear_pool, py::arg("x"), py::arg("y"), py::arg("z"), py::arg("U"),
        py::arg("V"), py::arg("W"), py::arg("d"));
  m.def("trilinear_pool_maps", &fusion::trilinear_pool_maps, py::arg("X"), py::arg("Y"), py::arg("Z"), py::arg("U"),
        py::arg("V"), py::arg("W"), py::arg("d"));
  m.def(
      "signed_sqrt_l2", [](const Vector& f) { return fusion::signed_sqrt_l2(f).values; }, py::arg("f"));
  m.def(
      "cross_entropy", [](const Vector& scores, int label) { return training::cross_entropy(scores, label); },
      py::arg("scores"), py::arg("label"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the `ttp` command line in-process; returns (exit_code, stdout, stderr).");
}
