#include "doctest.h"
#include "oracles.hpp"
#include "ttp/error.hpp"
#include "ttp/features.hpp"

using namespace ttp;
using namespace ttp::features;

namespace {

Tensor3 random_image(int h, int w, int ch, Rng& rng) {
  Tensor3 t(h, w, ch);
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("output shape") {
  Rng rng(20);
  const auto params = ExtractorParams::random(3, 8, 16, rng);
  const FeatureMap f = extract_features(random_image(64, 64, 3, rng), params);
  CHECK(f.rows() == 16);
  CHECK(f.cols() == 64);
  CHECK(num_positions(64, 48, 8) == 48);
}

TEST_CASE("zero image with zero biases gives zero features") {
  Rng rng(21);
  auto params = ExtractorParams::random(2, 4, 8, rng);
  params.bias1.setZero();
  params.bias2.setZero();
  const FeatureMap f = extract_features(Tensor3(8, 8, 2), params);
  CHECK(f.isZero(0.0));
}

TEST_CASE("single patch hand computation") {
  // 2x2x1 image, identity projection, identity mixing.
  Tensor3 img(2, 2, 1);
  img.data = {1.0, -2.0, 3.0, 0.5};
  auto params = ExtractorParams::zeros(1, 2, 4);
  params.proj.setIdentity();
  params.mix.setIdentity();
  params.bias1 << 0.0, 0.0, -1.0, 0.0;
  params.bias2 << 0.1, 0.2, 0.3, 0.4;
  const FeatureMap f = extract_features(img, params);
  REQUIRE(f.cols() == 1);
  // relu(1, -2, 2, 0.5) + bias2
  CHECK(f(0, 0) == doctest::Approx(1.1));
  CHECK(f(1, 0) == doctest::Approx(0.2));
  CHECK(f(2, 0) == doctest::Approx(2.3));
  CHECK(f(3, 0) == doctest::Approx(0.9));
}

TEST_CASE("patch order is row-major with channel-last flattening") {
  Tensor3 img(4, 4, 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i);
  const Matrix patches = im2patches(img, 2);
  REQUIRE(patches.cols() == 4);
  // patch 1 is the top-right 2x2 block: pixels (0,2),(0,3),(1,2),(1,3)
  CHECK(patches(0, 1) == img.at(0, 2, 0));
  CHECK(patches(1, 1) == img.at(0, 2, 1));
  CHECK(patches(2, 1) == img.at(0, 3, 0));
  CHECK(patches(4, 1) == img.at(1, 2, 0));
  CHECK(patches(7, 1) == img.at(1, 3, 1));
  CHECK(patches(0, 2) == img.at(2, 0, 0));
  CHECK(patches2im(patches, 4, 4, 2, 2) == img);
}

TEST_CASE("shape errors") {
  Rng rng(22);
  const auto params = ExtractorParams::random(3, 8, 4, rng);
  CHECK_THROWS_AS(extract_features(Tensor3(12, 16, 3), params), ShapeError);
  CHECK_THROWS_AS(extract_features(Tensor3(16, 16, 2), params), ShapeError);
}

TEST_CASE("backward: zero upstream gradient") {
  Rng rng(23);
  const auto params = ExtractorParams::random(3, 4, 6, rng);
  ExtractorCache cache;
  const FeatureMap f = extract_features(random_image(8, 8, 3, rng), params, &cache);
  const auto g = extract_features_backward(Matrix::Zero(f.rows(), f.cols()), cache, params, true);
  CHECK(g.proj.isZero(0.0));
  CHECK(g.bias1.isZero(0.0));
  CHECK(g.mix.isZero(0.0));
  CHECK(g.bias2.isZero(0.0));
  for (double v : g.input->data) CHECK(v == 0.0);
}

TEST_CASE("backward: bias gradients are row sums") {
  Rng rng(24);
  const auto params = ExtractorParams::random(1, 2, 3, rng);
  ExtractorCache cache;
  const Tensor3 img = random_image(2, 2, 1, rng);
  const FeatureMap f = extract_features(img, params, &cache);
  Matrix G(3, 1);
  G << 0.5, -1.0, 2.0;
  const auto g = extract_features_backward(G, cache, params);
  CHECK(g.bias2.isApprox(G.rowwise().sum()));
  // through the second layer then masked by the ReLU
  Vector expected = params.mix.transpose() * G.col(0);
  for (int i = 0; i < 3; ++i)
    if (cache.hidden(i, 0) <= 0.0) expected(i) = 0.0;
  CHECK((g.bias1 - expected).norm() < 1e-15);
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(25);
  for (int ch : {2, 3}) {
    auto params = ExtractorParams::random(ch, 2, 5, rng);
    Tensor3 img = random_image(4, 6, ch, rng);
    ExtractorCache cache;
    const FeatureMap f0 = extract_features(img, params, &cache);
    Matrix G(f0.rows(), f0.cols());
    for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = rng.uniform(-1, 1);
    auto loss = [&] { return extract_features(img, params).cwiseProduct(G).sum(); };
    const auto g = extract_features_backward(G, cache, params, true);

    auto refs = params.params("x");
    const std::vector<const double*> analytic = {g.proj.data(), g.bias1.data(), g.mix.data(), g.bias2.data()};
    for (std::size_t t = 0; t < refs.size(); ++t) {
      const auto numeric = oracle::central_diff(refs[t].data, refs[t].size(), loss);
      CAPTURE(refs[t].name);
      CHECK(oracle::relative_error(analytic[t], numeric) <= 1e-5);
    }
    const auto numeric_in = oracle::central_diff(img.data.data(), img.data.size(), loss);
    CHECK(oracle::relative_error(g.input->data.data(), numeric_in) <= 1e-5);
  }
}

TEST_CASE("backward detects stale cache") {
  Rng rng(26);
  const auto params = ExtractorParams::random(3, 4, 6, rng);
  ExtractorCache empty;
  CHECK_THROWS_AS(extract_features_backward(Matrix::Zero(6, 4), empty, params), StaleCacheError);
  ExtractorCache cache;
  extract_features(random_image(8, 8, 3, rng), params, &cache);
  CHECK_THROWS_AS(extract_features_backward(Matrix::Zero(6, 5), cache, params), StaleCacheError);
  const auto other = ExtractorParams::random(3, 4, 7, rng);
  CHECK_THROWS_AS(extract_features_backward(Matrix::Zero(7, 4), cache, other), StaleCacheError);
}

TEST_CASE("forward is deterministic") {
  Rng rng(27);
  const auto params = ExtractorParams::random(3, 8, 16, rng);
  const Tensor3 img = random_image(16, 16, 3, rng);
  const FeatureMap a = extract_features(img, params);
  const FeatureMap b = extract_features(img, params);
  CHECK(a == b);
}
