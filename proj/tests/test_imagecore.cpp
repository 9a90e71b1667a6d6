// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#include <cmath>
#include <stdexcept>
#include <filesystem>

#include <doctest.h>

#include "iimkit/image.hpp"
#include "iimkit/image_io.hpp"
#include "iimkit/rng.hpp"
#include "test_support.hpp"

using namespace iim;
namespace fs = std::filesystem;

namespace {

std::string ppm_p6(int w, int h, const std::string& pixels) {
    return "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + pixels;
}

FeatureStack random_stack(int w, int h, int n, std::uint64_t seed) {
    Rng rng(seed);
    FeatureStack s;
    s.width = w;
    s.height = h;
    s.n_kernels = n;
    for (int p = 0; p < 3 * n; ++p) {
        Grid g(w, h);
        for (double& v : g.data) v = rng.uniform(-20.0, 20.0);
        s.planes.push_back(std::move(g));
    }
    return s;
}

} // namespace

TEST_CASE("load_image reads binary PPM samples as v/255") {
    const auto dir = testutil::make_temp_dir("ppm");

    testutil::write_file(dir / "white.ppm", ppm_p6(1, 1, "\xff\xff\xff"));
    ImageRGB white = load_image((dir / "white.ppm").string());
    CHECK(white.width == 1);
    CHECK(white.height == 1);
    for (int c = 0; c < 3; ++c) CHECK(white.planes[c].at(0, 0) == 1.0);

    testutil::write_file(dir / "black.ppm", ppm_p6(1, 1, std::string(3, '\0')));
    ImageRGB black = load_image((dir / "black.ppm").string());
    for (int c = 0; c < 3; ++c) CHECK(black.planes[c].at(0, 0) == 0.0);

    testutil::write_file(dir / "mix.ppm", ppm_p6(1, 1, "\x80\x40\x20"));
    ImageRGB mix = load_image((dir / "mix.ppm").string());
    CHECK(mix.planes[kR].at(0, 0) == 128.0 / 255.0);
    CHECK(mix.planes[kG].at(0, 0) == 64.0 / 255.0);
    CHECK(mix.planes[kB].at(0, 0) == 32.0 / 255.0);

    // comments in the header are legal PPM
    testutil::write_file(dir / "comment.ppm", "P6\n# a comment\n1 1\n255\n\x10\x10\x10");
    ImageRGB commented = load_image((dir / "comment.ppm").string());
    CHECK(commented.planes[kR].at(0, 0) == 16.0 / 255.0);

    fs::remove_all(dir);
}

TEST_CASE("load_image error paths") {
    const auto dir = testutil::make_temp_dir("ppm_err");
    CHECK_THROWS_AS(load_image((dir / "missing.ppm").string()), std::runtime_error);

    testutil::write_file(dir / "short.ppm", ppm_p6(2, 2, "\x01\x02\x03"));
    CHECK_THROWS_WITH_AS(load_image((dir / "short.ppm").string()),
                         doctest::Contains("truncated"), std::runtime_error);

    testutil::write_file(dir / "deep.ppm", "P6\n1 1\n65535\n??????");
    CHECK_THROWS_WITH_AS(load_image((dir / "deep.ppm").string()),
                         doctest::Contains("maxval"), std::runtime_error);

    testutil::write_file(dir / "weird.bin", "GIF89a not a supported format");
    CHECK_THROWS_WITH_AS(load_image((dir / "weird.bin").string()),
                         doctest::Contains("unsupported raster format"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("PNG write/read round trip preserves 8-bit samples") {
    const auto dir = testutil::make_temp_dir("png");
    Rng rng(3);
    ImageRGB img(9, 5);
    for (int c = 0; c < 3; ++c)
        for (double& v : img.planes[c].data)
            v = static_cast<double>(rng.next_u64() % 256) / 255.0;

    save_png(img, (dir / "a.png").string());
    ImageRGB back = load_image((dir / "a.png").string());
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < img.planes[c].data.size(); ++i)
            CHECK(back.planes[c].data[i] == img.planes[c].data[i]);

    // fixed encoder settings: identical bytes on rewrite
    save_png(back, (dir / "b.png").string());
    CHECK(testutil::read_file(dir / "a.png") == testutil::read_file(dir / "b.png"));

    Grid plane(4, 3, 0.25);
    save_gray_png(plane, (dir / "gray.png").string());
    CHECK(fs::exists(dir / "gray.png"));
    fs::remove_all(dir);
}

TEST_CASE("to_log matches direct ln evaluation and clamps at epsilon") {
    ImageRGB img(2, 2, 1.0);
    img.planes[kR].at(0, 0) = 0.0;
    img.planes[kR].at(1, 0) = 0.5;

    const LogImage li = to_log(img, 1e-4);
    CHECK(li.epsilon == 1e-4);
    CHECK(li.planes[kR].at(0, 0) == std::log(1e-4));
    CHECK(li.planes[kR].at(0, 0) == doctest::Approx(-9.210340371976184).epsilon(1e-12));
    CHECK(li.planes[kR].at(1, 0) == doctest::Approx(-0.6931471805599453).epsilon(1e-12));
    CHECK(li.planes[kG].at(0, 0) == 0.0); // ln 1
    CHECK(li.planes[kB].at(1, 1) == 0.0);

    CHECK_THROWS_AS(to_log(img, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(to_log(img, -1.0), std::invalid_argument);
}

TEST_CASE("to_log is monotone and exact above the clamp") {
    Rng rng(11);
    ImageRGB img(16, 16);
    for (int c = 0; c < 3; ++c)
        for (double& v : img.planes[c].data) v = rng.uniform(1e-4, 1.0);
    const LogImage li = to_log(img, 1e-4);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < li.planes[c].data.size(); ++i) {
            const double v = img.planes[c].data[i];
            CHECK(std::exp(li.planes[c].data[i]) ==
                  doctest::Approx(v).epsilon(1e-12));
        }
    // monotone per pixel: larger input, not-smaller log
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(0.0, 1.0), b = rng.uniform(0.0, 1.0);
        ImageRGB two(2, 1);
        for (int c = 0; c < 3; ++c) {
            two.planes[c].at(0, 0) = std::min(a, b);
            two.planes[c].at(1, 0) = std::max(a, b);
        }
        const LogImage lt = to_log(two);
        CHECK(lt.planes[kR].at(0, 0) <= lt.planes[kR].at(1, 0));
    }
}

TEST_CASE("normalize_for_display min-max examples") {
    Grid plane(3, 1);
    plane.at(0, 0) = -1.0;
    plane.at(1, 0) = 0.0;
    plane.at(2, 0) = 1.0;
    Grid out = normalize_for_display(plane);
    CHECK(out.at(0, 0) == 0.0);
    CHECK(out.at(1, 0) == 0.5);
    CHECK(out.at(2, 0) == 1.0);

    Grid constant(4, 4, 3.7);
    for (double v : normalize_for_display(constant).data) CHECK(v == 0.5);

    Grid two(2, 1);
    two.at(0, 0) = 2.0;
    two.at(1, 0) = 4.0;
    Grid out2 = normalize_for_display(two);
    CHECK(out2.at(0, 0) == 0.0);
    CHECK(out2.at(1, 0) == 1.0);

    CHECK_THROWS_AS(normalize_for_display(Grid()), std::invalid_argument);
}

TEST_CASE("normalize_for_display is affine invariant and lands in [0,1]") {
    Rng rng(5);
    Grid plane(12, 7);
    for (double& v : plane.data) v = rng.uniform(-3.0, 3.0);
    const Grid base = normalize_for_display(plane);
    for (double v : base.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (double a : {0.5, 2.0, 7.0})
        for (double b : {-3.0, 0.0, 11.0}) {
            Grid scaled = plane;
            for (double& v : scaled.data) v = a * v + b;
            const Grid out = normalize_for_display(scaled);
            for (std::size_t i = 0; i < out.data.size(); ++i)
                CHECK(out.data[i] == doctest::Approx(base.data[i]).epsilon(1e-9));
        }
}

TEST_CASE("feature stack serialization round-trips bit-exactly at file level") {
    const auto dir = testutil::make_temp_dir("iimf");
    const FeatureStack stack = random_stack(7, 5, 3, 77);

    save_feature_stack(stack, (dir / "a.iimf").string());
    const FeatureStack loaded = load_feature_stack((dir / "a.iimf").string());
    REQUIRE(loaded.n_kernels == 3);
    REQUIRE(loaded.width == 7);
    REQUIRE(loaded.height == 5);

    // loaded values are the binary32 narrowing of what was saved
    for (std::size_t p = 0; p < stack.planes.size(); ++p)
        for (std::size_t i = 0; i < stack.planes[p].data.size(); ++i)
            CHECK(loaded.planes[p].data[i] ==
                  static_cast<double>(static_cast<float>(stack.planes[p].data[i])));

    // write -> read -> write reproduces the file byte for byte, and a
    // loaded stack saves to identical bytes (values already binary32)
    save_feature_stack(loaded, (dir / "b.iimf").string());
    CHECK(testutil::read_file(dir / "a.iimf") == testutil::read_file(dir / "b.iimf"));
    const FeatureStack again = load_feature_stack((dir / "b.iimf").string());
    for (std::size_t p = 0; p < loaded.planes.size(); ++p)
        for (std::size_t i = 0; i < loaded.planes[p].data.size(); ++i)
            CHECK(again.planes[p].data[i] == loaded.planes[p].data[i]);
    fs::remove_all(dir);
}

TEST_CASE("empty feature stack round trip") {
    const auto dir = testutil::make_temp_dir("iimf_empty");
    FeatureStack empty;
    empty.width = 4;
    empty.height = 4;
    empty.n_kernels = 0;
    save_feature_stack(empty, (dir / "empty.iimf").string());
    const FeatureStack back = load_feature_stack((dir / "empty.iimf").string());
    CHECK(back.n_kernels == 0);
    CHECK(back.planes.empty());
    CHECK(back.width == 4);
    fs::remove_all(dir);
}

TEST_CASE("feature stack load rejects corrupt files") {
    const auto dir = testutil::make_temp_dir("iimf_bad");
    const FeatureStack stack = random_stack(6, 4, 2, 9);
    save_feature_stack(stack, (dir / "ok.iimf").string());

    const std::string full = testutil::read_file(dir / "ok.iimf");
    testutil::write_file(dir / "trunc.iimf", full.substr(0, full.size() - 13));
    CHECK_THROWS_WITH_AS(load_feature_stack((dir / "trunc.iimf").string()),
                         doctest::Contains("shape mismatch"), std::runtime_error);

    testutil::write_file(dir / "extra.iimf", full + "zz");
    CHECK_THROWS_WITH_AS(load_feature_stack((dir / "extra.iimf").string()),
                         doctest::Contains("shape mismatch"), std::runtime_error);

    testutil::write_file(dir / "magic.iimf", "IIMF9\n1 1 1\n" + std::string(12, '\0'));
    CHECK_THROWS_AS(load_feature_stack((dir / "magic.iimf").string()), std::runtime_error);

    testutil::write_file(dir / "header.iimf", "IIMF1\n1 1\n");
    CHECK_THROWS_AS(load_feature_stack((dir / "header.iimf").string()), std::runtime_error);
    fs::remove_all(dir);
}
