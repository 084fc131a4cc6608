#include <doctest.h>

#include <cmath>

#include "fgln/distort.hpp"
#include "fgln/rng.hpp"

using namespace fgln;

namespace {

Image random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    Image img(w, h, 3);
    for (auto& v : img.data) v = rng.uniform();
    return img;
}

}  // namespace

TEST_CASE("distortion specs parse and validate") {
    auto d = Distortion::parse("resize:0.78");
    CHECK(d.kind == DistortKind::Resize);
    CHECK(d.parameter == doctest::Approx(0.78));
    CHECK(Distortion::parse("blur:15").kind == DistortKind::Blur);
    CHECK(Distortion::parse("noise:3").kind == DistortKind::Noise);
    CHECK(Distortion::parse("jpeg:50").kind == DistortKind::Jpeg);
    CHECK(d.str() == "resize:0.78");

    CHECK_THROWS_AS(Distortion::parse("warp:2"), ParseError);
    CHECK_THROWS_AS(Distortion::parse("blur"), ParseError);
    CHECK_THROWS_AS(Distortion::parse("blur:4"), ContractError);   // even kernel
    CHECK_THROWS_AS(Distortion::parse("resize:1.5"), ContractError);
    CHECK_THROWS_AS(Distortion::parse("resize:0"), ContractError);
    CHECK_THROWS_AS(Distortion::parse("jpeg:0"), ContractError);
    CHECK_THROWS_AS(Distortion::parse("jpeg:101"), ContractError);
    CHECK_THROWS_AS(Distortion::parse("noise:-1"), ContractError);
}

TEST_CASE("resize factor 1 and blur k=1 are identities") {
    Image img = random_image(16, 16, 5);
    Image r = distort(img, {DistortKind::Resize, 1.0}, 0);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(r.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));
    Image b = distort(img, {DistortKind::Blur, 1.0}, 0);
    CHECK(b.data == img.data);
}

TEST_CASE("every distortion preserves dimensions") {
    Image img = random_image(24, 24, 9);
    for (const char* spec : {"resize:0.25", "blur:15", "noise:15", "jpeg:50"}) {
        Image out = distort(img, Distortion::parse(spec), 3);
        CHECK(out.width == img.width);
        CHECK(out.height == img.height);
        CHECK(out.channels == img.channels);
        for (double v : out.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("jpeg q=100 barely moves a constant image") {
    Image img(16, 16, 3);
    for (auto& v : img.data) v = 0.42;
    Image out = distort(img, {DistortKind::Jpeg, 100.0}, 0);
    for (double v : out.data) CHECK(std::abs(v - 0.42) <= 1.0 / 255 + 1e-12);
}

TEST_CASE("noise sigma=15 empirical std is on target") {
    Image img(256, 256, 3);
    for (auto& v : img.data) v = 0.5;
    Image out = distort(img, {DistortKind::Noise, 15.0}, 1234);
    double mean = 0.0;
    for (size_t i = 0; i < out.data.size(); ++i) mean += out.data[i] - img.data[i];
    mean /= static_cast<double>(out.data.size());
    double var = 0.0;
    for (size_t i = 0; i < out.data.size(); ++i) {
        double d = out.data[i] - img.data[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(out.data.size());
    double std_dev = std::sqrt(var);
    CHECK(std_dev > 0.9 * 15.0 / 255);
    CHECK(std_dev < 1.1 * 15.0 / 255);
    // Same seed reproduces exactly; different seed does not.
    Image again = distort(img, {DistortKind::Noise, 15.0}, 1234);
    CHECK(again.data == out.data);
    Image other = distort(img, {DistortKind::Noise, 15.0}, 1235);
    CHECK(other.data != out.data);
}

TEST_CASE("blur smooths a noisy image monotonically in k") {
    Image img = random_image(32, 32, 13);
    auto variance = [](const Image& im) {
        double m = 0.0;
        for (double v : im.data) m += v;
        m /= static_cast<double>(im.data.size());
        double var = 0.0;
        for (double v : im.data) var += (v - m) * (v - m);
        return var / static_cast<double>(im.data.size());
    };
    double v0 = variance(img);
    double v3 = variance(distort(img, {DistortKind::Blur, 3.0}, 0));
    double v15 = variance(distort(img, {DistortKind::Blur, 15.0}, 0));
    CHECK(v3 < v0);
    CHECK(v15 < v3);
}

TEST_CASE("resize_bilinear agrees with hand interpolation on a 2x2") {
    Image img(2, 2, 1);
    img.at(0, 0, 0) = 0.0;
    img.at(1, 0, 0) = 1.0;
    img.at(0, 1, 0) = 2.0 / 3;
    img.at(1, 1, 0) = 1.0 / 3;
    Image up = resize_bilinear(img, 4, 4);
    CHECK(up.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(up.at(1, 0, 0) == doctest::Approx(0.25));
    CHECK(up.at(2, 0, 0) == doctest::Approx(0.75));
    CHECK(up.at(3, 0, 0) == doctest::Approx(1.0));
}
