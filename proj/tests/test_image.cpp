#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fgln/image.hpp"
#include "fgln/rng.hpp"
#include "oracles.hpp"

using namespace fgln;

namespace {

std::string tmp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<long>(bytes.size()));
}

Image random_image(int w, int h, int c, std::uint64_t seed) {
    Rng rng(seed);
    Image img(w, h, c);
    for (auto& v : img.data) v = rng.uniform();
    return img;
}

}  // namespace

TEST_CASE("pgm parse: values map through /255") {
    auto path = tmp_file("t4.pgm");
    write_bytes(path, std::string("P5\n2 2\n255\n") + '\x00' + '\x80' + '\xff' + '\x40');
    Image img = read_image(path);
    CHECK(img.channels == 1);
    CHECK(img.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(img.at(1, 0, 0) == doctest::Approx(128.0 / 255));
    CHECK(img.at(0, 1, 0) == doctest::Approx(1.0));
    CHECK(img.at(1, 1, 0) == doctest::Approx(64.0 / 255));
    std::filesystem::remove(path);
}

TEST_CASE("non-255 maxval and truncation are rejected with offsets") {
    auto path = tmp_file("t16.ppm");
    write_bytes(path, "P6\n2 2\n65535\n" + std::string(12, 'a'));
    CHECK_THROWS_AS(read_image(path), ParseError);
    write_bytes(path, "P6\n2 2\n255\nabc");  // payload should be 12 bytes
    try {
        read_image(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("write/read round-trip stays within the quantization half-step") {
    Image img = random_image(7, 5, 3, 99);
    auto path = tmp_file("rt.ppm");
    write_image(img, path);
    Image back = read_image(path);
    REQUIRE(back.data.size() == img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 1.0 / 510 + 1e-12);
    // Second write of the loaded image must be byte-stable.
    auto path2 = tmp_file("rt2.ppm");
    write_image(back, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("box_filter: constants, single impulse, per-window oracle") {
    Image c(6, 6, 1);
    for (auto& v : c.data) v = 0.37;
    Image bc = box_filter(c, 2);
    for (double v : bc.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

    Image imp(5, 5, 1);
    imp.at(2, 2, 0) = 1.0;
    Image bi = box_filter(imp, 1);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            double want = (std::abs(x - 2) <= 1 && std::abs(y - 2) <= 1) ? 1.0 / 9 : 0.0;
            CHECK(bi.at(x, y, 0) == doctest::Approx(want).epsilon(1e-12));
        }

    Image r = random_image(8, 8, 1, 4);
    Image br = box_filter(r, 2);
    std::vector<std::vector<double>> grid(8, std::vector<double>(8));
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) grid[static_cast<size_t>(y)][static_cast<size_t>(x)] = r.at(x, y, 0);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(br.at(x, y, 0) == doctest::Approx(oracle::box_at(grid, x, y, 2)).epsilon(1e-12));
}

TEST_CASE("guided_filter: constant fixpoint, box-box limit, oracle") {
    Image c(8, 8, 3);
    for (auto& v : c.data) v = 0.5;
    Image gc = guided_filter(c, c, 2, 1e-4);
    for (double v : gc.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    Image r = random_image(8, 8, 1, 21);
    Image big_eps = guided_filter(r, r, 2, 1e9);
    Image bb = box_filter(box_filter(r, 2), 2);
    for (size_t i = 0; i < bb.data.size(); ++i)
        CHECK(big_eps.data[i] == doctest::Approx(bb.data[i]).epsilon(1e-6));

    Image gf = guided_filter(r, r, 2, 1e-4);
    std::vector<std::vector<double>> grid(8, std::vector<double>(8));
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) grid[static_cast<size_t>(y)][static_cast<size_t>(x)] = r.at(x, y, 0);
    auto want = oracle::guided_filter(grid, 2, 1e-4);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(gf.at(x, y, 0) ==
                  doctest::Approx(want[static_cast<size_t>(y)][static_cast<size_t>(x)])
                      .epsilon(1e-10));
}

TEST_CASE("sobel: constant zero, ramp magnitude, step locality") {
    Image c(6, 6, 3);
    for (auto& v : c.data) v = 0.8;
    Image sc = sobel(c);
    for (double v : sc.data) CHECK(v == 0.0);

    const int w = 8;
    Image ramp(w, 6, 1);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < w; ++x) ramp.at(x, y, 0) = static_cast<double>(x) / (w - 1);
    Image sr = sobel(ramp);
    double want = 8.0 / ((w - 1) * 8.0 * std::sqrt(2.0));
    for (int y = 1; y < 5; ++y)
        for (int x = 1; x < w - 1; ++x)
            CHECK(sr.at(x, y, 0) == doctest::Approx(want).epsilon(1e-12));

    Image step(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) step.at(x, y, 0) = 1.0;
    Image ss = sobel(step);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            bool near = x == 3 || x == 4;
            if (near) CHECK(ss.at(x, y, 0) > 0.0);
            else CHECK(ss.at(x, y, 0) == doctest::Approx(0.0));
        }
}

TEST_CASE("guided_noise: zero on constants, compositional, edge-local") {
    Image c(8, 8, 3);
    for (auto& v : c.data) v = 0.25;
    auto gn = guided_noise(c, 2, 1e-4);
    for (double v : gn.guided_noise.data) CHECK(v == 0.0);

    Image r = random_image(8, 8, 3, 55);
    auto g2 = guided_noise(r, 2, 1e-4);
    Image content = guided_filter(r, r, 2, 1e-4);
    Image edges = sobel(r);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                double want = std::abs(r.at(x, y, ch) - content.at(x, y, ch)) + edges.at(x, y, 0);
                want = std::min(1.0, std::max(0.0, want));
                CHECK(g2.guided_noise.at(x, y, ch) == doctest::Approx(want).epsilon(1e-12));
            }

    // Vertical step: response confined near the discontinuity.
    Image step(16, 8, 3);
    for (int y = 0; y < 8; ++y)
        for (int x = 8; x < 16; ++x)
            for (int ch = 0; ch < 3; ++ch) step.at(x, y, ch) = 1.0;
    auto gs = guided_noise(step, 2, 1e-4);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 16; ++x) {
            if (std::abs(x - 7) > 3 && std::abs(x - 8) > 3)
                CHECK(gs.guided_noise.at(x, y, 0) == doctest::Approx(0.0).epsilon(1e-9));
        }
}

TEST_CASE("tensor conversion round-trips and reorders planes") {
    Image px(1, 1, 3);
    px.at(0, 0, 0) = 0.1;
    px.at(0, 0, 1) = 0.2;
    px.at(0, 0, 2) = 0.3;
    Tensor t = to_tensor(px);
    CHECK(t.shape == std::vector<int>{1, 3, 1, 1});
    CHECK(t.data == std::vector<double>{0.1, 0.2, 0.3});

    Image r = random_image(6, 4, 3, 77);
    Tensor tr = to_tensor(r);
    CHECK(tr.shape == std::vector<int>{1, 3, 4, 6});
    Image back = from_tensor(tr);
    CHECK(back.data == r.data);
}
