#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fgln/datagen.hpp"

using namespace fgln;

TEST_CASE("background generation is deterministic and seed-sensitive") {
    Image a = gen_background(7, 64);
    Image b = gen_background(7, 64);
    CHECK(a.data == b.data);
    Image c = gen_background(8, 64);
    CHECK(a.data != c.data);
}

TEST_CASE("background carries per-pixel noise near std 2/255") {
    Image img = gen_background(3, 128);
    // Second differences cancel the plaid's local linear trend, leaving the
    // noise: var(x[i-1] - 2 x[i] + x[i+1]) = 6 sigma^2 for iid draws.
    double var = 0.0;
    long n = 0;
    for (int y = 0; y < 128; ++y)
        for (int x = 1; x < 127; ++x)
            for (int c = 0; c < 3; ++c) {
                double d = img.at(x - 1, y, c) - 2.0 * img.at(x, y, c) + img.at(x + 1, y, c);
                var += d * d;
                ++n;
            }
    double sigma = std::sqrt(var / n / 6.0);
    CHECK(sigma > 0.8 * 2.0 / 255);
    CHECK(sigma < 1.3 * 2.0 / 255);
}

TEST_CASE("forge respects the area target within 20% relative") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SampleSpec spec;
        spec.seed = seed;
        spec.size = 64;
        spec.fraction = 0.05;
        spec.type = ForgeryType::Splice;
        spec.shape = seed % 2 ? RegionShape::Rectangle : RegionShape::Ellipse;
        Sample s = forge(gen_background(seed, 64), spec);
        double area = s.area_fraction * 64 * 64;
        CHECK(area >= 164);
        CHECK(area <= 245);
    }
}

TEST_CASE("authentic samples have empty masks and untouched pixels") {
    SampleSpec spec;
    spec.seed = 3;
    spec.size = 32;
    spec.type = ForgeryType::Authentic;
    Image bg = gen_background(3, 32);
    Sample s = forge(bg, spec);
    for (double v : s.mask.data) CHECK(v == 0.0);
    CHECK(s.image.data == bg.data);
}

TEST_CASE("pixels outside the mask are never modified") {
    for (ForgeryType type :
         {ForgeryType::Splice, ForgeryType::CopyMove, ForgeryType::Removal}) {
        SampleSpec spec;
        spec.seed = 11;
        spec.size = 48;
        spec.fraction = 0.08;
        spec.type = type;
        Image bg = gen_background(5, 48);
        Sample s = forge(bg, spec);
        bool any_changed = false;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) {
                bool in_mask = s.mask.at(x, y, 0) > 0.5;
                for (int c = 0; c < 3; ++c) {
                    if (!in_mask) CHECK(s.image.at(x, y, c) == bg.at(x, y, c));
                    else if (s.image.at(x, y, c) != bg.at(x, y, c)) any_changed = true;
                }
            }
        CHECK(any_changed);  // forged pixels differ somewhere inside the mask
    }
}

TEST_CASE("copy-move destinations equal the translated source exactly") {
    SampleSpec spec;
    spec.seed = 19;
    spec.size = 48;
    spec.fraction = 0.06;
    spec.type = ForgeryType::CopyMove;
    Image bg = gen_background(9, 48);
    Sample s = forge(bg, spec);
    CHECK((s.cm_dx != 0 || s.cm_dy != 0));
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            if (s.mask.at(x, y, 0) > 0.5)
                for (int c = 0; c < 3; ++c)
                    CHECK(s.image.at(x, y, c) == bg.at(x + s.cm_dx, y + s.cm_dy, c));
}

TEST_CASE("make_dataset: deterministic, mixes to exact counts, caps buckets") {
    DatasetMix quarter{0.25, 0.25, 0.25, 0.25};
    auto a = make_dataset(100, 7, 32, quarter);
    auto b = make_dataset(100, 7, 32, quarter);
    REQUIRE(a.size() == 100);
    int counts[4] = {0, 0, 0, 0};
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image.data == b[i].image.data);
        CHECK(a[i].mask.data == b[i].mask.data);
        counts[static_cast<int>(a[i].meta.type)]++;
    }
    for (int c : counts) CHECK(c == 25);

    auto bucketed = make_dataset(24, 11, 128, DatasetMix{0.4, 0.3, 0.3, 0.0}, 0.01);
    for (const auto& s : bucketed) {
        double area = s.area_fraction * 128 * 128;
        CHECK(area < 164);  // < 1% of 16384
        CHECK(area >= 1);
    }

    CHECK_THROWS_AS(make_dataset(4, 1, 32, DatasetMix{0.5, 0.5, 0.5, 0.0}), ContractError);
    CHECK_THROWS_AS(make_dataset(4, 1, 32, DatasetMix{}, 1e-6), ContractError);
}

TEST_CASE("dataset round-trips through the on-disk layout") {
    namespace fs = std::filesystem;
    auto root = (fs::temp_directory_path() / "fgln_ds_test").string();
    fs::remove_all(root);
    auto samples = make_dataset(8, 77, 32, DatasetMix{});
    write_dataset(root, "train", samples);

    auto rows = read_manifest(root + "/train");
    REQUIRE(rows.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(rows[static_cast<size_t>(i)].idx == i);
        CHECK(rows[static_cast<size_t>(i)].type ==
              forgery_name(samples[static_cast<size_t>(i)].meta.type));
        Image img = read_image(root + "/train/" + std::to_string(i) + "_img.ppm");
        CHECK(img.width == 32);
        Image mask = read_image(root + "/train/" + std::to_string(i) + "_mask.pgm");
        for (size_t p = 0; p < mask.data.size(); ++p) {
            double want = samples[static_cast<size_t>(i)].mask.data[p];
            CHECK((mask.data[p] > 0.5) == (want > 0.5));
        }
    }
    // Regeneration with the same seed is byte-identical on disk.
    auto root2 = (fs::temp_directory_path() / "fgln_ds_test2").string();
    fs::remove_all(root2);
    write_dataset(root2, "train", make_dataset(8, 77, 32, DatasetMix{}));
    for (const char* name : {"manifest.tsv", "0_img.ppm", "7_mask.pgm"}) {
        std::ifstream f1(root + "/train/" + name, std::ios::binary);
        std::ifstream f2(root2 + "/train/" + name, std::ios::binary);
        std::string s1((std::istreambuf_iterator<char>(f1)), {});
        std::string s2((std::istreambuf_iterator<char>(f2)), {});
        CHECK(s1 == s2);
        CHECK(!s1.empty());
    }
    fs::remove_all(root);
    fs::remove_all(root2);
}
