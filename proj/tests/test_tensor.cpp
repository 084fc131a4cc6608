#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "fgln/rng.hpp"
#include "fgln/tensor.hpp"

using namespace fgln;

TEST_CASE("tensor shape/data invariant") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), DimError);
    CHECK(Tensor::scalar(4.0).data[0] == 4.0);
    CHECK(Tensor::full({2, 2}, 3.0).data[3] == 3.0);
}

TEST_CASE("all_finite detects NaN and Inf") {
    Tensor t({3});
    CHECK(t.all_finite());
    t.data[1] = std::nan("");
    CHECK(!t.all_finite());
    t.data[1] = 1e308 * 10;
    CHECK(!t.all_finite());
}

TEST_CASE("running-stat names are not trainable") {
    CHECK(is_trainable_name("rgb.stem.w"));
    CHECK(is_trainable_name("loc1.alpha"));
    CHECK(!is_trainable_name("rgb.stem.bn.running_mean"));
    CHECK(!is_trainable_name("fam.scale2.fuse.bn.running_var"));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    Rng rng(42);
    ParamStore store;
    Tensor a({3, 2, 2, 2});
    for (auto& v : a.data) v = rng.normal() * 1e-7;  // exercise subnormal-ish values
    a.data[0] = -0.0;
    store["alpha.w"] = a;
    Tensor b({5});
    for (auto& v : b.data) v = rng.uniform(-10, 10);
    store["beta.running_mean"] = b;

    auto path = (std::filesystem::temp_directory_path() / "ckpt_roundtrip.fgln").string();
    save_checkpoint(store, path);
    ParamStore loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == store.size());
    for (const auto& [name, t] : store) {
        REQUIRE(loaded.count(name) == 1);
        CHECK(loaded[name].shape == t.shape);
        for (size_t i = 0; i < t.data.size(); ++i) {
            // Bitwise comparison, not numeric: -0.0 must survive.
            CHECK(std::memcmp(&loaded[name].data[i], &t.data[i], 8) == 0);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects truncated and foreign files") {
    auto path = (std::filesystem::temp_directory_path() / "ckpt_bad.fgln").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fwrite("FGLN\x01\x00\x00\x00", 1, 8, f);  // header only, count missing
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fwrite("NOPE", 1, 4, f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("rng is platform-stable and forkable") {
    Rng a(1), b(1);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c = a.fork(3);
    CHECK(c.next_u64() != a.next_u64());
    Rng d(9);
    for (int i = 0; i < 1000; ++i) {
        double u = d.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        int k = d.uniform_int(2, 5);
        CHECK(k >= 2);
        CHECK(k <= 5);
    }
}
