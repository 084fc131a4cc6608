#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fgln/cli.hpp"
#include "fgln/config.hpp"

using namespace fgln;

namespace {

int run(std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "fgln");
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config keys parse with type checking") {
    RunConfig cfg;
    cfg.set("seed", "42");
    CHECK(cfg.seed == 42);
    CHECK(cfg.seed_set);
    cfg.set("stage_channels", "8,16,24,32");
    CHECK(cfg.stage_channels == std::array<int, 4>{8, 16, 24, 32});
    cfg.set("lr", "1e-3");
    CHECK(cfg.lr == doctest::Approx(1e-3));
    cfg.set("noise_branch", "off");
    CHECK(!cfg.model_config().noise_branch);

    CHECK_THROWS_AS(cfg.set("unknown_key", "1"), ParseError);
    CHECK_THROWS_AS(cfg.set("lr", "fast"), ParseError);
    CHECK_THROWS_AS(cfg.set("stage_channels", "8,16"), ParseError);
    CHECK_THROWS_AS(cfg.set("noise_branch", "maybe"), ParseError);
    CHECK_THROWS_AS(cfg.set("fam", "sometimes"), ParseError);
    CHECK_THROWS_AS(cfg.set("arpm", "1"), ParseError);
}

TEST_CASE("config files: comments, whitespace, malformed lines") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "fgln_cfg_test.cfg").string();
    {
        std::ofstream f(path);
        f << "# a comment\n"
          << "batch_size=2\n"
          << "lr=5e-4   \n"
          << "\n"
          << "epochs=3 # trailing comment\n";
    }
    RunConfig cfg;
    cfg.load_file(path);
    CHECK(cfg.batch_size == 2);
    CHECK(cfg.lr == doctest::Approx(5e-4));
    CHECK(cfg.epochs == 3);

    {
        std::ofstream f(path);
        f << "batch_size 2\n";
    }
    RunConfig bad;
    CHECK_THROWS_AS(bad.load_file(path), ParseError);
    fs::remove(path);
}

TEST_CASE("defaults mirror the documented training recipe") {
    RunConfig cfg;
    CHECK(cfg.batch_size == 4);
    CHECK(cfg.lr == doctest::Approx(2e-4));
    CHECK(cfg.epochs == 25);
    CHECK(cfg.lr_halving_period == 5);
    CHECK(cfg.input_size == 64);
    CHECK(cfg.stage_channels == std::array<int, 4>{16, 32, 64, 128});
    CHECK(cfg.kernel_count == 4);
    CHECK(cfg.tau == doctest::Approx(4.0));
    CHECK(cfg.guided_r == 2);
    CHECK(cfg.guided_eps == doctest::Approx(1e-4));
}

TEST_CASE("config echo contains every effective value") {
    RunConfig cfg;
    cfg.set("seed", "9");
    cfg.set("arpm", "off");
    std::string j = cfg.echo_json();
    CHECK(j.find("\"seed\": 9") != std::string::npos);
    CHECK(j.find("\"arpm\": \"off\"") != std::string::npos);
    CHECK(j.find("\"lr\": 0.0002") != std::string::npos);
}

TEST_CASE("validation rejects impossible settings") {
    RunConfig cfg;
    cfg.set("batch_size", "0");
    CHECK_THROWS_AS(cfg.validate(), ParseError);
    RunConfig cfg2;
    cfg2.set("input_size", "60");  // not divisible by 16
    CHECK_THROWS(cfg2.validate());
}

TEST_CASE("cli exit codes: usage errors are 2, runtime failures 1") {
    CHECK(run({"no-such-command"}) == 2);
    CHECK(run({"train"}) == 2);  // --seed mandatory
    CHECK(run({"gen-data"}) == 2);
    CHECK(run({"gen-data", "--seed", "1", "--set", "bogus=1"}) == 2);
    CHECK(run({"localize", "missing.ppm", "out.pgm"}) == 2);  // no checkpoint given
    CHECK(run({"noise", "does_not_exist.ppm", "out.ppm"}) == 1);
    CHECK(run({"distort", "missing.ppm", "out.ppm", "--spec", "wobble:3"}) == 2);
}

TEST_CASE("cli noise/distort/gen-data round trip on real files") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "fgln_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto data = (dir / "data").string();

    CHECK(run({"gen-data", "--seed", "3", "--set", "n=4", "--set", "input_size=32", "--set",
               "data_dir=" + data, "--set", "split=train"}) == 0);
    CHECK(fs::exists(dir / "data/train/manifest.tsv"));
    CHECK(fs::exists(dir / "data/train/run.json"));
    CHECK(fs::exists(dir / "data/train/3_mask.pgm"));

    auto img = (dir / "data/train/0_img.ppm").string();
    auto noise_out = (dir / "noise.ppm").string();
    CHECK(run({"noise", img, noise_out, "--r", "2", "--eps", "1e-4"}) == 0);
    CHECK(fs::exists(noise_out));
    CHECK(fs::exists(noise_out + ".json"));

    auto dist_out = (dir / "dist.ppm").string();
    CHECK(run({"distort", img, dist_out, "--spec", "jpeg:50"}) == 0);
    CHECK(fs::exists(dist_out));
    fs::remove_all(dir);
}
