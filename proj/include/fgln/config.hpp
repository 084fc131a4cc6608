#pragma once

#include <cstdint>
#include <string>

#include "fgln/datagen.hpp"
#include "fgln/model.hpp"

namespace fgln {

// Line-oriented `key=value` run configuration. Unknown keys are rejected;
// every effective value can be echoed back for the run log.
struct RunConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;

    int input_size = 64;
    int stem_channels = 16;
    std::array<int, 4> stage_channels = {16, 32, 64, 128};

    int batch_size = 4;
    double lr = 2e-4;
    int epochs = 25;
    int lr_halving_period = 5;
    int max_steps = 0;  // 0 = no cap

    std::string data_dir = "data";
    std::string split = "train";
    std::string out_dir = "out";
    std::string checkpoint;

    int guided_r = 2;
    double guided_eps = 1e-4;
    int kernel_count = 4;
    double tau = 4.0;

    std::string noise_branch = "guided";  // guided | off
    std::string fam = "on";               // on | concat-only
    std::string arpm = "on";              // on | off

    // gen-data controls
    int n = 64;
    double mix_splice = 0.3, mix_copy_move = 0.3, mix_removal = 0.2, mix_authentic = 0.2;
    double bucket = 0.0;  // 0 = unbucketed; otherwise area-fraction cap

    int threads = 1;

    // Applies one key=value pair; throws ParseError on unknown keys or
    // malformed values.
    void set(const std::string& key, const std::string& value);
    void load_file(const std::string& path);
    void validate() const;

    ModelConfig model_config() const;
    DatasetMix dataset_mix() const;
    // Effective configuration as a JSON object string.
    std::string echo_json() const;
};

}  // namespace fgln
