#include "fgln/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fgln {

namespace {

int to_int(const std::string& k, const std::string& v) {
    try {
        size_t pos = 0;
        int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ParseError("config key " + k + ": not an integer: " + v);
    }
}

double to_double(const std::string& k, const std::string& v) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ParseError("config key " + k + ": not a number: " + v);
    }
}

std::uint64_t to_u64(const std::string& k, const std::string& v) {
    try {
        size_t pos = 0;
        std::uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ParseError("config key " + k + ": not an unsigned integer: " + v);
    }
}

std::array<int, 4> to_channels(const std::string& k, const std::string& v) {
    std::array<int, 4> out{};
    std::istringstream ss(v);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 4) throw ParseError("config key " + k + ": expected 4 values: " + v);
        out[static_cast<size_t>(i++)] = to_int(k, part);
    }
    if (i != 4) throw ParseError("config key " + k + ": expected 4 values: " + v);
    return out;
}

void expect_choice(const std::string& k, const std::string& v,
                   std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (v == a) return;
    std::string msg = "config key " + k + ": value " + v + " not in {";
    for (const char* a : allowed) msg += std::string(a) + ",";
    msg.back() = '}';
    throw ParseError(msg);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") {
        seed = to_u64(key, value);
        seed_set = true;
    } else if (key == "input_size") input_size = to_int(key, value);
    else if (key == "stem_channels") stem_channels = to_int(key, value);
    else if (key == "stage_channels") stage_channels = to_channels(key, value);
    else if (key == "batch_size") batch_size = to_int(key, value);
    else if (key == "lr") lr = to_double(key, value);
    else if (key == "epochs") epochs = to_int(key, value);
    else if (key == "lr_halving_period") lr_halving_period = to_int(key, value);
    else if (key == "max_steps") max_steps = to_int(key, value);
    else if (key == "data_dir") data_dir = value;
    else if (key == "split") split = value;
    else if (key == "out_dir") out_dir = value;
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "guided_r") guided_r = to_int(key, value);
    else if (key == "guided_eps") guided_eps = to_double(key, value);
    else if (key == "kernel_count") kernel_count = to_int(key, value);
    else if (key == "tau") tau = to_double(key, value);
    else if (key == "noise_branch") {
        expect_choice(key, value, {"guided", "off"});
        noise_branch = value;
    } else if (key == "fam") {
        expect_choice(key, value, {"on", "concat-only"});
        fam = value;
    } else if (key == "arpm") {
        expect_choice(key, value, {"on", "off"});
        arpm = value;
    } else if (key == "n") n = to_int(key, value);
    else if (key == "mix_splice") mix_splice = to_double(key, value);
    else if (key == "mix_copy_move") mix_copy_move = to_double(key, value);
    else if (key == "mix_removal") mix_removal = to_double(key, value);
    else if (key == "mix_authentic") mix_authentic = to_double(key, value);
    else if (key == "bucket") bucket = to_double(key, value);
    else if (key == "threads") threads = to_int(key, value);
    else throw ParseError("unknown config key: " + key);
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        set(line.substr(start, eq - start), line.substr(eq + 1));
    }
}

void RunConfig::validate() const {
    if (batch_size < 1) throw ParseError("batch_size must be >= 1");
    if (epochs < 1) throw ParseError("epochs must be >= 1");
    if (lr <= 0.0) throw ParseError("lr must be positive");
    if (lr_halving_period < 1) throw ParseError("lr_halving_period must be >= 1");
    if (guided_r < 1) throw ParseError("guided_r must be >= 1");
    if (guided_eps <= 0.0) throw ParseError("guided_eps must be positive");
    if (n < 1) throw ParseError("n must be >= 1");
    if (threads < 1) throw ParseError("threads must be >= 1");
    if (bucket < 0.0) throw ParseError("bucket must be >= 0");
    model_config().validate();
}

ModelConfig RunConfig::model_config() const {
    ModelConfig cfg;
    cfg.backbone.input_size = input_size;
    cfg.backbone.stem_channels = stem_channels;
    cfg.backbone.stage_channels = stage_channels;
    cfg.fam.kernel_count = kernel_count;
    cfg.fam.tau = tau;
    cfg.noise_branch = noise_branch == "guided";
    cfg.fam_enhance = fam == "on";
    cfg.arpm_enabled = arpm == "on";
    return cfg;
}

DatasetMix RunConfig::dataset_mix() const {
    return DatasetMix{mix_splice, mix_copy_move, mix_removal, mix_authentic};
}

std::string RunConfig::echo_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["input_size"] = input_size;
    j["stem_channels"] = stem_channels;
    j["stage_channels"] = stage_channels;
    j["batch_size"] = batch_size;
    j["lr"] = lr;
    j["epochs"] = epochs;
    j["lr_halving_period"] = lr_halving_period;
    j["max_steps"] = max_steps;
    j["data_dir"] = data_dir;
    j["split"] = split;
    j["out_dir"] = out_dir;
    j["checkpoint"] = checkpoint;
    j["guided_r"] = guided_r;
    j["guided_eps"] = guided_eps;
    j["kernel_count"] = kernel_count;
    j["tau"] = tau;
    j["noise_branch"] = noise_branch;
    j["fam"] = fam;
    j["arpm"] = arpm;
    j["n"] = n;
    j["mix_splice"] = mix_splice;
    j["mix_copy_move"] = mix_copy_move;
    j["mix_removal"] = mix_removal;
    j["mix_authentic"] = mix_authentic;
    j["bucket"] = bucket;
    j["threads"] = threads;
    return j.dump(2) + "\n";
}

}  // namespace fgln
