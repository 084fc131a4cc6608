#include "fgln/cli.hpp"

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgln/pipeline.hpp"

namespace fgln {

namespace {

// Shared --config / --set / --seed plumbing for config-driven subcommands.
struct ConfigArgs {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string seed;

    void attach(CLI::App* app, bool with_seed = true) {
        app->add_option("--config", config_file, "key=value config file");
        app->add_option("--set", overrides, "config override key=value (repeatable)");
        if (with_seed) app->add_option("--seed", seed, "run seed");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_file.empty()) cfg.load_file(config_file);
        for (const auto& o : overrides) {
            size_t eq = o.find('=');
            if (eq == std::string::npos) throw ParseError("--set expects key=value, got " + o);
            cfg.set(o.substr(0, eq), o.substr(eq + 1));
        }
        if (!seed.empty()) cfg.set("seed", seed);
        return cfg;
    }
};

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Image forgery localization via guided noise and multi-scale aggregation"};
    app.require_subcommand(1);

    ConfigArgs gen_args, train_args, eval_args, loc_args;
    std::vector<std::string> distort_specs;
    std::string image_path, out_path, checkpoint, distort_spec;
    int noise_r = 2;
    double noise_eps = 1e-4;
    std::uint64_t plain_seed = 0;
    std::uint64_t gradcheck_seed = 17;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic forgery dataset");
    gen_args.attach(gen);

    CLI::App* train = app.add_subcommand("train", "train the localization model");
    train_args.attach(train);

    CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a dataset");
    eval_args.attach(eval, /*with_seed=*/false);
    eval->add_option("--distort", distort_specs,
                     "distortion spec, e.g. blur:15 (repeatable)");

    CLI::App* loc = app.add_subcommand("localize", "predict a forgery mask for one image");
    loc_args.attach(loc, /*with_seed=*/false);
    loc->add_option("--checkpoint", checkpoint, "model checkpoint path");
    loc->add_option("image", image_path, "input PPM image")->required();
    loc->add_option("out", out_path, "output PGM mask")->required();

    CLI::App* noise = app.add_subcommand("noise", "extract the guided-noise image");
    noise->add_option("image", image_path, "input image")->required();
    noise->add_option("out", out_path, "output image")->required();
    noise->add_option("--r", noise_r, "guided filter radius");
    noise->add_option("--eps", noise_eps, "guided filter regularizer");

    CLI::App* dist = app.add_subcommand("distort", "apply a post-processing distortion");
    dist->add_option("image", image_path, "input image")->required();
    dist->add_option("out", out_path, "output image")->required();
    dist->add_option("--spec", distort_spec, "resize:f | blur:k | noise:sigma | jpeg:q")
        ->required();
    dist->add_option("--seed", plain_seed, "noise seed");

    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference check of the mini model");
    gc->add_option("--seed", gradcheck_seed, "init seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            cmd_gen_data(gen_args.resolve());
        } else if (train->parsed()) {
            TrainResult r = cmd_train(train_args.resolve());
            std::printf("trained %d steps, final loss %.6f, checkpoint %s\n", r.steps,
                        r.final_loss, r.checkpoint_path.c_str());
        } else if (eval->parsed()) {
            MetricsReport r = cmd_eval(eval_args.resolve(), distort_specs);
            std::printf("auc %.4f f1 %.4f iou %.4f over %d images (%d excluded from auc)\n",
                        r.overall.auc, r.overall.f1, r.overall.iou, r.overall.count,
                        r.overall.auc_excluded);
        } else if (loc->parsed()) {
            RunConfig cfg = loc_args.resolve();
            if (!checkpoint.empty()) cfg.checkpoint = checkpoint;
            cmd_localize(cfg, image_path, out_path);
        } else if (noise->parsed()) {
            cmd_noise(image_path, out_path, noise_r, noise_eps);
        } else if (dist->parsed()) {
            cmd_distort(image_path, out_path, distort_spec, plain_seed);
        } else if (gc->parsed()) {
            FiniteDiffReport r = cmd_gradcheck(gradcheck_seed);
            // Worst offender per parameter group (prefix before the first dot).
            std::map<std::string, const FiniteDiffEntry*> worst;
            for (const auto& e : r.entries) {
                std::string group = e.name.substr(0, e.name.find('.'));
                auto it = worst.find(group);
                if (it == worst.end() || e.worst_rel_error > it->second->worst_rel_error)
                    worst[group] = &e;
            }
            for (const auto& [group, e] : worst)
                std::printf("%-8s worst %s rel_err %.3e %s\n", group.c_str(), e->name.c_str(),
                            e->worst_rel_error, e->pass ? "ok" : "FAIL");
            std::printf("gradcheck %s (%zu parameters, tol %.1e)\n",
                        r.all_pass() ? "PASS" : "FAIL", r.entries.size(), r.tol);
            return r.all_pass() ? 0 : 1;
        }
        return 0;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace fgln
