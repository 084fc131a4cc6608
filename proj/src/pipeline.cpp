#include "fgln/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace fgln {

namespace fs = std::filesystem;

LoadedDataset load_dataset(const std::string& dir, int guided_r, double guided_eps) {
    LoadedDataset ds;
    ds.manifest = read_manifest(dir);
    for (const auto& row : ds.manifest) {
        Image img = read_image((fs::path(dir) / (std::to_string(row.idx) + "_img.ppm")).string());
        Image mask = read_image((fs::path(dir) / (std::to_string(row.idx) + "_mask.pgm")).string());
        if (ds.size == 0) ds.size = img.width;
        if (img.width != ds.size || img.height != ds.size)
            throw ContractError("dataset images must be square and uniformly sized");
        GuidedNoiseResult gn = guided_noise(img, guided_r, guided_eps);
        ds.rgb.push_back(to_tensor(img));
        ds.noise.push_back(to_tensor(gn.guided_noise));
        for (auto& v : mask.data) v = v > 0.5 ? 1.0 : 0.0;
        ds.gt.push_back(to_tensor(mask));
    }
    if (ds.rgb.empty()) throw ContractError("dataset in " + dir + " is empty");
    return ds;
}

Tensor stack_batch(const std::vector<Tensor>& items, const std::vector<int>& idx) {
    if (idx.empty()) throw ContractError("empty batch");
    const Tensor& first = items[static_cast<size_t>(idx[0])];
    std::vector<int> shape = first.shape;
    shape[0] = static_cast<int>(idx.size());
    Tensor out(shape);
    size_t per = first.data.size();
    for (size_t b = 0; b < idx.size(); ++b) {
        const Tensor& t = items[static_cast<size_t>(idx[b])];
        if (t.shape != first.shape) throw DimError("batch items disagree in shape");
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<long>(b * per));
    }
    return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ContractError("cannot write " + path.string());
    f << text;
}

std::string fmt_f(double v, int prec = 6) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

// Scientific notation keeps small losses and lrs exact enough to diff runs.
std::string fmt_e(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
    if (!cfg.seed_set) throw ParseError("gen-data requires --seed");
    std::optional<double> cap;
    if (cfg.bucket > 0.0) cap = cfg.bucket;
    auto samples = make_dataset(cfg.n, cfg.seed, cfg.input_size, cfg.dataset_mix(), cap);
    write_dataset(cfg.data_dir, cfg.split, samples);
    write_text(fs::path(cfg.data_dir) / cfg.split / "run.json", cfg.echo_json());
}

TrainResult cmd_train(const RunConfig& cfg) {
    if (!cfg.seed_set) throw ParseError("train requires --seed");
    cfg.validate();
    ModelConfig mc = cfg.model_config();
    LoadedDataset ds = load_dataset((fs::path(cfg.data_dir) / cfg.split).string(), cfg.guided_r,
                                    cfg.guided_eps);
    if (ds.size != cfg.input_size)
        throw ContractError("dataset size " + std::to_string(ds.size) +
                            " does not match input_size " + std::to_string(cfg.input_size));

    Rng rng(cfg.seed);
    ParamStore params;
    init_model(params, mc, rng);
    AdamState opt;
    opt.lr = cfg.lr;

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "run.json", cfg.echo_json());
    std::ofstream log(fs::path(cfg.out_dir) / "train.tsv", std::ios::binary);
    if (!log) throw ContractError("cannot write train.tsv in " + cfg.out_dir);
    log << "step\tepoch\tlr\tloss\n";

    const int n = static_cast<int>(ds.rgb.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    TrainResult res;
    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr * std::pow(0.5, epoch / cfg.lr_halving_period);
        opt.lr = lr;
        // Seeded Fisher-Yates reshuffle each epoch.
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(rng.uniform_int(0, i))]);
        for (int start = 0; start < n; start += cfg.batch_size) {
            if (cfg.max_steps > 0 && step >= cfg.max_steps) break;
            std::vector<int> idx(order.begin() + start,
                                 order.begin() + std::min(n, start + cfg.batch_size));
            Tensor rgb = stack_batch(ds.rgb, idx);
            Tensor noise = stack_batch(ds.noise, idx);
            Tensor gt = stack_batch(ds.gt, idx);

            ForwardCtx ctx(params, /*train=*/true, /*update_stats=*/true);
            Graph::NodeId loss = model_loss(ctx, mc, rgb, noise, gt);
            double lv = ctx.g.value(loss).data[0];
            if (!std::isfinite(lv)) {
                Graph::NodeId bad = ctx.g.first_nonfinite();
                throw ContractError(std::string("non-finite loss at step ") +
                                    std::to_string(step) + "; first non-finite tensor: " +
                                    (bad >= 0 ? ctx.g.tag(bad) : "loss"));
            }
            ctx.g.backward(loss);
            adam_step(params, ctx.grads(), opt);

            log << step << '\t' << epoch << '\t' << fmt_e(lr) << '\t' << fmt_e(lv) << '\n';
            res.final_loss = lv;
            ++step;
        }
        save_checkpoint(params, (fs::path(cfg.out_dir) /
                                 ("epoch_" + std::to_string(epoch) + ".fgln")).string());
        save_checkpoint(params, (fs::path(cfg.out_dir) / "model.fgln").string());
        if (cfg.max_steps > 0 && step >= cfg.max_steps) break;
    }
    res.steps = step;
    res.checkpoint_path = (fs::path(cfg.out_dir) / "model.fgln").string();
    return res;
}

Tensor infer_mask(const ParamStore& params_const, const ModelConfig& cfg, const Tensor& rgb,
                  const Tensor& noise) {
    ParamStore params = params_const;  // eval never mutates the caller's store
    ForwardCtx ctx(params, /*train=*/false, /*update_stats=*/false);
    MaskSetIds masks = model_forward(ctx, cfg, rgb, noise);
    Graph::NodeId up = ctx.g.upsample(masks.final_mask(), rgb.shape[2], rgb.shape[3],
                                      Interp::Bilinear);
    return ctx.g.value(up);
}

MetricsReport cmd_eval(const RunConfig& cfg, const std::vector<std::string>& distort_specs) {
    cfg.validate();
    if (cfg.checkpoint.empty()) throw ParseError("eval requires checkpoint=<path>");
    ParamStore params = load_checkpoint(cfg.checkpoint);
    ModelConfig mc = cfg.model_config();

    std::vector<std::pair<std::string, std::optional<Distortion>>> passes;
    passes.emplace_back("none", std::nullopt);
    for (const auto& s : distort_specs) passes.emplace_back(s, Distortion::parse(s));

    std::string dir = (fs::path(cfg.data_dir) / cfg.split).string();
    auto manifest = read_manifest(dir);
    std::vector<ImageScore> scores;
    for (const auto& row : manifest) {
        Image img = read_image((fs::path(dir) / (std::to_string(row.idx) + "_img.ppm")).string());
        Image mask = read_image((fs::path(dir) / (std::to_string(row.idx) + "_mask.pgm")).string());
        if (img.width != cfg.input_size || img.height != cfg.input_size)
            throw ContractError("image size " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " does not match input_size " +
                                std::to_string(cfg.input_size));
        std::vector<double> gt;
        gt.reserve(mask.data.size());
        for (double v : mask.data) gt.push_back(v > 0.5 ? 1.0 : 0.0);

        for (const auto& [tag, dist] : passes) {
            Image in = dist ? distort(img, *dist, row.seed ^ 0xd15707ULL) : img;
            GuidedNoiseResult gn = guided_noise(in, cfg.guided_r, cfg.guided_eps);
            Tensor pred = infer_mask(params, mc, to_tensor(in), to_tensor(gn.guided_noise));

            ImageScore s;
            s.idx = row.idx;
            s.distortion = tag;
            s.auc = pixel_auc(pred.data, gt);
            s.f1 = f1_score(pred.data, gt);
            s.iou = iou(pred.data, gt);
            s.gt_area_fraction = row.area_fraction;
            scores.push_back(std::move(s));
        }
    }

    // Overall numbers and buckets describe the undistorted pass; distorted
    // rows appear per tag in summary.tsv.
    std::vector<ImageScore> clean;
    for (const auto& s : scores)
        if (s.distortion == "none") clean.push_back(s);
    MetricsReport report = summarize(std::move(clean));
    report.per_image = std::move(scores);
    write_report(report, cfg.out_dir);
    return report;
}

void cmd_localize(const RunConfig& cfg, const std::string& image_path,
                  const std::string& out_path) {
    if (cfg.checkpoint.empty()) throw ParseError("localize requires checkpoint=<path>");
    ParamStore params = load_checkpoint(cfg.checkpoint);
    ModelConfig mc = cfg.model_config();
    Image img = read_image(image_path);
    if (img.width != cfg.input_size || img.height != cfg.input_size)
        throw ContractError("image is " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + " but the model expects " +
                            std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size));
    GuidedNoiseResult gn = guided_noise(img, cfg.guided_r, cfg.guided_eps);
    Tensor pred = infer_mask(params, mc, to_tensor(img), to_tensor(gn.guided_noise));
    Image out(img.width, img.height, 1);
    out.data = pred.data;
    write_image(out, out_path);
}

void cmd_noise(const std::string& image_path, const std::string& out_path, int r, double eps) {
    Image img = read_image(image_path);
    GuidedNoiseResult gn = guided_noise(img, r, eps);
    write_image(gn.guided_noise, out_path);
    write_text(out_path + ".json",
               std::string("{\n  \"r\": ") + std::to_string(r) + ",\n  \"eps\": " + fmt_e(eps) +
                   "\n}\n");
}

void cmd_distort(const std::string& image_path, const std::string& out_path,
                 const std::string& spec, std::uint64_t seed) {
    Distortion d = Distortion::parse(spec);  // reject a bad spec before any file IO
    write_image(distort(read_image(image_path), d, seed), out_path);
}

FiniteDiffReport cmd_gradcheck(std::uint64_t seed, double h, double tol) {
    ModelConfig mc = ModelConfig::mini();
    Rng rng(seed);
    ParamStore params;
    init_model(params, mc, rng);

    // Two forged samples: both mask classes contribute to the loss, and the
    // batch keeps every batch-norm reduction non-degenerate. The mini
    // model's coarsest stage is 1x1 spatial, so with a single sample its
    // batch stats would normalize that stage to an exact constant, parking
    // the whole path on ReLU kinks where central differences are invalid.
    std::vector<Tensor> rgbs, noises, gts;
    for (int s = 0; s < 2; ++s) {
        SampleSpec spec;
        spec.seed = rng.next_u64();
        spec.size = mc.backbone.input_size;
        spec.type = ForgeryType::Splice;
        spec.fraction = 0.15;
        Sample sample = forge(gen_background(rng.next_u64(), spec.size), spec);
        GuidedNoiseResult gn = guided_noise(sample.image, 2, 1e-4);
        rgbs.push_back(to_tensor(sample.image));
        noises.push_back(to_tensor(gn.guided_noise));
        gts.push_back(to_tensor(sample.mask));
    }
    Tensor rgb = stack_batch(rgbs, {0, 1});
    Tensor noise = stack_batch(noises, {0, 1});
    Tensor gt = stack_batch(gts, {0, 1});

    auto loss_fn = [&](const ParamStore& p) {
        ParamStore local = p;
        ForwardCtx ctx(local, /*train=*/true, /*update_stats=*/false);
        Graph::NodeId loss = model_loss(ctx, mc, rgb, noise, gt);
        return ctx.g.value(loss).data[0];
    };

    ParamStore work = params;
    ForwardCtx ctx(work, /*train=*/true, /*update_stats=*/false);
    Graph::NodeId loss = model_loss(ctx, mc, rgb, noise, gt);
    ctx.g.backward(loss);
    return finite_diff_check(loss_fn, params, ctx.grads(), h, tol);
}

}  // namespace fgln
