#include "fgln/model.hpp"

#include <algorithm>

namespace fgln {

void ModelConfig::validate() const {
    backbone.validate();
    if (fam.kernel_count < 1) throw ContractError("kernel_count must be >= 1");
    if (fam.tau <= 0.0) throw ContractError("tau must be positive");
    if (arpm_branch_div < 1) throw ContractError("arpm_branch_div must be >= 1");
    for (int c : backbone.stage_channels)
        if (c % arpm_branch_div != 0 || c / arpm_branch_div < 1)
            throw ContractError("arpm_branch_div must divide every stage channel count");
}

ModelConfig ModelConfig::mini() {
    ModelConfig cfg;
    cfg.backbone.input_size = 16;
    cfg.backbone.stem_channels = 4;
    cfg.backbone.stage_channels = {4, 8, 12, 16};
    return cfg;
}

void init_model(ParamStore& store, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    init_backbone(store, "rgb", cfg.backbone, rng);
    init_backbone(store, "noise", cfg.backbone, rng);
    for (int i = 1; i <= 4; ++i) {
        const int ci = cfg.backbone.stage_channels[static_cast<size_t>(i - 1)];
        init_fam_scale(store, i, ci, cfg.fam, rng);
        init_arpm_scale(store, i, ci, ci / cfg.arpm_branch_div, rng);
    }
    const auto r = cfg.sccm_r();
    for (int pos = 1; pos <= 4; ++pos) {
        // Chain position 1 refines the coarsest scale (stage 4).
        const int ci = cfg.backbone.stage_channels[static_cast<size_t>(4 - pos)];
        init_localizer_pos(store, pos, ci, r[static_cast<size_t>(pos - 1)], pos > 1, rng);
    }
}

MaskSetIds model_forward(ForwardCtx& ctx, const ModelConfig& cfg, const Tensor& rgb,
                         const Tensor& noise) {
    Graph& g = ctx.g;
    if (rgb.shape != noise.shape)
        throw DimError("rgb/noise batch shapes differ: " + rgb.shape_str() + " vs " +
                       noise.shape_str());
    Graph::NodeId x_rgb = g.leaf(rgb);
    Graph::NodeId x_noise =
        g.leaf(cfg.noise_branch ? noise : Tensor(noise.shape));  // ablation: zeroed input
    FeaturePyramid p_rgb = backbone_forward(ctx, "rgb", cfg.backbone, x_rgb);
    FeaturePyramid p_noise = backbone_forward(ctx, "noise", cfg.backbone, x_noise);

    std::array<Graph::NodeId, 4> refined{};
    for (int i = 1; i <= 4; ++i) {
        Graph::NodeId agg = fam_forward(ctx, i, p_rgb.f[static_cast<size_t>(i - 1)],
                                        p_noise.f[static_cast<size_t>(i - 1)], cfg.fam,
                                        cfg.fam_enhance);
        refined[static_cast<size_t>(i - 1)] = cfg.arpm_enabled ? arpm_forward(ctx, i, agg) : agg;
    }
    return progressive_localize(ctx, refined, cfg.sccm_r());
}

Graph::NodeId model_loss(ForwardCtx& ctx, const ModelConfig& cfg, const Tensor& rgb,
                         const Tensor& noise, const Tensor& gt, MaskSetIds* masks_out) {
    MaskSetIds masks = model_forward(ctx, cfg, rgb, noise);
    if (masks_out) *masks_out = masks;
    return total_loss(ctx, masks, gt);
}

}  // namespace fgln
