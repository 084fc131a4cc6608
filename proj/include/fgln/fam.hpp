#pragma once

#include <string>

#include "fgln/backbone.hpp"

namespace fgln {

// Dynamic convolution and the per-scale feature aggregation head.
struct FamConfig {
    int kernel_count = 4;  // K
    double tau = 4.0;      // attention softmax temperature
};

// Parameters for scale i (channels ci) under `fam.scale{i}.`.
void init_fam_scale(ParamStore& store, int scale, int ci, const FamConfig& cfg, Rng& rng);

// Input-conditioned convex combination of K 3x3 kernels (padding 1). The
// attention path is GAP -> linear -> ReLU -> linear -> softmax(logits/tau),
// differentiable end to end, evaluated per sample.
Graph::NodeId dynamic_conv(ForwardCtx& ctx, const std::string& prefix, Graph::NodeId x,
                           const FamConfig& cfg);

// Sobel -> 1x1 reduce -> dynamic 3x3 -> 5x5 -> + f
Graph::NodeId enhance_rgb(ForwardCtx& ctx, int scale, Graph::NodeId f, const FamConfig& cfg);
// 1x1 reduce -> max-pool (k=3, stride 1, pad 1) -> 7x7 -> + f
Graph::NodeId enhance_noise(ForwardCtx& ctx, int scale, Graph::NodeId f);
// concat -> 1x1 fuse -> BN -> ReLU
Graph::NodeId fam_aggregate(ForwardCtx& ctx, int scale, Graph::NodeId f_rgb, Graph::NodeId f_n);

// Full per-scale FAM; enhance=false skips both enhancement paths
// (concat-only ablation).
Graph::NodeId fam_forward(ForwardCtx& ctx, int scale, Graph::NodeId f_rgb, Graph::NodeId f_n,
                          const FamConfig& cfg, bool enhance);

}  // namespace fgln
