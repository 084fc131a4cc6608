#pragma once

#include <array>
#include <string>

#include "fgln/forward_ctx.hpp"
#include "fgln/rng.hpp"

namespace fgln {

// Four-stage conv-BN-ReLU feature extractor. Stem and the first conv of
// stages 2-4 run at stride 2, so the stage outputs sit at strides 2/4/8/16.
struct BackboneConfig {
    int stem_channels = 16;
    std::array<int, 4> stage_channels = {16, 32, 64, 128};
    int blocks_per_stage = 1;
    int input_size = 64;

    void validate() const;
    // Spatial extent of stage i (1..4) outputs.
    int stage_extent(int i) const { return input_size >> i; }
};

// Node ids of the four per-scale features f1..f4 (fine to coarse).
struct FeaturePyramid {
    std::array<Graph::NodeId, 4> f;
};

// Deterministic initialization from rng; parameters land under `prefix.`.
void init_backbone(ParamStore& store, const std::string& prefix, const BackboneConfig& cfg,
                   Rng& rng);

FeaturePyramid backbone_forward(ForwardCtx& ctx, const std::string& prefix,
                                const BackboneConfig& cfg, Graph::NodeId x);

// Shared initializers used across modules.
Tensor init_conv_weight(int cout, int cin, int k, Rng& rng);
Tensor init_linear_weight(int d, int e, Rng& rng);
void add_conv(ParamStore& store, const std::string& name, int cout, int cin, int k, Rng& rng);
void add_bn(ParamStore& store, const std::string& name, int c);
// conv + BN + ReLU chain reading parameters `name.w/b/bn.*`.
Graph::NodeId conv_bn_relu(ForwardCtx& ctx, const std::string& name, Graph::NodeId x, int stride,
                           int padding);

}  // namespace fgln
