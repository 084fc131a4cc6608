#pragma once

#include "fgln/arpm.hpp"
#include "fgln/fam.hpp"
#include "fgln/localizer.hpp"

namespace fgln {

// Full network: two backbones (RGB and guided noise), per-scale feature
// aggregation, atrous pyramid refinement, and the progressive mask chain.
struct ModelConfig {
    BackboneConfig backbone;
    FamConfig fam;
    int arpm_branch_div = 2;   // ARPM branch width = Ci / this
    bool noise_branch = true;  // off: noise input replaced by zeros
    bool fam_enhance = true;   // off: concat-only aggregation
    bool arpm_enabled = true;  // off: pyramid bypassed (identity)

    void validate() const;
    // Token reshape factor per chain position (coarse to fine).
    std::array<int, 4> sccm_r() const { return {1, 2, 2, 2}; }

    // Miniature end-to-end setup used by gradient checking.
    static ModelConfig mini();
};

void init_model(ParamStore& store, const ModelConfig& cfg, Rng& rng);

// rgb and noise are Nx3xSxS batches in [0,1]; returns the four mask nodes.
MaskSetIds model_forward(ForwardCtx& ctx, const ModelConfig& cfg, const Tensor& rgb,
                         const Tensor& noise);

// Forward plus the summed four-scale BCE objective.
Graph::NodeId model_loss(ForwardCtx& ctx, const ModelConfig& cfg, const Tensor& rgb,
                         const Tensor& noise, const Tensor& gt, MaskSetIds* masks_out = nullptr);

}  // namespace fgln
