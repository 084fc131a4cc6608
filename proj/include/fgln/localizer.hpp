#pragma once

#include <array>
#include <vector>

#include "fgln/backbone.hpp"

namespace fgln {

// Spatial-channel correlation attention head plus the progressive 4-mask
// chain. Chain position 1 sees the coarsest features; position 4 emits the
// finest mask, which is the final prediction.
//
// Parameters per position i under `loc{i}.`: linear maps g/theta/phi on
// reshaped tokens, output convs ks/kc, mixing logit alpha (s = sigmoid(alpha),
// c = 1 - s), the two prediction convs head1/head2, and for i > 1 a 1x1
// prior-projection conv taking the previous mask.
void init_localizer_pos(ParamStore& store, int pos, int ci, int r, bool has_prior, Rng& rng);

// Space-to-depth token reshape contract: requires r | H and r | W.
Graph::NodeId sccm_reshape(Graph& g, Graph::NodeId x, int r);

// Attention body: residual F = X + s*ks(As) + c*kc(Ac), same shape as X.
Graph::NodeId sccm_forward(ForwardCtx& ctx, int pos, Graph::NodeId x, int r);

// Sigmoid(conv3x3(ReLU(conv3x3(F)))), channels C -> max(C/2,1) -> 1.
Graph::NodeId predict_mask(ForwardCtx& ctx, int pos, Graph::NodeId f);

struct MaskSetIds {
    std::array<Graph::NodeId, 4> m;  // m[0] coarsest .. m[3] finest
    Graph::NodeId final_mask() const { return m[3]; }
};

// pyramid holds ARPM outputs fine-to-coarse (f1..f4); r_per_pos the token
// reshape factor per chain position (coarse-to-fine order).
MaskSetIds progressive_localize(ForwardCtx& ctx, const std::array<Graph::NodeId, 4>& pyramid,
                                const std::array<int, 4>& r_per_pos);

// Mean pixelwise binary cross-entropy with probabilities clamped to
// [1e-7, 1-1e-7].
Graph::NodeId bce_loss(Graph& g, Graph::NodeId pred, Tensor target);

// Nearest-neighbor downsample of a full-resolution binary mask batch
// (Nx1xSxS) to h x w; values stay in {0,1}.
Tensor downsample_gt(const Tensor& gt, int h, int w);

// Unweighted sum of the four per-scale BCE terms; gt is the full-resolution
// batch mask.
Graph::NodeId total_loss(ForwardCtx& ctx, const MaskSetIds& masks, const Tensor& gt);

}  // namespace fgln
