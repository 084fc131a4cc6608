#pragma once

#include "fgln/backbone.hpp"

namespace fgln {

// Atrous residual pyramid: identity + pooled branch + 1x1 + three dilated
// 3x3 branches (nominal dilations 6/12/18), concatenated and fused by 1x1.
// Parameters for scale i live under `arpm.scale{i}.`; branch width cb.
void init_arpm_scale(ParamStore& store, int scale, int ci, int cb, Rng& rng);

Graph::NodeId arpm_forward(ForwardCtx& ctx, int scale, Graph::NodeId f_agg);

// Dilation clamped to the spatial extent so coarse feature maps stay valid.
int arpm_effective_dilation(int nominal, int h, int w);

}  // namespace fgln
