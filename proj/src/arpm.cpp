#include "fgln/arpm.hpp"

#include <algorithm>

namespace fgln {

namespace {
const int kDilations[3] = {6, 12, 18};
std::string scale_prefix(int scale) { return "arpm.scale" + std::to_string(scale); }
}  // namespace

int arpm_effective_dilation(int nominal, int h, int w) {
    return std::max(1, std::min(nominal, std::max(h, w) - 1));
}

void init_arpm_scale(ParamStore& store, int scale, int ci, int cb, Rng& rng) {
    if (cb < 1) throw ContractError("arpm branch width must be >= 1");
    const std::string p = scale_prefix(scale);
    add_conv(store, p + ".gap", cb, ci, 1, rng);
    add_conv(store, p + ".local", cb, ci, 1, rng);
    for (int d : kDilations) add_conv(store, p + ".d" + std::to_string(d), cb, ci, 3, rng);
    add_conv(store, p + ".fuse", ci, ci + 5 * cb, 1, rng);
}

Graph::NodeId arpm_forward(ForwardCtx& ctx, int scale, Graph::NodeId f_agg) {
    Graph& g = ctx.g;
    const std::string p = scale_prefix(scale);
    const Tensor& xv = g.value(f_agg);
    const int h = xv.dim(2), w = xv.dim(3);
    Graph::NodeId f_avg = g.pool2d(f_agg, PoolMode::GlobalAvg, 0, 1, 0);
    f_avg = g.conv2d(f_avg, ctx.param(p + ".gap.w"), ctx.param(p + ".gap.b"), 1, 0, 1);
    f_avg = g.upsample(f_avg, h, w, Interp::Nearest);
    const Graph::NodeId f_local =
        g.conv2d(f_agg, ctx.param(p + ".local.w"), ctx.param(p + ".local.b"), 1, 0, 1);
    std::vector<Graph::NodeId> parts = {f_agg, f_avg, f_local};
    for (int d : kDilations) {
        const int eff = arpm_effective_dilation(d, h, w);
        const std::string name = p + ".d" + std::to_string(d);
        parts.push_back(
            g.conv2d(f_agg, ctx.param(name + ".w"), ctx.param(name + ".b"), 1, eff, eff));
    }
    const Graph::NodeId cat = g.concat_channels(parts);
    return g.conv2d(cat, ctx.param(p + ".fuse.w"), ctx.param(p + ".fuse.b"), 1, 0, 1);
}

}  // namespace fgln
