#include "fgln/fam.hpp"

#include <algorithm>

namespace fgln {

namespace {
std::string scale_prefix(int scale) { return "fam.scale" + std::to_string(scale); }
}  // namespace

void init_fam_scale(ParamStore& store, int scale, int ci, const FamConfig& cfg, Rng& rng) {
    if (cfg.kernel_count < 1) throw ContractError("dynamic conv kernel count must be >= 1");
    if (ci < 2 || ci % 2 != 0) throw ContractError("fam scale channels must be even and >= 2");
    const std::string p = scale_prefix(scale);
    const int cr = ci / 2;
    add_conv(store, p + ".rgb_reduce", cr, ci, 1, rng);
    for (int j = 1; j <= cfg.kernel_count; ++j)
        add_conv(store, p + ".dyn.k" + std::to_string(j), cr, cr, 3, rng);
    const int hidden = std::max(cr / 4, 4);
    store.emplace(p + ".dyn.att.fc1.w", init_linear_weight(cr, hidden, rng));
    store.emplace(p + ".dyn.att.fc1.b", Tensor({hidden}));
    store.emplace(p + ".dyn.att.fc2.w", init_linear_weight(hidden, cfg.kernel_count, rng));
    store.emplace(p + ".dyn.att.fc2.b", Tensor({cfg.kernel_count}));
    add_conv(store, p + ".conv5", ci, cr, 5, rng);
    add_conv(store, p + ".noise_reduce", cr, ci, 1, rng);
    add_conv(store, p + ".conv7", ci, cr, 7, rng);
    add_conv(store, p + ".fuse", ci, 2 * ci, 1, rng);
    add_bn(store, p + ".fuse.bn", ci);
}

Graph::NodeId dynamic_conv(ForwardCtx& ctx, const std::string& prefix, Graph::NodeId x,
                           const FamConfig& cfg) {
    if (cfg.kernel_count < 1) throw ContractError("dynamic conv kernel count must be >= 1");
    Graph& g = ctx.g;
    const Tensor& xv = g.value(x);
    const int n_ = xv.dim(0);
    std::vector<Graph::NodeId> kernels, biases;
    for (int j = 1; j <= cfg.kernel_count; ++j) {
        kernels.push_back(ctx.param(prefix + ".k" + std::to_string(j) + ".w"));
        biases.push_back(ctx.param(prefix + ".k" + std::to_string(j) + ".b"));
    }
    const Graph::NodeId fc1w = ctx.param(prefix + ".att.fc1.w");
    const Graph::NodeId fc1b = ctx.param(prefix + ".att.fc1.b");
    const Graph::NodeId fc2w = ctx.param(prefix + ".att.fc2.w");
    const Graph::NodeId fc2b = ctx.param(prefix + ".att.fc2.b");
    std::vector<Graph::NodeId> outs;
    for (int n = 0; n < n_; ++n) {
        const Graph::NodeId xn = n_ == 1 ? x : g.slice_batch(x, n);
        // pi = softmax(mlp(GAP(x_n)) / tau)
        Graph::NodeId a = g.pool2d(xn, PoolMode::GlobalAvg, 0, 1, 0);
        a = g.space_to_depth(a, 1);  // 1x1xCin
        a = g.relu(g.linear_last(a, fc1w, fc1b));
        a = g.linear_last(a, fc2w, fc2b);
        a = g.scale(a, 1.0 / cfg.tau);
        const Graph::NodeId pi = g.softmax(a, 2);
        Graph::NodeId w_eff = -1, b_eff = -1;
        for (int j = 0; j < cfg.kernel_count; ++j) {
            const Graph::NodeId pj = g.index_elem(pi, j);
            const Graph::NodeId wj = g.scale_by(kernels[static_cast<size_t>(j)], pj);
            const Graph::NodeId bj = g.scale_by(biases[static_cast<size_t>(j)], pj);
            w_eff = j == 0 ? wj : g.add(w_eff, wj);
            b_eff = j == 0 ? bj : g.add(b_eff, bj);
        }
        outs.push_back(g.conv2d(xn, w_eff, b_eff, 1, 1, 1));
    }
    return outs.size() == 1 ? outs[0] : g.concat_batch(outs);
}

Graph::NodeId enhance_rgb(ForwardCtx& ctx, int scale, Graph::NodeId f, const FamConfig& cfg) {
    Graph& g = ctx.g;
    const std::string p = scale_prefix(scale);
    Graph::NodeId y = g.sobel_mag(f);
    y = g.conv2d(y, ctx.param(p + ".rgb_reduce.w"), ctx.param(p + ".rgb_reduce.b"), 1, 0, 1);
    y = dynamic_conv(ctx, p + ".dyn", y, cfg);
    y = g.conv2d(y, ctx.param(p + ".conv5.w"), ctx.param(p + ".conv5.b"), 1, 2, 1);
    return g.add(y, f);
}

Graph::NodeId enhance_noise(ForwardCtx& ctx, int scale, Graph::NodeId f) {
    Graph& g = ctx.g;
    const std::string p = scale_prefix(scale);
    Graph::NodeId y =
        g.conv2d(f, ctx.param(p + ".noise_reduce.w"), ctx.param(p + ".noise_reduce.b"), 1, 0, 1);
    y = g.pool2d(y, PoolMode::Max, 3, 1, 1);
    y = g.conv2d(y, ctx.param(p + ".conv7.w"), ctx.param(p + ".conv7.b"), 1, 3, 1);
    return g.add(y, f);
}

Graph::NodeId fam_aggregate(ForwardCtx& ctx, int scale, Graph::NodeId f_rgb, Graph::NodeId f_n) {
    Graph& g = ctx.g;
    const Tensor& a = g.value(f_rgb);
    const Tensor& b = g.value(f_n);
    if (!a.same_shape(b))
        throw DimError("fam_aggregate shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    const std::string p = scale_prefix(scale);
    Graph::NodeId y = g.concat_channels({f_rgb, f_n});
    y = g.conv2d(y, ctx.param(p + ".fuse.w"), ctx.param(p + ".fuse.b"), 1, 0, 1);
    y = g.batch_norm(y, ctx.param(p + ".fuse.bn.gamma"), ctx.param(p + ".fuse.bn.beta"),
                     ctx.buffer(p + ".fuse.bn.running_mean"),
                     ctx.buffer(p + ".fuse.bn.running_var"), ctx.train, 1e-5, 0.1,
                     ctx.update_stats);
    return g.relu(y);
}

Graph::NodeId fam_forward(ForwardCtx& ctx, int scale, Graph::NodeId f_rgb, Graph::NodeId f_n,
                          const FamConfig& cfg, bool enhance) {
    if (!enhance) return fam_aggregate(ctx, scale, f_rgb, f_n);
    const Graph::NodeId er = enhance_rgb(ctx, scale, f_rgb, cfg);
    const Graph::NodeId en = enhance_noise(ctx, scale, f_n);
    return fam_aggregate(ctx, scale, er, en);
}

}  // namespace fgln
