#include "fgln/localizer.hpp"

#include <algorithm>
#include <string>

namespace fgln {

namespace {

std::string pos_prefix(int pos) { return "loc" + std::to_string(pos); }

}  // namespace

void init_localizer_pos(ParamStore& store, int pos, int ci, int r, bool has_prior, Rng& rng) {
    const std::string p = pos_prefix(pos);
    const int d = ci * r * r;
    for (const char* lin : {".g", ".theta", ".phi"}) {
        store.emplace(p + lin + ".w", init_linear_weight(d, d, rng));
        store.emplace(p + lin + ".b", Tensor({d}));
    }
    add_conv(store, p + ".ks", ci, ci, 1, rng);
    add_conv(store, p + ".kc", ci, ci, 1, rng);
    store.emplace(p + ".alpha", Tensor({1}));
    const int mid = std::max(ci / 2, 1);
    add_conv(store, p + ".head1", mid, ci, 3, rng);
    add_conv(store, p + ".head2", 1, mid, 3, rng);
    if (has_prior) add_conv(store, p + ".prior", ci, 1, 1, rng);
}

Graph::NodeId sccm_reshape(Graph& g, Graph::NodeId x, int r) { return g.space_to_depth(x, r); }

Graph::NodeId sccm_forward(ForwardCtx& ctx, int pos, Graph::NodeId x, int r) {
    Graph& g = ctx.g;
    const std::string p = pos_prefix(pos);
    const Tensor& xv = g.value(x);
    const int c = xv.shape[1], h = xv.shape[2], w = xv.shape[3];

    Graph::NodeId xr = sccm_reshape(g, x, r);
    auto lin = [&](const char* name) {
        return g.linear_last(xr, ctx.param(p + name + ".w"), ctx.param(p + name + ".b"));
    };
    Graph::NodeId xg = lin(".g");
    Graph::NodeId xt = lin(".theta");
    Graph::NodeId xp = lin(".phi");

    // Spatial attention: token-to-token similarity, rows normalized.
    Graph::NodeId ms = g.softmax(g.bmm(xt, g.transpose12(xp)), 2);
    Graph::NodeId as = g.bmm(ms, xg);
    // Channel attention: feature-to-feature similarity applied on the right.
    Graph::NodeId mc = g.softmax(g.bmm(g.transpose12(xt), xt), 2);
    Graph::NodeId ac = g.bmm(xg, mc);

    as = g.depth_to_space(as, r, c, h, w);
    ac = g.depth_to_space(ac, r, c, h, w);

    auto conv1 = [&](const char* name, Graph::NodeId in) {
        return g.conv2d(in, ctx.param(p + name + ".w"), ctx.param(p + name + ".b"), 1, 0, 1);
    };
    Graph::NodeId s = g.sigmoid(ctx.param(p + ".alpha"));
    Graph::NodeId cmix = g.add(g.leaf(Tensor::scalar(1.0)), g.scale(s, -1.0));  // c = 1 - s
    Graph::NodeId out = g.add(x, g.scale_by(conv1(".ks", as), s));
    return g.add(out, g.scale_by(conv1(".kc", ac), cmix));
}

Graph::NodeId predict_mask(ForwardCtx& ctx, int pos, Graph::NodeId f) {
    Graph& g = ctx.g;
    const std::string p = pos_prefix(pos);
    Graph::NodeId h = g.relu(
        g.conv2d(f, ctx.param(p + ".head1.w"), ctx.param(p + ".head1.b"), 1, 1, 1));
    h = g.conv2d(h, ctx.param(p + ".head2.w"), ctx.param(p + ".head2.b"), 1, 1, 1);
    return g.sigmoid(h);
}

MaskSetIds progressive_localize(ForwardCtx& ctx, const std::array<Graph::NodeId, 4>& pyramid,
                                const std::array<int, 4>& r_per_pos) {
    Graph& g = ctx.g;
    MaskSetIds out{};
    Graph::NodeId prev_mask = -1;
    for (int pos = 1; pos <= 4; ++pos) {
        // Chain runs coarse to fine: position 1 sees the coarsest pyramid level.
        Graph::NodeId x = pyramid[static_cast<size_t>(4 - pos)];
        const Tensor& xv = g.value(x);
        if (xv.shape.size() != 4) throw ContractError("progressive_localize expects 4D features");
        if (pos > 1) {
            const std::string p = pos_prefix(pos);
            Graph::NodeId prior = g.upsample(prev_mask, xv.shape[2], xv.shape[3], Interp::Bilinear);
            prior = g.conv2d(prior, ctx.param(p + ".prior.w"), ctx.param(p + ".prior.b"), 1, 0, 1);
            x = g.add(x, prior);
        }
        Graph::NodeId f = sccm_forward(ctx, pos, x, r_per_pos[static_cast<size_t>(pos - 1)]);
        Graph::NodeId m = predict_mask(ctx, pos, f);
        out.m[static_cast<size_t>(pos - 1)] = m;
        prev_mask = m;
    }
    return out;
}

Graph::NodeId bce_loss(Graph& g, Graph::NodeId pred, Tensor target) {
    return g.bce(pred, std::move(target));
}

Tensor downsample_gt(const Tensor& gt, int h, int w) {
    if (gt.shape.size() != 4 || gt.shape[1] != 1)
        throw DimError("ground-truth mask must be Nx1xHxW, got " + gt.shape_str());
    const int n = gt.shape[0], gh = gt.shape[2], gw = gt.shape[3];
    Tensor out({n, 1, h, w});
    for (int b = 0; b < n; ++b)
        for (int y = 0; y < h; ++y) {
            int sy = std::min(y * gh / h, gh - 1);
            for (int x = 0; x < w; ++x) {
                int sx = std::min(x * gw / w, gw - 1);
                out.at4(b, 0, y, x) = gt.at4(b, 0, sy, sx);
            }
        }
    return out;
}

Graph::NodeId total_loss(ForwardCtx& ctx, const MaskSetIds& masks, const Tensor& gt) {
    Graph& g = ctx.g;
    Graph::NodeId loss = -1;
    for (int i = 0; i < 4; ++i) {
        const Tensor& mv = g.value(masks.m[static_cast<size_t>(i)]);
        Tensor gi = downsample_gt(gt, mv.shape[2], mv.shape[3]);
        Graph::NodeId term = bce_loss(g, masks.m[static_cast<size_t>(i)], std::move(gi));
        loss = (i == 0) ? term : g.add(loss, term);
    }
    return loss;
}

}  // namespace fgln
