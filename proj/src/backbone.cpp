#include "fgln/backbone.hpp"

#include <cmath>

namespace fgln {

void BackboneConfig::validate() const {
    if (stem_channels < 1 || blocks_per_stage < 1)
        throw ContractError("backbone: stem_channels and blocks_per_stage must be >= 1");
    if (input_size < 16 || input_size % 16 != 0)
        throw ContractError("backbone: input_size must be a positive multiple of 16");
    for (int i = 0; i < 4; ++i) {
        if (stage_channels[static_cast<size_t>(i)] < 2 ||
            stage_channels[static_cast<size_t>(i)] % 2 != 0)
            throw ContractError("backbone: stage channels must be even and >= 2");
        if (i > 0 && stage_channels[static_cast<size_t>(i)] <= stage_channels[static_cast<size_t>(i - 1)])
            throw ContractError("backbone: stage_channels must be strictly increasing");
    }
}

Tensor init_conv_weight(int cout, int cin, int k, Rng& rng) {
    Tensor w({cout, cin, k, k});
    const double bound = std::sqrt(6.0 / (static_cast<double>(cin) * k * k));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

Tensor init_linear_weight(int d, int e, Rng& rng) {
    Tensor w({d, e});
    const double bound = std::sqrt(6.0 / static_cast<double>(d));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

void add_conv(ParamStore& store, const std::string& name, int cout, int cin, int k, Rng& rng) {
    store.emplace(name + ".w", init_conv_weight(cout, cin, k, rng));
    store.emplace(name + ".b", Tensor({cout}));
}

void add_bn(ParamStore& store, const std::string& name, int c) {
    store.emplace(name + ".gamma", Tensor::full({c}, 1.0));
    store.emplace(name + ".beta", Tensor({c}));
    store.emplace(name + ".running_mean", Tensor({c}));
    store.emplace(name + ".running_var", Tensor::full({c}, 1.0));
}

Graph::NodeId conv_bn_relu(ForwardCtx& ctx, const std::string& name, Graph::NodeId x, int stride,
                           int padding) {
    Graph::NodeId y = ctx.g.conv2d(x, ctx.param(name + ".w"), ctx.param(name + ".b"), stride,
                                   padding, 1);
    y = ctx.g.batch_norm(y, ctx.param(name + ".bn.gamma"), ctx.param(name + ".bn.beta"),
                         ctx.buffer(name + ".bn.running_mean"),
                         ctx.buffer(name + ".bn.running_var"), ctx.train, 1e-5, 0.1,
                         ctx.update_stats);
    return ctx.g.relu(y);
}

void init_backbone(ParamStore& store, const std::string& prefix, const BackboneConfig& cfg,
                   Rng& rng) {
    cfg.validate();
    add_conv(store, prefix + ".stem", cfg.stem_channels, 3, 3, rng);
    add_bn(store, prefix + ".stem.bn", cfg.stem_channels);
    int cin = cfg.stem_channels;
    for (int s = 1; s <= 4; ++s) {
        const int cout = cfg.stage_channels[static_cast<size_t>(s - 1)];
        for (int b = 1; b <= cfg.blocks_per_stage; ++b) {
            const std::string name =
                prefix + ".stage" + std::to_string(s) + ".block" + std::to_string(b);
            add_conv(store, name, cout, b == 1 ? cin : cout, 3, rng);
            add_bn(store, name + ".bn", cout);
        }
        cin = cout;
    }
}

FeaturePyramid backbone_forward(ForwardCtx& ctx, const std::string& prefix,
                                const BackboneConfig& cfg, Graph::NodeId x) {
    cfg.validate();
    const Tensor& xv = ctx.g.value(x);
    if (xv.rank() != 4 || xv.dim(1) != 3 || xv.dim(2) != cfg.input_size ||
        xv.dim(3) != cfg.input_size)
        throw DimError("backbone expects Nx3x" + std::to_string(cfg.input_size) + "x" +
                       std::to_string(cfg.input_size) + ", got " + xv.shape_str());
    Graph::NodeId y = conv_bn_relu(ctx, prefix + ".stem", x, 2, 1);
    FeaturePyramid pyr{};
    for (int s = 1; s <= 4; ++s) {
        for (int b = 1; b <= cfg.blocks_per_stage; ++b) {
            const std::string name =
                prefix + ".stage" + std::to_string(s) + ".block" + std::to_string(b);
            const int stride = (b == 1 && s > 1) ? 2 : 1;
            y = conv_bn_relu(ctx, name, y, stride, 1);
        }
        pyr.f[static_cast<size_t>(s - 1)] = y;
    }
    return pyr;
}

}  // namespace fgln
