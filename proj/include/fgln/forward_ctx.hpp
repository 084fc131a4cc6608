#pragma once

#include <map>
#include <string>

#include "fgln/graph.hpp"
#include "fgln/tensor.hpp"

namespace fgln {

// One forward/backward pass over a parameter store. Caches one leaf node per
// parameter name so gradients can be collected by name after backward().
struct ForwardCtx {
    Graph g;
    ParamStore* params = nullptr;
    bool train = false;
    bool update_stats = false;

    explicit ForwardCtx(ParamStore& store, bool train_mode = false, bool update = false)
        : params(&store), train(train_mode), update_stats(update) {}

    Graph::NodeId param(const std::string& name) {
        auto it = leaves_.find(name);
        if (it != leaves_.end()) return it->second;
        auto pit = params->find(name);
        if (pit == params->end()) throw ContractError("missing parameter: " + name);
        Graph::NodeId id = g.leaf(pit->second);
        leaves_.emplace(name, id);
        return id;
    }

    Tensor& buffer(const std::string& name) {
        auto pit = params->find(name);
        if (pit == params->end()) throw ContractError("missing buffer: " + name);
        return pit->second;
    }

    // Gradients of trainable parameters after g.backward(); zero for
    // parameters the loss never touched.
    std::map<std::string, Tensor> grads() const {
        std::map<std::string, Tensor> out;
        for (const auto& [name, id] : leaves_)
            if (is_trainable_name(name)) out.emplace(name, g.grad_of(id));
        return out;
    }

  private:
    std::map<std::string, Graph::NodeId> leaves_;
};

}  // namespace fgln
