#include "fgln/graph.hpp"

namespace fgln {

Graph::NodeId Graph::leaf(Tensor value) {
    return add_node(std::move(value), {}, nullptr, "leaf");
}

Graph::NodeId Graph::add_node(Tensor value, std::vector<NodeId> inputs,
                              std::function<void(Graph&, NodeId)> back, const char* tag) {
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.back = std::move(back);
    n.tag = tag;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tensor& Graph::grad_buf(NodeId id) {
    Tensor& g = grads_[static_cast<size_t>(id)];
    if (g.data.empty()) g = Tensor(nodes_[static_cast<size_t>(id)].value.shape);
    return g;
}

void Graph::backward(NodeId loss) {
    const Tensor& lv = value(loss);
    if (lv.numel() != 1)
        throw ContractError("backward target must be scalar, got shape " + lv.shape_str());
    grads_.assign(nodes_.size(), Tensor());
    grad_buf(loss).data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.back) continue;
        if (grads_[static_cast<size_t>(id)].data.empty()) continue;  // unreachable from loss
        n.back(*this, id);
    }
}

Tensor Graph::grad_of(NodeId id) const {
    if (static_cast<size_t>(id) >= grads_.size())
        return Tensor(nodes_[static_cast<size_t>(id)].value.shape);
    const Tensor& g = grads_[static_cast<size_t>(id)];
    if (g.data.empty()) return Tensor(nodes_[static_cast<size_t>(id)].value.shape);
    return g;
}

Graph::NodeId Graph::first_nonfinite() const {
    for (size_t i = 0; i < nodes_.size(); ++i)
        if (!nodes_[i].value.all_finite()) return static_cast<NodeId>(i);
    return -1;
}

}  // namespace fgln
